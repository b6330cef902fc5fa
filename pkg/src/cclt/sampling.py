"""Draws from a model's law given the value of its conditioning count."""

from __future__ import annotations

import numpy as np

ACCEPTANCE_FLOOR = 1e-6
PILOT_SAMPLES = 10_000


class RareEventError(RuntimeError):
    pass


def pilot_acceptance(model, counts, rng, samples: int = PILOT_SAMPLES) -> float:
    """Fraction of unconditional draws whose count lies in ``counts``."""
    hits = np.isin(model.counts(model.sample(rng, samples)), list(counts))
    return float(hits.mean())


def draw_given_count(model, rng, size: int, count: int, max_draws: int = 10**8):
    """Exact conditional draw; returns ``(configs, attempts)``.

    Uses the model's sufficient-statistic sampler when it has one (one attempt
    per kept sample), its own rejection sampler if provided, else plain
    rejection from unconditional draws.
    """
    direct = model.sample_given_count(rng, size, count)
    if direct is not None:
        return direct, size
    own = getattr(model, "rejection_sample", None)
    if own is not None:
        return own(rng, size, count, max_draws)
    kept, attempts, need = [], 0, size
    while need > 0:
        batch = max(4 * need, 1024)
        cfg = model.sample(rng, batch)
        attempts += batch
        ok = np.flatnonzero(model.counts(cfg) == count)[:need]
        kept.append(cfg[ok])
        need -= len(ok)
        if attempts > max_draws:
            raise RareEventError("conditioning event too rare")
    return np.concatenate(kept), attempts


def check_acceptance(model, counts, rng) -> float:
    """Pilot acceptance for the rejection path; raises below the floor."""
    if model.has_sufficient_sampler:
        return 1.0
    rate = pilot_acceptance(model, counts, rng)
    if rate < ACCEPTANCE_FLOOR:
        raise RareEventError(f"conditioning event too rare: pilot acceptance {rate:.3g} < {ACCEPTANCE_FLOOR:g}")
    return rate
