"""Conditional samples, Wasserstein-1 distances to the normal target and rate fits."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from functools import partial

import numpy as np
from scipy.special import ndtr, ndtri

from .rng import map_chunks, substream
from .sampling import check_acceptance, draw_given_count

CSV_COLUMNS = ("model", "n", "k", "samples", "distance", "stderr", "bound_total", "seed")
SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class ConditionalSample:
    values: np.ndarray  # (m, d)
    k: float
    acceptance: float
    seed: int
    attempts: int = 0

    def __post_init__(self):
        if not 0 < self.acceptance <= 1:
            raise ValueError("acceptance must lie in (0, 1]")


def _conditional_chunk(model, count, rng, size):
    cfg, attempts = draw_given_count(model, rng, size, count)
    w, _ = model.stats(cfg)
    return w, attempts


def sample_conditional(model, k: int, target: int, seed: int, workers: int = 1, chunk: int = 4096,
                       stream: int = 11) -> ConditionalSample:
    """At least ``target`` exact draws of W given ``Y = zeta + k``."""
    y = model.lattice.point(k)
    count = model.count_for_y(y)
    if model.y_probability(y) <= 0:
        raise ValueError(f"P(Y = {y}) = 0")
    check_acceptance(model, (count,), substream(seed, 98))

    run = partial(_conditional_chunk, model, count)
    parts = map_chunks(run, int(target), seed, stream=(stream,), chunk=chunk, workers=workers)
    values = np.concatenate([p[0] for p in parts])
    attempts = int(sum(p[1] for p in parts))
    return ConditionalSample(values, y, len(values) / attempts, seed, attempts)


# ---------------------------------------------------------------------------
# Wasserstein-1 against the standard normal


def _normal_partial(x):
    """``G(x) = x Phi(x) + phi(x)``, an antiderivative of Phi with ``G(-inf) = 0``."""
    x = np.asarray(x, dtype=float)
    return x * ndtr(x) + np.exp(-0.5 * x * x) / SQRT_2PI


def w1_sorted(xs: np.ndarray) -> float:
    """``int |F_n - Phi|`` for an already sorted sample, by exact piecewise integration."""
    n = len(xs)
    left_tail = _normal_partial(xs[0])
    right_tail = _normal_partial(-xs[-1])
    if n == 1:
        return float(left_tail + right_tail)
    a, b = xs[:-1], xs[1:]
    level = np.arange(1, n) / n
    cross = np.clip(ndtri(level), a, b)
    Ga, Gb, Gc = _normal_partial(a), _normal_partial(b), _normal_partial(cross)
    below = np.abs(Gc - Ga - level * (cross - a))
    above = np.abs(Gb - Gc - level * (b - cross))
    return float(left_tail + right_tail + np.sum(below + above))


def w1_to_std_normal(sample) -> float:
    """Exact ``W1(empirical law of sample, N(0, 1))``."""
    xs = np.sort(np.asarray(sample, dtype=float).reshape(-1))
    if xs.size == 0:
        raise ValueError("empty sample")
    return w1_sorted(xs)


def w1_bootstrap_stderr(sample, seed: int, reps: int = 100) -> float:
    """Seeded bootstrap standard error of ``w1_to_std_normal``."""
    x = np.asarray(sample, dtype=float).reshape(-1)
    rng = substream(seed, 0xB007)
    stats = [w1_to_std_normal(x[rng.integers(0, len(x), len(x))]) for _ in range(reps)]
    return float(np.std(stats, ddof=1))


def sphere_directions(d: int, count: int, seed: int) -> np.ndarray:
    g = substream(seed, 0x5EED).standard_normal((count, d))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def sliced_w1_to_std_normal(sample, directions: int = 64, seed: int = 0) -> float:
    """Mean over seeded unit directions of the 1-d W1 of the projected sample to N(0, 1)."""
    x = np.atleast_2d(np.asarray(sample, dtype=float))
    if x.size == 0:
        raise ValueError("empty sample")
    if directions < 32:
        raise ValueError("use at least 32 directions")
    dirs = sphere_directions(x.shape[1], directions, seed)
    return float(np.mean([w1_to_std_normal(x @ u) for u in dirs]))


def sliced_w1_bootstrap_stderr(sample, directions: int = 64, seed: int = 0, reps: int = 20) -> float:
    x = np.atleast_2d(np.asarray(sample, dtype=float))
    rng = substream(seed, 0xB008)
    stats = [sliced_w1_to_std_normal(x[rng.integers(0, len(x), len(x))], directions, seed) for _ in range(reps)]
    return float(np.std(stats, ddof=1))


# ---------------------------------------------------------------------------
# rates and local limits


def rate_regression(pairs) -> dict:
    """Least-squares fit of ``log distance`` on ``log n``."""
    pairs = [(float(n), float(dist)) for n, dist in pairs]
    if len(pairs) < 4:
        raise ValueError("need at least 4 points")
    if any(dist <= 0 for _, dist in pairs) or any(n <= 0 for n, _ in pairs):
        raise ValueError("sizes and distances must be positive")
    ln = np.log([n for n, _ in pairs])
    ld = np.log([dist for _, dist in pairs])
    slope, intercept = np.polyfit(ln, ld, 1)
    resid = ld - (slope * ln + intercept)
    return {"slope": float(slope), "intercept": float(intercept),
            "residual": float(np.sqrt(np.mean(resid**2))), "points": len(pairs)}


def llt_sup_distance(values, probs) -> dict:
    """``sup_k |sigma P(Y = k) - sigma phi_{sigma^2}(k)|`` for an exact lattice law."""
    values = np.asarray(values, dtype=float)
    probs = np.asarray(probs, dtype=float)
    mean = float(probs @ values)
    sigma = math.sqrt(float(probs @ (values - mean) ** 2))
    y = values - mean
    density = np.exp(-0.5 * (y / sigma) ** 2) / SQRT_2PI
    gap = np.abs(sigma * probs - density)
    i = int(np.argmax(gap))
    return {"eps_Y": float(gap[i]), "argmax": float(y[i]), "sigma": sigma}


def llt_check(model=None, n_samples: int = 0, seed: int = 0, values=None, probs=None) -> dict:
    """Local-limit sup distance of Y's law (exact pmf; MC histogram if ``n_samples`` > 0)."""
    if values is None:
        values, probs = model.y_pmf()
    if n_samples:
        rng = substream(seed, 0x11)
        counts = model.counts(model.sample(rng, n_samples))
        support, hits = np.unique(counts, return_counts=True)
        values = support - model.count_mean
        probs = hits / n_samples
    out = llt_sup_distance(values, probs)
    if model is not None:
        out.update({"model": model.name, "n": model.n})
    return out


def exact_ratio(values, probs, k: float) -> float:
    """``p_{k-1} / p_k`` from an exact lattice law."""
    values = np.asarray(values, dtype=float)
    probs = np.asarray(probs, dtype=float)
    pk = probs[np.abs(values - k) < 1e-7].sum()
    pkm1 = probs[np.abs(values - (k - 1)) < 1e-7].sum()
    if pk == 0:
        raise ZeroDivisionError("p_k = 0")
    return float(pkm1 / pk)


# ---------------------------------------------------------------------------
# experiment rows


def distance_row(model, k: int, samples: int, seed: int, workers: int = 1, bound_total: float | None = None,
                 directions: int = 64) -> dict:
    """One CSV row: W1 (sliced for d > 1) of W given Y = zeta + k to the standard normal."""
    cs = sample_conditional(model, k, samples, seed, workers)
    if model.d == 1:
        dist = w1_to_std_normal(cs.values[:, 0])
        se = w1_bootstrap_stderr(cs.values[:, 0], seed)
    else:
        dist = sliced_w1_to_std_normal(cs.values, directions, seed)
        se = sliced_w1_bootstrap_stderr(cs.values, directions, seed)
    return {
        "model": model.name, "n": model.n, "k": int(k), "samples": len(cs.values),
        "distance": dist, "stderr": se,
        "bound_total": "" if bound_total is None else bound_total, "seed": seed,
    }


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n", extrasaction="ignore")
    writer.writeheader()
    for row in rows:
        writer.writerow({key: _fmt(row.get(key, "")) for key in CSV_COLUMNS})
    return buf.getvalue()


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v
