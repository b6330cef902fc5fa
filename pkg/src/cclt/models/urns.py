"""Occupancy (three-urn) and darts models, including the bivariate darts model."""

from __future__ import annotations

import numpy as np

from ..core import MomentProfile, Moves, PairConstants, register_model
from .base import ExchangeableModel, NotEnumerable, binom_pmf


class _CategoricalSites(ExchangeableModel):
    """n independent sites with categorical states; one step redraws one site."""

    enumeration_limit_log2 = 12 * np.log2(3)
    has_sufficient_sampler = True

    outcome_probs: np.ndarray

    def sample(self, rng, size):
        return rng.choice(len(self.outcome_probs), size=(size, self.n), p=self.outcome_probs).astype(np.int64)

    def step(self, configs, rng):
        c = np.array(configs, dtype=np.int64, copy=True)
        b = c.shape[0]
        i = rng.integers(0, self.n, size=b)
        c[np.arange(b), i] = rng.choice(len(self.outcome_probs), size=b, p=self.outcome_probs)
        return c

    @property
    def state_space_log2(self):
        return self.n * float(np.log2(len(self.outcome_probs)))

    def enumerate_configs(self):
        K = len(self.outcome_probs)
        if self.state_space_log2 > self.enumeration_limit_log2 + 1e-9:
            raise NotEnumerable(f"{K}^{self.n} states exceed the enumeration budget")
        idx = np.arange(K**self.n)
        configs = np.stack([(idx // K**i) % K for i in range(self.n)], axis=1)
        w = np.prod(self.outcome_probs[configs], axis=1)
        return configs, w

    def site_value(self) -> np.ndarray:
        """Contribution of each categorical state to X, shape (K, d)."""
        raise NotImplementedError

    def site_in_count(self) -> np.ndarray:
        """Indicator of each categorical state contributing to the count."""
        raise NotImplementedError

    def raw_stats(self, configs):
        c = np.asarray(configs)
        x = self.site_value()[c].sum(axis=1)
        return x.astype(float), self.counts(configs) - self.count_mean

    def counts(self, configs):
        return self.site_in_count()[np.asarray(configs)].sum(axis=1).astype(np.int64)

    def moves(self, configs):
        c = np.asarray(configs)
        b = c.shape[0]
        K = len(self.outcome_probs)
        val = self.site_value()
        inc = self.site_in_count()
        dx = val[None, None, :, :] - val[c][:, :, None, :]
        dy = inc[None, None, :] - inc[c][:, :, None]
        prob = np.broadcast_to(self.outcome_probs[None, None, :] / self.n, dy.shape)
        return Moves(prob=prob.reshape(b, -1), dx=dx.reshape(b, -1, self.d),
                     dy=dy.reshape(b, -1).astype(np.int8))


class UrnModel(_CategoricalSites):
    """Three urns; Y counts the balls in urn 2, X is the weighted urn-1 minus urn-3 difference."""

    name = "urn"
    has_analytic_moments = True

    def __init__(self, n: int, p1: float = 1 / 3, p2: float = 1 / 3):
        if p1 <= 0 or p2 <= 0 or p1 + p2 >= 1:
            raise ValueError("need p1, p2 > 0 and p1 + p2 < 1")
        if n < 1:
            raise ValueError("need n >= 1")
        self.n, self.p1, self.p2 = int(n), float(p1), float(p2)
        self.p3 = 1.0 - p1 - p2
        self.outcome_probs = np.array([self.p1, self.p2, self.p3])
        q2 = 1 - p2
        self.constants = PairConstants(lam=1.0 / n, psi=p2, sigma_y2=n * p2 * q2, a_plus=p2, a_minus=q2,
                                       psi_plus=p2, psi_minus=0.0)
        # drift rate of W on moves that keep the urn-2 count
        self.classical_lambda = q2 / n

    @property
    def count_mean(self):
        return self.n * self.p2

    def count_pmf(self):
        return binom_pmf(self.n, self.p2)

    def site_value(self):
        return np.array([[1 / self.p1], [0.0], [-1 / self.p3]])

    def site_in_count(self):
        return np.array([0, 1, 0])

    def exact_w0_variance(self):
        return self.n * (1 / self.p1 + 1 / self.p3)

    def stay_probability(self, configs):
        """``P(V' = V | state) = 1 - p2 + (2 p2 - 1) V / n``."""
        v = self.counts(configs)
        return 1 - self.p2 + (2 * self.p2 - 1) * v / self.n

    def sample_given_count(self, rng, size, count):
        if not 0 <= count <= self.n:
            raise ValueError("count outside support")
        r = self.p1 / (self.p1 + self.p3)
        other = np.where(rng.random((size, self.n)) < r, 0, 2)
        mask = np.zeros((size, self.n), dtype=bool)
        mask[:, :count] = True
        mask = rng.permuted(mask, axis=1)
        return np.where(mask, 1, other).astype(np.int64)

    def analytic_moments(self, configs):
        n, p1, p2, p3 = self.n, self.p1, self.p2, self.p3
        x, y = self.raw_stats(configs)
        c = np.asarray(configs)
        v = (c == 1).sum(1)
        g2 = (c == 0).sum(1) / p1**2 + (c == 2).sum(1) / p3**2
        return MomentProfile(
            m0_plus=p2 * (n - v) / n,
            m0_minus=(1 - p2) * v / n,
            m1_plus=-p2 * x / n,
            m1_minus=np.zeros_like(x),
            m2_plus=(p2 * g2 / n)[:, None, None],
            m2_minus=(v * (1 / p1 + 1 / p3) / n)[:, None, None],
            w=x,
            y=y,
        )


class ScoreTable:
    """Discrete score law on the target: values and conditional probabilities given a hit."""

    def __init__(self, values, probs, hit_prob: float):
        values = np.asarray(values, dtype=float)
        probs = np.asarray(probs, dtype=float)
        if values.shape != probs.shape or values.ndim != 1:
            raise ValueError("score values and probabilities must be matching vectors")
        if np.any(probs < 0) or abs(probs.sum() - 1) > 1e-12:
            raise ValueError("score probabilities must form a distribution")
        if not np.all(np.isfinite(values)):
            raise ValueError("score function must be bounded")
        if len(np.unique(values[probs > 0])) < 2:
            raise ValueError("constant score function: a step keeping Y fixed could not move W")
        if abs(probs @ values) > 1e-6:
            raise ValueError("score must have zero mean on the target")
        if abs(hit_prob * (probs @ values**2) - 1) > 1e-6:
            raise ValueError("score must have unit second moment E s^2 1{hit} = 1")
        self.values, self.probs = values, probs

    @classmethod
    def half_split(cls, hit_prob: float) -> "ScoreTable":
        s = 1 / np.sqrt(hit_prob)
        return cls([s, -s], [0.5, 0.5], hit_prob)


class DartsModel(_CategoricalSites):
    """Darts hitting a target with probability q; Y is the centred number of misses."""

    name = "darts"
    has_analytic_moments = True

    def __init__(self, n: int, q: float = 0.5, scores: ScoreTable | None = None):
        if not 0 < q < 1:
            raise ValueError("q must lie in (0, 1)")
        self.n, self.q = int(n), float(q)
        self.p = 1 - self.q
        self.scores = scores if scores is not None else ScoreTable.half_split(self.q)
        self.outcome_probs = np.concatenate([[self.p], self.q * self.scores.probs])
        p = self.p
        self.constants = PairConstants(lam=1.0 / n, psi=p, sigma_y2=n * p * self.q, a_plus=p, a_minus=self.q,
                                       psi_plus=p, psi_minus=0.0)
        self.classical_lambda = self.q / n

    @property
    def count_mean(self):
        return self.n * self.p

    def count_pmf(self):
        return binom_pmf(self.n, self.p)

    def site_value(self):
        return np.concatenate([[0.0], self.scores.values])[:, None]

    def site_in_count(self):
        return np.concatenate([[1], np.zeros(len(self.scores.values), dtype=int)])

    def exact_w0_variance(self):
        return float(self.n)

    def sample_given_count(self, rng, size, count):
        if not 0 <= count <= self.n:
            raise ValueError("count outside support")
        hits = 1 + rng.choice(len(self.scores.values), size=(size, self.n), p=self.scores.probs)
        mask = np.zeros((size, self.n), dtype=bool)
        mask[:, :count] = True
        mask = rng.permuted(mask, axis=1)
        return np.where(mask, 0, hits).astype(np.int64)

    def analytic_moments(self, configs):
        n, p, q = self.n, self.p, self.q
        x, y = self.raw_stats(configs)
        c = np.asarray(configs)
        s = self.site_value()[c][..., 0]
        hit = c > 0
        es2 = self.scores.probs @ self.scores.values**2
        return MomentProfile(
            m0_plus=p * hit.sum(1) / n,
            m0_minus=q * (~hit).sum(1) / n,
            m1_plus=-p * x / n,
            m1_minus=np.zeros_like(x),
            m2_plus=(p * (s**2 * hit).sum(1) / n)[:, None, None],
            m2_minus=(q * es2 * (~hit).sum(1) / n)[:, None, None],
            w=x,
            y=y,
        )


class MultiDartsModel(_CategoricalSites):
    """Bivariate darts: ``X = (sum S_i (V_i - 1/2), sum S_i)`` given ``Y = sum (V_i - 1/2)``.

    Each site holds a score index and a fair bit; state ``2 j + v`` encodes
    score ``j`` with bit ``v``.
    """

    name = "multi-darts"
    d = 2
    transform_kind = "multi"
    has_analytic_moments = False

    def __init__(self, n: int, score_values=(1.0, -1.0), score_probs=(0.5, 0.5)):
        if n < 2:
            raise ValueError("need n >= 2")
        self.n = int(n)
        vals = np.asarray(score_values, dtype=float)
        probs = np.asarray(score_probs, dtype=float)
        self.scores = ScoreTable(vals, probs, 1.0)
        self.outcome_probs = np.repeat(probs, 2) * 0.5
        self.constants = PairConstants(
            lam=1.0 / n, psi=np.diag([0.5, 0.5]), sigma_y2=n / 4, a_plus=0.5, a_minus=0.5,
            psi_plus=[[0.25, -0.125], [-0.5, 0.25]], psi_minus=[[0.25, 0.125], [0.5, 0.25]], d=2,
        )

    @property
    def count_mean(self):
        return self.n / 2

    def count_pmf(self):
        return binom_pmf(self.n, 0.5)

    def site_value(self):
        s = np.repeat(self.scores.values, 2)
        bit = np.tile([0.0, 1.0], len(self.scores.values))
        return np.stack([s * (bit - 0.5), s], axis=1)

    def site_in_count(self):
        return np.tile([0, 1], len(self.scores.values))

    def exact_w0_variance(self):
        n = self.n
        return np.array([n / 4 - 0.25 + 1 / 16, n - 1 + 0.25])

    def sample_given_count(self, rng, size, count):
        if not 0 <= count <= self.n:
            raise ValueError("count outside support")
        j = rng.choice(len(self.scores.values), size=(size, self.n), p=self.scores.probs)
        bits = np.zeros((size, self.n), dtype=np.int64)
        bits[:, :count] = 1
        bits = rng.permuted(bits, axis=1)
        return 2 * j + bits


@register_model("urn")
def _urn(n: int = 100, p1: float = 1 / 3, p2: float = 1 / 3, p: float | None = None, **_):
    if p is not None:
        p2 = p
        p1 = (1 - p) / 2
    return UrnModel(n, p1, p2)


@register_model("darts")
def _darts(n: int = 100, q: float | None = None, p: float | None = None, **_):
    if q is None:
        q = 0.5 if p is None else 1 - p
    return DartsModel(n, q)


@register_model("multi-darts")
def _multi_darts(n: int = 100, **_):
    return MultiDartsModel(n)
