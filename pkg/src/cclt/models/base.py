"""Shared machinery for concrete exchangeable-pair models.

A model works on batches of configurations (a 2-d array, one row per state).
It exposes the raw statistic X, the conditioning statistic Y, the complete
one-step outcome table (``moves``), a chain step, exact and conditional
samplers, and the transformed, standardised statistic W.
"""

from __future__ import annotations

import math
from functools import cached_property

import numpy as np
from scipy.stats import binom

from ..core import LatticeSpec, Moves, PairConstants
from ..rng import map_chunks
from ..transform import YMoments, change_of_variable_multi, change_of_variable_uni, y_moments_from_pmf


class NotEnumerable(RuntimeError):
    pass


class ExchangeableModel:
    name: str = "abstract"
    d: int = 1
    n: int
    transform_kind: str = "none"  # "none", "uni" or "multi"
    has_analytic_moments: bool = False
    has_sufficient_sampler: bool = False
    enumeration_limit_log2: float = 22.0
    scale_mc_samples: int = 200_000
    scale_seed: int = 20240607

    # -- laws -------------------------------------------------------------
    @property
    def count_mean(self) -> float:
        raise NotImplementedError

    def count_pmf(self) -> tuple[np.ndarray, np.ndarray]:
        """Support and probabilities of the integer count underlying Y."""
        raise NotImplementedError

    @cached_property
    def lattice(self) -> LatticeSpec:
        return LatticeSpec.from_mean(self.count_mean)

    def y_pmf(self) -> tuple[np.ndarray, np.ndarray]:
        counts, probs = self.count_pmf()
        return counts - self.count_mean, probs

    def y_probability(self, y: float) -> float:
        vals, probs = self.y_pmf()
        hit = np.abs(vals - y) < 1e-7
        return float(probs[hit].sum())

    def count_for_y(self, y: float) -> int:
        return int(round(y + self.count_mean))

    @cached_property
    def y_moments(self) -> YMoments:
        return y_moments_from_pmf(*self.y_pmf())

    # -- statistics -------------------------------------------------------
    def raw_stats(self, configs) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def counts(self, configs) -> np.ndarray:
        raise NotImplementedError

    def w0_from_xy(self, x, y) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.transform_kind == "uni":
            return change_of_variable_uni(x[..., 0], y, self.constants, self.y_moments)[..., None]
        if self.transform_kind == "multi":
            return change_of_variable_multi(x, y, self.constants, self.y_moments)
        return x

    def w_from_xy(self, x, y) -> np.ndarray:
        return self.w0_from_xy(x, y) / self.w0_scale()

    def stats(self, configs) -> tuple[np.ndarray, np.ndarray]:
        x, y = self.raw_stats(configs)
        return self.w_from_xy(x, y), y

    # -- scaling ----------------------------------------------------------
    def exact_w0_variance(self):
        """Per-coordinate variance of W0 when known in closed form, else None."""
        return None

    def w0_scale(self) -> np.ndarray:
        cached = self.__dict__.get("_w0_scale")
        if cached is None:
            var = self.exact_w0_variance()
            if var is None:
                var = self._mc_w0_variance(self.scale_mc_samples, self.scale_seed)
            cached = np.sqrt(np.atleast_1d(np.asarray(var, dtype=float)))
            cached.setflags(write=False)
            self.__dict__["_w0_scale"] = cached
        return cached

    def _mc_w0_variance(self, samples: int, seed: int) -> np.ndarray:
        def chunk(rng, size):
            x, y = self.raw_stats(self.sample(rng, size))
            w0 = self.w0_from_xy(x, y)
            return w0.sum(0), (w0**2).sum(0), size

        parts = map_chunks(chunk, samples, seed, stream=(0xC0FFEE,), chunk=2048)
        s1 = sum(p[0] for p in parts)
        s2 = sum(p[1] for p in parts)
        n = sum(p[2] for p in parts)
        return s2 / n - (s1 / n) ** 2

    # -- sampling ---------------------------------------------------------
    def sample(self, rng: np.random.Generator, size: int):
        raise NotImplementedError

    def sample_given_count(self, rng: np.random.Generator, size: int, count: int):
        """Exact draw from the law given the count, or None if unavailable."""
        return None

    def step(self, configs, rng: np.random.Generator):
        raise NotImplementedError

    # -- transitions ------------------------------------------------------
    def moves(self, configs) -> Moves:
        raise NotImplementedError

    def analytic_moments(self, configs):
        """Closed-form moments of the raw statistic, or None."""
        return None

    # -- enumeration ------------------------------------------------------
    @property
    def state_space_log2(self) -> float:
        raise NotImplementedError

    def enumerate_configs(self):
        raise NotEnumerable(f"{self.name} cannot be enumerated")

    @property
    def w_constants(self) -> PairConstants:
        """Constants for the standardised statistic W."""
        c = self.constants
        D = np.diag(self.w0_scale())
        Dinv = np.diag(1.0 / self.w0_scale())
        psi = Dinv @ c.psi @ D
        if self.transform_kind == "none":
            return PairConstants(lam=c.lam, psi=psi, sigma_y2=c.sigma_y2, a_plus=c.a_plus, a_minus=c.a_minus,
                                 b_plus=Dinv @ c.b_plus, b_minus=Dinv @ c.b_minus,
                                 psi_plus=Dinv @ c.psi_plus @ D, psi_minus=Dinv @ c.psi_minus @ D, d=c.d)
        return PairConstants(lam=c.lam, psi=psi, sigma_y2=c.sigma_y2, a_plus=c.a_plus, a_minus=c.a_minus,
                             psi_plus=psi / 2, psi_minus=psi / 2, d=c.d)

    def describe(self) -> dict:
        return {"model": self.name, "n": self.n, "d": self.d, "zeta": self.lattice.zeta,
                "constants": self.constants.to_dict()}


class BitGlauberModel(ExchangeableModel):
    """Configurations are 0/1 arrays over ``L`` independent Bernoulli sites.

    The chain picks a site uniformly and redraws it from its own Bernoulli law.
    """

    site_probs: np.ndarray

    @property
    def L(self) -> int:
        return len(self.site_probs)

    @property
    def count_mean(self) -> float:
        return float(self.site_probs.sum())

    def count_pmf(self):
        probs = np.unique(self.site_probs)
        if len(probs) == 1:
            support = np.arange(self.L + 1)
            return support.astype(float), binom.pmf(support, self.L, probs[0])
        pmf = np.array([1.0])
        for p in self.site_probs:
            pmf = np.convolve(pmf, [1 - p, p])
        return np.arange(self.L + 1, dtype=float), pmf

    def counts(self, configs) -> np.ndarray:
        return np.asarray(configs).sum(axis=1, dtype=np.int64)

    def sample(self, rng, size):
        return (rng.random((size, self.L)) < self.site_probs).astype(np.uint8)

    @property
    def has_sufficient_sampler(self) -> bool:  # type: ignore[override]
        return bool(np.all(self.site_probs == self.site_probs[0]))

    def sample_given_count(self, rng, size, count):
        if not self.has_sufficient_sampler:
            return None
        if not 0 <= count <= self.L:
            raise ValueError("count outside support")
        base = np.zeros((size, self.L), dtype=np.uint8)
        base[:, :count] = 1
        return rng.permuted(base, axis=1)

    def step(self, configs, rng):
        configs = np.array(configs, dtype=np.uint8, copy=True)
        b = configs.shape[0]
        site = rng.integers(0, self.L, size=b)
        configs[np.arange(b), site] = rng.random(b) < self.site_probs[site]
        return configs

    def flip_dx(self, configs) -> np.ndarray:
        """Change of X when each site is flipped, shape (B, L, d)."""
        raise NotImplementedError

    def moves(self, configs) -> Moves:
        configs = np.asarray(configs)
        up = configs == 0
        prob = np.where(up, self.site_probs, 1.0 - self.site_probs) / self.L
        dy = np.where(up, 1, -1).astype(np.int8)
        return Moves(prob=prob, dx=self.flip_dx(configs), dy=dy)

    @property
    def state_space_log2(self) -> float:
        return float(self.L)

    def enumerate_configs(self):
        if self.L > self.enumeration_limit_log2:
            raise NotEnumerable(f"2^{self.L} states exceed the enumeration budget")
        idx = np.arange(2**self.L, dtype=np.int64)
        configs = ((idx[:, None] >> np.arange(self.L)) & 1).astype(np.uint8)
        logw = configs @ np.log(self.site_probs) + (1 - configs) @ np.log1p(-self.site_probs)
        return configs, np.exp(logw)


def binom_pmf(n: int, p: float):
    support = np.arange(n + 1)
    return support.astype(float), binom.pmf(support, n, p)


def falling(m, j: int):
    out = np.ones_like(np.asarray(m, dtype=float))
    for i in range(j):
        out = out * (np.asarray(m, dtype=float) - i)
    return out


def comb(n, k) -> int:
    return math.comb(int(n), int(k))
