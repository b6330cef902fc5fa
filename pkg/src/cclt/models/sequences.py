"""Binary-sequence models: cyclic 01 pattern counts, even/odd 11 pattern counts and the toy model."""

from __future__ import annotations

import numpy as np

from ..core import MomentProfile, Moves, PairConstants, register_model
from .base import BitGlauberModel, ExchangeableModel, NotEnumerable, binom_pmf


class Pattern01(BitGlauberModel):
    """Number of ``01`` pairs in a cyclic Bernoulli(p) sequence, given the number of ones.

    ``Y = V - np`` and ``X = U - (1-2p) Y - npq``, which are uncorrelated.
    """

    name = "pattern01"
    transform_kind = "uni"
    has_analytic_moments = True

    def __init__(self, n: int, p: float = 0.5):
        if n < 4:
            raise ValueError("pattern01 needs n >= 4")
        if not 0 < p < 1:
            raise ValueError("p must lie in (0, 1)")
        self.n, self.p = int(n), float(p)
        self.site_probs = np.full(self.n, self.p)
        q = 1 - p
        self.constants = PairConstants(
            lam=1.0 / n, psi=2.0, sigma_y2=n * p * q, a_plus=p, a_minus=q,
            b_plus=2 * p * q, b_minus=-2 * p * q,
        )

    def ones_followed(self, configs):
        c = np.asarray(configs, dtype=np.int64)
        return ((1 - c) * np.roll(c, -1, axis=1)).sum(axis=1)

    def raw_stats(self, configs):
        p, q, n = self.p, 1 - self.p, self.n
        v = self.counts(configs)
        u = self.ones_followed(configs)
        y = v - n * p
        x = u - (1 - 2 * p) * y - n * p * q
        return x[:, None].astype(float), y.astype(float)

    def flip_dx(self, configs):
        c = np.asarray(configs, dtype=np.int64)
        left = np.roll(c, 1, axis=1)
        right = np.roll(c, -1, axis=1)
        shift = 1 - 2 * self.p
        up = (1 - left) - right - shift
        down = right - (1 - left) + shift
        return np.where(c == 0, up, down)[..., None].astype(float)

    def triple_counts(self, configs) -> dict:
        """Cyclic counts of the patterns 001 and 011."""
        c = np.asarray(configs, dtype=np.int64)
        a, b, e = c, np.roll(c, -1, axis=1), np.roll(c, -2, axis=1)
        return {
            "001": ((1 - a) * (1 - b) * e).sum(axis=1),
            "011": ((1 - a) * b * e).sum(axis=1),
        }

    def analytic_moments(self, configs):
        n, p = self.n, self.p
        q = 1 - p
        x, y = self.raw_stats(configs)
        x = x[:, 0]
        t = self.triple_counts(configs)
        c001 = t["001"] - n * q * q * p
        c011 = t["011"] - n * q * p * p
        m2p = (2 * n * p**2 * q**2 + 4 * (1 - 2 * p) * p * x + 4 * p * q * (1 - 3 * p) * y - 2 * p * c001) / n
        m2m = (2 * n * p**2 * q**2 - 4 * (1 - 2 * p) * q * x + 4 * p * q * (2 - 3 * p) * y - 2 * q * c011) / n
        return MomentProfile(
            m0_plus=p * q - p * y / n,
            m0_minus=p * q + q * y / n,
            m1_plus=(-(2 * p * x + 2 * p * q * y) / n)[:, None],
            m1_minus=(-(2 * q * x - 2 * p * q * y) / n)[:, None],
            m2_plus=m2p[:, None, None],
            m2_minus=m2m[:, None, None],
            w=x[:, None],
            y=y,
        )

    def declared_r0(self, configs):
        _, y = self.raw_stats(configs)
        lam = self.constants.lam
        return -lam * self.p * y, lam * (1 - self.p) * y

    # exact conditional moments of U given V = m
    def cond_u_mean(self, m):
        m = np.asarray(m, dtype=float)
        return m * (self.n - m) / (self.n - 1)

    def cond_u_var(self, m):
        m = np.asarray(m, dtype=float)
        n = self.n
        return m * (m - 1) * (n - m) * (n - m - 1) / ((n - 1) ** 2 * (n - 2))

    def cond_x_moments(self, y):
        m = np.asarray(y) + self.count_mean
        p = self.p
        mean = self.cond_u_mean(m) - (1 - 2 * p) * np.asarray(y) - self.n * p * (1 - p)
        return mean, self.cond_u_var(m) + mean**2

    def exact_w0_variance(self):
        return exact_w0_second_moment(self)


def exact_w0_second_moment(model) -> float:
    """``E(W0^2)`` from the Y law and exact conditional moments of X given Y."""
    ys, probs = model.y_pmf()
    ex, ex2 = model.cond_x_moments(ys)
    c = model.constants
    lam, psi, alpha, theta = c.lam, c.psi_scalar, c.alpha, float(c.theta[0])
    ym = model.y_moments
    slope = 1 + lam * psi * alpha * ys
    shift = 0.5 * lam * theta * (ys**2 - ym.ey2) + lam**2 * (psi + 1) * alpha * theta / 3 * (ys**3 - ym.ey3)
    second = slope**2 * ex2 + 2 * slope * shift * ex + shift**2
    first = slope * ex + shift
    return float(probs @ second - (probs @ first) ** 2)


class EvenOdd11(BitGlauberModel):
    """Difference of ``11`` pairs starting at even and odd positions.

    Sites alternate between Bernoulli(p) (odd positions) and Bernoulli(1-p)
    (even positions); the statistic is already symmetric, so W = X / sigma_X.
    """

    name = "evenodd11"
    has_analytic_moments = True

    def __init__(self, n: int, p: float = 0.5):
        if n < 4 or n % 2:
            raise ValueError("evenodd11 needs an even n >= 4")
        if not 0 < p < 1:
            raise ValueError("p must lie in (0, 1)")
        self.n, self.p = int(n), float(p)
        q = 1 - p
        # position i = j + 1 for array index j; odd positions carry p
        self.site_probs = np.where(np.arange(n) % 2 == 0, p, q).astype(float)
        self.signs = np.where(np.arange(n) % 2 == 0, -1.0, 1.0)  # (-1)^i for position i = j + 1
        self.constants = PairConstants(lam=1.0 / n, psi=2.0, sigma_y2=n * p * q, a_plus=0.5, a_minus=0.5)

    def raw_stats(self, configs):
        c = np.asarray(configs, dtype=float)
        x = (self.signs * c * np.roll(c, -1, axis=1)).sum(axis=1)
        y = c.sum(axis=1) - self.count_mean
        return x[:, None], y

    def flip_dx(self, configs):
        c = np.asarray(configs, dtype=float)
        delta = np.where(c == 0, 1.0, -1.0)
        neigh = np.roll(self.signs, 1) * np.roll(c, 1, axis=1) + self.signs * np.roll(c, -1, axis=1)
        return (delta * neigh)[..., None]

    def exact_w0_variance(self):
        p = self.p
        return self.n * p**2 * (1 - p) ** 2

    def centered(self, configs):
        return np.asarray(configs, dtype=float) - self.site_probs

    def analytic_moments(self, configs):
        """Drift is exactly ``-X/n``; M_0 and M_2 from site-weighted sums."""
        x, y = self.raw_stats(configs)
        return self._profile(configs, x, y)

    def _profile(self, configs, x, y):
        n = self.n
        c = np.asarray(configs)
        pi = self.site_probs
        dx = self.flip_dx(configs)[..., 0]
        up = c == 0
        wup = np.where(up, pi, 0.0) / n
        wdn = np.where(~up, 1 - pi, 0.0) / n
        return MomentProfile(
            m0_plus=wup.sum(1), m0_minus=wdn.sum(1),
            m1_plus=-x / n, m1_minus=-x / n,
            m2_plus=(wup * dx**2).sum(1)[:, None, None],
            m2_minus=(wdn * dx**2).sum(1)[:, None, None],
            w=x, y=y,
        )

    def paper_r2(self, configs):
        """Displayed centred triple sums for the second-moment remainders (W units)."""
        p = self.p
        q = 1 - p
        pi = self.site_probs
        wb = self.centered(configs)
        l, r = np.roll(wb, 1, axis=1), np.roll(wb, -1, axis=1)
        plus = -(pi * l**2 * wb + pi * r**2 * wb + 2 * p * q * l * r - 2 * pi * l * wb * r).sum(1)
        minus = (pi * l**2 * wb + pi * r**2 * wb - 2 * p * q * l * r - 2 * pi * l * wb * r).sum(1)
        return plus, minus

    def exact_r2(self, configs):
        """``M_{2,+-}/lam - psi sigma_X^2`` in X units, exactly.

        Differs from ``paper_r2`` by the centred squares ``pq (w_{i-1}^2 + w_{i+1}^2 - 2pq)``
        and, for the minus sign, by the weight ``1 - p_i`` on the triple terms.
        """
        p = self.p
        q = 1 - p
        pi = self.site_probs
        wb = self.centered(configs)
        l, r = np.roll(wb, 1, axis=1), np.roll(wb, -1, axis=1)
        square = l * l + r * r - 2 * l * r
        extra = p * q * (l * l + r * r - 2 * p * q)
        plus = (-pi * wb * square - 2 * p * q * l * r + extra).sum(1)
        minus = ((1 - pi) * wb * square - 2 * p * q * l * r + extra).sum(1)
        return plus, minus

    def declared_r0(self, configs):
        n = self.n
        wb = self.centered(configs)
        return -(self.site_probs * wb).sum(1) / n, ((1 - self.site_probs) * wb).sum(1) / n

    def sample_given_count(self, rng, size, count):
        return None

    def rejection_sample(self, rng, size, count, max_attempts=10**8):
        """Exact draw given the count by rejection on the per-parity counts.

        The odd-site and even-site one-counts are binomial; a pair is kept when
        it sums to ``count`` and ones are then placed uniformly within each
        parity class.  This has the same law as rejecting full sequences.
        """
        half = self.n // 2
        p = self.p
        kept_a = []
        attempts = 0
        need = size
        while need > 0:
            batch = max(4 * need, 1024)
            a = rng.binomial(half, p, size=batch)
            b = rng.binomial(half, 1 - p, size=batch)
            attempts += batch
            ok = np.flatnonzero(a + b == count)[:need]
            kept_a.append(a[ok])
            need -= len(ok)
            if attempts > max_attempts:
                raise RuntimeError("conditioning event too rare")
        a = np.concatenate(kept_a)
        b = count - a
        odd = (np.arange(half)[None, :] < a[:, None]).astype(np.uint8)
        even = (np.arange(half)[None, :] < b[:, None]).astype(np.uint8)
        odd = rng.permuted(odd, axis=1)
        even = rng.permuted(even, axis=1)
        out = np.empty((size, self.n), dtype=np.uint8)
        out[:, 0::2] = odd
        out[:, 1::2] = even
        return out, attempts


class ToyModel(ExchangeableModel):
    """``W ~ sum X_i + sum eps_i (omega_i - p)`` with standard normal X_i.

    Configurations hold the n normal summands followed by the n bits.  One
    chain step redraws a uniformly chosen pair ``(X_i, omega_i)``.
    """

    name = "toy"
    has_analytic_moments = True
    quadrature_nodes = 24

    def __init__(self, n: int, p: float = 0.5, eps=None):
        if n < 2:
            raise ValueError("toy model needs n >= 2")
        self.n, self.p = int(n), float(p)
        eps = np.zeros(n) if eps is None else np.asarray(eps, dtype=float)
        if eps.shape != (n,):
            raise ValueError("eps must have length n")
        if abs(eps.sum()) > 1e-9 * max(1.0, np.abs(eps).sum()):
            raise ValueError("eps must sum to zero")
        self.eps = eps
        q = 1 - p
        self.constants = PairConstants(lam=2 * p * q / n, psi=1.0, sigma_y2=n * p * q, a_plus=p, a_minus=q,
                                       psi_plus=0.5, psi_minus=0.5)

    @property
    def count_mean(self):
        return self.n * self.p

    def count_pmf(self):
        return binom_pmf(self.n, self.p)

    def counts(self, configs):
        return np.rint(np.asarray(configs)[:, self.n:].sum(1)).astype(np.int64)

    def raw_stats(self, configs):
        c = np.asarray(configs, dtype=float)
        xs, om = c[:, : self.n], c[:, self.n:]
        x = xs.sum(1) + ((om - self.p) * self.eps).sum(1)
        return x[:, None], om.sum(1) - self.count_mean

    def exact_w0_variance(self):
        return self.n + self.p * (1 - self.p) * float(self.eps @ self.eps)

    def sample(self, rng, size):
        return np.hstack([rng.standard_normal((size, self.n)), (rng.random((size, self.n)) < self.p).astype(float)])

    def sample_given_count(self, rng, size, count):
        bits = np.zeros((size, self.n))
        bits[:, :count] = 1
        return np.hstack([rng.standard_normal((size, self.n)), rng.permuted(bits, axis=1)])

    @property
    def has_sufficient_sampler(self):  # type: ignore[override]
        return True

    def step(self, configs, rng):
        c = np.array(configs, dtype=float, copy=True)
        b = c.shape[0]
        i = rng.integers(0, self.n, size=b)
        rows = np.arange(b)
        c[rows, i] = rng.standard_normal(b)
        c[rows, self.n + i] = rng.random(b) < self.p
        return c

    def moves(self, configs):
        """Outcome table with Gauss-Hermite nodes for the redrawn normal.

        Polynomial moments up to degree ``2*nodes - 1`` of the redrawn value are
        integrated exactly, which covers every M_{l,+-} with l <= 2.
        """
        c = np.asarray(configs, dtype=float)
        b, n, p = c.shape[0], self.n, self.p
        nodes, weights = np.polynomial.hermite_e.hermegauss(self.quadrature_nodes)
        weights = weights / weights.sum()
        xs, om = c[:, :n], c[:, n:]
        new_bit = np.array([0.0, 1.0])
        bit_prob = np.array([1 - p, p])
        dx = (nodes[None, None, None, :] - xs[:, :, None, None]
              + self.eps[None, :, None, None] * (new_bit[None, None, :, None] - om[:, :, None, None]))
        prob = np.broadcast_to(bit_prob[None, None, :, None] * weights[None, None, None, :] / n, dx.shape)
        dy = np.broadcast_to(new_bit[None, None, :, None] - om[:, :, None, None], dx.shape)
        return Moves(prob=prob.reshape(b, -1), dx=dx.reshape(b, -1, 1), dy=np.rint(dy.reshape(b, -1)).astype(np.int8))

    def analytic_moments(self, configs):
        c = np.asarray(configs, dtype=float)
        n, p = self.n, self.p
        q = 1 - p
        xs, om = c[:, :n], c[:, n:]
        zero, one = om == 0, om == 1
        x, y = self.raw_stats(configs)
        up = self.eps - xs
        down = -self.eps - xs
        return MomentProfile(
            m0_plus=p * zero.sum(1) / n,
            m0_minus=q * one.sum(1) / n,
            m1_plus=(p / n * (up * zero).sum(1))[:, None],
            m1_minus=(q / n * (down * one).sum(1))[:, None],
            m2_plus=(p / n * ((1 + up**2) * zero).sum(1))[:, None, None],
            m2_minus=(q / n * ((1 + down**2) * one).sum(1))[:, None, None],
            w=x,
            y=y,
        )

    @property
    def state_space_log2(self):
        return float("inf")

    def enumerate_configs(self):
        raise NotEnumerable("toy model has continuous coordinates")


@register_model("pattern01")
def _pattern01(n: int = 100, p: float = 0.5, **_):
    return Pattern01(n, p)


@register_model("evenodd11")
def _evenodd11(n: int = 100, p: float = 0.5, **_):
    return EvenOdd11(n, p)


@register_model("toy")
def _toy(n: int = 100, p: float = 0.5, eps=None, **_):
    return ToyModel(n, p, eps)
