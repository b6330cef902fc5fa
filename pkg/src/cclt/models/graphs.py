"""Erdos-Renyi graph models: wedges given edges, (triangles, wedges) given edges, general subgraphs."""

from __future__ import annotations

import math
from functools import cached_property

import numpy as np

from ..core import MomentProfile, Moves, PairConstants, register_model
from .base import BitGlauberModel, falling
from .subgraphs import (
    SubgraphCounter, SubgraphSpec, copies_in_complete_graph, edge_endpoints, extension_count,
    named_subgraph, parse_subgraph,
)


class GraphModel(BitGlauberModel):
    """G(n, p) with edges stored in slots ``j(j-1)/2 + i`` for ``i < j``."""

    enumeration_limit_log2 = 28.0

    def __init__(self, n: int, p: float = 0.5):
        if n < 4:
            raise ValueError("graph models need n >= 4")
        if not 0 < p < 1:
            raise ValueError("p must lie in (0, 1)")
        self.n, self.p = int(n), float(p)
        self.N = n * (n - 1) // 2
        self.site_probs = np.full(self.N, self.p)
        self.ends = edge_endpoints(self.n)

    @cached_property
    def incidence(self) -> np.ndarray:
        inc = np.zeros((self.N, self.n), dtype=np.float32)
        a, b = self.ends
        inc[np.arange(self.N), a] = 1
        inc[np.arange(self.N), b] = 1
        return inc

    def degrees(self, configs) -> np.ndarray:
        return np.rint(np.asarray(configs, dtype=np.float32) @ self.incidence).astype(np.int64)

    def adjacency(self, configs) -> np.ndarray:
        c = np.asarray(configs, dtype=np.float32)
        B = c.shape[0]
        A = np.zeros((B, self.n, self.n), dtype=np.float32)
        a, b = self.ends
        A[:, a, b] = c
        A[:, b, a] = c
        return A

    def wedges(self, deg) -> np.ndarray:
        return (deg * (deg - 1) // 2).sum(axis=1)

    def triangles_and_codegrees(self, configs):
        A = self.adjacency(configs)
        A2 = np.matmul(A, A)
        a, b = self.ends
        codeg = np.rint(A2[:, a, b]).astype(np.int64)
        tri = np.rint((codeg * np.asarray(configs, dtype=np.int64)).sum(axis=1) / 3).astype(np.int64)
        return tri, codeg

    def wedge_centered(self, u, e):
        """``sum over wedges of (w - p)(w' - p)`` from wedge and edge counts."""
        n, N, p = self.n, self.N, self.p
        return u - 2 * (n - 2) * p * e + p * p * N * (n - 2)

    def triangle_centered(self, t, u, e):
        n, p = self.n, self.p
        return t - p * u + p * p * (n - 2) * e - p**3 * math.comb(n, 3)

    # Y law is Binomial(N, p)
    def count_pmf(self):
        from .base import binom_pmf
        return binom_pmf(self.N, self.p)

    def swap_step(self, configs, rng):
        """Fixed-edge-count chain: swap the indicators of two uniformly chosen slots."""
        c = np.array(configs, dtype=np.uint8, copy=True)
        B = c.shape[0]
        i = rng.integers(0, self.N, size=B)
        j = rng.integers(0, self.N, size=B)
        rows = np.arange(B)
        ci, cj = c[rows, i].copy(), c[rows, j].copy()
        c[rows, i], c[rows, j] = cj, ci
        return c


class WedgeEdge(GraphModel):
    """Number of wedges given the number of edges, ``X = U - 2(n-2)pY - (n-2)Np^2``."""

    name = "wedge-edge"
    transform_kind = "uni"
    has_analytic_moments = True

    def __init__(self, n: int, p: float = 0.5):
        super().__init__(n, p)
        q = 1 - p
        N = self.N
        b = 2 * (n - 2) * p * q
        self.constants = PairConstants(lam=1.0 / N, psi=2.0, sigma_y2=N * p * q, a_plus=p, a_minus=q,
                                       b_plus=-b, b_minus=b)

    @property
    def n_wedge_slots(self) -> int:
        return self.N * (self.n - 2)

    def raw_stats(self, configs):
        deg = self.degrees(configs)
        u = self.wedges(deg)
        e = deg.sum(axis=1) // 2
        y = e - self.N * self.p
        x = self.wedge_centered(u, e)
        return x[:, None].astype(float), y.astype(float)

    def flip_dx(self, configs):
        deg = self.degrees(configs)
        a, b = self.ends
        s = deg[:, a] + deg[:, b]
        c = np.asarray(configs)
        du = np.where(c == 0, s, -(s - 2))
        dy = np.where(c == 0, 1, -1)
        return (du - 2 * (self.n - 2) * self.p * dy)[..., None].astype(float)

    def analytic_moments(self, configs):
        n, N, p = self.n, self.N, self.p
        q = 1 - p
        x, y = self.raw_stats(configs)
        x = x[:, 0]
        deg = self.degrees(configs)
        a, b = self.ends
        c = np.asarray(configs)
        s = (deg[:, a] + deg[:, b]).astype(float)
        shift = 2 * (n - 2) * p
        m2p = p / N * np.where(c == 0, (s - shift) ** 2, 0).sum(1)
        m2m = q / N * np.where(c == 1, (s - 2 - shift) ** 2, 0).sum(1)
        b_ = 2 * (n - 2) * p * q
        return MomentProfile(
            m0_plus=p * q - p * y / N,
            m0_minus=p * q + q * y / N,
            m1_plus=(-(2 * p * x - b_ * y) / N)[:, None],
            m1_minus=(-(2 * q * x + b_ * y) / N)[:, None],
            m2_plus=m2p[:, None, None],
            m2_minus=m2m[:, None, None],
            w=x[:, None],
            y=y,
        )

    def declared_r0(self, configs):
        _, y = self.raw_stats(configs)
        lam = self.constants.lam
        return -lam * self.p * y, lam * (1 - self.p) * y

    # exact conditional moments of the wedge count given m edges
    def cond_u_mean(self, m):
        return self.n_wedge_slots * falling(m, 2) / falling(self.N, 2)

    def cond_u_second(self, m):
        Wc = self.n_wedge_slots
        share_one = Wc * 2 * (2 * (self.n - 2) - 1)
        disjoint = Wc * Wc - Wc - share_one
        N = self.N
        return (Wc * falling(m, 2) / falling(N, 2) + share_one * falling(m, 3) / falling(N, 3)
                + disjoint * falling(m, 4) / falling(N, 4))

    def cond_x_moments(self, y):
        y = np.asarray(y, dtype=float)
        m = y + self.count_mean
        shift = -2 * (self.n - 2) * self.p * y - (self.n - 2) * self.N * self.p**2
        eu, eu2 = self.cond_u_mean(m), self.cond_u_second(m)
        return eu + shift, eu2 + 2 * shift * eu + shift**2

    def exact_w0_variance(self):
        from .sequences import exact_w0_second_moment
        return exact_w0_second_moment(self)


class TriangleWedge(GraphModel):
    """``(T~, U~)``: centred triangle and wedge chaos given the number of edges."""

    name = "triangle-wedge"
    d = 2
    transform_kind = "multi"
    has_analytic_moments = True
    scale_mc_samples = 100_000

    def __init__(self, n: int, p: float = 0.5):
        super().__init__(n, p)
        q = 1 - p
        N = self.N
        b = 2 * (n - 2) * p * q
        self.constants = PairConstants(
            lam=1.0 / N, psi=np.diag([3.0, 2.0]), sigma_y2=N * p * q, a_plus=p, a_minus=q,
            b_plus=[0.0, -b], b_minus=[0.0, b],
            psi_plus=[[3 * p, -p * q], [0.0, 2 * p]],
            psi_minus=[[3 * q, p * q], [0.0, 2 * q]], d=2,
        )

    def raw_stats(self, configs):
        tri, _ = self.triangles_and_codegrees(configs)
        deg = self.degrees(configs)
        u = self.wedges(deg)
        e = deg.sum(axis=1) // 2
        x = np.stack([self.triangle_centered(tri, u, e), self.wedge_centered(u, e)], axis=1)
        return x.astype(float), (e - self.N * self.p).astype(float)

    def flip_dx(self, configs):
        _, codeg = self.triangles_and_codegrees(configs)
        deg = self.degrees(configs)
        a, b = self.ends
        s = deg[:, a] + deg[:, b]
        c = np.asarray(configs)
        up = c == 0
        dt = np.where(up, codeg, -codeg)
        du = np.where(up, s, -(s - 2))
        dy = np.where(up, 1, -1)
        n, p = self.n, self.p
        dtt = dt - p * du + p * p * (n - 2) * dy
        duu = du - 2 * (n - 2) * p * dy
        return np.stack([dtt, duu], axis=-1).astype(float)

    def analytic_moments(self, configs):
        """Linear closed forms in (T~, U~, Y) for the first moments; direct sums otherwise."""
        n, N, p = self.n, self.N, self.p
        q = 1 - p
        x, y = self.raw_stats(configs)
        mv = self.moves(configs)
        dx = mv.dx
        up = (mv.dy == 1)
        wp = np.where(up, mv.prob, 0.0)
        wm = np.where(~up, mv.prob, 0.0)
        b = 2 * (n - 2) * p * q
        m1p = -(x @ self.constants.psi_plus.T + np.outer(y, [0.0, -b])) / N
        m1m = -(x @ self.constants.psi_minus.T + np.outer(y, [0.0, b])) / N
        return MomentProfile(
            m0_plus=p * q - p * y / N,
            m0_minus=p * q + q * y / N,
            m1_plus=m1p,
            m1_minus=m1m,
            m2_plus=np.einsum("bs,bsi,bsj->bij", wp, dx, dx),
            m2_minus=np.einsum("bs,bsi,bsj->bij", wm, dx, dx),
            w=x,
            y=y,
        )

    def declared_r0(self, configs):
        _, y = self.raw_stats(configs)
        lam = self.constants.lam
        return -lam * self.p * y, lam * (1 - self.p) * y

    def exact_w0_variance(self):
        if self.N <= 15:
            from ..oracle import exact_expectation
            w0sq = exact_expectation(self, lambda cfg: self.w0_from_xy(*self.raw_stats(cfg)) ** 2)
            return w0sq
        return None


class GeneralSubgraph(GraphModel):
    """Count of a fixed pattern H with its linear edge projection removed.

    ``H^ = H - (m/N) p^(m-1) |S| E`` where ``|S|`` is the number of copies of
    H in the complete graph; W is ``H^ - E H^`` over its exact standard deviation.
    """

    name = "general-subgraph"
    enumeration_limit_log2 = 21.0

    def __init__(self, n: int, p: float = 0.5, H: SubgraphSpec | str = "k4"):
        super().__init__(n, p)
        self.H = parse_subgraph(H) if isinstance(H, str) else H
        if self.H.v > 8:
            raise ValueError("pattern has more than 8 vertices")
        if self.H.v > n:
            raise ValueError("pattern larger than the host graph")
        q = 1 - p
        self.counter = SubgraphCounter(self.H, self.n)
        self.constants = PairConstants(lam=1.0 / self.N, psi=2.0, sigma_y2=self.N * p * q, a_plus=p, a_minus=q)

    @cached_property
    def n_copies(self) -> int:
        return copies_in_complete_graph(self.H, self.n)

    @property
    def projection(self) -> float:
        """``sigma_{H,E} / sigma_E^2 = (m/N) p^(m-1) |S|``."""
        m = self.H.m
        return m / self.N * self.p ** (m - 1) * self.n_copies

    @property
    def mean_projected(self) -> float:
        m = self.H.m
        return self.p**m * self.n_copies - self.projection * self.N * self.p

    @cached_property
    def ext_triangle(self) -> int:
        return extension_count(named_subgraph("triangle"), self.H, self.n)

    @cached_property
    def ext_wedge(self) -> int:
        return extension_count(named_subgraph("wedge"), self.H, self.n)

    @property
    def triangle_coefficient(self) -> float:
        return self.p ** (self.H.m - 3) * self.ext_triangle

    @property
    def wedge_coefficient(self) -> float:
        return self.p ** (self.H.m - 2) * self.ext_wedge

    def projected(self, configs):
        h = self.counter.count(configs)
        e = np.asarray(configs, dtype=np.int64).sum(axis=1)
        return h - self.projection * e

    def raw_stats(self, configs):
        e = np.asarray(configs, dtype=np.int64).sum(axis=1)
        x = self.projected(configs) - self.mean_projected
        return x[:, None].astype(float), (e - self.N * self.p).astype(float)

    def flip_dx(self, configs):
        dh = self.counter.flip_delta(configs)
        dy = np.where(np.asarray(configs) == 0, 1, -1)
        return (dh - self.projection * dy)[..., None].astype(float)

    def exact_w0_variance(self):
        p, q, m = self.p, 1 - self.p, self.H.m
        sums = self.counter.overlap_sums()
        return float(sum((p * q) ** l * p ** (2 * (m - l)) * s for l, s in sums.items() if l >= 2))

    def decomposition(self, configs) -> dict:
        """Pathwise ``H^ - E H^ = c_T T~ + c_U U~ + R_H``."""
        deg = self.degrees(configs)
        u = self.wedges(deg)
        e = deg.sum(axis=1) // 2
        tri, _ = self.triangles_and_codegrees(configs)
        tt = self.triangle_centered(tri, u, e)
        uu = self.wedge_centered(u, e)
        x, _ = self.raw_stats(configs)
        r = x[:, 0] - self.triangle_coefficient * tt - self.wedge_coefficient * uu
        return {"centered": x[:, 0], "triangle": tt, "wedge": uu, "remainder": r}

    def chaos_ratios(self) -> dict:
        """Standard-deviation shares of the triangle and wedge parts."""
        n, N, p = self.n, self.N, self.p
        pq = p * (1 - p)
        sd_h = math.sqrt(self.exact_w0_variance())
        sd_t = math.sqrt(math.comb(n, 3) * pq**3)
        sd_u = math.sqrt(N * (n - 2) * pq**2)
        return {
            "rho1": self.triangle_coefficient * sd_t / sd_h,
            "rho2": self.wedge_coefficient * sd_u / sd_h,
            "sd_projected": sd_h,
        }


@register_model("wedge-edge")
def _wedge_edge(n: int = 20, p: float = 0.5, **_):
    return WedgeEdge(n, p)


@register_model("triangle-wedge")
def _triangle_wedge(n: int = 20, p: float = 0.5, **_):
    return TriangleWedge(n, p)


@register_model("general-subgraph")
def _general_subgraph(n: int = 6, p: float = 0.5, H="k4", **_):
    return GeneralSubgraph(n, p, H)
