"""Exhaustive enumeration at small sizes: exact laws and exact conditional moments.

Binary sequences and graphs are enumerated in Gray-code order so that each
step flips a single bit and the statistics are updated in O(1) (sequences) or
O(n) (graphs).  Per-count sums are kept as exact integers; conditional moments
given the count are then exact rationals, because every configuration with the
same count has the same weight.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numba
import numpy as np

from .core import _jsonable

MAX_BINARY_N = 22
MAX_GRAPH_SLOTS = 28
MAX_URN_N = 12

BINARY_STATISTICS = ("pattern01", "evenodd11")


def _blocks(total: int, workers: int) -> list[tuple[int, int]]:
    workers = max(1, min(int(workers), total))
    edges = np.linspace(0, total, workers + 1).astype(np.int64)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def _run_blocks(kernel, total: int, workers: int, *args):
    blocks = _blocks(total, workers)
    if len(blocks) == 1:
        return [kernel(*args, *blocks[0])]
    with ThreadPoolExecutor(len(blocks)) as pool:
        return list(pool.map(lambda b: kernel(*args, *b), blocks))


# ---------------------------------------------------------------------------
# binary sequences


@numba.njit(cache=True, nogil=True)
def _seq_stat(bits, stat):
    n = bits.shape[0]
    s = 0
    for i in range(n):
        j = (i + 1) % n
        if stat == 0:
            s += (1 - bits[i]) * bits[j]
        else:
            sign = -1 if i % 2 == 0 else 1
            s += sign * bits[i] * bits[j]
    return s


@numba.njit(cache=True, nogil=True)
def _seq_local(bits, i, stat):
    """Contribution of the two cyclic pairs touching site i."""
    n = bits.shape[0]
    l = (i - 1) % n
    r = (i + 1) % n
    if stat == 0:
        return (1 - bits[l]) * bits[i] + (1 - bits[i]) * bits[r]
    sl = -1 if l % 2 == 0 else 1
    si = -1 if i % 2 == 0 else 1
    return sl * bits[l] * bits[i] + si * bits[i] * bits[r]


@numba.njit(cache=True, nogil=True)
def _binary_kernel(n, stat, start, stop):
    half = (n + 1) // 2
    count = np.zeros((half + 1, n // 2 + 1), dtype=np.int64)
    s1 = np.zeros((half + 1, n // 2 + 1), dtype=np.int64)
    s2 = np.zeros((half + 1, n // 2 + 1), dtype=np.int64)
    bits = np.zeros(n, dtype=np.int64)
    g = start ^ (start >> 1)
    even = 0
    odd = 0
    for i in range(n):
        bits[i] = (g >> i) & 1
        if bits[i] == 1:
            if i % 2 == 0:
                even += 1
            else:
                odd += 1
    u = _seq_stat(bits, stat)
    for idx in range(start, stop):
        if idx > start:
            t = 0
            v = idx
            while (v & 1) == 0:
                v >>= 1
                t += 1
            before = _seq_local(bits, t, stat)
            bits[t] = 1 - bits[t]
            u += _seq_local(bits, t, stat) - before
            delta = 1 if bits[t] == 1 else -1
            if t % 2 == 0:
                even += delta
            else:
                odd += delta
        count[even, odd] += 1
        s1[even, odd] += u
        s2[even, odd] += u * u
    return count, s1, s2


@dataclass(frozen=True)
class BinaryLaw:
    """Exact integer tables indexed by (#ones at even index, #ones at odd index)."""

    n: int
    statistic: str
    p: float | Fraction
    count: np.ndarray
    s1: np.ndarray
    s2: np.ndarray

    def _by_total(self, table) -> list[int]:
        out = [0] * (self.n + 1)
        for a in range(table.shape[0]):
            for b in range(table.shape[1]):
                out[a + b] += int(table[a, b])
        return out

    def site_probs(self) -> tuple:
        """Per-parity success probabilities (even index, odd index)."""
        p = self.p
        if self.statistic == "evenodd11":
            return p, 1 - p
        return p, p

    def cell_weight(self, a: int, b: int):
        pe, po = self.site_probs()
        ne, no = (self.n + 1) // 2, self.n // 2
        return pe**a * (1 - pe) ** (ne - a) * po**b * (1 - po) ** (no - b)

    def conditional_moments(self, m: int, exact: bool = True):
        """``(E(S | count = m), Var(S | count = m))`` of the statistic S."""
        tot = num1 = num2 = 0
        for a in range(self.count.shape[0]):
            b = m - a
            if not 0 <= b < self.count.shape[1]:
                continue
            c = int(self.count[a, b])
            if c == 0:
                continue
            w = self.cell_weight(a, b) if self.statistic == "evenodd11" else 1
            tot += w * c
            num1 += w * int(self.s1[a, b])
            num2 += w * int(self.s2[a, b])
        if tot == 0:
            raise ValueError(f"count {m} has probability zero")
        if exact and not isinstance(tot, float):
            mean = Fraction(num1) / Fraction(tot)
            return mean, Fraction(num2) / Fraction(tot) - mean * mean
        mean = float(num1) / float(tot)
        return mean, float(num2) / float(tot) - mean * mean

    def count_pmf(self) -> list:
        out = [0] * (self.n + 1)
        for a in range(self.count.shape[0]):
            for b in range(self.count.shape[1]):
                c = int(self.count[a, b])
                if c:
                    out[a + b] += c * self.cell_weight(a, b)
        return out

    def to_dict(self) -> dict:
        pmf = self.count_pmf()
        mean_count = sum(m * float(w) for m, w in enumerate(pmf))
        out = {}
        for m, w in enumerate(pmf):
            if w == 0:
                continue
            mu, var = self.conditional_moments(m, exact=False)
            out[f"{m - mean_count:.12g}"] = {"count": m, "prob": float(w), "mean": float(mu), "var": float(var)}
        return {"n": self.n, "statistic": self.statistic, "p": float(self.p), "laws": out}

    def to_json(self) -> str:
        return json.dumps(_jsonable(self.to_dict()), sort_keys=True, indent=2)


def enumerate_binary(n: int, p=Fraction(1, 2), statistic: str = "pattern01", workers: int = 1) -> BinaryLaw:
    """All ``2^n`` sequences; statistic ``pattern01`` (cyclic 01 count) or ``evenodd11``.

    For ``evenodd11`` the statistic is the signed 11 count and sites alternate
    between ``p`` (odd positions) and ``1 - p``.  Pass ``p`` as a Fraction for
    exact rational weights.
    """
    if n > MAX_BINARY_N:
        raise ValueError(f"n = {n} exceeds the binary enumeration limit {MAX_BINARY_N}")
    if n < 3:
        raise ValueError("need n >= 3")
    if statistic not in BINARY_STATISTICS:
        raise ValueError(f"statistic must be one of {BINARY_STATISTICS}")
    stat = BINARY_STATISTICS.index(statistic)
    parts = _run_blocks(_binary_kernel, 1 << n, workers, n, stat)
    count = sum(p_[0] for p_ in parts)
    s1 = sum(p_[1] for p_ in parts)
    s2 = sum(p_[2] for p_ in parts)
    return BinaryLaw(n, statistic, p, count, s1, s2)


@numba.njit(cache=True)
def _gray_walk_values(n, stat, stop):
    """Statistic after each of the first ``stop`` Gray-code steps, updated incrementally."""
    out = np.empty(stop, dtype=np.int64)
    bits = np.zeros(n, dtype=np.int64)
    u = 0
    for idx in range(stop):
        if idx > 0:
            t = 0
            v = idx
            while (v & 1) == 0:
                v >>= 1
                t += 1
            before = _seq_local(bits, t, stat)
            bits[t] = 1 - bits[t]
            u += _seq_local(bits, t, stat) - before
        out[idx] = u
    return out


def gray_walk_binary(n: int, statistic: str, steps: int) -> np.ndarray:
    return _gray_walk_values(n, BINARY_STATISTICS.index(statistic), steps)


def gray_code(idx) -> np.ndarray:
    idx = np.asarray(idx, dtype=np.int64)
    return idx ^ (idx >> 1)


# ---------------------------------------------------------------------------
# graphs


@numba.njit(cache=True, nogil=True)
def _graph_kernel(n, ea, eb, start, stop):
    N = ea.shape[0]
    cnt = np.zeros(N + 1, dtype=np.int64)
    su = np.zeros(N + 1, dtype=np.int64)
    suu = np.zeros(N + 1, dtype=np.int64)
    st = np.zeros(N + 1, dtype=np.int64)
    stt = np.zeros(N + 1, dtype=np.int64)
    stu = np.zeros(N + 1, dtype=np.int64)
    adj = np.zeros((n, n), dtype=np.int64)
    deg = np.zeros(n, dtype=np.int64)
    g = start ^ (start >> 1)
    e = 0
    for s in range(N):
        if (g >> s) & 1:
            a, b = ea[s], eb[s]
            adj[a, b] = 1
            adj[b, a] = 1
            deg[a] += 1
            deg[b] += 1
            e += 1
    u = 0
    for v in range(n):
        u += deg[v] * (deg[v] - 1) // 2
    t = 0
    for i in range(n):
        for j in range(i + 1, n):
            if adj[i, j]:
                for k in range(j + 1, n):
                    t += adj[i, k] * adj[j, k]
    for idx in range(start, stop):
        if idx > start:
            s = 0
            v = idx
            while (v & 1) == 0:
                v >>= 1
                s += 1
            a, b = ea[s], eb[s]
            co = 0
            for k in range(n):
                co += adj[a, k] * adj[b, k]
            if adj[a, b] == 0:
                u += deg[a] + deg[b]
                t += co
                adj[a, b] = 1
                adj[b, a] = 1
                deg[a] += 1
                deg[b] += 1
                e += 1
            else:
                adj[a, b] = 0
                adj[b, a] = 0
                deg[a] -= 1
                deg[b] -= 1
                e -= 1
                u -= deg[a] + deg[b]
                t -= co
        cnt[e] += 1
        su[e] += u
        suu[e] += u * u
        st[e] += t
        stt[e] += t * t
        stu[e] += t * u
    return cnt, su, suu, st, stt, stu


GRAPH_TABLES = ("count", "U", "UU", "T", "TT", "TU")


@dataclass(frozen=True)
class GraphLaw:
    """Per-edge-count integer sums of the wedge count U and triangle count T."""

    n: int
    p: float | Fraction
    tables: dict

    @property
    def N(self) -> int:
        return self.n * (self.n - 1) // 2

    def conditional(self, m: int, key: str) -> Fraction:
        """Exact ``E(key | E = m)`` for key in U, UU, T, TT, TU."""
        c = int(self.tables["count"][m])
        if c == 0:
            raise ValueError(f"edge count {m} outside support")
        return Fraction(int(self.tables[key][m]), c)

    def conditional_var(self, m: int, key: str = "U") -> Fraction:
        mean = self.conditional(m, key)
        return self.conditional(m, key + key) - mean * mean

    def count_pmf(self) -> list:
        p = self.p
        return [int(c) * p**m * (1 - p) ** (self.N - m) for m, c in enumerate(self.tables["count"])]

    def to_dict(self) -> dict:
        pmf = self.count_pmf()
        out = {}
        for m, w in enumerate(pmf):
            out[f"{m - self.N * float(self.p):.12g}"] = {
                "edges": m, "prob": float(w),
                "E_U": float(self.conditional(m, "U")), "Var_U": float(self.conditional_var(m, "U")),
                "E_T": float(self.conditional(m, "T")), "Var_T": float(self.conditional_var(m, "T")),
            }
        return {"n": self.n, "p": float(self.p), "laws": out}

    def to_json(self) -> str:
        return json.dumps(_jsonable(self.to_dict()), sort_keys=True, indent=2)


def graph_edge_arrays(n: int) -> tuple[np.ndarray, np.ndarray]:
    from .models.subgraphs import edge_endpoints
    return edge_endpoints(n)


def enumerate_graphs(n: int, p=Fraction(1, 2), workers: int = 1) -> GraphLaw:
    """All ``2^N`` graphs on n labelled vertices, with wedge and triangle sums per edge count."""
    N = n * (n - 1) // 2
    if N > MAX_GRAPH_SLOTS:
        raise ValueError(f"N = {N} edge slots exceed the graph enumeration limit {MAX_GRAPH_SLOTS}")
    if n < 2:
        raise ValueError("need n >= 2")
    ea, eb = graph_edge_arrays(n)
    parts = _run_blocks(_graph_kernel, 1 << N, workers, n, ea, eb)
    tables = {key: sum(part[i] for part in parts) for i, key in enumerate(GRAPH_TABLES)}
    return GraphLaw(n, p, tables)


# ---------------------------------------------------------------------------
# urns


def enumerate_urn(n: int, p1: float, p2: float) -> dict:
    """Exact conditional law of the scaled W given V = k, for every k.

    Given k balls in urn 2 the other ``n - k`` balls split between urns 1 and
    3 binomially, so the law is a finite trinomial sum.  Keys are lattice
    points ``k - n p2``.
    """
    from scipy.stats import binom

    from .models.urns import UrnModel

    model = UrnModel(n, p1, p2)
    p3 = model.p3
    scale = float(model.w0_scale()[0])
    r = p1 / (p1 + p3)
    out = {}
    for k in range(n + 1):
        rest = n - k
        a = np.arange(rest + 1)
        values = (a / p1 - (rest - a) / p3) / scale
        probs = binom.pmf(a, rest, r)
        out[k - n * p2] = {
            "count": k,
            "prob": float(binom.pmf(k, n, p2)),
            "values": values,
            "probs": probs,
            "mean": float(probs @ values),
            "var": float(probs @ values**2 - (probs @ values) ** 2),
        }
    return out


def enumerate_urn_bruteforce(n: int, p1: float, p2: float) -> dict:
    """Same laws by listing all ``3^n`` urn assignments (n <= 12)."""
    if n > MAX_URN_N:
        raise ValueError(f"n = {n} exceeds the urn enumeration limit {MAX_URN_N}")
    from .models.urns import UrnModel

    model = UrnModel(n, p1, p2)
    configs, w = model.enumerate_configs()
    wv, y = model.stats(configs)
    out = {}
    for yy in np.unique(y):
        sel = y == yy
        ws = w[sel]
        vals = wv[sel, 0]
        mean = ws @ vals / ws.sum()
        out[float(yy)] = {"prob": float(ws.sum()), "mean": float(mean),
                          "var": float(ws @ vals**2 / ws.sum() - mean**2)}
    return out


# ---------------------------------------------------------------------------
# generic small-model enumeration


def _check_enumerable(model):
    from .models.base import NotEnumerable

    if model.state_space_log2 > model.enumeration_limit_log2 + 1e-9:
        raise NotEnumerable(f"{model.name} at n={model.n} exceeds the enumeration budget")


def _batches(model, chunk: int = 1 << 14):
    _check_enumerable(model)
    configs, w = model.enumerate_configs()
    for s in range(0, len(w), chunk):
        yield configs[s:s + chunk], w[s:s + chunk]


def exact_expectation(model, fn) -> np.ndarray:
    """``E fn(config)`` by exhaustive weighted summation; ``fn`` maps a batch to (B, ...)."""
    total = None
    mass = 0.0
    for cfg, w in _batches(model):
        v = np.tensordot(w, np.asarray(fn(cfg), dtype=float), axes=(0, 0))
        total = v if total is None else total + v
        mass += w.sum()
    return total / mass


def exact_conditional_expectation(model, fn, y: float):
    """``E(fn(config) | Y = y)`` by exhaustive summation."""
    count = model.count_for_y(y)
    total = None
    mass = 0.0
    for cfg, w in _batches(model):
        sel = model.counts(cfg) == count
        if not sel.any():
            continue
        v = np.tensordot(w[sel], np.asarray(fn(cfg[sel]), dtype=float), axes=(0, 0))
        total = v if total is None else total + v
        mass += w[sel].sum()
    if mass == 0:
        raise ValueError(f"Y = {y} has probability zero")
    return total / mass


def exact_conditional_x_moments(model, y: float) -> tuple[float, float]:
    """``(E(X | Y = y), E(X^2 | Y = y))`` for a scalar raw statistic."""
    def fn(cfg):
        x, _ = model.raw_stats(cfg)
        return np.stack([x[:, 0], x[:, 0] ** 2], axis=1)

    m = exact_conditional_expectation(model, fn, y)
    return float(m[0]), float(m[1])


def exact_conditional_quantities(model, y: float) -> dict:
    """Exact conditional means of every per-state quantity the bound summaries use."""
    from .moments import SUMMED, state_quantities

    def fn(cfg):
        q = state_quantities(model, cfg)
        return np.stack([q[k] for k in SUMMED], axis=1)

    v = exact_conditional_expectation(model, fn, y)
    return dict(zip(SUMMED, (float(a) for a in v)))


def exact_w_law(model) -> dict:
    """Exact conditional law of scalar W given each lattice point (small models)."""
    vals, ys, ws = [], [], []
    for cfg, w in _batches(model):
        wv, y = model.stats(cfg)
        vals.append(wv[:, 0])
        ys.append(y)
        ws.append(w)
    vals, ys, ws = np.concatenate(vals), np.concatenate(ys), np.concatenate(ws)
    out = {}
    for yy in np.unique(np.round(ys, 9)):
        sel = np.abs(ys - yy) < 1e-7
        order = np.argsort(vals[sel])
        out[float(yy)] = {"values": vals[sel][order], "probs": ws[sel][order] / ws[sel].sum(),
                          "prob": float(ws[sel].sum())}
    return out


# ---------------------------------------------------------------------------
# subgraph decomposition


def _subgraph_stats(model, configs):
    deg = model.degrees(configs)
    u = model.wedges(deg)
    e = deg.sum(axis=1) // 2
    tri, _ = model.triangles_and_codegrees(configs)
    h = model.counter.count(configs)
    return e.astype(np.int64), u.astype(np.int64), tri.astype(np.int64), h.astype(np.int64)


def exact_decomposition_check(n: int, p=Fraction(1, 2), H="k4") -> dict:
    """Verify ``H^ - E H^ = c_T T~ + c_U U~ + R_H`` on every graph and ``E R_H = 0`` exactly.

    ``R_H`` is computed pathwise by subtraction.  Because it is an affine
    function of the integer counts (E, U, T, H) with coefficients polynomial in
    p, its mean is assembled from exact per-edge-count integer sums using
    rational arithmetic when ``p`` is a Fraction.
    """
    from .models.graphs import GeneralSubgraph

    if n > 7:
        raise ValueError("decomposition check limited to n <= 7")
    model = GeneralSubgraph(n, float(p), H)
    if model.H.v > 5:
        raise ValueError("decomposition check limited to patterns with at most 5 vertices")
    N, m_h = model.N, model.H.m
    pf = Fraction(p) if not isinstance(p, float) else p
    one = Fraction(1) if isinstance(pf, Fraction) else 1.0
    q = one - pf
    S = model.n_copies
    proj = Fraction(m_h, N) * pf ** (m_h - 1) * S if isinstance(pf, Fraction) else m_h / N * pf ** (m_h - 1) * S
    c_t = pf ** (m_h - 3) * model.ext_triangle if m_h >= 3 else 0 * one
    c_u = pf ** (m_h - 2) * model.ext_wedge
    c3 = math.comb(n, 3)
    # per edge count: number of graphs and integer sums of H, U, T
    sums = [[0, 0, 0, 0] for _ in range(N + 1)]
    max_abs = 0.0
    sq = 0.0
    for cfg, w in _batches(model):
        e, u, t, h = _subgraph_stats(model, cfg)
        for m in np.unique(e):
            sel = e == m
            row = sums[int(m)]
            row[0] += int(sel.sum())
            row[1] += int(h[sel].sum())
            row[2] += int(u[sel].sum())
            row[3] += int(t[sel].sum())
        r = model.decomposition(cfg)["remainder"]
        sq += float(w @ r**2)
        max_abs = max(max_abs, float(np.abs(r).max()))
    weight = [pf**m * q ** (N - m) for m in range(N + 1)]
    EH = sum(weight[m] * sums[m][1] for m in range(N + 1))
    EU = sum(weight[m] * sums[m][2] for m in range(N + 1))
    ET = sum(weight[m] * sums[m][3] for m in range(N + 1))
    EE = N * pf
    et_tilde = ET - pf * EU + pf**2 * (n - 2) * EE - pf**3 * c3
    eu_tilde = EU - 2 * (n - 2) * pf * EE + pf**2 * N * (n - 2)
    eh_centred = EH - proj * EE - (pf**m_h * S - proj * N * pf)
    mean_r = eh_centred - c_t * et_tilde - c_u * eu_tilde
    var_hat = model.exact_w0_variance()
    return {
        "n": n,
        "H": model.H.label or str(model.H.edges),
        "ext_triangle": model.ext_triangle,
        "ext_wedge": model.ext_wedge,
        "triangle_coefficient": float(c_t),
        "wedge_coefficient": float(c_u),
        "mean_remainder": mean_r,
        "abs_mean_remainder": abs(float(mean_r)),
        "max_abs_remainder": max_abs,
        "mean_square_remainder": sq,
        "normalised_remainder": sq / (var_hat / n) if var_hat > 0 else 0.0,
        "var_projected": var_hat,
    }
