"""Conditional moments ``M_{l,+-}``, their residuals and Monte-Carlo residual summaries."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import partial

import numpy as np

from .core import MomentProfile, PairConstants, ResidualSummary
from .rng import map_chunks, substream
from .sampling import check_acceptance, draw_given_count

ABS_Z_MEAN = math.sqrt(2.0 / math.pi)


def _deltas(model, configs, coords: str):
    mv = model.moves(configs)
    x, y = model.raw_stats(configs)
    if coords == "x":
        return mv, x, y, mv.dx, x
    if coords != "w":
        raise ValueError("coords must be 'x' or 'w'")
    w = model.w_from_xy(x, y)
    if getattr(model, "transform_kind", None) == "uni":
        return mv, x, y, _uni_steps(model, x[:, 0], y, mv.dx[..., 0], mv.dy)[..., None], w
    w_new = model.w_from_xy(x[:, None, :] + mv.dx, y[:, None] + mv.dy)
    return mv, x, y, w_new - w[:, None, :], w


def _uni_steps(model, x, y, dx, dy):
    """Scalar W steps using that the transform is affine in X at fixed Y."""
    zero, one = np.zeros((len(y), 1)), np.ones((len(y), 1))
    y_to = y[:, None] + np.array([[-1.0, 0.0, 1.0]])
    base = model.w_from_xy(zero[..., None], y_to)[..., 0]
    slope = model.w_from_xy(one[..., None], y_to)[..., 0] - base
    w_old = x * slope[:, 1] + base[:, 1]
    col = dy.astype(np.intp) + 1
    s = np.take_along_axis(slope, col, 1)
    b = np.take_along_axis(base, col, 1)
    return (x[:, None] + dx) * s + b - w_old[:, None]


def _profile(mv, dW, w, y) -> MomentProfile:
    up = mv.dy == 1
    dn = mv.dy == -1
    wp = np.where(up, mv.prob, 0.0)
    wm = np.where(dn, mv.prob, 0.0)
    if dW.shape[-1] == 1:
        step = dW[..., 0]
        m1p, m1m = (wp * step).sum(1), (wm * step).sum(1)
        m2p, m2m = (wp * step * step).sum(1), (wm * step * step).sum(1)
        return MomentProfile(m0_plus=wp.sum(1), m0_minus=wm.sum(1), m1_plus=m1p[:, None], m1_minus=m1m[:, None],
                             m2_plus=m2p[:, None, None], m2_minus=m2m[:, None, None], w=w, y=y)
    return MomentProfile(
        m0_plus=wp.sum(1),
        m0_minus=wm.sum(1),
        m1_plus=np.einsum("bs,bsi->bi", wp, dW),
        m1_minus=np.einsum("bs,bsi->bi", wm, dW),
        m2_plus=np.einsum("bs,bsi,bsj->bij", wp, dW, dW),
        m2_minus=np.einsum("bs,bsi,bsj->bij", wm, dW, dW),
        w=w,
        y=y,
    )


def exact_moments(model, configs, coords: str = "w") -> MomentProfile:
    """``E((dW)^l 1{dY = +-1} | state)`` by averaging over every one-step outcome.

    ``coords="x"`` uses the raw statistic, ``"w"`` the transformed and
    standardised one.
    """
    configs = np.atleast_2d(np.asarray(configs))
    mv, _, y, dW, w = _deltas(model, configs, coords)
    return _profile(mv, dW, w, y)


def step_moments(model, configs, coords: str = "w") -> tuple[MomentProfile, dict]:
    """Moment profile plus per-state absolute step moments used by the bounds."""
    configs = np.atleast_2d(np.asarray(configs))
    mv, _, y, dW, w = _deltas(model, configs, coords)
    prof = _profile(mv, dW, w, y)
    c = model.constants
    scaled = np.linalg.solve(c.lam * (model.w_constants.psi if coords == "w" else c.psi), np.eye(c.d))
    if c.d == 1:
        norm = np.abs(dW[..., 0])
        pre = abs(scaled[0, 0]) * norm
    else:
        norm = np.sqrt((dW**2).sum(-1))
        pre = np.sqrt((np.einsum("ij,bsj->bsi", scaled, dW) ** 2).sum(-1))
    extra = {
        "dw1": (mv.prob * norm).sum(1),
        "dw3": (mv.prob * norm**3).sum(1),
        "dw_pre_dw3": (mv.prob * pre * norm**3).sum(1),
        "dw_pre_dw2": (mv.prob * pre * norm**2).sum(1),
    }
    return prof, extra


def residuals_from_profile(profile: MomentProfile, constants: PairConstants, coords: str = "w",
                           sigma=None) -> dict:
    """Invert the moment contracts.

    ``coords="w"``: ``R_0 = M_0 - Q``, ``R_1 = -M_1/lam - Psi W / 2`` and
    ``Gamma_2 = M_2/lam - Psi Sigma`` (scalar ``R_2`` when d = 1).
    ``coords="x"``: the drift remainder is taken against the split contract
    ``-lam (Psi_+- X + b_+- Y)``.
    """
    lam = constants.lam
    if lam == 0:
        raise ZeroDivisionError("lambda = 0")
    d = constants.d
    Psi = constants.psi
    sigma = np.eye(d) if sigma is None else np.atleast_2d(np.asarray(sigma, dtype=float))
    w = np.asarray(profile.w, dtype=float)
    y = np.asarray(profile.y, dtype=float)
    out = {"r0_plus": profile.m0_plus - constants.Q, "r0_minus": profile.m0_minus - constants.Q}
    if coords == "w":
        half = 0.5 * w @ Psi.T
        out["r1_plus"] = -profile.m1_plus / lam - half
        out["r1_minus"] = -profile.m1_minus / lam - half
    elif coords == "x":
        out["r1_plus"] = -profile.m1_plus / lam - w @ constants.psi_plus.T - np.outer(y, constants.b_plus)
        out["r1_minus"] = -profile.m1_minus / lam - w @ constants.psi_minus.T - np.outer(y, constants.b_minus)
    else:
        raise ValueError("coords must be 'x' or 'w'")
    target = Psi @ sigma
    gp = profile.m2_plus / lam - target
    gm = profile.m2_minus / lam - target
    if d == 1:
        out["r2_plus"], out["r2_minus"] = gp[:, 0, 0], gm[:, 0, 0]
    out["gamma2_plus"], out["gamma2_minus"] = gp, gm
    return out


def holder_bound(norm_p: float, prob: float, p: float = 8.0) -> float:
    """Conditional-mean envelope ``||X||_p / P(A)^{1/p}`` for ``E(|X| | A)``."""
    if not 0 < prob <= 1:
        raise ValueError("probability must lie in (0, 1]")
    if p < 1:
        raise ValueError("Holder exponent must be at least 1")
    return norm_p / prob ** (1.0 / p)


# --------------------------------------------------------------------------
# per-state quantities and Monte-Carlo summaries


def state_quantities(model, configs) -> dict:
    """Per-state absolute residuals and step moments in W coordinates."""
    prof, extra = step_moments(model, configs, "w")
    wc = model.w_constants
    res = residuals_from_profile(prof, wc, "w")
    d = wc.d
    psi_inv = np.linalg.inv(wc.psi)
    r1p = np.sqrt(((res["r1_plus"] @ psi_inv.T) ** 2).sum(1))
    r1m = np.sqrt(((res["r1_minus"] @ psi_inv.T) ** 2).sum(1))
    r1sum = np.sqrt((((res["r1_plus"] + res["r1_minus"]) @ psi_inv.T) ** 2).sum(1))
    r1diff = np.sqrt((((res["r1_plus"] - res["r1_minus"]) @ psi_inv.T) ** 2).sum(1))
    if d == 1:
        r2p, r2m = np.abs(res["r2_plus"]), np.abs(res["r2_minus"])
        r2sum = np.abs(res["r2_plus"] + res["r2_minus"])
        r2diff = np.abs(res["r2_plus"] - res["r2_minus"])
        r1p, r1m = np.abs(res["r1_plus"][:, 0]), np.abs(res["r1_minus"][:, 0])
        r1sum = np.abs(res["r1_plus"][:, 0] + res["r1_minus"][:, 0])
        r1diff = np.abs(res["r1_plus"][:, 0] - res["r1_minus"][:, 0])
        offset = ABS_Z_MEAN
    else:
        hs = lambda g: np.sqrt((np.einsum("ij,bjk->bik", psi_inv, g) ** 2).sum((1, 2)))
        r2p, r2m = hs(res["gamma2_plus"]), hs(res["gamma2_minus"])
        r2sum = hs(res["gamma2_plus"] + res["gamma2_minus"])
        r2diff = hs(res["gamma2_plus"] - res["gamma2_minus"])
        offset = math.sqrt(d)
    wn = np.sqrt((prof.w**2).sum(1))
    r0 = np.abs(res["r0_plus"]) + np.abs(res["r0_minus"])
    return {
        "r1_plus": r1p, "r1_minus": r1m, "r1_sum": r1sum, "r1_diff": r1diff,
        "r2_plus": r2p, "r2_minus": r2m, "r2_sum": r2sum, "r2_diff": r2diff,
        "c_term": (wn + offset) * r0,
        "r0": r0,
        "w_r0": wn * r0,
        "dw1": extra["dw1"], "dw3": extra["dw3"],
        "e4": extra["dw_pre_dw3"], "e3": extra["dw_pre_dw2"],
        "w2": wn**2,
        "w": prof.w,
    }


SUMMED = ("r1_plus", "r1_minus", "r1_sum", "r1_diff", "r2_plus", "r2_minus", "r2_sum", "r2_diff",
          "c_term", "r0", "w_r0", "dw1", "dw3", "e4", "e3", "w2")


@dataclass
class Accumulator:
    """Associative running sums for means and standard errors."""

    n: int = 0
    s1: dict | None = None
    s2: dict | None = None

    def add(self, q: dict) -> "Accumulator":
        s1 = {k: float(np.sum(q[k])) for k in SUMMED}
        s2 = {k: float(np.sum(np.asarray(q[k]) ** 2)) for k in SUMMED}
        return self.merge(Accumulator(len(q["dw1"]), s1, s2))

    def merge(self, other: "Accumulator") -> "Accumulator":
        if self.s1 is None:
            return Accumulator(other.n, dict(other.s1), dict(other.s2))
        return Accumulator(self.n + other.n, {k: self.s1[k] + other.s1[k] for k in SUMMED},
                           {k: self.s2[k] + other.s2[k] for k in SUMMED})

    def mean(self, key: str) -> float:
        return self.s1[key] / self.n

    def stderr(self, key: str) -> float:
        m = self.mean(key)
        var = max(self.s2[key] / self.n - m * m, 0.0)
        return math.sqrt(var / max(self.n - 1, 1))


def _accumulate_chunk(model, count, keep_w, rng, size):
    if count is None:
        cfg = model.sample(rng, size)
    else:
        cfg, _ = draw_given_count(model, rng, size, count)
    q = state_quantities(model, cfg)
    return Accumulator().add(q), (q["w"] if keep_w else None)


def conditional_accumulate(model, count: int | None, n_samples: int, seed: int, stream: int,
                           workers: int = 1, chunk: int = 2048, keep_w: bool = False):
    """Sum per-state quantities over draws given ``count`` (or unconditional draws)."""
    run = partial(_accumulate_chunk, model, count, keep_w)
    parts = map_chunks(run, n_samples, seed, stream=(stream,), chunk=chunk, workers=workers)
    acc = Accumulator()
    for a, _ in parts:
        acc = acc.merge(a)
    ws = np.concatenate([w for _, w in parts]) if keep_w else None
    return acc, ws


def estimate_residual_summary(model, k: int, n_samples: int, seed: int, p_norm: float = 8.0,
                              workers: int = 1, unconditional: bool = False, keep_w: bool = False,
                              min_accepted: int = 1000):
    """Monte-Carlo estimates of every conditional expectation the bounds consume.

    ``k`` is the integer offset on the lattice.  Draws given ``Y = k`` and
    ``Y = k - 1`` are made separately and mixed with the exact weights
    ``1 : r_k``.  ``p_norm`` is recorded for Holder-based envelopes.
    Returns the summary and, if ``keep_w``, the W draws given ``Y = k``.
    """
    y_k, y_km1 = model.lattice.point(k), model.lattice.point(k - 1)
    p_k, p_km1 = model.y_probability(y_k), model.y_probability(y_km1)
    if p_k <= 0 or p_km1 <= 0:
        raise ValueError("P(Y in {k-1, k}) must be positive")
    c_k, c_km1 = model.count_for_y(y_k), model.count_for_y(y_km1)
    check_acceptance(model, (c_k, c_km1), substream(seed, 99))
    n_samples = max(int(n_samples), min_accepted)
    r = p_km1 / p_k
    at_k, w_k = conditional_accumulate(model, c_k, n_samples, seed, 1, workers, keep_w=keep_w)
    at_km1, _ = conditional_accumulate(model, c_km1, n_samples, seed, 2, workers)

    def mix(key):
        m = (at_k.mean(key) + r * at_km1.mean(key)) / (1 + r)
        se = math.hypot(at_k.stderr(key), r * at_km1.stderr(key)) / (1 + r)
        return m, se

    wc = model.w_constants
    d = wc.d
    c_hat, c_se = mix("c_term")
    d_hat, d_se = mix("dw1")
    e_hat, e_se = mix("dw3")
    e4, e4_se = mix("e4")
    e3, e3_se = mix("e3")
    w2, w2_se = mix("w2")
    f_hat = math.sqrt(d + w2)
    errors = {
        "abs_r1_minus_at_k": at_k.stderr("r1_minus"),
        "abs_r1_plus_at_km1": at_km1.stderr("r1_plus"),
        "abs_r2_minus_at_k": at_k.stderr("r2_minus"),
        "abs_r2_plus_at_km1": at_km1.stderr("r2_plus"),
        "A_hat_k": math.hypot(at_k.stderr("r1_minus"), r * at_km1.stderr("r1_plus")),
        "B_hat_k": math.hypot(at_k.stderr("r2_minus"), r * at_km1.stderr("r2_plus")),
        "c_hat_k": c_se, "d_hat_k": d_se, "e_hat_k": e_se if d == 1 else e4_se,
        "e_hat_third_k": e3_se, "e_hat_fourth_k": e4_se, "f_hat_k": 0.5 * w2_se / max(f_hat, 1e-300),
    }
    extra = {}
    if unconditional:
        un, _ = conditional_accumulate(model, None, n_samples, seed, 3, workers)
        extra = {"r1_diff_mean": un.mean("r1_diff"), "r2_diff_mean": un.mean("r2_diff"),
                 "dw3_mean": un.mean("dw3")}
        errors.update({"r1_diff_mean": un.stderr("r1_diff"), "r2_diff_mean": un.stderr("r2_diff"),
                       "dw3_mean": un.stderr("dw3")})
    psi = float(np.trace(wc.psi) / d)
    summary = ResidualSummary(
        k=y_k,
        abs_r1_minus_at_k=at_k.mean("r1_minus"),
        abs_r1_plus_at_km1=at_km1.mean("r1_plus"),
        abs_r2_minus_at_k=at_k.mean("r2_minus"),
        abs_r2_plus_at_km1=at_km1.mean("r2_plus"),
        c_hat_k=c_hat, d_hat_k=d_hat,
        e_hat_k=e_hat if d == 1 else e4,
        f_hat_k=f_hat,
        r_k=r, p_k=p_k, p_km1=p_km1,
        lam=wc.lam, psi=psi, Q=wc.Q, d=d,
        e_hat_third_k=e3,
        e_hat_fourth_k=e4,
        abs_r1_plus_at_k=at_k.mean("r1_plus"),
        abs_r2_plus_at_k=at_k.mean("r2_plus"),
        abs_r1_sum_at_k=at_k.mean("r1_sum"),
        abs_r2_sum_at_k=at_k.mean("r2_sum"),
        w2_mean=w2,
        abs_r0_mean=mix("r0")[0],
        w_abs_r0_mean=mix("w_r0")[0],
        samples=n_samples,
        mc_error=errors,
        **extra,
    )
    return (summary, w_k) if keep_w else summary


def exact_residual_summary(model, k: int) -> ResidualSummary:
    """Same summary computed by exhaustive enumeration (small models only)."""
    from .oracle import exact_conditional_quantities

    y_k, y_km1 = model.lattice.point(k), model.lattice.point(k - 1)
    p_k, p_km1 = model.y_probability(y_k), model.y_probability(y_km1)
    qk = exact_conditional_quantities(model, y_k)
    qm = exact_conditional_quantities(model, y_km1)
    r = p_km1 / p_k
    mix = lambda key: (qk[key] + r * qm[key]) / (1 + r)
    wc = model.w_constants
    d = wc.d
    w2 = mix("w2")
    return ResidualSummary(
        k=y_k,
        abs_r1_minus_at_k=qk["r1_minus"], abs_r1_plus_at_km1=qm["r1_plus"],
        abs_r2_minus_at_k=qk["r2_minus"], abs_r2_plus_at_km1=qm["r2_plus"],
        c_hat_k=mix("c_term"), d_hat_k=mix("dw1"), e_hat_k=mix("dw3") if d == 1 else mix("e4"),
        f_hat_k=math.sqrt(d + w2), r_k=r, p_k=p_k, p_km1=p_km1,
        lam=wc.lam, psi=float(np.trace(wc.psi) / d), Q=wc.Q, d=d,
        e_hat_third_k=mix("e3"), e_hat_fourth_k=mix("e4"), abs_r1_plus_at_k=qk["r1_plus"], abs_r2_plus_at_k=qk["r2_plus"],
        abs_r1_sum_at_k=qk["r1_sum"], abs_r2_sum_at_k=qk["r2_sum"], w2_mean=w2,
        abs_r0_mean=mix("r0"), w_abs_r0_mean=mix("w_r0"), samples=0,
    )


# --------------------------------------------------------------------------
# exchangeability diagnostic


def _step_g(name: str):
    if name in ("alternating", "sign"):
        return lambda j: np.where(j <= 0, np.where(j % 2 == 0, 1.0, -1.0), 0.0)
    if name in ("indicator", "point"):
        return lambda j: (j == 0).astype(float)
    raise ValueError(f"unknown step function {name!r}")


def _antiderivative(name: str):
    if name == "sin":
        return lambda w: -np.cos(w)
    if name == "zero":
        return lambda w: np.zeros_like(w)
    if name == "tanh":
        return lambda w: np.log(np.cosh(w))
    raise ValueError(f"unknown test function {name!r}")


def theta_values(model, configs, k: int, g: str = "alternating", f: str = "sin") -> np.ndarray:
    """Per-state ``E((F(W') - F(W)) (g(Y'-k) 1{dY=1} + g(Y-k) 1{dY=-1}) | state)`` for scalar W."""
    gf, F = _step_g(g), _antiderivative(f)
    mv = model.moves(configs)
    x, y = model.raw_stats(configs)
    w = model.w_from_xy(x, y)[..., 0]
    w_new = model.w_from_xy(x[:, None, :] + mv.dx, y[:, None] + mv.dy)[..., 0]
    j = model.lattice.offset(y) - k
    weight = np.where(mv.dy == 1, gf(j[:, None] + 1), 0.0) + np.where(mv.dy == -1, gf(j)[:, None], 0.0)
    return (mv.prob * (F(w_new) - F(w[:, None])) * weight).sum(1)


def theta_diagnostic(model, k: int, g: str = "alternating", n_samples: int = 20_000, seed: int = 0,
                     f: str = "sin", start=None, steps: int = 0) -> dict:
    """Mean and standard error of the exchangeability diagnostic.

    States are stationary draws unless ``start`` (a single configuration) is
    given, in which case every sample starts there and runs ``steps`` chain
    steps.
    """

    def run(rng, size):
        if start is None:
            cfg = model.sample(rng, size)
        else:
            cfg = np.repeat(np.asarray(start)[None, :], size, axis=0)
            for _ in range(steps):
                cfg = model.step(cfg, rng)
        v = theta_values(model, cfg, k, g, f)
        return v.sum(), (v**2).sum(), size

    parts = map_chunks(run, n_samples, seed, stream=(7,), chunk=2048)
    s1 = sum(p[0] for p in parts)
    s2 = sum(p[1] for p in parts)
    n = sum(p[2] for p in parts)
    mean = s1 / n
    se = math.sqrt(max(s2 / n - mean**2, 0.0) / max(n - 1, 1))
    return {"mean": mean, "stderr": se, "samples": n, "z": mean / se if se > 0 else (0.0 if mean == 0 else math.copysign(math.inf, mean))}
