"""Change of variable that symmetrises the conditional drift of an exchangeable pair.

A raw statistic X whose drift is ``M_{1,+-} = -lambda (Psi_+- X + b_+- Y + R)``
is replaced by a small polynomial correction in (X, Y) whose drift is
``-lambda (Psi W / 2 + R~)`` for both signs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import PairConstants


@dataclass(frozen=True, slots=True)
class YMoments:
    ey2: float
    ey3: float


def y_moments_from_pmf(values, probs) -> YMoments:
    values = np.asarray(values, dtype=float)
    probs = np.asarray(probs, dtype=float)
    return YMoments(float(probs @ values**2), float(probs @ values**3))


def change_of_variable_uni(x, y, constants: PairConstants, ym: YMoments) -> np.ndarray:
    """``X + lam psi alpha XY + (lam theta / 2)(Y^2 - EY^2) + (lam^2 (psi+1) alpha theta / 3)(Y^3 - EY^3)``."""
    if constants.Q == 0:
        raise ZeroDivisionError("Q = 0")
    lam, psi = constants.lam, constants.psi_scalar
    alpha, theta = constants.alpha, float(constants.theta[0])
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return (
        x
        + lam * psi * alpha * x * y
        + 0.5 * lam * theta * (y**2 - ym.ey2)
        + lam**2 * (psi + 1.0) * alpha * theta / 3.0 * (y**3 - ym.ey3)
    )


def change_of_variable_multi(x, y, constants: PairConstants, ym: YMoments) -> np.ndarray:
    """Vector version with ``A = (Psi_+ - Psi_-)/(2Q)``; ``x`` has shape (..., d)."""
    if constants.Q == 0:
        raise ZeroDivisionError("Q = 0")
    lam, d = constants.lam, constants.d
    A = constants.drift_asymmetry
    alpha = constants.alpha
    theta = constants.theta
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)[..., None]
    cubic = lam**2 * ((A + alpha * np.eye(d)) @ theta) / 3.0
    return (
        x
        + lam * (x @ A.T) * y
        + 0.5 * lam * theta * (y**2 - ym.ey2)
        + cubic * (y**3 - ym.ey3)
    )


def transform_coefficients(constants: PairConstants) -> dict:
    """Numeric coefficients of the change of variable, for reporting."""
    lam = constants.lam
    A = constants.drift_asymmetry
    theta = constants.theta
    return {
        "A": A.tolist(),
        "alpha": constants.alpha,
        "theta": theta.tolist(),
        "xy": (lam * A).tolist(),
        "y2": (0.5 * lam * theta).tolist(),
        "y3": (lam**2 * ((A + constants.alpha * np.eye(constants.d)) @ theta) / 3.0).tolist(),
    }


# ----------------------------------------------------------------------------
# residual bookkeeping for the univariate transform


def transformed_residual_components(x, y, r1_plus, r1_minus, constants: PairConstants, sigma_w0: float) -> dict:
    """Displayed components of the transformed drift remainder, per state.

    Returns the four component arrays for each sign together with the leading
    ``(lam theta / 2)(1 - psi/2)(Y^2 - EY^2)/sigma`` term.  ``r1_plus`` and
    ``r1_minus`` are the raw drift remainders of X.
    """
    lam, psi = constants.lam, constants.psi_scalar
    alpha, theta, Q = constants.alpha, float(constants.theta[0]), constants.Q
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    out = {}
    for sign, a, b, r1 in ((1, constants.a_plus, float(constants.b_plus[0]), r1_plus),
                           (-1, constants.a_minus, float(constants.b_minus[0]), r1_minus)):
        e0 = lam * psi**2 * alpha * a * x * (y + sign) - 0.5 * lam * alpha * psi * x * y \
            + np.asarray(r1) * (1 + sign * lam * psi * alpha + lam * psi * alpha * y)
        e1 = lam * (sign * lam * b * psi * alpha - sign * a * theta / 2.0
                    + (psi + 1) * theta * alpha * (Q - lam * a / 3.0)) * y
        e2 = -sign * lam**2 * theta * (psi + 1) * alpha * a * y**2
        e3 = (lam * theta * (psi + 1) * alpha * Q / 3.0 - lam**2 * theta * (psi + 1) * alpha * a * y**3)
        out["+" if sign > 0 else "-"] = (e0, e1, e2, e3)
    out["lead"] = 0.5 * lam * theta * (1.0 - psi / 2.0)
    return out


def transformed_drift_envelope(x, y, r1_plus, r1_minus, constants: PairConstants, sigma_w0: float,
                               ey2: float, ey3: float) -> np.ndarray:
    """Per-state envelope of ``|M_{1,+}(W) + M_{1,-}(W) + lam psi W|``.

    Sum over both signs of the absolute component values, each scaled by
    ``lam / sigma``, plus the leading centred-square term and the cubic
    centring offset.
    """
    lam, psi = constants.lam, constants.psi_scalar
    alpha, theta = constants.alpha, float(constants.theta[0])
    y = np.asarray(y, dtype=float)
    comp = transformed_residual_components(x, y, r1_plus, r1_minus, constants, sigma_w0)
    total = np.zeros_like(y, dtype=float)
    for sign in ("+", "-"):
        for part in comp[sign]:
            total = total + np.abs(part)
    total = total + np.abs(comp["lead"] * (y**2 - ey2))
    total = total + np.abs(lam**2 * psi * (psi + 1) * alpha * theta / 6.0 * (y**3 - ey3))
    return lam * total / sigma_w0


# ----------------------------------------------------------------------------


def conditional_mean_check(model, k: int) -> dict:
    """Exact conditional mean of X and of the transformed variable given Y = zeta + k.

    Compares against the closed-form conditional means and the quadratic and
    cubic corrections of the change of variable.
    """
    from .oracle import exact_conditional_x_moments

    if model.name not in ("pattern01", "wedge-edge"):
        raise ValueError(f"conditional mean check unsupported for {model.name}")
    y = model.lattice.point(k)
    ex, ex2 = exact_conditional_x_moments(model, y)
    c = model.constants
    lam, psi, alpha, theta = c.lam, c.psi_scalar, c.alpha, float(c.theta[0])
    ym = model.y_moments
    n = model.n
    if model.name == "pattern01":
        p, q = model.p, 1 - model.p
        closed = n * p * q / (n - 1) * (1 - 2 * alpha * y / n - y**2 / (n * p * q))
    else:
        N, p, q = model.N, model.p, 1 - model.p
        closed = -(2 * N * p * q / (n + 1)) * (1 - 2 * alpha * y / N - y**2 / (N * p * q))
    xy_part = (1 + lam * psi * alpha * y) * ex
    correction = 0.5 * lam * theta * (y**2 - ym.ey2) + lam**2 * (psi + 1) * alpha * theta / 3 * (y**3 - ym.ey3)
    w0_mean = xy_part + correction
    return {
        "model": model.name,
        "n": n,
        "k": int(k),
        "y": y,
        "E_X_given_Y": ex,
        "closed_form": closed,
        "abs_error": abs(ex - closed),
        "E_X_plus_XY_given_Y": xy_part,
        "correction": correction,
        "E_W0_given_Y": w0_mean,
        "relative_discrepancy": abs(w0_mean) / max(abs(xy_part), 1e-300),
    }


def transformed_residuals_uni(model, configs) -> dict:
    """Per-state raw remainders, displayed components and exact transformed remainders."""
    from .moments import exact_moments, residuals_from_profile

    x, y = model.raw_stats(configs)
    raw = exact_moments(model, configs, coords="x")
    rr = residuals_from_profile(raw, model.constants, coords="x")
    scale = float(model.w0_scale()[0])
    comp = transformed_residual_components(x[:, 0], y, rr["r1_plus"][:, 0], rr["r1_minus"][:, 0],
                                           model.constants, scale)
    prof = exact_moments(model, configs, coords="w")
    tr = residuals_from_profile(prof, model.w_constants, coords="w")
    envelope = transformed_drift_envelope(x[:, 0], y, rr["r1_plus"][:, 0], rr["r1_minus"][:, 0],
                                          model.constants, scale, model.y_moments.ey2, model.y_moments.ey3)
    drift_sum = prof.m1_plus[:, 0] + prof.m1_minus[:, 0] + model.constants.lam * model.constants.psi_scalar * prof.w[:, 0]
    return {
        "components": comp,
        "r1_plus": tr["r1_plus"][:, 0],
        "r1_minus": tr["r1_minus"][:, 0],
        "r2_plus": tr["r2_plus"],
        "r2_minus": tr["r2_minus"],
        "drift_sum": drift_sum,
        "envelope": envelope,
        "y": y,
    }


ASSUMPTION_SLACK = 1e-12


def assumption_check(model) -> list[dict]:
    """Exhaustive check of the drift envelope and the declared ``R_{0,+-} = -+ lam a_+- Y``, per lattice point.

    For each ``k`` reports ``|E(M_{1,+} + M_{1,-} + lam psi W | Y = k)|`` next to
    the conditional mean of the residual envelope, and the largest deviation
    of ``M_{0,+-} - Q`` from the declared form.
    """
    from .moments import exact_moments, residuals_from_profile

    configs, weights = model.enumerate_configs()
    c = model.constants
    lam, psi = c.lam, c.psi_scalar
    prof = exact_moments(model, configs, coords="w")
    drift = prof.m1_plus[:, 0] + prof.m1_minus[:, 0] + lam * psi * prof.w[:, 0]
    if model.transform_kind == "uni":
        envelope = transformed_residuals_uni(model, configs)["envelope"]
    else:
        rr = residuals_from_profile(prof, model.w_constants, coords="w")
        envelope = lam * (np.abs(rr["r1_plus"][:, 0]) + np.abs(rr["r1_minus"][:, 0]))
    y = prof.y
    r0_plus_gap = np.abs(prof.m0_plus - c.Q + lam * c.a_plus * y)
    r0_minus_gap = np.abs(prof.m0_minus - c.Q - lam * c.a_minus * y)
    rows = []
    for yv in np.unique(np.round(y, 9)):
        sel = np.abs(y - yv) < 1e-7
        w = weights[sel]
        mass = float(w.sum())
        if mass <= 0:
            continue
        mean_drift = float(w @ drift[sel]) / mass
        mean_env = float(w @ envelope[sel]) / mass
        r0_gap = float(max(r0_plus_gap[sel].max(), r0_minus_gap[sel].max()))
        rows.append({
            "model": model.name, "n": model.n, "k": int(round(yv - model.lattice.zeta)), "y": float(yv),
            "prob": mass, "abs_mean_drift": abs(mean_drift), "envelope": mean_env,
            "drift_ok": abs(mean_drift) <= mean_env + ASSUMPTION_SLACK,
            "r0_max_error": r0_gap, "r0_ok": r0_gap <= ASSUMPTION_SLACK,
        })
    return rows
