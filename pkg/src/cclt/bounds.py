"""Closed-form Wasserstein bounds evaluated on residual summaries.

Every evaluator is pure arithmetic and returns a ``BoundReport`` whose total is
the sum of its named terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import BoundReport, ResidualSummary


@dataclass(frozen=True, slots=True)
class SteinConstants:
    c2: float = 4.0 / math.sqrt(2.0 * math.pi * math.e)
    c3: float = (2.0 + 8.0 * math.exp(-1.5)) / math.sqrt(2.0 * math.pi)
    abs_z_mean: float = math.sqrt(2.0 / math.pi)
    pi_over_8_quarter: float = (math.pi / 8.0) ** 0.25
    inv_sqrt_2e: float = 1.0 / math.sqrt(2.0 * math.e)

    def check(self) -> None:
        if not self.c2 < 1:
            raise AssertionError("c2 must be below 1")
        if not self.c3 < 2:
            raise AssertionError("c3 must be below 2")


CONSTANTS = SteinConstants()
CONSTANTS.check()

# 12-digit reference strings for the constants
REFERENCE_DIGITS = {
    "c2": "0.967882898077",
    "c3": "1.510013000130",
    "abs_z_mean": "0.797884560803",
    "pi_over_8_quarter": "0.791616743543",
    "inv_sqrt_2e": "0.428881942480",
}


def _report(tag: str, terms: dict, inputs: dict | None = None, notes=()) -> BoundReport:
    terms = {k: float(v) for k, v in terms.items()}
    return BoundReport(tag, terms, float(sum(terms.values())), dict(inputs or {}), tuple(notes))


def _nonneg(**values):
    for name, v in values.items():
        if v < 0:
            raise ValueError(f"{name} must be nonnegative")


def bound_t11(r1_mean: float, r2_mean: float, dw3_mean: float, lam: float) -> BoundReport:
    """Classical exchangeable-pair bound ``E|R1| + sqrt(2/pi) E|R2| + E|dW|^3 / (3 lam)``."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    _nonneg(r1_mean=r1_mean, r2_mean=r2_mean, dw3_mean=dw3_mean)
    return _report("T1.1", {
        "R1": r1_mean,
        "R2": CONSTANTS.abs_z_mean * r2_mean,
        "dW3": dw3_mean / (3.0 * lam),
    }, {"r1_mean": r1_mean, "r2_mean": r2_mean, "dw3_mean": dw3_mean, "lambda": lam})


def bound_t13(r_mean: float, gamma_hs: float, op_norm: float, max_moment: float, mixed_moment: float,
              trace_sigma: float) -> BoundReport:
    """Multivariate bound.

    ``op_norm`` is ``||Sigma^{-1/2}||_op``, ``max_moment`` is ``E|W|^2`` and
    ``mixed_moment`` is ``E(|Lambda^{-1} dW| |dW|^3)``.
    """
    _nonneg(r_mean=r_mean, gamma_hs=gamma_hs, op_norm=op_norm, max_moment=max_moment,
            mixed_moment=mixed_moment, trace_sigma=trace_sigma)
    third = op_norm**1.5 * CONSTANTS.pi_over_8_quarter * max(max_moment, trace_sigma) ** 0.25 * math.sqrt(mixed_moment)
    return _report("T1.3", {"R": r_mean, "Gamma": op_norm * gamma_hs, "smoothing": third}, {
        "r_mean": r_mean, "gamma_hs": gamma_hs, "op_norm": op_norm, "max_moment": max_moment,
        "mixed_moment": mixed_moment, "trace_sigma": trace_sigma,
    })


def bound_t21(s: ResidualSummary, averaged: bool = False) -> BoundReport:
    """Symmetric-case bound; ``E`` is taken as ``E|dW|^3``.

    With ``averaged`` the bound uses ``|R_{+} + R_{-}|`` at ``Y = k`` and halves
    every coefficient.
    """
    psi, lam, pk = s.psi, s.lam, s.p_k
    if pk <= 0:
        raise ZeroDivisionError("p_k = 0")
    if averaged:
        a, b, scale = s.abs_r1_sum_at_k, s.abs_r2_sum_at_k, 0.5
    else:
        a, b, scale = s.abs_r1_minus_at_k, s.abs_r2_minus_at_k, 1.0
    c1 = scale * 2.0 / psi
    c2 = scale * math.sqrt(2.0 / (math.pi * psi**2))
    terms = {
        "A_k": c1 * a,
        "C_over_p_k": c1 * s.r1_diff_mean / pk,
        "B_k": c2 * b,
        "D_over_p_k": c2 * s.r2_diff_mean / pk,
        "E_over_p_k": scale * 2.0 / (3.0 * lam * psi * pk) * s.dw3_mean,
    }
    notes = ("E evaluated as E|dW|^3",) + (("averaged variant",) if averaged else ())
    return _report("T2.1", terms, {"A_k": a, "B_k": b, "C": s.r1_diff_mean, "D": s.r2_diff_mean,
                                   "E": s.dw3_mean, "p_k": pk, "psi": psi, "lambda": lam}, notes)


def bound_l22(s: ResidualSummary) -> BoundReport:
    """Bound for W given ``Y in {k-1, k}``."""
    psi, lam, r = s.psi, s.lam, s.r_k
    return _report("L2.2", {
        "A_hat_k": 2.0 / (psi * (1 + r)) * s.a_hat,
        "B_hat_k": CONSTANTS.abs_z_mean / (psi * (1 + r)) * s.b_hat,
        "E_hat_k": 2.0 / (3.0 * lam * psi) * s.e_hat_k,
    }, {"A_hat_k": s.a_hat, "B_hat_k": s.b_hat, "E_hat_k": s.e_hat_k, "r_k": r, "psi": psi, "lambda": lam})


def bound_t23(s: ResidualSummary) -> BoundReport:
    """Improved symmetric-case bound for W given ``Y = k``."""
    psi, lam, r, Q = s.psi, s.lam, s.r_k, s.Q
    if Q <= 0:
        raise ValueError("Q must be positive")
    return _report("T2.3", {
        "A_hat_k": s.a_hat / psi,
        "B_hat_k": math.sqrt(1.0 / (2.0 * math.pi * psi**2)) * s.b_hat,
        "C_hat_k": (1 + r) / (2.0 * Q) * s.c_hat_k,
        "D_hat_k": (1 + r) / (2.0 * Q) * s.d_hat_k,
        "E_hat_k": (1 + r) * 2.0 / (3.0 * lam * psi) * s.e_hat_k,
    }, {"A_hat_k": s.a_hat, "B_hat_k": s.b_hat, "C_hat_k": s.c_hat_k, "D_hat_k": s.d_hat_k,
        "E_hat_k": s.e_hat_k, "r_k": r, "Q": Q, "psi": psi, "lambda": lam})


def sigma_inverse_sqrt_norm(sigma) -> float:
    """``||Sigma^{-1/2}||_op`` after checking that Sigma is symmetric positive definite."""
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    if sigma.shape[0] != sigma.shape[1] or not np.allclose(sigma, sigma.T, atol=1e-12):
        raise ValueError("Sigma must be a symmetric matrix")
    eig = np.linalg.eigvalsh(sigma)
    if eig.min() <= 1e-10:
        raise ValueError("Sigma must be positive definite")
    return float(1.0 / math.sqrt(eig.min()))


def bound_t31(s: ResidualSummary, sigma=None, variant: str = "fourth") -> BoundReport:
    """Multivariate conditional bound, fourth- or third-moment variant.

    Uses ``e_hat_fourth_k = E(|(lam Psi)^{-1} dW| |dW|^3 | Y in {k-1, k})`` and
    ``e_hat_third_k``, the same with ``|dW|^2``.
    """
    d = s.d
    sigma = np.eye(d) if sigma is None else np.atleast_2d(np.asarray(sigma, dtype=float))
    op = sigma_inverse_sqrt_norm(sigma)
    tr = float(np.trace(sigma))
    r, Q = s.r_k, s.Q
    f_hat = math.sqrt(tr + s.w2_mean)
    # one-dimensional summaries carry unscaled residuals; apply Psi^{-1} = 1/psi
    scale = 1.0 / s.psi if d == 1 else 1.0
    c_hat = s.w_abs_r0_mean + math.sqrt(tr) * s.abs_r0_mean
    terms = {
        "A_hat_k": scale * s.a_hat / (1 + r),
        "B_hat_k": op * scale * s.b_hat / (2.0 * (1 + r)),
        "C_hat_k": (1 + r) / (2.0 * Q) * c_hat,
        "D_hat_k": (1 + r) / (2.0 * Q) * s.d_hat_k,
    }
    inputs = {"A_hat_k": scale * s.a_hat, "B_hat_k": scale * s.b_hat, "C_hat_k": c_hat, "D_hat_k": s.d_hat_k,
              "r_k": r, "Q": Q, "op_norm": op, "trace_sigma": tr, "F_hat_k": f_hat}
    if variant == "fourth":
        terms["E_hat_F_hat"] = (1 + r) * op**1.5 * math.sqrt(CONSTANTS.c3 * s.e_hat_fourth_k * f_hat)
        inputs["E_hat_k"] = s.e_hat_fourth_k
        tag = "T3.1-4mom"
    elif variant == "third":
        e3 = s.e_hat_third_k
        scaled = CONSTANTS.c2 * op**2 * e3
        f_prime = 1.0 + abs(math.log(scaled / f_hat)) if scaled > 0 else 1.0
        terms["E_hat_F_hat"] = CONSTANTS.c2 * (1 + r) * op**2 * e3 * f_prime
        inputs.update({"E_hat_prime_k": e3, "F_hat_prime_k": f_prime})
        tag = "T3.1-3mom"
    else:
        raise ValueError("variant must be 'fourth' or 'third'")
    return _report(tag, terms, inputs)


def bound_l51(step_mean: float, weighted_r0: float, Q: float, mass: float = 1.0) -> BoundReport:
    """Comparison of ``Y = k`` against ``Y = k - 1`` for 1-Lipschitz test functions.

    ``step_mean`` is ``E(|dW| | Y in {k-1,k})``, ``weighted_r0`` is
    ``E((|W| + sqrt(tr Sigma))(|R_{0,+}| + |R_{0,-}|) | Y in {k-1,k})`` and
    ``mass`` is ``P(Y in {k-1, k})`` (1 gives the conditional form).
    """
    if Q <= 0:
        raise ValueError("Q must be positive")
    _nonneg(step_mean=step_mean, weighted_r0=weighted_r0, mass=mass)
    return _report("L5.1", {"step": mass * step_mean / Q, "R0": mass * weighted_r0 / Q},
                   {"step_mean": step_mean, "weighted_r0": weighted_r0, "Q": Q, "mass": mass})


def bound_l51_from_summary(s: ResidualSummary, trace_sigma: float | None = None, conditional: bool = True) -> BoundReport:
    tr = float(s.d) if trace_sigma is None else float(trace_sigma)
    weighted = s.w_abs_r0_mean + math.sqrt(tr) * s.abs_r0_mean
    mass = 1.0 if conditional else s.p_k + s.p_km1
    return bound_l51(s.d_hat_k, weighted, s.Q, mass)


def bound_t16_llt(sigma: float, r1_second_moment: float, r2_mean: float, r2_abs_y_mean: float,
                  r2_indicator_sup: float, sup_pmf: float, universal_c: float = 1.0) -> BoundReport:
    """Local limit bound on ``sup_k |sigma P(Y=k) - sigma phi(k)|``.

    ``universal_c`` is an unspecified universal constant; 1 is a convention.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    _nonneg(r1_second_moment=r1_second_moment, r2_mean=r2_mean, r2_abs_y_mean=r2_abs_y_mean,
            r2_indicator_sup=r2_indicator_sup, sup_pmf=sup_pmf, universal_c=universal_c)
    return _report("T1.6", {
        "universal": universal_c / sigma,
        "R1": math.sqrt(r1_second_moment) / sigma * (2.0 + CONSTANTS.inv_sqrt_2e + sigma * sup_pmf),
        "R2": r2_mean / (sigma**2) * CONSTANTS.inv_sqrt_2e,
        "R2_abs_Y": r2_abs_y_mean / sigma**3,
        "floor": (2.0 + r2_indicator_sup) / sigma,
    }, {"sigma": sigma, "universal_c": universal_c}, ("universal constant C is not known numerically; "
                                                       f"{universal_c:g} is a convention",))


def llt_ratio_bound(eps_y: float, k: float, sigma_y: float, unit_floor: bool = False) -> float:
    """Envelope ``max(eps, |k|/sigma^2) / (1 - eps)`` for ``|1 - p_{k-1}/p_k|`` (implied constant 1).

    ``unit_floor`` replaces ``|k|`` by ``max(|k|, 1)``: the gap between
    neighbouring Gaussian density values is of order ``1/sigma^2`` even at 0.
    """
    if not eps_y < 1:
        raise ValueError("eps_Y must be below 1")
    if sigma_y <= 0:
        raise ValueError("sigma_Y must be positive")
    kk = max(abs(k), 1.0) if unit_floor else abs(k)
    return max(eps_y, kk / sigma_y**2) / (1.0 - eps_y)


THEOREMS = {
    "t11": "T1.1", "t13": "T1.3", "t16": "T1.6", "t21": "T2.1", "l22": "L2.2", "t23": "T2.3",
    "t31": "T3.1-4mom", "t31-4mom": "T3.1-4mom", "t31-3mom": "T3.1-3mom", "l51": "L5.1",
}


def bound_from_summary(theorem: str, s: ResidualSummary, sigma=None) -> BoundReport:
    """Dispatch by theorem name (``t23``, ``T2.3``, ...)."""
    key = theorem.lower().replace(".", "").replace("_", "-")
    tag = THEOREMS.get(key) or THEOREMS.get(key.replace("-", ""))
    if tag is None:
        raise ValueError(f"unknown theorem {theorem!r}; choose from {sorted(THEOREMS)}")
    if tag == "T2.1":
        return bound_t21(s)
    if tag == "L2.2":
        return bound_l22(s)
    if tag == "T2.3":
        return bound_t23(s)
    if tag == "T3.1-4mom":
        return bound_t31(s, sigma, "fourth")
    if tag == "T3.1-3mom":
        return bound_t31(s, sigma, "third")
    if tag == "L5.1":
        return bound_l51_from_summary(s)
    raise ValueError(f"{tag} needs inputs beyond a residual summary")
