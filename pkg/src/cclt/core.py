"""Domain types shared by every model, estimator and bound evaluator.

Everything here is an immutable value object.  Array-valued fields hold either a
single evaluation or a leading batch axis; the helpers never mutate them.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping

import numpy as np

LATTICE_TOL = 1e-9

Matrix = np.ndarray


def _as_matrix(value, d: int) -> np.ndarray:
    arr = np.atleast_2d(np.asarray(value, dtype=float))
    if arr.shape != (d, d):
        raise ValueError(f"expected a {d}x{d} matrix, got shape {arr.shape}")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


def _as_vector(value, d: int) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(value, dtype=float)).reshape(-1)
    if arr.shape != (d,):
        raise ValueError(f"expected a length-{d} vector, got shape {arr.shape}")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, slots=True)
class LatticeSpec:
    """Support of the conditioning statistic: ``zeta + Z`` with span one."""

    zeta: float
    span: int = 1

    def __post_init__(self):
        if not 0.0 <= self.zeta < 1.0:
            raise ValueError(f"zeta must lie in [0, 1), got {self.zeta}")
        if self.span != 1:
            raise ValueError("only span-1 lattices are supported")

    @classmethod
    def from_mean(cls, mean: float) -> "LatticeSpec":
        """Lattice of ``count - mean`` for an integer-valued count."""
        zeta = (-mean) % 1.0
        if zeta > 1.0 - LATTICE_TOL:
            zeta = 0.0
        if zeta < LATTICE_TOL:
            zeta = 0.0
        return cls(float(zeta))

    def point(self, offset: int) -> float:
        return self.zeta + int(offset)

    def offset(self, y) -> np.ndarray:
        return np.rint(np.asarray(y, dtype=float) - self.zeta).astype(np.int64)

    def contains(self, y, tol: float = LATTICE_TOL) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        return np.abs(y - self.zeta - np.rint(y - self.zeta)) <= tol


@dataclass(frozen=True, slots=True)
class PairConstants:
    """Constants of the linear/quadratic contracts for the raw statistic X.

    ``psi`` is the scalar drift constant in one dimension and the matrix
    ``Psi`` otherwise.  ``psi_plus``/``psi_minus`` carry the split drift
    matrices ``M_{1,+-} ~ -lambda (Psi_+- X + b_+- Y)``; when omitted they are
    ``a_+- * Psi``.
    """

    lam: float
    psi: Any
    sigma_y2: float
    a_plus: float
    a_minus: float
    b_plus: Any = 0.0
    b_minus: Any = 0.0
    psi_plus: Any = None
    psi_minus: Any = None
    d: int = 1

    def __post_init__(self):
        if not 0.0 < self.lam < 1.0:
            raise ValueError(f"lambda must lie in (0, 1), got {self.lam}")
        if self.sigma_y2 <= 0:
            raise ValueError("sigma_Y^2 must be positive")
        if abs(self.a_plus + self.a_minus - 1.0) > 1e-12:
            raise ValueError("a_plus + a_minus must equal 1")
        d = self.d
        Psi = _as_matrix(self.psi, d)
        if abs(np.linalg.det(Psi)) < 1e-14:
            raise ValueError("Psi must be invertible")
        object.__setattr__(self, "psi", Psi)
        bp = _as_vector(np.broadcast_to(np.asarray(self.b_plus, dtype=float).reshape(-1), (d,)) if np.size(self.b_plus) == 1 else self.b_plus, d)
        bm = _as_vector(np.broadcast_to(np.asarray(self.b_minus, dtype=float).reshape(-1), (d,)) if np.size(self.b_minus) == 1 else self.b_minus, d)
        if np.max(np.abs(bp + bm)) > 1e-12:
            raise ValueError("b_plus + b_minus must vanish")
        object.__setattr__(self, "b_plus", bp)
        object.__setattr__(self, "b_minus", bm)
        pp = Psi * self.a_plus if self.psi_plus is None else _as_matrix(self.psi_plus, d)
        pm = Psi * self.a_minus if self.psi_minus is None else _as_matrix(self.psi_minus, d)
        if np.max(np.abs(pp + pm - Psi)) > 1e-12:
            raise ValueError("Psi_plus + Psi_minus must equal Psi")
        object.__setattr__(self, "psi_plus", pp)
        object.__setattr__(self, "psi_minus", pm)

    @property
    def Q(self) -> float:
        return self.lam * self.sigma_y2

    @property
    def psi_scalar(self) -> float:
        if self.d != 1:
            raise ValueError("scalar psi requested for a multivariate model")
        return float(self.psi[0, 0])

    @property
    def alpha(self) -> float:
        return (self.a_plus - self.a_minus) / (2.0 * self.Q)

    @property
    def theta(self) -> np.ndarray:
        return self.b_plus / self.Q

    @property
    def drift_asymmetry(self) -> np.ndarray:
        """``A = (Psi_+ - Psi_-) / (2Q)``."""
        return (self.psi_plus - self.psi_minus) / (2.0 * self.Q)

    @property
    def split_is_proportional(self) -> bool:
        return bool(
            np.allclose(self.psi_plus, self.a_plus * self.psi, atol=1e-12)
            and np.allclose(self.psi_minus, self.a_minus * self.psi, atol=1e-12)
        )

    def symmetric(self) -> "PairConstants":
        """Constants after symmetrisation: same lambda, Psi and Q, no Y terms."""
        return PairConstants(
            lam=self.lam, psi=self.psi, sigma_y2=self.sigma_y2,
            a_plus=self.a_plus, a_minus=self.a_minus, d=self.d,
            psi_plus=self.psi / 2.0, psi_minus=self.psi / 2.0,
        )

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "Psi": self.psi.tolist(),
            "Q": self.Q,
            "sigmaY2": self.sigma_y2,
            "aPlus": self.a_plus,
            "aMinus": self.a_minus,
            "bPlus": self.b_plus.tolist(),
            "bMinus": self.b_minus.tolist(),
            "PsiPlus": self.psi_plus.tolist(),
            "PsiMinus": self.psi_minus.tolist(),
        }


@dataclass(frozen=True, slots=True)
class ModelState:
    config: Any
    w: np.ndarray
    y: float

    def check(self, lattice: LatticeSpec) -> None:
        if not np.all(np.isfinite(self.w)):
            raise ValueError("W must be finite")
        if not lattice.contains(self.y):
            raise ValueError(f"Y={self.y} is off the lattice {lattice.zeta}+Z")


@dataclass(frozen=True, slots=True)
class PairStep:
    delta_w: np.ndarray
    delta_y: int

    def __post_init__(self):
        if self.delta_y not in (-1, 0, 1):
            raise ValueError("delta_y must lie in {-1, 0, 1}")


@dataclass(frozen=True, slots=True)
class Moves:
    """All one-step outcomes of a batch of states.

    ``prob[b, s]`` is the probability of outcome ``s`` from state ``b``;
    ``dx[b, s]`` the change of the raw statistic and ``dy[b, s]`` the change
    of Y.  Outcomes that leave the state unchanged may be omitted.
    """

    prob: np.ndarray
    dx: np.ndarray
    dy: np.ndarray


@dataclass(frozen=True, slots=True)
class MomentProfile:
    """Conditional moments ``E((dW)^l 1{dY=+-1} | state)`` for a batch of states."""

    m0_plus: np.ndarray
    m0_minus: np.ndarray
    m1_plus: np.ndarray
    m1_minus: np.ndarray
    m2_plus: np.ndarray
    m2_minus: np.ndarray
    w: np.ndarray
    y: np.ndarray

    @property
    def d(self) -> int:
        return self.m1_plus.shape[-1]

    def check(self, tol: float = 1e-12) -> None:
        for m0 in (self.m0_plus, self.m0_minus):
            if np.any(m0 < -tol) or np.any(m0 > 1 + tol):
                raise ValueError("M_0 must be a probability")
        for m2 in (self.m2_plus, self.m2_minus):
            if np.max(np.abs(m2 - np.swapaxes(m2, -1, -2)), initial=0.0) > 1e-9:
                raise ValueError("M_2 must be symmetric")
            if np.min(np.linalg.eigvalsh(m2), initial=0.0) < -1e-9:
                raise ValueError("M_2 must be positive semidefinite")

    def take(self, idx) -> "MomentProfile":
        return MomentProfile(*(np.asarray(getattr(self, f))[idx] for f in _PROFILE_FIELDS))


_PROFILE_FIELDS = ("m0_plus", "m0_minus", "m1_plus", "m1_minus", "m2_plus", "m2_minus", "w", "y")


@dataclass(frozen=True, slots=True)
class ResidualSummary:
    """Conditional expectations consumed by the bound evaluators."""

    k: float
    abs_r1_minus_at_k: float
    abs_r1_plus_at_km1: float
    abs_r2_minus_at_k: float
    abs_r2_plus_at_km1: float
    c_hat_k: float
    d_hat_k: float
    e_hat_k: float
    f_hat_k: float
    r_k: float
    p_k: float
    p_km1: float
    lam: float
    psi: float
    Q: float
    d: int = 1
    e_hat_third_k: float = 0.0
    e_hat_fourth_k: float = 0.0
    abs_r1_plus_at_k: float = 0.0
    abs_r2_plus_at_k: float = 0.0
    abs_r1_sum_at_k: float = 0.0
    abs_r2_sum_at_k: float = 0.0
    r1_diff_mean: float = 0.0
    r2_diff_mean: float = 0.0
    dw3_mean: float = 0.0
    w2_mean: float = 0.0
    abs_r0_mean: float = 0.0
    w_abs_r0_mean: float = 0.0
    samples: int = 0
    mc_error: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.r_k <= 0:
            raise ValueError("r_k must be positive")
        if not (0 < self.p_k <= 1 and 0 < self.p_km1 <= 1):
            raise ValueError("p_k and p_{k-1} must lie in (0, 1]")
        for name in _NONNEG_SUMMARY:
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")

    @property
    def a_hat(self) -> float:
        return self.abs_r1_minus_at_k + self.r_k * self.abs_r1_plus_at_km1

    @property
    def b_hat(self) -> float:
        return self.abs_r2_minus_at_k + self.r_k * self.abs_r2_plus_at_km1

    def to_dict(self) -> dict:
        out = {name: getattr(self, name) for name in ResidualSummary.__dataclass_fields__}
        out["mc_error"] = dict(self.mc_error)
        out["A_hat_k"] = self.a_hat
        out["B_hat_k"] = self.b_hat
        return out

    def to_json(self) -> str:
        return json.dumps(_jsonable(self.to_dict()), sort_keys=True, indent=2)


_NONNEG_SUMMARY = (
    "abs_r1_minus_at_k", "abs_r1_plus_at_km1", "abs_r2_minus_at_k", "abs_r2_plus_at_km1",
    "c_hat_k", "d_hat_k", "e_hat_k", "f_hat_k", "e_hat_third_k", "e_hat_fourth_k",
)

THEOREM_TAGS = ("T1.1", "T1.3", "T1.6", "T2.1", "L2.2", "T2.3", "T3.1-4mom", "T3.1-3mom", "L5.1")


@dataclass(frozen=True, slots=True)
class BoundReport:
    theorem: str
    terms: Mapping[str, float]
    total: float
    inputs: Mapping[str, float] = field(default_factory=dict)
    notes: tuple[str, ...] = ()

    def __post_init__(self):
        if self.theorem not in THEOREM_TAGS:
            raise ValueError(f"unknown theorem tag {self.theorem!r}")
        if not self.total >= 0:
            raise ValueError("bound total must be nonnegative")

    def to_dict(self) -> dict:
        return {
            "theorem": self.theorem,
            "terms": dict(self.terms),
            "total": self.total,
            "inputs": dict(self.inputs),
            "notes": list(self.notes),
        }

    def to_json(self) -> str:
        return json.dumps(_jsonable(self.to_dict()), sort_keys=True, indent=2)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def to_json(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2)


@dataclass(frozen=True, slots=True)
class ContractDescriptor:
    name: str
    d: int
    lattice: LatticeSpec
    constants: PairConstants
    analytic_moments: bool
    enumerable: bool
    state_space_log2: float
    sufficient_statistic: bool


_REGISTRY: dict[str, Callable[..., Any]] = {}


def register_model(name: str):
    def deco(factory):
        _REGISTRY[name] = factory
        return factory
    return deco


def registered_models() -> tuple[str, ...]:
    return tuple(sorted(_REGISTRY))


def build_model(name: str, **params):
    key = name.replace("_", "-").lower()
    if key not in _REGISTRY:
        raise KeyError(f"unknown model {name!r}; known: {', '.join(registered_models())}")
    return _REGISTRY[key](**params)


def model_contract(model) -> ContractDescriptor:
    """Capabilities declared by a concrete model."""
    key = getattr(model, "name", None)
    if key not in _REGISTRY:
        raise KeyError(f"model {key!r} is not registered")
    return ContractDescriptor(
        name=model.name,
        d=model.d,
        lattice=model.lattice,
        constants=model.constants,
        analytic_moments=model.has_analytic_moments,
        enumerable=model.enumeration_limit_log2 >= model.state_space_log2,
        state_space_log2=model.state_space_log2,
        sufficient_statistic=model.has_sufficient_sampler,
    )
