"""Physical parameters, Butler-Volmer interface kinetics and stationary states.

Jumps across the interface follow the convention ``[[f]] = f_gas - f_solid``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, InvalidMassError, NumericalFailure

MASS_TOL = 1e-12


def _as_kappa(kappa, n: int, name: str) -> np.ndarray:
    kappa = np.array(kappa, dtype=float)
    if kappa.shape != (n, n):
        raise ConfigurationError(f"{name} must have shape ({n}, {n}), got {kappa.shape}")
    if not np.allclose(kappa, kappa.T, rtol=0.0, atol=1e-14):
        raise ConfigurationError(f"{name} must be symmetric")
    off = ~np.eye(n, dtype=bool)
    if n > 1 and not np.all(kappa[off] > 0):
        raise ConfigurationError(f"{name} must have strictly positive off-diagonal entries")
    # diagonal coefficients cancel in every flux formula
    kappa[~off] = 0.0
    return kappa


@dataclass(frozen=True, eq=False)
class TwoPhaseParams:
    """Species count, cross-diffusion matrices and reference chemical potentials.

    The diagonals of the ``kappa`` matrices are zeroed on construction; they
    never contribute to a flux.
    """

    n: int
    kappa_solid: np.ndarray
    kappa_gas: np.ndarray
    mu_star_solid: np.ndarray
    mu_star_gas: np.ndarray
    # derived, filled in __post_init__
    beta: np.ndarray = field(init=False, repr=False)
    bv_solid: np.ndarray = field(init=False, repr=False)
    bv_gas: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        n = int(self.n)
        if n < 2:
            raise ConfigurationError(f"species count must be >= 2, got {self.n}")
        mus = np.array(self.mu_star_solid, dtype=float).reshape(-1)
        mug = np.array(self.mu_star_gas, dtype=float).reshape(-1)
        if mus.shape != (n,) or mug.shape != (n,):
            raise ConfigurationError("reference chemical potentials must be n-vectors")
        if not (np.all(np.isfinite(mus)) and np.all(np.isfinite(mug))):
            raise ConfigurationError("reference chemical potentials must be finite")
        set_ = object.__setattr__
        set_(self, "n", n)
        set_(self, "kappa_solid", _as_kappa(self.kappa_solid, n, "kappa_solid"))
        set_(self, "kappa_gas", _as_kappa(self.kappa_gas, n, "kappa_gas"))
        set_(self, "mu_star_solid", mus)
        set_(self, "mu_star_gas", mug)
        jump = mug - mus
        set_(self, "beta", np.exp(jump))
        set_(self, "bv_solid", np.exp(0.5 * jump))
        set_(self, "bv_gas", np.exp(-0.5 * jump))

    @classmethod
    def from_exp(cls, kappa_solid, kappa_gas, exp_mu_star_solid, exp_mu_star_gas):
        """Build from ``exp(mu*)`` vectors, the form in which they are usually tabulated."""
        es = np.asarray(exp_mu_star_solid, dtype=float)
        eg = np.asarray(exp_mu_star_gas, dtype=float)
        if np.any(es <= 0) or np.any(eg <= 0):
            raise ConfigurationError("exp(mu*) values must be strictly positive")
        return cls(len(es), kappa_solid, kappa_gas, np.log(es), np.log(eg))


def kappa_from_pairs(n: int, pairs: dict) -> np.ndarray:
    """Symmetric matrix from ``{(i, j): value}`` with 0-based indices."""
    kappa = np.zeros((n, n))
    for (i, j), v in pairs.items():
        kappa[i, j] = kappa[j, i] = v
    return kappa


def tc1_params() -> TwoPhaseParams:
    """Three-species vapor deposition test case with equal kappa in both phases."""
    kappa = kappa_from_pairs(3, {(0, 1): 0.2, (1, 2): 0.1, (0, 2): 1.0})
    return TwoPhaseParams.from_exp(kappa, kappa, [0.2, 0.4, 0.4], [1.2, 0.1, 0.1])


def tc1_profiles(x):
    """Initial concentrations of the test case, shape ``(3,) + x.shape``."""
    x = np.asarray(x, dtype=float)
    cos = np.cos(np.pi * x)
    c1 = 0.25 * (1.0 + cos)
    return np.stack([c1, c1, 0.5 * (1.0 - cos)])


TC1_X0 = 0.51


def butler_volmer(c_s, c_g, params: TwoPhaseParams) -> np.ndarray:
    """Interface reaction fluxes ``F_i = c_s,i e^{[[mu*_i]]/2} - c_g,i e^{-[[mu*_i]]/2}``.

    Positive ``F_i`` means species ``i`` leaves the solid.
    """
    c_s = np.asarray(c_s, dtype=float)
    c_g = np.asarray(c_g, dtype=float)
    if c_s.shape[-1:] != (params.n,) or c_g.shape[-1:] != (params.n,):
        raise ConfigurationError(
            f"interface traces must have {params.n} species, got {c_s.shape} and {c_g.shape}"
        )
    return c_s * params.bv_solid - c_g * params.bv_gas


def interface_dissipation(c_s, c_g, params: TwoPhaseParams) -> float:
    """``sum_i F_i [[log c_i - mu*_i]]``; nonpositive for positive traces."""
    F = butler_volmer(c_s, c_g, params)
    jump = np.log(c_g) - params.mu_star_gas - np.log(c_s) + params.mu_star_solid
    return float(np.sum(F * jump))


def _check_mass(m0) -> np.ndarray:
    m0 = np.asarray(m0, dtype=float).reshape(-1)
    if np.any(m0 < 0):
        raise InvalidMassError(f"masses must be nonnegative, got {m0}")
    if abs(m0.sum() - 1.0) > MASS_TOL:
        raise InvalidMassError(f"total mass must equal the domain length 1, got {float(m0.sum())!r}")
    return m0


def coexistence_sums(m0, beta) -> tuple[bool, float, float]:
    """Coexistence test on raw ``beta`` values (any species count)."""
    m0 = _check_mass(m0)
    beta = np.asarray(beta, dtype=float).reshape(-1)
    if beta.shape != m0.shape:
        raise ConfigurationError("m0 and beta must have the same length")
    s = float(np.dot(m0, beta))
    s_inv = float(np.dot(m0, 1.0 / beta))
    return min(s, s_inv) > 1.0, s, s_inv


def coexistence_condition(m0, params: TwoPhaseParams) -> tuple[bool, float, float]:
    """Return ``(holds, sum m_i beta_i, sum m_i / beta_i)``.

    A two-phase stationary state exists iff the minimum of both sums exceeds 1.
    """
    if np.size(m0) != params.n:
        raise ConfigurationError(f"m0 must have {params.n} entries")
    return coexistence_sums(m0, params.beta)


class PhaseKind(enum.Enum):
    SOLID_ONLY = "solid_only"
    GAS_ONLY = "gas_only"
    COEXISTENCE = "coexistence"


@dataclass(frozen=True, eq=False)
class StationaryState:
    kind: PhaseKind
    X_bar: float
    c_solid_bar: np.ndarray
    c_gas_bar: np.ndarray


def stationary_equation(X, m0, beta):
    """``g(X) = sum_i m_i / (X + (1 - X) beta_i) - 1``; convex with ``g(1) = 0``."""
    X = np.asarray(X, dtype=float)
    m0 = np.asarray(m0, dtype=float)
    beta = np.asarray(beta, dtype=float)
    denom = X[..., None] + (1.0 - X[..., None]) * beta
    return np.sum(m0 / denom, axis=-1) - 1.0


def _bisect(g, lo: float, hi: float, tol: float) -> float:
    glo = g(lo)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if gm == 0.0:
            return mid
        if (gm > 0) == (glo > 0):
            lo, glo = mid, gm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def solve_stationary(
    m0, params: TwoPhaseParams, one_phase: PhaseKind | str = PhaseKind.SOLID_ONLY
) -> StationaryState:
    """Stationary state reached from total masses ``m0``.

    Under the coexistence condition the interface position is the interior
    root of :func:`stationary_equation`, found by bisection; phase
    concentrations follow in closed form. Otherwise the one-phase state
    named by ``one_phase`` is returned, since both are stationary.
    """
    m0 = _check_mass(m0)
    holds, _, _ = coexistence_condition(m0, params)
    n = params.n
    if not holds:
        kind = PhaseKind(one_phase)
        if kind is PhaseKind.COEXISTENCE:
            raise ConfigurationError("coexistence condition fails; choose a one-phase state")
        if kind is PhaseKind.SOLID_ONLY:
            return StationaryState(kind, 1.0, m0.copy(), np.zeros(n))
        return StationaryState(kind, 0.0, np.zeros(n), m0.copy())

    beta = params.beta

    def g(X):
        return float(np.sum(m0 / (X + (1.0 - X) * beta)) - 1.0)

    if not g(0.0) > 0.0:
        raise NumericalFailure("g(0) must be positive under the coexistence condition")
    delta = 0.5
    while g(1.0 - delta) >= 0.0:
        delta *= 0.5
        if delta < 1e-16:
            raise NumericalFailure("interior root of the stationary equation not bracketed")
    X_bar = _bisect(g, 0.0, 1.0 - delta, 1e-14)
    c_s = m0 / (X_bar + (1.0 - X_bar) * beta)
    c_g = beta * c_s
    return StationaryState(PhaseKind.COEXISTENCE, X_bar, c_s, c_g)
