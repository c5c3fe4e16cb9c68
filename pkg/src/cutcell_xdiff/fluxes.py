"""Two-point fluxes for the solid (size-exclusion) and gas (Maxwell-Stefan) phases.

Sign convention: a positive flux moves matter from the left cell to the
right cell. All batched functions take species on the last axis, so a batch
of edges is an array of shape ``(E, n)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateEdgeError, DomainError
from .model import TwoPhaseParams, butler_volmer

# below this |a - b| / (a + b) the log mean switches to its series expansion
_SERIES_CUTOFF = 1e-2


class Phase(enum.Enum):
    SOLID = "solid"
    GAS = "gas"
    INTERFACE = "interface"
    BOUNDARY = "boundary"


@dataclass(frozen=True, eq=False)
class EdgeContext:
    cL: np.ndarray
    cR: np.ndarray
    d: float
    phase: Phase


def _log_mean_parts(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(a < 0) or np.any(b < 0):
        raise DomainError("log mean is only defined for nonnegative arguments")
    s = a + b
    pos = (a > 0) & (b > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        u = np.where(pos, (a - b) / np.where(s > 0, s, 1.0), 0.0)
    u2 = u * u
    small = pos & (np.abs(u) < _SERIES_CUTOFF)
    big = pos & ~small
    # u / atanh(u) = 1 / (1 + u^2/3 + u^4/5 + u^6/7 + u^8/9 + ...)
    poly = 1.0 + u2 * (1 / 3 + u2 * (1 / 5 + u2 * (1 / 7 + u2 / 9)))
    phi = 1.0 / poly
    dpoly = u * (2 / 3 + u2 * (4 / 5 + u2 * (6 / 7 + u2 * 8 / 9)))
    value = np.where(small, 0.5 * s * phi, 0.0)
    # d/da of (s/2) phi(u) with du/da = 2b/s^2
    dphi = -dpoly * phi * phi
    with np.errstate(divide="ignore", invalid="ignore"):
        da = np.where(small, 0.5 * phi + dphi * b / s, 0.0)
        db = np.where(small, 0.5 * phi - dphi * a / s, 0.0)
        r = np.where(big, np.log(np.where(big, a, 1.0)) - np.log(np.where(big, b, 1.0)), 1.0)
        L = np.where(big, (a - b) / r, 0.0)
        value = np.where(big, L, value)
        da = np.where(big, (1.0 - L / np.where(big, a, 1.0)) / r, da)
        db = np.where(big, (L / np.where(big, b, 1.0) - 1.0) / r, db)
    return value, da, db


def log_mean(a, b):
    """Logarithmic mean ``(a - b) / (log a - log b)``.

    Extended continuously by ``log_mean(a, a) = a`` and ``log_mean(a, 0) = 0``.
    """
    value = _log_mean_parts(a, b)[0]
    return value if value.ndim else float(value)


def log_mean_grad(a, b):
    """Log mean together with its partial derivatives ``(L, dL/da, dL/db)``."""
    return _log_mean_parts(a, b)


def solid_flux_batch(cL, cR, d, kappa):
    """Size-exclusion flux on a batch of edges.

    With arithmetic edge means ``cbar`` the two-point flux
    ``J_i = sum_j k_ij (cbar_j dc_i - cbar_i dc_j) / d`` (``dc = cL - cR``)
    simplifies to ``sum_j k_ij (cL_i cR_j - cL_j cR_i) / d``, which is what is
    evaluated here.
    """
    cL = np.asarray(cL, dtype=float)
    cR = np.asarray(cR, dtype=float)
    d = np.asarray(d, dtype=float)[..., None]
    return (cL * (cR @ kappa) - cR * (cL @ kappa)) / d


def solid_flux_jac(cL, cR, d, kappa):
    """Derivatives ``dJ/dcL``, ``dJ/dcR`` with shape ``(E, n, n)``."""
    d = np.asarray(d, dtype=float)[..., None, None]
    kR = cR @ kappa
    kL = cL @ kappa
    dL = (_diag(kR) - cR[..., :, None] * kappa) / d
    dR = (cL[..., :, None] * kappa - _diag(kL)) / d
    return dL, dR


def _diag(v):
    out = np.zeros(v.shape + (v.shape[-1],))
    idx = np.arange(v.shape[-1])
    out[..., idx, idx] = v
    return out


def maxwell_stefan_matrix(chat, kappa, gamma):
    """``A(chat) + gamma * 1 1^T`` where ``(A J)_i = sum_j k_ij (chat_j J_i - chat_i J_j)``."""
    A = _diag(chat @ kappa) - chat[..., :, None] * kappa
    return A + gamma


def gas_flux_batch(cL, cR, d, kappa, with_jac: bool = False):
    """Maxwell-Stefan flux on a batch of edges, optionally with derivatives.

    Solves ``(A(chat) + gamma 1 1^T) J = (cL - cR) / d`` with log-mean edge
    concentrations ``chat`` and ``gamma = max k_ij``. For compatible data
    (``sum cL = sum cR``) this enforces ``sum J = 0``.
    """
    cL = np.atleast_2d(np.asarray(cL, dtype=float))
    cR = np.atleast_2d(np.asarray(cR, dtype=float))
    d = np.broadcast_to(np.asarray(d, dtype=float), cL.shape[:-1])
    chat, dhat_L, dhat_R = _log_mean_parts(cL, cR)
    if np.any(np.all(chat == 0.0, axis=-1)):
        raise DegenerateEdgeError("Maxwell-Stefan edge with vanishing concentrations")
    gamma = float(np.max(kappa))
    M = maxwell_stefan_matrix(chat, kappa, gamma)
    rhs = (cL - cR) / d[..., None]
    absent = (cL == 0.0) & (cR == 0.0)
    if not with_jac:
        J = np.linalg.solve(M, rhs[..., None])[..., 0]
        J[absent] = 0.0
        return J
    Minv = np.linalg.inv(M)
    J = (Minv @ rhs[..., None])[..., 0]
    J[absent] = 0.0
    # d(A(chat) J)/d chat = diag(J) K - diag(K J)
    dAJ = J[..., :, None] * kappa - _diag(J @ kappa)
    eye = np.eye(cL.shape[-1]) / d[..., None, None]
    dL = Minv @ (eye - dAJ * dhat_L[..., None, :])
    dR = Minv @ (-eye - dAJ * dhat_R[..., None, :])
    return J, dL, dR


def solid_flux(edge: EdgeContext, params: TwoPhaseParams) -> np.ndarray:
    return solid_flux_batch(edge.cL[None], edge.cR[None], edge.d, params.kappa_solid)[0]


def gas_flux(edge: EdgeContext, params: TwoPhaseParams) -> np.ndarray:
    return gas_flux_batch(edge.cL[None], edge.cR[None], edge.d, params.kappa_gas)[0]


def edge_distances(sizes):
    sizes = np.asarray(sizes, dtype=float)
    return 0.5 * (sizes[:-1] + sizes[1:])


def assemble_fluxes(c, sizes, K: int, params: TwoPhaseParams) -> np.ndarray:
    """Fluxes on all ``N + 1`` edges for concentrations ``c`` of shape ``(n, N)``.

    Boundary edges carry no flux, edges left of the interface edge ``K`` use
    the solid flux, edges right of it the gas flux, and edge ``K`` itself the
    Butler-Volmer flux. One-phase meshes (``K`` in ``{0, N}``) have no
    interface edge.
    """
    C = np.asarray(c, dtype=float).T
    N, n = C.shape
    J = np.zeros((N + 1, n))
    d = edge_distances(sizes)
    e = np.arange(1, N)
    solid = e < K
    gas = e > K
    if solid.any():
        es = e[solid]
        J[es] = solid_flux_batch(C[es - 1], C[es], d[es - 1], params.kappa_solid)
    if gas.any():
        eg = e[gas]
        J[eg] = gas_flux_batch(C[eg - 1], C[eg], d[eg - 1], params.kappa_gas)
    if 0 < K < N:
        J[K] = butler_volmer(C[K - 1], C[K], params)
    return J
