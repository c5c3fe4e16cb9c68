"""Implicit time stepping of the coupled cut-cell scheme.

One step solves the nonlinear conservation laws on the intermediate mesh,
with the new interface position substituted explicitly from the summed
Butler-Volmer fluxes, then rebinds the mesh and post-processes the
interface cells. Newton unknowns are ordered cell-major: ``u[k * n + i]``.
"""

from __future__ import annotations

import dataclasses
import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import mesh as meshmod
from .errors import CFLViolation, ConfigurationError, StepFailure
from .fluxes import gas_flux_batch, solid_flux_batch, solid_flux_jac
from .mesh import CutMesh, Move
from .model import TwoPhaseParams

logger = logging.getLogger(__name__)

INITIAL_FLOOR = 1e-14


@dataclass(frozen=True, eq=False)
class State:
    c: np.ndarray  # (n, N)
    mesh: CutMesh
    t: float = 0.0

    @property
    def X(self) -> float:
        return self.mesh.X


class CFLPolicy(enum.Enum):
    REJECT = "reject"
    HALVE = "halve"


@dataclass(frozen=True)
class StepConfig:
    dt: float
    newton_tol: float = 1e-12
    newton_max_iter: int = 50
    cfl_policy: CFLPolicy = CFLPolicy.HALVE
    # positivity damping: iterates stay above (1 - theta) times the previous one
    theta: float = 0.9
    max_halvings: int = 10

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigurationError(f"dt must be positive, got {self.dt}")
        if not self.newton_tol > 0:
            raise ConfigurationError("newton_tol must be positive")
        if not 0 < self.theta < 1:
            raise ConfigurationError("theta must lie in (0, 1)")


@dataclass
class StepInfo:
    step: int
    newton_iters: int = 0
    substeps: int = 1


def cfl_dt_max(params: TwoPhaseParams, dx: float) -> float:
    """Largest step for which ``|X^p - X^{p-1}| <= dx/2`` is guaranteed."""
    return dx / (2.0 * (params.bv_solid.max() + params.bv_gas.max()))


def initial_state(N: int, X0: float, profile, floor: float = INITIAL_FLOOR) -> State:
    """Cell averages of ``profile`` on the cut mesh, floored and renormalized."""
    mesh = meshmod.build(N, X0)
    c = meshmod.cell_averages(mesh, profile)
    if c.ndim != 2 or c.shape[1] != N:
        raise ConfigurationError("profile must return an (n, ...) array")
    c = np.maximum(c, floor)
    c /= c.sum(axis=0, keepdims=True)
    return State(c, mesh, 0.0)


def uniform_state(values_solid, values_gas, mesh: CutMesh) -> State:
    """Piecewise-constant state: one vector per phase."""
    vs = np.asarray(values_solid, dtype=float)
    vg = np.asarray(values_gas, dtype=float)
    c = np.where(mesh.solid_mask()[None, :], vs[:, None], vg[:, None])
    return State(c, mesh, 0.0)


class _BlockAssembler:
    """Collects dense ``n x n`` blocks and builds a CSC matrix."""

    def __init__(self, N: int, n: int):
        self.N, self.n = N, n
        self.rows, self.cols, self.blocks = [], [], []

    def add(self, r, c, blocks):
        blocks = np.asarray(blocks, dtype=float)
        if blocks.ndim == 2:
            blocks = blocks[None]
        self.rows.append(np.broadcast_to(np.asarray(r), blocks.shape[:1]))
        self.cols.append(np.broadcast_to(np.asarray(c), blocks.shape[:1]))
        self.blocks.append(blocks)

    def tocsc(self):
        n = self.n
        r = np.concatenate(self.rows)
        c = np.concatenate(self.cols)
        b = np.concatenate(self.blocks)
        ii = np.arange(n)
        R = np.broadcast_to(r[:, None, None] * n + ii[None, :, None], b.shape)
        C = np.broadcast_to(c[:, None, None] * n + ii[None, None, :], b.shape)
        size = self.N * n
        return sp.csc_matrix((b.ravel(), (R.ravel(), C.ravel())), shape=(size, size))


def _interface_position(C, prev: State, dt: float, params: TwoPhaseParams):
    """New interface position and its gradient w.r.t. the two interface cells."""
    mesh = prev.mesh
    K = mesh.K
    F = C[K - 1] * params.bv_solid - C[K] * params.bv_gas
    X_new = mesh.X - dt * F.sum()
    g_solid = -dt * params.bv_solid
    g_gas = dt * params.bv_gas
    if X_new <= 0.0 or X_new >= 1.0:
        # the phase vanishes: position is frozen at the boundary
        X_new = min(max(X_new, 0.0), 1.0)
        g_solid = np.zeros_like(g_solid)
        g_gas = np.zeros_like(g_gas)
    return X_new, g_solid, g_gas


def _system(C, prev: State, dt: float, params: TwoPhaseParams, with_jac: bool):
    """Residual ``(N, n)``, new interface position, intermediate sizes and Jacobian."""
    N, n = C.shape
    mesh = prev.mesh
    K = mesh.K
    Cp = prev.c.T
    if mesh.two_phase:
        X_new, g_solid, g_gas = _interface_position(C, prev, dt, params)
        sizes = meshmod.cut_sizes(N, X_new, K)
    else:
        X_new = mesh.X
        sizes = mesh.sizes
    d = 0.5 * (sizes[:-1] + sizes[1:])  # edge e in 1..N-1 uses d[e - 1]

    J = np.zeros((N + 1, n))
    e_solid = np.arange(1, min(K, N))
    e_gas = np.arange(max(K + 1, 1), N)
    jac_parts = []
    if e_solid.size:
        L, R = C[e_solid - 1], C[e_solid]
        J[e_solid] = solid_flux_batch(L, R, d[e_solid - 1], params.kappa_solid)
        if with_jac:
            jac_parts.append((e_solid, *solid_flux_jac(L, R, d[e_solid - 1], params.kappa_solid)))
    if e_gas.size:
        L, R = C[e_gas - 1], C[e_gas]
        if with_jac:
            Jg, dL, dR = gas_flux_batch(L, R, d[e_gas - 1], params.kappa_gas, with_jac=True)
            jac_parts.append((e_gas, dL, dR))
        else:
            Jg = gas_flux_batch(L, R, d[e_gas - 1], params.kappa_gas)
        J[e_gas] = Jg
    if mesh.two_phase:
        J[K] = C[K - 1] * params.bv_solid - C[K] * params.bv_gas
        if with_jac:
            jac_parts.append(
                (np.array([K]), np.diag(params.bv_solid)[None], -np.diag(params.bv_gas)[None])
            )

    res = (sizes[:, None] * C - mesh.sizes[:, None] * Cp) / dt + J[1:] - J[:-1]
    if not with_jac:
        return res, X_new, sizes, None

    asm = _BlockAssembler(N, n)
    cells = np.arange(N)
    asm.add(cells, cells, (sizes / dt)[:, None, None] * np.eye(n))
    for e, dL, dR in jac_parts:
        left, right = e - 1, e
        asm.add(left, left, dL)
        asm.add(left, right, dR)
        asm.add(right, left, -dL)
        asm.add(right, right, -dR)
    if mesh.two_phase:
        grads = ((K - 1, g_solid), (K, g_gas))
        for m, g in grads:
            # cell sizes: d size[K-1]/dX = 1, d size[K]/dX = -1
            asm.add(K - 1, m, np.outer(C[K - 1], g) / dt)
            asm.add(K, m, -np.outer(C[K], g) / dt)
            # edge distances next to the interface move by +-1/2 dX
            if K - 1 >= 1:
                dJdX = -J[K - 1] / d[K - 2] * 0.5
                asm.add(K - 2, m, np.outer(dJdX, g))
                asm.add(K - 1, m, -np.outer(dJdX, g))
            if K + 1 <= N - 1:
                dJdX = J[K + 1] / d[K] * 0.5
                asm.add(K, m, np.outer(dJdX, g))
                asm.add(K + 1, m, -np.outer(dJdX, g))
    return res, X_new, sizes, asm.tocsc()


def residual(c_star, prev: State, cfg: StepConfig, params: TwoPhaseParams):
    """Scheme residual for trial concentrations ``c_star`` of shape ``(n, N)``.

    Returns the flattened cell-major residual and the interface position
    implied by the trial interface values.
    """
    C = np.asarray(c_star, dtype=float).T
    res, X_new, _, _ = _system(C, prev, cfg.dt, params, with_jac=False)
    return res.ravel(), X_new


def residual_jacobian(c_star, prev: State, cfg: StepConfig, params: TwoPhaseParams):
    """Sparse Jacobian of :func:`residual` w.r.t. the cell-major unknowns."""
    C = np.asarray(c_star, dtype=float).T
    return _system(C, prev, cfg.dt, params, with_jac=True)[3]


def _l2dx(res, dx):
    return math.sqrt(dx * float(np.sum(res * res)))


MIN_DAMPING = 2.0**-30
# round-off of the linear solve swamps updates of smaller components
DAMPING_FLOOR = 1e-12


def _max_step(U, delta, theta):
    """Largest ``2^-k >= MIN_DAMPING`` with ``U + lam * delta >= (1 - theta) U``.

    Components below ``DAMPING_FLOOR`` do not limit the step; the caller
    clamps them instead.
    """
    neg = (delta < 0) & (U > DAMPING_FLOOR)
    if not neg.any():
        return 1.0
    bound = float(np.min(theta * U[neg] / -delta[neg]))
    lam = 1.0
    while lam > bound and lam > MIN_DAMPING:
        lam *= 0.5
    return lam


@dataclass
class NewtonResult:
    c: np.ndarray  # (n, N)
    X: float
    sizes: np.ndarray
    iterations: int
    residual_norm: float


def newton_solve(prev: State, cfg: StepConfig, params: TwoPhaseParams, dt: float | None = None):
    """Solve one implicit step by damped Newton from the previous state."""
    dt = cfg.dt if dt is None else dt
    mesh = prev.mesh
    dx = mesh.dx
    U = prev.c.T.copy()
    N, n = U.shape
    if np.any(U <= 0):
        raise StepFailure("previous state must be strictly positive")
    for it in range(cfg.newton_max_iter + 1):
        res, X_new, sizes, jac = _system(U, prev, dt, params, with_jac=True)
        if not np.all(np.isfinite(res)):
            raise StepFailure("non-finite residual")
        norm = _l2dx(res, dx)
        if norm <= cfg.newton_tol:
            break
        if it == cfg.newton_max_iter:
            raise StepFailure(f"Newton did not converge: |Res| = {norm:.3e} after {it} iterations")
        delta = spla.spsolve(jac, -res.ravel()).reshape(N, n)
        if not np.all(np.isfinite(delta)):
            raise StepFailure("singular Newton system")
        lam = _max_step(U, delta, cfg.theta)
        if mesh.two_phase:
            # keep both intermediate interface cells nonempty
            lo, hi = (mesh.K - 1) * dx, (mesh.K + 1) * dx
            while lam > MIN_DAMPING:
                trial = U + lam * delta
                X_t = mesh.X - dt * float(
                    np.sum(trial[mesh.K - 1] * params.bv_solid - trial[mesh.K] * params.bv_gas)
                )
                if lo < X_t < hi or X_t <= 0.0 or X_t >= 1.0:
                    break
                lam *= 0.5
        # tiny components (species near 1e-300) are clamped, not damped
        U = np.maximum(U + lam * delta, (1.0 - cfg.theta) * U)
    else:  # pragma: no cover
        raise StepFailure("Newton loop exhausted")
    if mesh.two_phase:
        if abs(X_new - mesh.X) > 0.5 * dx * (1 + 1e-12):
            raise CFLViolation(f"interface moved by {abs(X_new - mesh.X):.3e} > dx/2")
        if 0.0 < X_new < 1.0:
            meshmod.check_sizes(sizes, dx)
    if np.any(U <= 0):
        raise StepFailure("non-positive concentration after Newton")
    return NewtonResult(U.T.copy(), float(X_new), sizes, it, norm)


def advance(prev: State, cfg: StepConfig, params: TwoPhaseParams, dt: float | None = None):
    """One full step: implicit solve, then mesh rebinding and post-processing.

    Returns ``(state, newton_iterations)``.
    """
    dt = cfg.dt if dt is None else dt
    sol = newton_solve(prev, cfg, params, dt)
    mesh = prev.mesh
    if not mesh.two_phase:
        new_mesh, c = mesh, sol.c
    elif sol.X <= 0.0 or sol.X >= 1.0:
        logger.info("phase vanished at t=%g, switching to one-phase", prev.t + dt)
        c, new_mesh = meshmod.collapse(sol.c, mesh, sol.sizes, solid=sol.X >= 1.0)
    else:
        new_mesh, move = meshmod.rebind(mesh, sol.X)
        c = meshmod.postprocess(sol.c, mesh, sol.sizes, new_mesh, move)
    return State(c, new_mesh, prev.t + dt), sol.iterations


def _advance_retry(prev, cfg, params, dt, depth):
    try:
        state, iters = advance(prev, cfg, params, dt)
        return state, iters, 1
    except StepFailure as exc:
        if cfg.cfl_policy is not CFLPolicy.HALVE or depth >= cfg.max_halvings:
            raise
        logger.debug("step failed at t=%g (%s); halving dt to %g", prev.t, exc, dt / 2)
    mid, i1, s1 = _advance_retry(prev, cfg, params, dt / 2, depth + 1)
    end, i2, s2 = _advance_retry(mid, cfg, params, dt / 2, depth + 1)
    return end, i1 + i2, s1 + s2


@dataclass
class Trajectory:
    dt: float
    times: list = field(default_factory=list)
    X: list = field(default_factory=list)
    newton_iters: list = field(default_factory=list)
    states: list = field(default_factory=list)
    final: State | None = None

    def __len__(self):
        return len(self.times)


Observer = Callable[[State, StepInfo], None]


def n_steps(T: float, dt: float) -> int:
    """Number of whole steps that fit in ``[0, T]``; no partial final step."""
    if T < 0:
        raise ConfigurationError("final time must be nonnegative")
    return int(math.floor(T / dt + 1e-9))


def run(
    initial: State,
    T: float,
    cfg: StepConfig,
    params: TwoPhaseParams,
    observers: Iterable[Observer] = (),
    keep_states: bool = True,
) -> Trajectory:
    """Advance ``initial`` for ``floor(T / dt)`` steps.

    Observers are called with every accepted state, the initial one included.
    With ``keep_states=False`` only times, interface positions and the final
    state are retained.
    """
    observers = list(observers)
    steps = n_steps(T, cfg.dt)
    traj = Trajectory(cfg.dt)
    state = initial

    def record(state, info):
        traj.times.append(state.t)
        traj.X.append(state.X)
        traj.newton_iters.append(info.newton_iters)
        if keep_states:
            traj.states.append(state)
        for obs in observers:
            obs(state, info)

    record(state, StepInfo(0))
    for p in range(1, steps + 1):
        state, iters, substeps = _advance_retry(state, cfg, params, cfg.dt, 0)
        state = dataclasses.replace(state, t=initial.t + p * cfg.dt)
        record(state, StepInfo(p, iters, substeps))
    traj.final = state
    return traj


__all__ = [
    "State",
    "StepConfig",
    "CFLPolicy",
    "StepInfo",
    "Trajectory",
    "Move",
    "cfl_dt_max",
    "initial_state",
    "uniform_state",
    "residual",
    "residual_jacobian",
    "newton_solve",
    "advance",
    "run",
    "n_steps",
]
