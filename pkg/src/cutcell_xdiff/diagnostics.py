"""Discrete free energy, masses, error norms and convergence-order fits."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DomainError
from .model import PhaseKind, StationaryState, TwoPhaseParams
from .stepper import State, StepInfo, Trajectory


def entropy_density(c, mu_star):
    """Per-species terms ``c (log c - mu*) - c + 1`` with ``0 log 0 = 0``.

    ``c`` has species on axis 0; ``mu_star`` broadcasts against it.
    """
    c = np.asarray(c, dtype=float)
    if np.any(c < 0):
        raise DomainError("free energy needs nonnegative concentrations")
    mu = np.asarray(mu_star, dtype=float).reshape((-1,) + (1,) * (c.ndim - 1))
    with np.errstate(divide="ignore", invalid="ignore"):
        clogc = np.where(c > 0, c * np.log(np.where(c > 0, c, 1.0)), 0.0)
    return clogc - c * mu - c + 1.0


def free_energy(state: State, params: TwoPhaseParams) -> float:
    """Size-weighted sum of the solid density over solid cells and gas density over gas cells."""
    c = state.c
    solid = state.mesh.solid_mask()
    hs = entropy_density(c[:, solid], params.mu_star_solid).sum(axis=0)
    hg = entropy_density(c[:, ~solid], params.mu_star_gas).sum(axis=0)
    sizes = state.mesh.sizes
    return math.fsum(sizes[solid] * hs) + math.fsum(sizes[~solid] * hg)


def stationary_free_energy(st: StationaryState, params: TwoPhaseParams) -> float:
    H = 0.0
    if st.kind is not PhaseKind.GAS_ONLY:
        H += st.X_bar * entropy_density(st.c_solid_bar, params.mu_star_solid).sum()
    if st.kind is not PhaseKind.SOLID_ONLY:
        H += (1.0 - st.X_bar) * entropy_density(st.c_gas_bar, params.mu_star_gas).sum()
    return float(H)


def masses(state: State) -> np.ndarray:
    return state.c @ state.mesh.sizes


def volume_defect(state: State) -> float:
    """``max_K |sum_i c_{i,K} - 1|``."""
    return float(np.max(np.abs(state.c.sum(axis=0) - 1.0)))


@dataclass
class EnergyReport:
    t: float
    H: float
    H_relative: float
    X: float
    X_relative: float
    masses: np.ndarray
    min_c: float
    max_volume_defect: float
    newton_iters: int = 0


def report(state: State, params: TwoPhaseParams, reference: StationaryState | None = None,
           H_ref: float | None = None, newton_iters: int = 0) -> EnergyReport:
    H = free_energy(state, params)
    if reference is not None and H_ref is None:
        H_ref = stationary_free_energy(reference, params)
    return EnergyReport(
        t=state.t,
        H=H,
        H_relative=H - H_ref if H_ref is not None else math.nan,
        X=state.X,
        X_relative=reference.X_bar - state.X if reference is not None else math.nan,
        masses=masses(state),
        min_c=float(state.c.min()),
        max_volume_defect=volume_defect(state),
        newton_iters=newton_iters,
    )


@dataclass
class EnergyRecorder:
    """Observer collecting an :class:`EnergyReport` per accepted step."""

    params: TwoPhaseParams
    reference: StationaryState | None = None
    reports: list = field(default_factory=list)

    def __post_init__(self):
        self._H_ref = (
            stationary_free_energy(self.reference, self.params) if self.reference else None
        )

    def __call__(self, state: State, info: StepInfo) -> None:
        self.reports.append(
            report(state, self.params, self.reference, self._H_ref, info.newton_iters)
        )

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.reports])


def piecewise_l1_distance(edges_a, values_a, edges_b, values_b) -> np.ndarray:
    """Exact ``int_0^1 |f_a - f_b|`` for piecewise-constant fields.

    ``values_*`` have shape ``(n, cells)``; one distance per row is returned.
    """
    edges_a = np.asarray(edges_a, dtype=float)
    edges_b = np.asarray(edges_b, dtype=float)
    points = np.union1d(edges_a, edges_b)
    mid = 0.5 * (points[:-1] + points[1:])
    width = np.diff(points)
    ia = np.clip(np.searchsorted(edges_a, mid, side="right") - 1, 0, len(edges_a) - 2)
    ib = np.clip(np.searchsorted(edges_b, mid, side="right") - 1, 0, len(edges_b) - 2)
    va = np.asarray(values_a, dtype=float)[:, ia]
    vb = np.asarray(values_b, dtype=float)[:, ib]
    return np.abs(va - vb) @ width


@dataclass
class ErrorReport:
    dx: float
    L1_spacetime_c: np.ndarray
    L1_total: float
    L1_time_X: float
    fitted_order: float = math.nan


def l1_spacetime_error(traj: Trajectory, ref: Trajectory) -> ErrorReport:
    """Space-time L1 distance of concentrations and time L1 distance of interfaces.

    Sums ``dt * int |c - c_ref| dx`` over the steps ``1..N_T``; each
    solution is piecewise constant on its own cut mesh.
    """
    if not traj.states or not ref.states:
        raise ConfigurationError("trajectories must keep their states")
    if len(traj.states) != len(ref.states) or not math.isclose(traj.dt, ref.dt, rel_tol=1e-12):
        raise ConfigurationError("trajectories must share the same time grid")
    dt = traj.dt
    err_c = np.zeros(traj.states[0].c.shape[0])
    err_X = 0.0
    for a, b in zip(traj.states[1:], ref.states[1:]):
        if not math.isclose(a.t, b.t, rel_tol=1e-12, abs_tol=1e-12):
            raise ConfigurationError("trajectories must share the same time grid")
        err_c += dt * piecewise_l1_distance(a.mesh.edges(), a.c, b.mesh.edges(), b.c)
        err_X += dt * abs(a.X - b.X)
    dx = traj.states[0].mesh.dx
    return ErrorReport(dx, err_c, float(err_c.sum()), err_X)


def fit_order(errors) -> float:
    """Least-squares slope of ``log e`` against ``log dx``."""
    data = np.asarray(list(errors), dtype=float)
    if data.ndim != 2 or data.shape[0] < 2:
        raise ConfigurationError("need at least two (dx, error) pairs")
    slope, _ = np.polyfit(np.log(data[:, 0]), np.log(data[:, 1]), 1)
    return float(slope)


def exponential_fit(t, y):
    """Fit ``log y = a + rate * t``; returns ``(rate, r_squared)``."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = y > 0
    if keep.sum() < 3:
        raise ConfigurationError("need at least three positive samples for an exponential fit")
    t, logy = t[keep], np.log(y[keep])
    slope, intercept = np.polyfit(t, logy, 1)
    pred = intercept + slope * t
    ss_res = float(np.sum((logy - pred) ** 2))
    ss_tot = float(np.sum((logy - logy.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), r2
