"""Experiment drivers: snapshot run, stationary state, long-time decay, mesh convergence.

Each driver takes a :class:`~cutcell_xdiff.config.RunConfig` and an output
directory, writes its CSV/text files and returns the computed data so the
same code serves the command line and the test suite.
"""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import RunConfig
from .diagnostics import (
    EnergyRecorder,
    ErrorReport,
    exponential_fit,
    fit_order,
    l1_spacetime_error,
    masses,
    report,
    stationary_free_energy,
)
from .errors import ConfigurationError
from .model import PhaseKind, coexistence_condition, solve_stationary
from .stepper import State, StepConfig, StepInfo, Trajectory, n_steps, run

logger = logging.getLogger(__name__)

FLOAT_FMT = "%.17g"

RUN_DEFAULTS = {"dt": 6e-4, "T": 5.0}
CONVERGENCE_DEFAULTS = {"dt": 1e-4, "T": 0.25}


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return FLOAT_FMT % x


def _write_csv(path: Path, comments, header, rows):
    with open(path, "w", newline="") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([v if isinstance(v, str) else fmt(v) for v in row])


def reference_state(state: State, cfg: RunConfig):
    """Stationary state reached from the masses of ``state``, or None without coexistence."""
    m0 = masses(state)
    m0 = m0 / m0.sum()
    holds, _, _ = coexistence_condition(m0, cfg.params)
    if not holds:
        return None
    return solve_stationary(m0, cfg.params)


def snapshot_name(t: float) -> str:
    return f"snapshot_{t:g}.csv"


def write_snapshot(path: Path, state: State) -> None:
    mesh = state.mesh
    n = state.c.shape[0]
    phase = np.where(mesh.solid_mask(), "solid", "gas")
    rows = (
        [k + 1, xc, size, ph, *state.c[:, k]]
        for k, (xc, size, ph) in enumerate(zip(mesh.centers(), mesh.sizes, phase))
    )
    _write_csv(
        path,
        [f"t = {fmt(state.t)}, X = {fmt(state.X)}", "dimensionless lengths and volume fractions"],
        ["cell", "center", "size", "phase"] + [f"c_{i + 1}" for i in range(n)],
        rows,
    )


class _DiagnosticsWriter:
    """Observer streaming one CSV row per accepted step."""

    def __init__(self, path: Path, cfg: RunConfig, reference, snapshots, dt, outdir):
        self.cfg = cfg
        self.reference = reference
        self.H_ref = stationary_free_energy(reference, cfg.params) if reference else None
        self.fh = open(path, "w", newline="")
        n = cfg.params.n
        self.fh.write("# dimensionless time, length, free energy and masses\n")
        self.fh.write("# H_relative = H - H_inf, X_relative = X_inf - X (nan without coexistence)\n")
        self.writer = csv.writer(self.fh, lineterminator="\n")
        self.writer.writerow(
            ["t", "X", "H", "H_relative", "X_relative"]
            + [f"m_{i + 1}" for i in range(n)]
            + ["min_c", "volume_defect", "newton_iters"]
        )
        self.snap_steps = {int(round(t / dt)): t for t in snapshots}
        self.outdir = outdir
        self.written = []
        self.reports = []

    def __call__(self, state: State, info: StepInfo):
        r = report(state, self.cfg.params, self.reference, self.H_ref, info.newton_iters)
        self.reports.append(r)
        self.writer.writerow(
            [fmt(v) for v in (r.t, r.X, r.H, r.H_relative, r.X_relative, *r.masses,
                              r.min_c, r.max_volume_defect)]
            + [str(r.newton_iters)]
        )
        self.fh.flush()
        if info.step in self.snap_steps:
            path = self.outdir / snapshot_name(self.snap_steps[info.step])
            write_snapshot(path, state)
            self.written.append((self.snap_steps[info.step], state))

    def close(self):
        self.fh.close()


@dataclass
class RunResult:
    trajectory: Trajectory
    reports: list
    snapshots: list
    reference: object


def run_experiment(cfg: RunConfig, outdir, plots: bool = False) -> RunResult:
    """Simulate and write ``diagnostics.csv`` plus ``snapshot_<t>.csv`` files."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    dt = cfg.resolve_dt(RUN_DEFAULTS["dt"])
    T = RUN_DEFAULTS["T"] if cfg.T is None else cfg.T
    initial = cfg.initial()
    reference = reference_state(initial, cfg)
    steps = n_steps(T, dt)
    snaps = [t for t in cfg.snapshots if 0 <= round(t / dt) <= steps] or ([0.0] if T == 0 else [])
    writer = _DiagnosticsWriter(outdir / "diagnostics.csv", cfg, reference, snaps, dt, outdir)
    try:
        traj = run(initial, T, StepConfig(dt=dt), cfg.params, [writer], keep_states=False)
    finally:
        writer.close()
    if plots:
        from . import plots as plotmod

        for t, state in writer.written:
            plotmod.profile_svg(outdir / f"profile_{t:g}.svg", state)
    return RunResult(traj, writer.reports, writer.written, reference)


@dataclass
class StationaryResult:
    holds: bool
    sum_beta: float
    sum_inv_beta: float
    state: object
    masses: np.ndarray


def stationary_experiment(cfg: RunConfig, outdir=None) -> StationaryResult:
    """Coexistence test and stationary state for the masses of the initial data."""
    if cfg.profile == "stationary":
        m0 = np.asarray(cfg.profile_args["masses"], dtype=float)
    else:
        m0 = masses(cfg.initial())
        m0 = m0 / m0.sum()
    holds, s, s_inv = coexistence_condition(m0, cfg.params)
    st = solve_stationary(m0, cfg.params, cfg.one_phase)
    res = StationaryResult(holds, s, s_inv, st, m0)
    if outdir is not None:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / "stationary.txt").write_text(format_stationary(res))
    return res


def format_stationary(res: StationaryResult) -> str:
    st = res.state
    vec = lambda v: ", ".join(fmt(x) for x in v)  # noqa: E731
    return (
        f"masses = {vec(res.masses)}\n"
        f"sum_m_beta = {fmt(res.sum_beta)}\n"
        f"sum_m_over_beta = {fmt(res.sum_inv_beta)}\n"
        f"coexistence = {str(res.holds).lower()}\n"
        f"kind = {st.kind.value}\n"
        f"X_bar = {fmt(st.X_bar)}\n"
        f"c_solid_bar = {vec(st.c_solid_bar)}\n"
        f"c_gas_bar = {vec(st.c_gas_bar)}\n"
    )


@dataclass
class LongtimeResult:
    t: np.ndarray
    H_relative: np.ndarray
    X_relative: np.ndarray
    H_rate: float
    H_r2: float
    X_rate: float
    X_r2: float
    reference: object
    final: State


def _tail_fit(t, y, label):
    # a run started at equilibrium has nothing to fit: report nan, not an error
    if np.count_nonzero(y > 0) < 3:
        logger.warning("%s has fewer than three positive samples; rate not fitted", label)
        return math.nan, math.nan
    return exponential_fit(t, y)


def longtime_experiment(cfg: RunConfig, outdir=None, plots: bool = False) -> LongtimeResult:
    """Relative free energy and interface distance to the equilibrium over time.

    An exponential rate is fitted on the final half of the time window.
    """
    dt = cfg.resolve_dt(RUN_DEFAULTS["dt"])
    T = RUN_DEFAULTS["T"] if cfg.T is None else cfg.T
    if T < dt:
        raise ConfigurationError(f"T = {T:g} is shorter than one step (dt = {dt:g}); nothing to fit")
    initial = cfg.initial()
    reference = reference_state(initial, cfg)
    if reference is None:
        raise ConfigurationError("long-time study needs the coexistence condition to hold")
    rec = EnergyRecorder(cfg.params, reference)
    traj = run(initial, T, StepConfig(dt=dt), cfg.params, [rec], keep_states=False)
    t = rec.column("t")
    Hr = rec.column("H_relative")
    Xr = rec.column("X_relative")
    window = t >= 0.5 * t[-1]
    if window.sum() < 3:
        raise ConfigurationError("fit window holds fewer than three samples")
    H_rate, H_r2 = _tail_fit(t[window], Hr[window], "H - H_inf")
    X_rate, X_r2 = _tail_fit(t[window], np.abs(Xr[window]), "X_inf - X")
    res = LongtimeResult(t, Hr, Xr, H_rate, H_r2, X_rate, X_r2, reference, traj.final)
    if outdir is not None:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        _write_csv(
            outdir / "longtime.csv",
            ["H_relative = H - H_inf, X_relative = X_inf - X (dimensionless)"],
            ["t", "H_relative", "X_relative"],
            zip(t, Hr, Xr),
        )
        (outdir / "longtime_fit.txt").write_text(
            f"window = {fmt(t[window][0])}, {fmt(t[-1])}\n"
            f"H_rate = {fmt(H_rate)}\nH_r2 = {fmt(H_r2)}\n"
            f"X_rate = {fmt(X_rate)}\nX_r2 = {fmt(X_r2)}\n"
        )
        if plots:
            from . import plots as plotmod

            plotmod.longtime_svg(outdir / "longtime.svg", t, Hr, Xr)
    return res


def _simulate(args):
    cfg, N, dt, T = args
    return run(cfg.initial(N), T, StepConfig(dt=dt), cfg.params)


@dataclass
class ConvergenceResult:
    reports: list
    order_total: float
    order_species: np.ndarray
    order_X: float


def convergence_experiment(cfg: RunConfig, outdir=None, plots: bool = False) -> ConvergenceResult:
    """Errors of the runs on ``cfg.meshes`` against a run on ``cfg.ref_N`` cells."""
    dt = cfg.resolve_dt(CONVERGENCE_DEFAULTS["dt"])
    T = CONVERGENCE_DEFAULTS["T"] if cfg.T is None else cfg.T
    meshes = sorted(cfg.meshes)
    jobs = [(cfg, N, dt, T) for N in [cfg.ref_N] + meshes]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            trajs = list(pool.map(_simulate, jobs))
    else:
        trajs = [_simulate(job) for job in jobs]
    ref, runs = trajs[0], trajs[1:]
    reports = [l1_spacetime_error(tr, ref) for tr in runs]
    order_total = fit_order((r.dx, r.L1_total) for r in reports)
    order_species = np.array(
        [fit_order((r.dx, r.L1_spacetime_c[i]) for r in reports) for i in range(cfg.params.n)]
    )
    order_X = fit_order((r.dx, r.L1_time_X) for r in reports) if all(
        r.L1_time_X > 0 for r in reports) else math.nan
    for r in reports:
        r.fitted_order = order_total
    res = ConvergenceResult(reports, order_total, order_species, order_X)
    if outdir is not None:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        n = cfg.params.n
        _write_csv(
            outdir / "convergence.csv",
            [f"reference N = {cfg.ref_N}, dt = {fmt(dt)}, T = {fmt(T)}",
             "space-time L1 errors of concentrations, time L1 error of the interface"],
            ["N", "dx"] + [f"L1_c_{i + 1}" for i in range(n)] + ["L1_total", "L1_X"],
            ([round(1 / r.dx), r.dx, *r.L1_spacetime_c, r.L1_total, r.L1_time_X] for r in reports),
        )
        (outdir / "convergence_fit.txt").write_text(
            f"order_total = {fmt(order_total)}\n"
            + "".join(f"order_c_{i + 1} = {fmt(o)}\n" for i, o in enumerate(order_species))
            + f"order_X = {fmt(order_X)}\n"
        )
        if plots:
            from . import plots as plotmod

            plotmod.convergence_svg(outdir / "convergence.svg", reports)
    return res


__all__ = [
    "ErrorReport",
    "PhaseKind",
    "run_experiment",
    "stationary_experiment",
    "longtime_experiment",
    "convergence_experiment",
]
