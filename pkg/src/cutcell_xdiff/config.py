"""Flat ``key = value`` run configuration.

Recognized keys (missing ones fall back to the three-species test case)::

    n = 3
    kappa_solid.1.2 = 0.2        # 1-based species indices, symmetric
    kappa_gas.1.3 = 1.0
    exp_mu_star_solid = 0.2, 0.4, 0.4   # or mu_star_solid = ...
    exp_mu_star_gas = 1.2, 0.1, 0.1     # or mu_star_gas = ...
    N = 100
    X0 = 0.51
    dt = auto                    # 0.9 times the CFL bound
    T = 5
    profile = tc1                # tc1 | cosine | piecewise | stationary
    snapshots = 0, 0.25, 1, 5
    outdir = out
    meshes = 8, 16, 32, 64, 128  # convergence study
    ref_N = 512
    workers = 1

Profile parameters: ``cosine_mean`` and ``cosine_amplitude`` (``c_i = a_i +
b_i cos(pi x)``); ``piecewise_breaks`` (interior breakpoints) and
``piecewise_values`` (one comma list per piece, pieces separated by ``;``);
``stationary_masses`` for ``profile = stationary``, which also places the
interface at the equilibrium position. ``one_phase = solid | gas`` picks the
stationary state when the coexistence condition fails.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError
from .model import PhaseKind, TwoPhaseParams, solve_stationary, tc1_params, tc1_profiles

_KAPPA_KEY = re.compile(r"^kappa_(solid|gas)\.(\d+)\.(\d+)$")
_KNOWN = {
    "n", "exp_mu_star_solid", "exp_mu_star_gas", "mu_star_solid", "mu_star_gas", "N", "X0",
    "dt", "T", "profile", "snapshots", "outdir", "meshes", "ref_N", "workers",
    "cosine_mean", "cosine_amplitude", "piecewise_breaks", "piecewise_values",
    "stationary_masses", "one_phase",
}


@dataclass
class RunConfig:
    params: TwoPhaseParams = field(default_factory=tc1_params)
    N: int = 100
    X0: float = 0.51
    dt: float | str | None = None
    T: float | None = None
    profile: str = "tc1"
    profile_args: dict = field(default_factory=dict)
    snapshots: list = field(default_factory=list)
    outdir: str = "out"
    meshes: list = field(default_factory=lambda: [8, 16, 32, 64, 128])
    ref_N: int = 512
    workers: int = 1
    one_phase: PhaseKind = PhaseKind.SOLID_ONLY

    def resolve_dt(self, default: float) -> float:
        from .stepper import cfl_dt_max

        if self.dt is None:
            return default
        if self.dt == "auto":
            return 0.9 * cfl_dt_max(self.params, 1.0 / self.N)
        return float(self.dt)

    def initial(self, N: int | None = None):
        """Initial state on ``N`` cells (default ``self.N``)."""
        from .mesh import build
        from .stepper import initial_state, uniform_state

        N = self.N if N is None else N
        kind = self.profile
        if kind == "stationary":
            st = solve_stationary(self.profile_args["masses"], self.params, self.one_phase)
            mesh = build(N, st.X_bar)
            cs = st.c_solid_bar if mesh.K > 0 else st.c_gas_bar
            cg = st.c_gas_bar if mesh.K < N else st.c_solid_bar
            return uniform_state(cs, cg, mesh)
        return initial_state(N, self.X0, self.profile_function())

    def profile_function(self):
        n = self.params.n
        args = self.profile_args
        if self.profile == "tc1":
            if n != 3:
                raise ConfigurationError("the tc1 profile needs n = 3")
            return tc1_profiles
        if self.profile == "cosine":
            a = np.asarray(args["mean"], dtype=float)
            b = np.asarray(args["amplitude"], dtype=float)
            if a.shape != (n,) or b.shape != (n,):
                raise ConfigurationError("cosine_mean and cosine_amplitude need n entries")

            def cosine(x):
                x = np.asarray(x, dtype=float)
                return a.reshape((n,) + (1,) * x.ndim) + np.multiply.outer(b, np.cos(np.pi * x))

            return cosine
        if self.profile == "piecewise":
            breaks = np.asarray(args["breaks"], dtype=float)
            values = np.asarray(args["values"], dtype=float)
            if values.shape != (len(breaks) + 1, n):
                raise ConfigurationError("piecewise_values needs one n-vector per piece")

            def piecewise(x):
                idx = np.searchsorted(breaks, np.asarray(x, dtype=float), side="right")
                return np.moveaxis(values[idx], -1, 0)

            return piecewise
        raise ConfigurationError(f"unknown profile {self.profile!r}")


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in re.split(r"[,\s]+", text.strip()) if v]
    except ValueError as exc:
        raise ConfigurationError(f"cannot parse number list {text!r}") from exc


def _float(text: str, key: str) -> float:
    try:
        return float(text)
    except ValueError as exc:
        raise ConfigurationError(f"{key}: expected a number, got {text!r}") from exc


def _int(text: str, key: str) -> int:
    try:
        return int(text)
    except ValueError as exc:
        raise ConfigurationError(f"{key}: expected an integer, got {text!r}") from exc


def parse_config(text: str) -> RunConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string("[run]\n" + text)
    except configparser.Error as exc:
        raise ConfigurationError(f"malformed configuration: {exc}") from exc
    raw = dict(parser["run"])
    return from_mapping(raw)


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def from_mapping(raw: dict) -> RunConfig:
    cfg = RunConfig()
    kappa_keys = {k: v for k, v in raw.items() if _KAPPA_KEY.match(k)}
    unknown = set(raw) - _KNOWN - set(kappa_keys)
    if unknown:
        raise ConfigurationError(f"unknown configuration keys: {sorted(unknown)}")

    physics = {"n", "exp_mu_star_solid", "exp_mu_star_gas", "mu_star_solid", "mu_star_gas"}
    if kappa_keys or physics & set(raw):
        cfg.params = _params(raw, kappa_keys)

    if "N" in raw:
        cfg.N = _int(raw["N"], "N")
    if "X0" in raw:
        cfg.X0 = _float(raw["X0"], "X0")
    if "dt" in raw:
        cfg.dt = "auto" if raw["dt"].strip() == "auto" else _float(raw["dt"], "dt")
    if "T" in raw:
        cfg.T = _float(raw["T"], "T")
    if "snapshots" in raw:
        cfg.snapshots = _floats(raw["snapshots"])
    if "outdir" in raw:
        cfg.outdir = raw["outdir"].strip()
    if "meshes" in raw:
        cfg.meshes = [_int(v, "meshes") for v in re.split(r"[,\s]+", raw["meshes"].strip()) if v]
    if "ref_N" in raw:
        cfg.ref_N = _int(raw["ref_N"], "ref_N")
    if "workers" in raw:
        cfg.workers = _int(raw["workers"], "workers")
    if "one_phase" in raw:
        try:
            cfg.one_phase = {"solid": PhaseKind.SOLID_ONLY, "gas": PhaseKind.GAS_ONLY}[
                raw["one_phase"].strip()
            ]
        except KeyError as exc:
            raise ConfigurationError("one_phase must be 'solid' or 'gas'") from exc

    cfg.profile = raw.get("profile", "tc1").strip()
    if cfg.profile == "cosine":
        cfg.profile_args = {
            "mean": _floats(raw.get("cosine_mean", "")),
            "amplitude": _floats(raw.get("cosine_amplitude", "")),
        }
    elif cfg.profile == "piecewise":
        cfg.profile_args = {
            "breaks": _floats(raw.get("piecewise_breaks", "")),
            "values": [_floats(p) for p in raw.get("piecewise_values", "").split(";") if p.strip()],
        }
    elif cfg.profile == "stationary":
        if "stationary_masses" not in raw:
            raise ConfigurationError("profile = stationary needs stationary_masses")
        cfg.profile_args = {"masses": _floats(raw["stationary_masses"])}
    elif cfg.profile != "tc1":
        raise ConfigurationError(f"unknown profile {cfg.profile!r}")
    validate(cfg)
    return cfg


def _params(raw: dict, kappa_keys: dict) -> TwoPhaseParams:
    if "n" not in raw:
        raise ConfigurationError("n is required when physical parameters are given")
    n = _int(raw["n"], "n")
    kappas = {"solid": np.zeros((n, n)), "gas": np.zeros((n, n))}
    for key, val in kappa_keys.items():
        phase, i, j = _KAPPA_KEY.match(key).groups()
        i, j = int(i) - 1, int(j) - 1
        if not (0 <= i < n and 0 <= j < n):
            raise ConfigurationError(f"{key}: species index out of range")
        v = _float(val, key)
        kappas[phase][i, j] = kappas[phase][j, i] = v

    def potentials(phase):
        if f"mu_star_{phase}" in raw:
            return np.asarray(_floats(raw[f"mu_star_{phase}"]))
        if f"exp_mu_star_{phase}" in raw:
            e = np.asarray(_floats(raw[f"exp_mu_star_{phase}"]))
            if np.any(e <= 0):
                raise ConfigurationError(f"exp_mu_star_{phase} must be positive")
            return np.log(e)
        raise ConfigurationError(f"missing exp_mu_star_{phase} (or mu_star_{phase})")

    return TwoPhaseParams(n, kappas["solid"], kappas["gas"], potentials("solid"), potentials("gas"))


def validate(cfg: RunConfig) -> None:
    if cfg.N < 4:
        raise ConfigurationError("N must be >= 4")
    if not 0.0 <= cfg.X0 <= 1.0:
        raise ConfigurationError("X0 must lie in [0, 1]")
    if isinstance(cfg.dt, float) and not cfg.dt > 0:
        raise ConfigurationError("dt must be positive")
    if cfg.T is not None and cfg.T < 0:
        raise ConfigurationError("T must be nonnegative")
    if any(m < 4 for m in cfg.meshes) or cfg.ref_N < 4:
        raise ConfigurationError("all meshes need at least 4 cells")
    if cfg.workers < 1:
        raise ConfigurationError("workers must be >= 1")
    if cfg.profile == "tc1" and cfg.params.n != 3:
        raise ConfigurationError("the tc1 profile needs n = 3")
