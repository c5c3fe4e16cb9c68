"""Cut-cell geometry on the unit interval.

Cells are 0-based in code: with interface index ``K`` (the vertex
``x = K * dx`` closest to ``X``), cells ``0..K-1`` are solid and cells
``K..N-1`` are gas. The two interface cells ``K-1`` and ``K`` are stretched
so that ``X`` becomes a cell boundary. ``K = N`` means solid only, ``K = 0``
gas only.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import CFLViolation, ConfigurationError, StepFailure

MIN_SIZE_FRACTION = 1e-12


class Move(enum.IntEnum):
    NONE = 0
    RIGHT = 1
    LEFT = -1


def nearest_vertex(X: float, N: int) -> int:
    """Index of the vertex closest to ``X``, the left one on ties.

    For an interior ``X`` the index is kept in ``1..N-1`` so that both phases
    own at least one cell.
    """
    if X <= 0.0:
        return 0
    if X >= 1.0:
        return N
    K = math.ceil(X * N - 0.5)
    return min(max(K, 1), N - 1)


def cut_sizes(N: int, X: float, K: int) -> np.ndarray:
    dx = 1.0 / N
    sizes = np.full(N, dx)
    if 0 < K < N:
        sizes[K - 1] = X - (K - 1) * dx
        sizes[K] = (K + 1) * dx - X
    return sizes


@dataclass(frozen=True, eq=False)
class CutMesh:
    N: int
    X: float
    K: int
    sizes: np.ndarray

    @property
    def dx(self) -> float:
        return 1.0 / self.N

    @property
    def two_phase(self) -> bool:
        return 0 < self.K < self.N

    def edges(self) -> np.ndarray:
        """Cell boundaries, ``N + 1`` points from 0 to 1."""
        x = np.arange(self.N + 1) * self.dx
        if self.two_phase:
            x[self.K] = self.X
        x[-1] = 1.0
        return x

    def centers(self) -> np.ndarray:
        x = self.edges()
        return 0.5 * (x[:-1] + x[1:])

    def solid_mask(self) -> np.ndarray:
        return np.arange(self.N) < self.K


def build(N: int, X0: float) -> CutMesh:
    """Cut mesh of ``N`` reference cells with interface at ``X0``."""
    if int(N) != N or N < 4:
        raise ConfigurationError(f"N must be an integer >= 4, got {N}")
    N = int(N)
    if not 0.0 <= X0 <= 1.0:
        raise ConfigurationError(f"interface position must lie in [0, 1], got {X0}")
    K = nearest_vertex(X0, N)
    return CutMesh(N, float(X0), K, cut_sizes(N, X0, K))


def one_phase(N: int, solid: bool) -> CutMesh:
    return CutMesh(N, 1.0 if solid else 0.0, N if solid else 0, np.full(N, 1.0 / N))


def _check_span(mesh_prev: CutMesh, X_new: float) -> None:
    # X_new must stay inside the two interface cells of the old binding
    K, dx = mesh_prev.K, mesh_prev.dx
    slack = 1e-12 * dx
    if not (K - 1) * dx - slack <= X_new <= (K + 1) * dx + slack:
        raise CFLViolation(
            f"interface moved from {mesh_prev.X:.6g} to {X_new:.6g}, outside its two cells"
        )


def intermediate_sizes(mesh_prev: CutMesh, X_new: float) -> np.ndarray:
    """Cell sizes with the old interface binding but the new interface position.

    The time stepper limits interface motion to ``dx/2`` per step; here any
    position inside the two old interface cells is accepted.
    """
    if not mesh_prev.two_phase:
        return mesh_prev.sizes.copy()
    _check_span(mesh_prev, X_new)
    return cut_sizes(mesh_prev.N, X_new, mesh_prev.K)


def check_sizes(sizes: np.ndarray, dx: float) -> None:
    if np.min(sizes) < MIN_SIZE_FRACTION * dx:
        raise StepFailure(f"degenerate cell of size {np.min(sizes):.3e}")


def rebind(mesh_prev: CutMesh, X_new: float) -> tuple[CutMesh, Move]:
    """Rebind the interface to the vertex nearest to ``X_new``."""
    if not mesh_prev.two_phase:
        return mesh_prev, Move.NONE
    _check_span(mesh_prev, X_new)
    K = nearest_vertex(X_new, mesh_prev.N)
    if not 0 < K < mesh_prev.N:
        raise ConfigurationError("rebind keeps two phases; use one_phase() to drop one")
    shift = K - mesh_prev.K
    if abs(shift) > 1:
        raise CFLViolation(f"interface cell jumped by {shift} cells")
    new = CutMesh(mesh_prev.N, float(X_new), K, cut_sizes(mesh_prev.N, X_new, K))
    return new, Move(shift)


def postprocess(c_star, mesh_prev: CutMesh, sizes_star, mesh_new: CutMesh, move: Move):
    """Map intermediate concentrations onto the rebound mesh.

    A right move copies the solid interface value onto the fixed cell and the
    new solid interface cell, then merges the leftover gas sliver into the
    next gas cell by a size-weighted average. A left move is the mirror image.
    Input and output have shape ``(n, N)``; per-species mass is conserved.
    """
    c_star = np.asarray(c_star, dtype=float)
    move = Move(move)
    if move is Move.NONE:
        return c_star.copy()
    N, K, dx = mesh_prev.N, mesh_prev.K, mesh_prev.dx
    if mesh_new.K - K != move:
        raise ConfigurationError("move does not match the two meshes")
    c = c_star.copy()
    # K-1 and K are the 0-based solid and gas interface cells
    if move is Move.RIGHT:
        if K + 1 >= N:
            raise ConfigurationError("right move needs two gas cells after the interface")
        c[:, K] = c_star[:, K - 1]
        w = sizes_star[K]
        c[:, K + 1] = (w * c_star[:, K] + dx * c_star[:, K + 1]) / (dx + w)
    else:
        if K - 2 < 0:
            raise ConfigurationError("left move needs two solid cells before the interface")
        c[:, K - 1] = c_star[:, K]
        w = sizes_star[K - 1]
        c[:, K - 2] = (dx * c_star[:, K - 2] + w * c_star[:, K - 1]) / (dx + w)
    return c


def collapse(c_star, mesh_prev: CutMesh, sizes_star, solid: bool):
    """Merge the two interface cells when one phase vanishes.

    Both former interface cells receive their size-weighted average, which
    keeps mass and does not raise any convex energy. Returns ``(c, mesh)``.
    """
    K = mesh_prev.K
    c = np.array(c_star, dtype=float, copy=True)
    w = sizes_star[K - 1 : K + 1]
    merged = (c_star[:, K - 1 : K + 1] @ w) / w.sum()
    c[:, K - 1] = merged
    c[:, K] = merged
    return c, one_phase(mesh_prev.N, solid)


def cell_averages(mesh: CutMesh, profile, points: int = 5) -> np.ndarray:
    """Per-cell means of ``profile(x) -> (n, ...)`` by Gauss-Legendre quadrature."""
    nodes, weights = np.polynomial.legendre.leggauss(points)
    x = mesh.edges()
    left, right = x[:-1], x[1:]
    half = 0.5 * (right - left)
    xq = 0.5 * (left + right)[:, None] + half[:, None] * nodes[None, :]
    values = np.asarray(profile(xq), dtype=float)
    return 0.5 * values @ weights
