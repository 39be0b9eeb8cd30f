"""Finite-difference discretization of H = -d^2/dx^2 + V on a uniform 1-D grid.

The eigendecomposition computed here is the reference spectral calculus that
every other module is checked against.
"""

from __future__ import annotations

import csv
import enum
import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy import linalg

from .errors import EigensolverError, InvalidRangeError, ShapeMismatchError

MIN_POINTS = 16
BOUND_STATE_CUTOFF = -1e-2


class Boundary(str, enum.Enum):
    DIRICHLET = "dirichlet"
    PERIODIC = "periodic"


@dataclass(frozen=True)
class Grid:
    """Uniform grid ``x_i = x_min + i*h`` for ``i = 0..n_points-1``.

    With Dirichlet boundaries the wave function vanishes at ``x_min`` and
    ``x_max``, so only the ``n_points - 2`` interior nodes carry unknowns.
    With periodic boundaries all nodes are unknowns and node ``n_points - 1``
    couples back to node 0 (period ``n_points * h``).
    """

    x_min: float
    x_max: float
    n_points: int
    boundary: Boundary = Boundary.DIRICHLET

    def __post_init__(self):
        object.__setattr__(self, "boundary", Boundary(self.boundary))
        if not self.x_min < self.x_max:
            raise InvalidRangeError(f"need x_min < x_max, got [{self.x_min}, {self.x_max}]")
        if self.n_points < MIN_POINTS:
            raise InvalidRangeError(f"need n_points >= {MIN_POINTS}, got {self.n_points}")

    @property
    def h(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @cached_property
    def nodes(self) -> np.ndarray:
        x = self.x_min + np.arange(self.n_points) * self.h
        x.flags.writeable = False
        return x

    @property
    def unknowns(self) -> slice:
        """Slice of node indices that carry degrees of freedom."""
        if self.boundary is Boundary.DIRICHLET:
            return slice(1, self.n_points - 1)
        return slice(0, self.n_points)

    def central_indices(self, fraction: float = 0.5) -> np.ndarray:
        """Indices of nodes in the central ``fraction`` of the domain."""
        mid = 0.5 * (self.x_min + self.x_max)
        half = 0.5 * fraction * (self.x_max - self.x_min)
        return np.flatnonzero(np.abs(self.nodes - mid) <= half + 1e-12 * self.h)

    def index_of(self, x: float) -> int:
        i = int(round((x - self.x_min) / self.h))
        if not 0 <= i < self.n_points:
            raise InvalidRangeError(f"x={x} lies outside the grid")
        return i

    def to_dict(self) -> dict:
        return {
            "x_min": self.x_min,
            "x_max": self.x_max,
            "n_points": self.n_points,
            "boundary": self.boundary.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Grid":
        return cls(float(d["x_min"]), float(d["x_max"]), int(d["n_points"]), Boundary(d.get("boundary", "dirichlet")))


def build_grid(x_min: float, x_max: float, n_points: int, boundary="dirichlet") -> Grid:
    return Grid(float(x_min), float(x_max), int(n_points), Boundary(boundary))


def scaled_grid(scale: float, half_width: float, n_points: int, boundary="dirichlet") -> Grid:
    """Symmetric grid ``[-half_width/scale, half_width/scale]``.

    Used for dyadic sweeps where the natural length unit is ``2^{-j/2}``.
    """
    L = half_width / scale
    return build_grid(-L, L, n_points, boundary)


@dataclass(frozen=True)
class PotentialSpec:
    kind: str
    nu: int | None = None
    c: float | None = None
    table: tuple[tuple[float, float], ...] | None = None
    description: str = ""

    def __post_init__(self):
        if self.kind not in ("free", "poschl_teller", "constant", "table"):
            raise ValueError(f"unknown potential kind {self.kind!r}")
        if self.kind == "poschl_teller" and (self.nu is None or int(self.nu) < 1):
            raise ValueError("poschl_teller needs a positive integer nu")
        if self.kind == "constant" and self.c is None:
            raise ValueError("constant potential needs c")
        if self.kind == "table" and not self.table:
            raise ValueError("table potential needs samples")

    @classmethod
    def free(cls) -> "PotentialSpec":
        return cls("free", description="V = 0")

    @classmethod
    def poschl_teller(cls, nu: int) -> "PotentialSpec":
        return cls("poschl_teller", nu=int(nu), description=f"V = -{nu * (nu + 1)} sech^2 x")

    @classmethod
    def constant(cls, c: float) -> "PotentialSpec":
        return cls("constant", c=float(c), description=f"V = {c}")

    @classmethod
    def from_table(cls, x, v, description="tabulated") -> "PotentialSpec":
        x = np.asarray(x, float)
        v = np.asarray(v, float)
        if x.shape != v.shape:
            raise ShapeMismatchError("x and V columns differ in length")
        return cls("table", table=tuple(zip(x.tolist(), v.tolist())), description=description)

    def __call__(self, x):
        """Evaluate V at arbitrary points (tables are linearly interpolated)."""
        x = np.asarray(x, float)
        if self.kind == "free":
            return np.zeros_like(x)
        if self.kind == "constant":
            return np.full_like(x, self.c)
        if self.kind == "poschl_teller":
            return -self.nu * (self.nu + 1) / np.cosh(x) ** 2
        xs, vs = np.array(self.table).T
        return np.interp(x, xs, vs)

    @property
    def even(self) -> bool:
        return self.kind in ("free", "constant", "poschl_teller")

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.nu is not None:
            d["nu"] = self.nu
        if self.c is not None:
            d["c"] = self.c
        if self.table is not None:
            d["table"] = [list(p) for p in self.table]
        if self.description:
            d["description"] = self.description
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PotentialSpec":
        table = d.get("table")
        return cls(
            d["kind"],
            nu=d.get("nu"),
            c=d.get("c"),
            table=tuple(tuple(map(float, p)) for p in table) if table else None,
            description=d.get("description", ""),
        )


def read_potential_csv(path) -> PotentialSpec:
    """Read a two-column ``x, V(x)`` CSV; a non-numeric first row is a header."""
    xs, vs = [], []
    first = True
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].lstrip().startswith("#"):
                continue
            try:
                x, v = float(row[0]), float(row[1])
            except ValueError:
                if first:
                    first = False
                    continue
                raise
            first = False
            xs.append(x)
            vs.append(v)
    return PotentialSpec.from_table(xs, vs, description=f"table from {Path(path).name}")


def sample_potential(spec: PotentialSpec, grid: Grid) -> np.ndarray:
    x = grid.nodes
    if spec.kind == "table":
        if len(spec.table) != grid.n_points:
            raise ShapeMismatchError(
                f"table has {len(spec.table)} samples but grid has {grid.n_points} nodes"
            )
        return np.array([v for _, v in spec.table], float)
    return spec(x)


@dataclass(frozen=True)
class OperatorMatrix:
    """H restricted to the grid unknowns, stored as a (cyclic) tridiagonal."""

    grid: Grid
    diagonal: np.ndarray
    off_diagonal: np.ndarray
    potential: PotentialSpec | None = None

    @property
    def size(self) -> int:
        return len(self.diagonal)

    @property
    def values(self) -> np.ndarray:
        m = self.size
        M = np.diag(self.diagonal)
        idx = np.arange(m - 1)
        M[idx, idx + 1] = self.off_diagonal
        M[idx + 1, idx] = self.off_diagonal
        if self.grid.boundary is Boundary.PERIODIC:
            M[0, -1] += self.off_diagonal[0]
            M[-1, 0] += self.off_diagonal[0]
        return M

    def matvec(self, u: np.ndarray) -> np.ndarray:
        """Apply H to values on the unknowns (vectorized along trailing axes)."""
        out = self.diagonal.reshape((-1,) + (1,) * (u.ndim - 1)) * u
        off = self.off_diagonal[0]
        out[:-1] += off * u[1:]
        out[1:] += off * u[:-1]
        if self.grid.boundary is Boundary.PERIODIC:
            out[0] += off * u[-1]
            out[-1] += off * u[0]
        return out


def assemble_hamiltonian(grid: Grid, potential, spec: PotentialSpec | None = None) -> OperatorMatrix:
    """Second-order central differences: diag 2/h^2 + V_i, off-diagonal -1/h^2."""
    if isinstance(potential, PotentialSpec):
        spec = potential
        potential = sample_potential(spec, grid)
    v = np.asarray(potential, float)
    if v.shape != (grid.n_points,):
        raise ShapeMismatchError(f"potential has shape {v.shape}, grid has {grid.n_points} nodes")
    h = grid.h
    v = v[grid.unknowns]
    diag = 2.0 / h**2 + v
    off = np.full(len(v) - 1, -1.0 / h**2)
    return OperatorMatrix(grid, diag, off, spec)


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenpairs of an :class:`OperatorMatrix`, embedded on the full grid.

    ``eigenvectors[:, m]`` is orthonormal under ``<u, v>_h = h * sum(u * v)``
    and vanishes at Dirichlet endpoints.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    grid: Grid
    potential: PotentialSpec | None = None

    @property
    def h(self) -> float:
        return self.grid.h

    def bound_state_energies(self, cutoff: float = BOUND_STATE_CUTOFF) -> np.ndarray:
        return self.eigenvalues[self.eigenvalues < cutoff]

    def coefficients(self, f: np.ndarray) -> np.ndarray:
        """Expansion coefficients ``<u_m, f>_h`` of grid functions (columns of f)."""
        return self.h * (self.eigenvectors.T @ f)

    def synthesize(self, c: np.ndarray) -> np.ndarray:
        return self.eigenvectors @ c

    def kernel_values(self, weights: np.ndarray) -> np.ndarray:
        """``sum_m w_m u_m u_m^T``: the kernel of the multiplier with spectral values w."""
        U = self.eigenvectors
        return (U * weights) @ U.T

    def kernel_columns(self, weights: np.ndarray, cols) -> np.ndarray:
        U = self.eigenvectors
        return U @ (weights[:, None] * U[cols, :].T)


def eigendecompose(op: OperatorMatrix) -> SpectralDecomposition:
    grid = op.grid
    try:
        if grid.boundary is Boundary.DIRICHLET:
            w, v = linalg.eigh_tridiagonal(op.diagonal, op.off_diagonal, lapack_driver="stemr")
        else:
            w, v = linalg.eigh(op.values)
    except (linalg.LinAlgError, ValueError) as exc:
        raise EigensolverError(f"eigensolver failed: {exc}") from exc
    if not np.all(np.isfinite(w)):
        raise EigensolverError("eigensolver returned non-finite eigenvalues")
    U = np.zeros((grid.n_points, len(w)))
    U[grid.unknowns] = v / np.sqrt(grid.h)
    return SpectralDecomposition(w, U, grid, op.potential)


def decompose(grid: Grid, spec: PotentialSpec) -> SpectralDecomposition:
    """Shortcut: sample, assemble and diagonalize."""
    return eigendecompose(assemble_hamiltonian(grid, sample_potential(spec, grid), spec))


def dirichlet_dispersion(grid: Grid) -> np.ndarray:
    """Exact eigenvalues of the free Dirichlet difference operator."""
    k = np.arange(1, grid.n_points - 1)
    return (2.0 / grid.h**2) * (1.0 - np.cos(k * np.pi * grid.h / (grid.x_max - grid.x_min)))


def operator_descriptor(grid: Grid, spec: PotentialSpec) -> dict:
    return {"grid": grid.to_dict(), "potential": spec.to_dict()}


def save_descriptor(path, grid: Grid, spec: PotentialSpec) -> None:
    Path(path).write_text(json.dumps(operator_descriptor(grid, spec), indent=2, sort_keys=True))


def load_descriptor(path) -> tuple[Grid, PotentialSpec]:
    d = json.loads(Path(path).read_text())
    return Grid.from_dict(d["grid"]), PotentialSpec.from_dict(d["potential"])
