"""Sampled two-point kernels and their on-disk formats."""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass

import numpy as np

from .grid import Grid

BINARY_HEADER = struct.Struct("<ii")  # n_points, derivative order


@dataclass(frozen=True)
class KernelMatrix:
    """Continuum-normalized kernel ``K(x_i, x_j)`` of an operator on a grid.

    The operator acts on grid functions by ``(A f)_i = h * sum_j K_ij f_j``.
    """

    grid: Grid
    values: np.ndarray
    alpha: int = 0
    label: str = ""
    imag_residual: float = 0.0

    def apply(self, f: np.ndarray) -> np.ndarray:
        return self.grid.h * (self.values @ f)

    def compose(self, other: "KernelMatrix", label: str = "") -> "KernelMatrix":
        """Kernel of the product ``A B``: ``h * sum_z A(x, z) B(z, y)``."""
        return KernelMatrix(self.grid, self.grid.h * (self.values @ other.values), self.alpha, label)

    def column(self, y: float) -> np.ndarray:
        return self.values[:, self.grid.index_of(y)]

    def symmetry_defect(self) -> float:
        return float(np.max(np.abs(self.values - self.values.T)))

    def to_csv(self, path, stride: int = 1) -> None:
        x = self.grid.nodes
        idx = np.arange(0, self.grid.n_points, stride)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "y", "value"])
            for j in idx:
                for i in idx:
                    w.writerow([repr(float(x[i])), repr(float(x[j])), repr(float(np.real(self.values[i, j])))])

    def to_binary(self, path) -> None:
        if np.iscomplexobj(self.values):
            raise TypeError("binary dump supports real kernels only")
        with open(path, "wb") as fh:
            fh.write(BINARY_HEADER.pack(self.grid.n_points, self.alpha))
            fh.write(np.ascontiguousarray(self.values, dtype="<f8").tobytes())


def read_binary(path, grid: Grid, label: str = "") -> KernelMatrix:
    with open(path, "rb") as fh:
        n, alpha = BINARY_HEADER.unpack(fh.read(BINARY_HEADER.size))
        if n != grid.n_points:
            raise ValueError(f"dump holds {n} points, grid has {grid.n_points}")
        values = np.frombuffer(fh.read(), dtype="<f8").reshape(n, n).copy()
    return KernelMatrix(grid, values, alpha, label)
