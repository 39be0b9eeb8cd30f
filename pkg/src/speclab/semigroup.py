"""Heat kernels of e^{-tH}: eigen, Crank-Nicolson and Feynman-Kac routes.

Also fits the Gaussian envelope ``c_n t^{-(1+alpha)/2} exp(-c|x-y|^2/t)`` and
evaluates the L^2 and exponential moments of a heat kernel column.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu
from scipy.special import logsumexp

from .errors import DegenerateFitError, InvalidRangeError
from .grid import Grid, PotentialSpec, SpectralDecomposition, assemble_hamiltonian, sample_potential
from .kernels import KernelMatrix

KERNEL_FLOOR = 1e-14
FK_CHUNK = 8192


def _check_time(t):
    if not t > 0:
        raise InvalidRangeError(f"time must be positive, got {t}")


def free_heat_kernel(x, y, t):
    """Gauss-Weierstrass kernel (4 pi t)^{-1/2} exp(-(x-y)^2 / 4t)."""
    r = np.subtract(x, y)
    return np.exp(-(r**2) / (4 * t)) / np.sqrt(4 * np.pi * t)


def heat_kernel_eigen(decomp: SpectralDecomposition, t: float) -> KernelMatrix:
    _check_time(t)
    K = decomp.kernel_values(np.exp(-t * decomp.eigenvalues))
    return KernelMatrix(decomp.grid, K, 0, f"heat t={t:g}")


def row_gradient(values: np.ndarray, h: float) -> np.ndarray:
    """d/dx along the first (row) index; central in the interior."""
    return np.gradient(values, h, axis=0, edge_order=2)


def heat_kernel_gradient(decomp: SpectralDecomposition, t: float) -> KernelMatrix:
    K = heat_kernel_eigen(decomp, t)
    return KernelMatrix(decomp.grid, row_gradient(K.values, decomp.h), 1, f"grad heat t={t:g}")


def heat_kernel_crank_nicolson(grid: Grid, potential: PotentialSpec, t: float, y_indices, n_steps: int = 400):
    """Columns ``p_t(., y)`` by Crank-Nicolson time stepping from ``delta_y / h``.

    Two backward-Euler half steps start the march so the delta's high
    frequencies are damped instead of ringing.
    """
    _check_time(t)
    op = assemble_hamiltonian(grid, sample_potential(potential, grid), potential)
    m = op.size
    H = sparse.diags([op.off_diagonal, op.diagonal, op.off_diagonal], [-1, 0, 1], format="lil")
    if op.grid.boundary.value == "periodic":
        H[0, m - 1] = H[m - 1, 0] = op.off_diagonal[0]
    H = H.tocsc()
    I = sparse.identity(m, format="csc")
    dt = t / n_steps
    y_indices = np.atleast_1d(y_indices)
    offset = grid.unknowns.start
    u = np.zeros((m, len(y_indices)))
    u[y_indices - offset, np.arange(len(y_indices))] = 1.0 / grid.h

    lhs = splu((I + 0.5 * dt * H).tocsc())
    u = lhs.solve(lhs.solve(u))
    rhs = (I - 0.5 * dt * H).tocsr()
    for _ in range(n_steps - 1):
        u = lhs.solve(rhs @ u)
    out = np.zeros((grid.n_points, len(y_indices)))
    out[grid.unknowns] = u
    return out


def heat_kernel_feynman_kac(potential, t, x, y, n_paths=100_000, n_steps=None, seed=0):
    """Brownian-bridge estimate of p_t(x, y) with its standard error.

    Paths of the process generated by d^2/dx^2 (variance 2s at time s) are
    pinned at x (s=0) and y (s=t); the estimate is the free density times the
    mean Feynman-Kac weight exp(-int_0^t V). Path chunks draw from spawned
    seed substreams, so the result depends only on ``seed``.
    """
    _check_time(t)
    if n_paths < 1000:
        raise InvalidRangeError("need at least 1000 paths")
    min_steps = max(64, math.ceil(64 * t))
    n_steps = min_steps if n_steps is None else int(n_steps)
    if n_steps < min_steps:
        raise InvalidRangeError(f"need n_steps >= {min_steps} for t={t}")

    p0 = float(free_heat_kernel(x, y, t))
    if isinstance(potential, PotentialSpec) and potential.kind == "free":
        return p0, 0.0

    s = np.linspace(0.0, t, n_steps + 1)
    dt = t / n_steps
    trap = np.full(n_steps + 1, dt)
    trap[[0, -1]] = 0.5 * dt
    mean_line = x + (y - x) * s / t

    n_chunks = -(-n_paths // FK_CHUNK)
    streams = np.random.SeedSequence(seed).spawn(n_chunks)
    total = total_sq = 0.0
    done = 0
    for ss in streams:
        m = min(FK_CHUNK, n_paths - done)
        rng = np.random.default_rng(ss)
        incr = rng.standard_normal((m, n_steps)) * math.sqrt(2 * dt)
        w = np.zeros((m, n_steps + 1))
        np.cumsum(incr, axis=1, out=w[:, 1:])
        path = w - np.outer(w[:, -1], s / t) + mean_line
        weight = np.exp(-(potential(path) @ trap))
        total += weight.sum()
        total_sq += (weight**2).sum()
        done += m
    mean = total / n_paths
    var = max(total_sq / n_paths - mean**2, 0.0) * n_paths / (n_paths - 1)
    return p0 * mean, p0 * math.sqrt(var / n_paths)


@dataclass
class GaussianBoundFit:
    c_n: float
    c: float
    alpha: int
    t_range: tuple[float, float]
    residual: float
    holds: bool
    margin: float = 0.0
    noise: float = 0.0
    envelope: dict | None = None  # t -> log of the smallest constant at that time

    def to_dict(self) -> dict:
        d = asdict(self)
        d["t_range"] = list(self.t_range)
        return d

    def to_json(self) -> str:
        return json.dumps(
            {k: self.to_dict()[k] for k in ("c_n", "c", "alpha", "holds", "residual")}, sort_keys=True
        )


def _bound_samples(K: KernelMatrix, t: float, max_cols: int = 48, max_rows: int = 768):
    grid = K.grid
    cols = grid.central_indices(0.5)
    cols = cols[:: max(1, len(cols) // max_cols)]
    rows = grid.central_indices(0.75)
    rows = rows[:: max(1, len(rows) // max_rows)]
    x = grid.nodes
    vals = np.abs(K.values[np.ix_(rows, cols)])
    r2 = (x[rows][:, None] - x[cols][None, :]) ** 2
    keep = vals > KERNEL_FLOOR
    return np.log(vals[keep]), r2[keep] / t


def fit_gaussian_bound(kernels, alpha: int | None = None) -> GaussianBoundFit:
    """Fit ``log|K| <= log c_n - ((1+alpha)/2) log t - c |x-y|^2 / t``.

    The rate ``c`` is the least-squares Gaussian rate with one intercept per
    time, so a drifting amplitude does not bias it. ``noise`` is the RMS of
    that fit. For each t the smallest admissible constant at rate ``c`` is
    recorded in ``envelope``; ``c_n`` is the largest of them, ``margin`` their
    spread and ``residual`` the worst excess over the pooled least-squares
    constant. The bound fails when no positive rate fits, or when the
    constants drift by more than ten times the noise (and by more than a
    factor 2); otherwise it holds.

    Samples use columns in the central half of the grid and rows in the
    central three quarters, keeping only ``|K| > 1e-14``.
    """
    kernels = sorted(kernels, key=lambda p: p[0])
    if alpha is None:
        alpha = kernels[0][1].alpha
    if any(K.alpha != alpha for _, K in kernels) or len({K.grid for _, K in kernels}) != 1:
        raise ValueError("kernels must share grid and derivative order")
    ts = np.array([t for t, _ in kernels])
    if ts.max() / ts.min() < 100 * (1 - 1e-9):
        raise InvalidRangeError("t values must span at least two decades")

    power = 0.5 * (1 + alpha)
    ys, zs, tid = [], [], []
    for i, (t, K) in enumerate(kernels):
        logk, z = _bound_samples(K, t)
        ys.append(logk + power * math.log(t))
        zs.append(z)
        tid.append(np.full(len(z), i))
    y = np.concatenate(ys)
    z = np.concatenate(zs)
    tid = np.concatenate(tid)
    present = np.unique(tid)
    if len(y) < len(present) + 2:
        raise DegenerateFitError("all kernel values fall below the fitting floor")

    B = np.column_stack([-z] + [(tid == i).astype(float) for i in present])
    coef, *_ = np.linalg.lstsq(B, y, rcond=None)
    c = float(coef[0])
    noise = float(np.sqrt(np.mean((y - B @ coef) ** 2)))

    level = y + c * z
    env = {float(ts[i]): float(level[tid == i].max()) for i in present}
    peaks = np.array(list(env.values()))
    margin = float(peaks.max() - peaks.min())
    residual = float(level.max() - level.mean())
    holds = bool(c > 0 and not (margin > 10 * noise and margin > math.log(2)))
    return GaussianBoundFit(
        c_n=float(math.exp(peaks.max())),
        c=c,
        alpha=int(alpha),
        t_range=(float(ts.min()), float(ts.max())),
        residual=residual,
        holds=holds,
        margin=margin,
        noise=noise,
        envelope=env,
    )


def semigroup_moments(kernel: KernelMatrix, t: float, s: float, columns=None, floor: float = KERNEL_FLOOR) -> tuple[float, float]:
    """``(max_y int K(x,y)^2 dx, max_y int |K(x,y)| e^{s|x-y|} dx)``.

    ``columns`` defaults to the central half of the grid. The exponential
    moment is accumulated in log space. Entries below ``floor`` times their
    column maximum are round-off of the eigen-sum and are dropped, since
    e^{s|x-y|} would otherwise amplify them; pass ``floor=0`` for exact
    kernels.
    """
    _check_time(t)
    if s < 0:
        raise InvalidRangeError("s must be non-negative")
    grid = kernel.grid
    cols = grid.central_indices(0.5) if columns is None else np.atleast_1d(columns)
    Kc = np.abs(kernel.values[:, cols])
    Kc = np.where(Kc >= floor * Kc.max(axis=0), Kc, 0.0)
    h = grid.h
    m2 = float(np.max(h * np.sum(Kc**2, axis=0)))
    r = np.abs(grid.nodes[:, None] - grid.nodes[cols][None, :])
    with np.errstate(divide="ignore"):
        logk = np.log(Kc)
    m_exp = float(np.exp(np.max(logsumexp(logk + s * r, axis=0)) + math.log(h)))
    return m2, m_exp
