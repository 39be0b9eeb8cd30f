"""Spectral multipliers phi(H) and the weighted-norm estimates behind them.

Two routes to Phi(2^{-j} H) are provided: the direct eigen sum, and the
Fourier series of g(y) = Phi(-log y)/y on [0, 2 pi] evaluated on the
semigroup L_j = exp(-2^{-j} H),

    Phi(2^{-j} H) = sum_k ghat(k) exp(i k L_j) L_j.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import SpectralRangeError, SupportViolationError, TruncationWarning
from .grid import SpectralDecomposition
from .kernels import KernelMatrix
from .profiles import CutoffProfile

TWO_PI = 2 * math.pi
SERIES_SAMPLES = 4096
SPECTRAL_MARGIN = 0.05
TAIL_TOLERANCE = 1e-6
SOBOLEV_DELTA = 0.5


def multiplier_eigen(decomp: SpectralDecomposition, phi, label: str = "") -> KernelMatrix:
    """Kernel ``sum_m phi(lambda_m) u_m(x) u_m(y)``."""
    w = np.asarray(phi(decomp.eigenvalues))
    if w.shape != decomp.eigenvalues.shape:
        w = np.broadcast_to(w, decomp.eigenvalues.shape)
    K = decomp.kernel_values(w)
    resid = 0.0
    if np.iscomplexobj(K):
        resid = float(np.max(np.abs(K.imag)))
    return KernelMatrix(decomp.grid, K, 0, label, resid)


def multiplier_column(decomp: SpectralDecomposition, phi, y_index) -> np.ndarray:
    w = np.asarray(phi(decomp.eigenvalues))
    return decomp.kernel_columns(np.broadcast_to(w, decomp.eigenvalues.shape), np.atleast_1d(y_index))


def series_coefficients(profile: CutoffProfile, n_samples: int = SERIES_SAMPLES):
    """Fourier coefficients ``ghat(k) = (2 pi)^{-1} int_0^{2 pi} g(y) e^{-iky} dy``.

    Returns ``(k, ghat)`` in FFT order, k in ``[-n/2, n/2)``.
    """
    y = np.arange(n_samples) * (TWO_PI / n_samples)
    g = np.zeros(n_samples)
    pos = y > 0
    g[pos] = profile(-np.log(y[pos])) / y[pos]
    k = np.fft.fftfreq(n_samples, 1.0 / n_samples)
    return k, np.fft.fft(g) / n_samples


def series_spectral_values(mu: np.ndarray, k: np.ndarray, ghat: np.ndarray, k_trunc: int) -> np.ndarray:
    """``sum_{|k| <= k_trunc} ghat(k) exp(i k mu) mu``."""
    sel = np.abs(k) <= k_trunc
    kk, gg = k[sel], ghat[sel]
    out = np.zeros(mu.shape, complex)
    for start in range(0, len(mu), 2048):
        m = mu[start : start + 2048]
        out[start : start + 2048] = np.exp(1j * np.outer(m, kk)) @ gg * m
    return out


def check_series_range(decomp: SpectralDecomposition, j: int) -> None:
    lowest = 2.0 ** (-j) * float(decomp.eigenvalues.min())
    floor = -math.log(TWO_PI) + SPECTRAL_MARGIN
    if not lowest > floor:
        raise SpectralRangeError(
            f"min spectrum of 2^-j H is {lowest:.4g} <= {floor:.4g}: "
            "exp(-2^-j H) leaves [0, 2 pi] and the periodized series aliases"
        )


def hebisch_multiplier(decomp: SpectralDecomposition, profile: CutoffProfile, j: int, k_trunc: int, n_samples: int = SERIES_SAMPLES) -> KernelMatrix:
    lo, hi = profile.support
    if lo < -1 or hi > 1:
        raise SupportViolationError("profile must be supported in [-1, 1]")
    check_series_range(decomp, j)
    k, ghat = series_coefficients(profile, n_samples)
    tail = float(np.sum(np.abs(ghat[np.abs(k) > k_trunc])))
    if tail > TAIL_TOLERANCE:
        warnings.warn(f"series tail beyond |k|={k_trunc} is {tail:.2e}", TruncationWarning, stacklevel=2)
    mu = np.exp(-(2.0 ** (-j)) * decomp.eigenvalues)
    vals = series_spectral_values(mu, k, ghat, k_trunc)
    K = decomp.kernel_values(vals)
    return KernelMatrix(decomp.grid, K.real, 0, f"series j={j} K={k_trunc}", float(np.max(np.abs(K.imag))))


def continuous_ft(samples: np.ndarray, dx: float, pad_to: int | None = None):
    """``(xi, fhat)`` with ``fhat(xi) ~ int f(x) e^{-i x xi} dx`` (up to a phase)."""
    n = len(samples)
    m = pad_to or 1 << int(math.ceil(math.log2(8 * n)))
    fhat = np.fft.fft(samples, m) * dx
    xi = TWO_PI * np.fft.fftfreq(m, dx)
    return xi, fhat


def sobolev_norm(samples: np.ndarray, dx: float, s: float) -> float:
    """``||(1 - d^2/dx^2)^{s/2} f||_{L^2}`` of a compactly supported sample vector."""
    xi, fhat = continuous_ft(samples, dx)
    dxi = abs(xi[1] - xi[0])
    return float(np.sqrt(np.sum((1 + xi**2) ** s * np.abs(fhat) ** 2) * dxi / TWO_PI))


def profile_sobolev_norm(profile: CutoffProfile, s: float, n: int = 8193) -> float:
    lo, hi = profile.support
    w = hi - lo
    x = np.linspace(lo - 0.05 * w, hi + 0.05 * w, n)
    return sobolev_norm(profile(x), x[1] - x[0], s)


def periodic_sobolev_check(g: np.ndarray, T: float, s: float, tol: float = 1e-12) -> tuple[float, float]:
    """Compare ``sqrt(T) ||ghat||_{l^2_s}`` with ``||g||_{H^s}``.

    ``g`` holds samples at ``x_i = i T / n``, i = 0..n-1, of a function
    supported inside (0, T); ``ghat(n)`` are its Fourier coefficients over
    [0, T] and the weight is ``<n/T> = 1 + |n|/T``.
    """
    g = np.asarray(g, float)
    n = len(g)
    if abs(g[0]) > tol or abs(g[-1]) > tol:
        raise SupportViolationError("g must vanish at both ends of [0, T]")
    if not np.any(g):
        return 0.0, 0.0
    ghat = np.fft.fft(g) / n
    freq = np.fft.fftfreq(n, 1.0 / n)
    lhs = math.sqrt(T) * math.sqrt(float(np.sum(np.abs(ghat) ** 2 * (1 + np.abs(freq) / T) ** (2 * s))))
    rhs = sobolev_norm(g, T / n, s)
    return lhs, rhs


@dataclass(frozen=True)
class WeightSpec:
    """Weight ``w(x, y) = exp(beta * s * r) * (1 + s * r)^a`` with r = |x - y|.

    ``s`` is the dyadic scale 2^{j/2} (1 for the unscaled weights).
    """

    form: str = "polynomial"
    a: float = 0.0
    beta: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if self.form not in ("polynomial", "exp_poly"):
            raise ValueError(f"unknown weight form {self.form!r}")
        if self.form == "polynomial" and self.beta:
            raise ValueError("polynomial weights have beta = 0")
        if self.a < 0 or self.beta < 0:
            raise ValueError("weight parameters must be non-negative")

    @classmethod
    def polynomial(cls, a, scale=1.0):
        return cls("polynomial", float(a), 0.0, float(scale))

    @classmethod
    def exp_poly(cls, beta, a, scale=1.0):
        return cls("exp_poly", float(a), float(beta), float(scale))

    @classmethod
    def dyadic(cls, j, a, beta=0.0):
        form = "exp_poly" if beta else "polynomial"
        return cls(form, float(a), float(beta), 2.0 ** (j / 2))

    def log_weight(self, r):
        sr = self.scale * np.abs(r)
        return self.beta * sr + self.a * np.log1p(sr)

    def __call__(self, x, y):
        return np.exp(self.log_weight(np.subtract(x, y)))


def _columns(grid, columns):
    if columns is None or (isinstance(columns, str) and columns == "central"):
        return grid.central_indices(0.5)
    if isinstance(columns, str) and columns == "all":
        return np.arange(grid.n_points)
    return np.atleast_1d(columns)


def weighted_column_sums(columns: np.ndarray, grid, cols, w: WeightSpec) -> np.ndarray:
    """``h * sum_x |K(x, y)| w(x, y)`` for each y in cols, in log space.

    ``columns[:, i]`` holds the kernel column at node ``cols[i]``.
    """
    x = grid.nodes
    Kc = np.abs(columns)
    with np.errstate(divide="ignore"):
        logk = np.log(Kc)
    logw = w.log_weight(x[:, None] - x[cols][None, :])
    return np.exp(logsumexp(logk + logw, axis=0) + math.log(grid.h))


def weighted_kernel_norm(K: KernelMatrix, w: WeightSpec, columns=None) -> float:
    """``sup_y int |K(x, y)| w(x, y) dx`` with y over ``columns``.

    ``columns`` is "central" (default: the central half, away from the
    walls), "all", or explicit node indices.
    """
    cols = _columns(K.grid, columns)
    return float(np.max(weighted_column_sums(K.values[:, cols], K.grid, cols, w)))


def duality_column_bound(decomp: SpectralDecomposition, rho, nu, y_index) -> tuple[float, float]:
    """``(||(rho nu)(H)(., y)||_2, max|rho| * ||nu(H)(., y)||_2)``."""
    lam = decomp.eigenvalues
    r = np.broadcast_to(np.asarray(rho(lam)), lam.shape)
    v = np.broadcast_to(np.asarray(nu(lam)), lam.shape)
    # column y of f(H) is sum_m f_m u_m(y) u_m, so by h-orthonormality
    # its squared L^2 norm is sum_m |f_m u_m(y)|^2
    uy = decomp.eigenvectors[y_index, :]
    lhs = math.sqrt(float(np.sum(np.abs(r * v * uy) ** 2)))
    col_nu = math.sqrt(float(np.sum(np.abs(v * uy) ** 2)))
    return lhs, float(np.max(np.abs(r))) * col_nu


def oscillatory_weighted_bound(decomp: SpectralDecomposition, j: int, k: float, a: float, columns=None) -> float:
    """``sup_y int |(e^{ik L_j} L_j)(x, y)| (1 + 2^{j/2}|x - y|)^a dx``, L_j = e^{-2^{-j} H}."""
    mu = np.exp(-(2.0 ** (-j)) * decomp.eigenvalues)
    cols = _columns(decomp.grid, columns)
    vals = decomp.kernel_columns(np.exp(1j * k * mu) * mu, cols)
    return float(np.max(weighted_column_sums(vals, decomp.grid, cols, WeightSpec.dyadic(j, a))))


def weighted_L1_multiplier(decomp: SpectralDecomposition, profile: CutoffProfile, j: int, N: float, columns=None, delta: float = SOBOLEV_DELTA) -> tuple[float, float]:
    """``(sup_y ||Phi(2^{-j}H)(., y) <2^{j/2}(. - y)>^N||_{L^1}, ||Phi||_{H^s})``, s = 1 + N + delta."""
    lo, hi = profile.support
    if lo < -10 or hi > 10:
        raise SupportViolationError("profile must be supported in [-10, 10]")
    s = 1.0 + N + delta
    sob = profile_sobolev_norm(profile, s)
    if sob == 0.0:
        return 0.0, 0.0
    cols = _columns(decomp.grid, columns)
    vals = decomp.kernel_columns(profile(2.0 ** (-j) * decomp.eigenvalues), cols)
    lhs = float(np.max(weighted_column_sums(vals, decomp.grid, cols, WeightSpec.dyadic(j, N))))
    return lhs, sob


def write_ratio_table(path, rows) -> None:
    """Rows of ``(j, k_or_N, value, bound, ratio)``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["j", "k_or_N", "value", "bound", "ratio"])
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])
