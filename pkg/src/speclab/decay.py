"""Decay envelopes, dyadic decay sweeps and the Littlewood-Paley check.

The sweep statistic for a dyadic family is

    S_j(N) = sup_{x,y} |d_x^alpha K_j(x, y)| 2^{-j(1+alpha)/2} (1 + 2^{j/2}|x-y|)^N,

which stays bounded in j exactly when the kernel decays at order N on the
natural scale 2^{-j/2}.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .errors import CoverageWarning, InsufficientRangeError, InvalidRangeError, QuadratureWarning, SpeclabError
from .grid import PotentialSpec, SpectralDecomposition, decompose, scaled_grid
from .profiles import DyadicFamily
from .semigroup import row_gradient
from .soliton import ac_kernel_matrix

BIN_RATIO = math.sqrt(2.0)
MIN_BINS = 8
RELATIVE_FLOOR = 1e-12
# tail slope of log(max|K| (1+u)^N) against log(1+u)
HOLD_SLOPE = 0.1
FAIL_SLOPE = 0.5

BOUNDED_FACTOR = 3.0
MIN_RUN = 4
# a terminal monotone run growing at least this fast per unit j diverges even
# when it is too short to clear the 3x median test
GROWTH_THRESHOLD = 2.0 ** (1.0 / 6.0)

SOLITON_WINDOW = 12.0
LP_EXPONENTS = (1.5, 2.0, 3.0, 4.0)


# ---------------------------------------------------------------------------
# envelope fitting


@dataclass
class DecayFit:
    scale: float
    N_est: float
    c_est: float
    residual: float
    radii_bins: np.ndarray
    verdict: str
    N_tested: float | None = None
    tail_slope: float | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["radii_bins"] = [float(v) for v in self.radii_bins]
        return d


def _bin_maxima(u: np.ndarray, v: np.ndarray):
    """Geometric bins of ratio sqrt 2 in 1 + u.

    Returns (bin centers, per-bin maxima, the u at which each maximum sits).
    """
    w = np.log1p(u) / math.log(BIN_RATIO)
    idx = np.floor(w).astype(int)
    present = np.unique(idx)
    maxima = np.empty(len(present))
    where = np.empty(len(present))
    for i, b in enumerate(present):
        sel = np.flatnonzero(idx == b)
        k = sel[np.argmax(v[sel])]
        maxima[i], where[i] = v[k], u[k]
    centers = BIN_RATIO ** (present + 0.5) - 1.0
    return centers, maxima, where


def fit_decay_envelope(r, values, scale: float = 1.0, N: float | None = None) -> DecayFit:
    """Fit ``max|K| ~ c (1 + scale r)^{-N}`` to kernel samples.

    Samples are binned geometrically (ratio sqrt 2) in ``1 + scale*r``; the
    per-bin maxima, placed at the radius where they occur, are fitted by
    least squares in log-log. Bins whose maximum
    lies below 1e-12 of the overall maximum count as decayed and are left out
    of the fit.

    With ``N`` given, the verdict compares the envelope against order N: the
    weighted maxima ``max|K| (1+u)^N`` must not grow over the outer half of
    the bins. A tail slope up to 0.1 holds, 0.5 or more fails, anything in
    between is inconclusive. Kernels that drop below the floor inside the
    sampled range decay faster than any power and hold.
    """
    r = np.abs(np.asarray(r, float)).ravel()
    v = np.abs(np.asarray(values, float)).ravel()
    if r.shape != v.shape:
        raise ValueError("r and values must have the same size")
    if scale <= 0:
        raise InvalidRangeError("scale must be positive")
    u = scale * r
    centers, maxima, where = _bin_maxima(u, v)
    if len(centers) < MIN_BINS:
        raise InsufficientRangeError(f"only {len(centers)} nonempty radial bins, need {MIN_BINS}")

    top = maxima.max()
    if top <= 0:
        return DecayFit(scale, math.inf, 0.0, 0.0, centers, "holds", N, -math.inf)
    alive = maxima > RELATIVE_FLOOR * top
    lx = np.log1p(where[alive])
    ly = np.log(maxima[alive])
    if alive.sum() >= 2:
        slope, icpt = np.polyfit(lx, ly, 1)
        residual = float(np.sqrt(np.mean((ly - (slope * lx + icpt)) ** 2)))
    else:
        slope, icpt, residual = -math.inf, float(ly[0]), 0.0
    fit = DecayFit(scale, float(-slope), float(math.exp(icpt)), residual, centers, "inconclusive", N)

    if N is None:
        return fit
    if not alive[-1]:
        fit.verdict, fit.tail_slope = "holds", -math.inf
        return fit
    tail = slice(len(lx) // 2, None)
    if len(lx[tail]) < 2:
        return fit
    t_slope = float(np.polyfit(lx[tail], ly[tail] + N * lx[tail], 1)[0])
    fit.tail_slope = t_slope
    if t_slope <= HOLD_SLOPE:
        fit.verdict = "holds"
    elif t_slope >= FAIL_SLOPE:
        fit.verdict = "fails"
    return fit


# ---------------------------------------------------------------------------
# sweeps


@dataclass
class KernelSamples:
    """Values of d_x^alpha K_j at points (x, y), any matching shapes."""

    x: np.ndarray
    y: np.ndarray
    values: np.ndarray
    converged: bool = True

    @property
    def r(self) -> np.ndarray:
        return np.abs(np.asarray(self.x) - np.asarray(self.y))


def decay_statistic(samples: KernelSamples, j: int, alpha: int, N) -> np.ndarray:
    """S_j(N) for each N in ``N``."""
    s = 2.0 ** (j / 2)
    v = np.abs(np.ravel(samples.values)) * s ** (-(1 + alpha))
    logw = np.log1p(s * np.ravel(np.broadcast_to(samples.r, np.shape(samples.values))))
    with np.errstate(divide="ignore"):
        logv = np.log(v)
    return np.array([float(np.exp(np.max(logv + n * logw))) for n in np.atleast_1d(N)])


def _terminal_run(seq: np.ndarray) -> int:
    """Length of the strictly increasing run ending at the last entry."""
    n = 1
    while n < len(seq) and seq[-n - 1] < seq[-n]:
        n += 1
    return n


def classify_trend(js, values) -> dict:
    """Classify S_j over j as bounded or diverging toward +inf or -inf.

    Bounded when max <= 3 * median and no terminal monotone run of at least
    four values grows by 2^{1/6} or more per unit j (measured over its last
    four values). A divergence is labelled with the end of the j-range it
    heads to and its growth factor per unit j.
    """
    js = np.asarray(js)
    v = np.asarray(values, float)
    ok = np.isfinite(v)
    js, v = js[ok], v[ok]
    out = {"verdict": "bounded", "growth_rate": None, "max_over_median": None}
    if len(v) == 0:
        out["verdict"] = "undetermined"
        return out
    ratio = float(v.max() / np.median(v)) if np.median(v) > 0 else math.inf
    out["max_over_median"] = ratio

    best = None
    for direction, seq in (("+inf", v), ("-inf", v[::-1])):
        run = _terminal_run(seq)
        if run < MIN_RUN or seq[-4] <= 0:
            continue
        rate = float((seq[-1] / seq[-4]) ** (1.0 / 3.0))
        if ratio > BOUNDED_FACTOR or rate >= GROWTH_THRESHOLD:
            if best is None or rate > best[1]:
                best = (direction, rate)
    if best is not None:
        out["verdict"] = f"diverges toward {best[0]}"
        out["growth_rate"] = best[1]
    elif ratio > BOUNDED_FACTOR:
        k = int(np.argmax(v))
        direction = "+inf" if k >= len(v) / 2 else "-inf"
        slope = np.polyfit(js, np.log(np.maximum(v, 1e-300)), 1)[0]
        out["verdict"] = f"diverges toward {direction}"
        out["growth_rate"] = float(math.exp(abs(slope)))
    return out


@dataclass
class DecayReport:
    family_kind: str
    alpha: int
    j_values: list[int]
    N_values: list[float]
    stats: dict = field(default_factory=dict)  # (j, N) -> S_j(N), NaN on failure
    errors: dict = field(default_factory=dict)  # j -> message
    unconverged: list[int] = field(default_factory=list)

    def series(self, N, js=None) -> tuple[list[int], np.ndarray]:
        js = self.j_values if js is None else [j for j in self.j_values if j in set(js)]
        return js, np.array([self.stats[(j, N)] for j in js])

    def trend(self, N, js=None) -> dict:
        return classify_trend(*self.series(N, js))

    def verdict(self, N) -> str:
        """"holds", "fails for j<0", "fails for j>0" or both, from the two half-sweeps."""
        fails = []
        neg = [j for j in self.j_values if j < 0]
        pos = [j for j in self.j_values if j > 0]
        if len(neg) >= MIN_RUN and self.trend(N, neg)["verdict"] != "bounded":
            fails.append("j<0")
        if len(pos) >= MIN_RUN and self.trend(N, pos)["verdict"] != "bounded":
            fails.append("j>0")
        return "holds" if not fails else "fails for " + " and ".join(fails)

    def to_dict(self) -> dict:
        cells = [
            {"j": j, "N": N, "S": _json_float(self.stats[(j, N)])}
            for j in self.j_values
            for N in self.N_values
        ]
        return {
            "family": self.family_kind,
            "alpha": self.alpha,
            "j_range": [min(self.j_values), max(self.j_values)],
            "N_list": list(self.N_values),
            "cells": cells,
            "trends": {str(N): self.trend(N) for N in self.N_values},
            "verdicts": {str(N): self.verdict(N) for N in self.N_values},
            "errors": {str(j): m for j, m in self.errors.items()},
            "unconverged": list(self.unconverged),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def to_csv(self, path) -> None:
        """Long format: family, alpha, j, N, S."""
        write_decay_table(path, [self])


def _json_float(v):
    v = float(v)
    return v if math.isfinite(v) else None


def decay_sweep(source: Callable[[int, int], KernelSamples], family_kind: str, j_range, N_list, alpha: int = 0) -> DecayReport:
    """Tabulate S_j(N) over ``j_range`` x ``N_list``.

    ``source(j, alpha)`` supplies kernel samples. A library error raised for
    one j is recorded and its cells set to NaN; the sweep carries on.
    """
    js = [int(j) for j in j_range]
    Ns = sorted(N_list)
    report = DecayReport(family_kind, int(alpha), js, list(Ns))
    for j in js:
        try:
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always", QuadratureWarning)
                samples = source(j, alpha)
            if not samples.converged or any(issubclass(c.category, QuadratureWarning) for c in caught):
                report.unconverged.append(j)
            vals = decay_statistic(samples, j, alpha, Ns)
        except (SpeclabError, ArithmeticError) as exc:
            report.errors[j] = f"{type(exc).__name__}: {exc}"
            vals = np.full(len(Ns), np.nan)
        for N, s in zip(Ns, vals):
            report.stats[(j, N)] = float(s)
    return report


# ---------------------------------------------------------------------------
# kernel sources


def soliton_source(nu: int, family: DyadicFamily, window: float = SOLITON_WINDOW, n_y: int = 25, n_r: int = 481, tol: float = 1e-8):
    """Kernel samples of phi_j(H_nu) E_ac from the k-quadrature.

    Points satisfy |x|, |y| <= window * max(1, 2^{-j/2}): for j < 0 the box
    grows with the kernel's length scale so the weight (1 + 2^{j/2}|x-y|)^N
    is probed over many scale lengths. Since V is even,
    K(-x, -y) = K(x, y), so only y >= 0 is sampled. For each y the x-points
    are y + r with r on a uniform grid over the box plus a fine grid of
    spacing 0.1 * 2^{-j/2} near the diagonal.
    """

    def source(j: int, alpha: int) -> KernelSamples:
        s = 2.0 ** (j / 2)
        L = window * max(1.0, 1.0 / s)
        R = np.unique(np.concatenate([np.linspace(0, 2 * L, n_r), np.linspace(0, 20 / s, 201)]))
        R = R[R <= 2 * L]
        R = np.concatenate([-R[::-1], R[1:]])
        r_min, r_max = family.support(j)
        phi = family.member(j)
        xs_all, ys_all, vals = [], [], []
        converged = True
        for y in np.linspace(0.0, L, n_y):
            xs = y + R
            xs = xs[np.abs(xs) <= L]
            ac = ac_kernel_matrix(nu, phi, xs, [y], alpha, k_max=math.sqrt(r_max), k_min=math.sqrt(r_min), tol=tol)
            converged &= ac.converged
            xs_all.append(xs)
            ys_all.append(np.full(len(xs), y))
            vals.append(ac.values[:, 0])
        return KernelSamples(np.concatenate(xs_all), np.concatenate(ys_all), np.concatenate(vals), converged)

    return source


def grid_source(potential: PotentialSpec, family: DyadicFamily, half_width: float = 40.0, n_points: int = 1024, n_cols: int = 64):
    """Kernel samples of phi_j(H) on a grid scaled to the length 2^{-j/2}.

    The grid spans ``half_width`` scale lengths each side. Columns are taken
    from the central half and rows from the central three quarters; alpha = 1
    uses the centered difference in x.
    """

    def source(j: int, alpha: int) -> KernelSamples:
        grid = scaled_grid(2.0 ** (j / 2), half_width, n_points)
        decomp = decompose(grid, potential)
        cols = grid.central_indices(0.5)
        cols = cols[:: max(1, len(cols) // n_cols)]
        w = np.asarray(family.member(j)(decomp.eigenvalues), float)
        K = decomp.kernel_columns(w, cols)
        if alpha:
            K = row_gradient(K, grid.h)
        rows = grid.central_indices(0.75)
        x = grid.nodes
        X, Y = np.meshgrid(x[rows], x[cols], indexing="ij")
        return KernelSamples(X, Y, K[rows, :])

    return source


# ---------------------------------------------------------------------------
# Littlewood-Paley


def square_function(decomp: SpectralDecomposition, family: DyadicFamily, f: np.ndarray) -> np.ndarray:
    """``(sum_j |phi_j(H) f|^2)^{1/2}`` on the grid."""
    c = decomp.coefficients(np.asarray(f, float))
    lam = decomp.eigenvalues
    total = np.zeros(decomp.grid.n_points)
    for j in family.j_range:
        total += decomp.synthesize(family(j, lam) * c) ** 2
    return np.sqrt(total)


def lp_norm(f: np.ndarray, h: float, p: float) -> float:
    return float((h * np.sum(np.abs(f) ** p)) ** (1.0 / p))


def littlewood_paley_ratio(decomp: SpectralDecomposition, family: DyadicFamily, f, p: float) -> float:
    """``||(sum_j |phi_j(H) f|^2)^{1/2}||_p / ||f||_p`` with h-weighted norms.

    Warns with CoverageWarning when sum_j phi_j^2 < 1/2 at an eigenvalue that
    carries a nonnegligible part of f.
    """
    if not 1 < p < math.inf:
        raise InvalidRangeError("p must lie strictly between 1 and infinity")
    f = np.asarray(f, float)
    c = decomp.coefficients(f)
    occupied = np.abs(c) > 1e-10 * max(float(np.max(np.abs(c))), 1e-300)
    cover = family.total_squares(decomp.eigenvalues[occupied])
    if cover.size and float(np.min(cover)) < 0.5:
        warnings.warn(
            f"sum of phi_j^2 drops to {float(np.min(cover)):.3g} on the spectrum of f", CoverageWarning, stacklevel=2
        )
    h = decomp.h
    norm_f = lp_norm(f, h, p)
    if norm_f == 0:
        raise InvalidRangeError("f must be nonzero")
    return lp_norm(square_function(decomp, family, f), h, p) / norm_f


def write_decay_table(path, reports) -> None:
    """Concatenate several reports into one long-format CSV."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["family", "alpha", "j", "N", "S"])
        for rep in reports:
            for j in rep.j_values:
                for N in rep.N_values:
                    w.writerow([rep.family_kind, rep.alpha, j, N, repr(float(rep.stats[(j, N)]))])
