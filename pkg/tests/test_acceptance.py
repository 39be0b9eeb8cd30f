"""Acceptance criteria 1-9 at their stated tolerances and runtime limits.

Each criterion prints one line, ``PASS criterion N: ...`` or
``FAIL criterion N: ...``, with the measured numbers and wall time. Run
with pytest, or directly as ``python3 tests/test_acceptance.py``.
"""

from __future__ import annotations

import math
import time

import numpy as np
import pytest

from speclab.decay import classify_trend, decay_sweep, grid_source, littlewood_paley_ratio, soliton_source
from speclab.grid import PotentialSpec, build_grid, decompose
from speclab.kernels import KernelMatrix
from speclab.multipliers import (
    WeightSpec,
    duality_column_bound,
    hebisch_multiplier,
    multiplier_eigen,
    oscillatory_weighted_bound,
    periodic_sobolev_check,
    weighted_kernel_norm,
)
from speclab.profiles import bump_profile, make_dyadic_family, semigroup_profile
from speclab.semigroup import fit_gaussian_bound, free_heat_kernel, heat_kernel_eigen, heat_kernel_feynman_kac
from speclab.soliton import fourier_identity_check

LIMITS = {1: 60, 2: 120, 3: 120, 4: 300, 5: 180, 6: 300, 7: 300, 8: 180, 9: 120}


def criterion_1():
    """Free heat kernel vs (4 pi t)^{-1/2} e^{-|x-y|^2/4t}; fitted rate within 10% of 1/4."""
    d = decompose(build_grid(-20, 20, 4096), PotentialSpec.free())
    g = d.grid
    x = g.nodes
    # |y| <= 5 keeps |x - y| <= 5 sqrt(4) at least 5 from the Dirichlet walls
    cols = g.central_indices(0.25)[::8]
    worst = 0.0
    for t in (0.25, 1.0, 4.0):
        K = d.kernel_columns(np.exp(-t * d.eigenvalues), cols)
        exact = free_heat_kernel(x[:, None], x[cols][None, :], t)
        near = np.abs(x[:, None] - x[cols][None, :]) <= 5 * math.sqrt(t)
        worst = max(worst, float(np.max(np.abs(K - exact)[near] / exact[near])))
    dfit = decompose(build_grid(-20, 20, 2048), PotentialSpec.free())
    fit = fit_gaussian_bound([(t, heat_kernel_eigen(dfit, t)) for t in (0.1, 1.0, 10.0)], 0)
    ok = worst <= 1e-3 and abs(fit.c - 0.25) <= 0.025 and fit.holds
    return ok, f"max relative error {worst:.2e} (|x-y| <= 5 sqrt t), fitted c = {fit.c:.4f}, holds={fit.holds}"


def criterion_2():
    """Grid eigenvalues below -1e-2 reproduce {-m^2} for nu = 1, 2."""
    parts, ok = [], True
    for nu in (1, 2):
        d = decompose(build_grid(-20, 20, 2048), PotentialSpec.poschl_teller(nu))
        bound = np.sort(d.bound_state_energies())
        target = -np.arange(nu, 0, -1, dtype=float) ** 2
        err = float(np.max(np.abs(bound - target))) if len(bound) == nu else math.inf
        ok &= err <= 1e-3
        parts.append(f"nu={nu}: {np.round(bound, 5).tolist()} (err {err:.1e})")
    return ok, "; ".join(parts)


def criterion_3():
    """Semigroup Fourier series vs eigen multiplier at k_trunc = 256, j = 2, 3, 4."""
    prof = semigroup_profile()
    worst = {}
    for label, spec in (("V=0", PotentialSpec.free()), ("nu=1", PotentialSpec.poschl_teller(1))):
        d = decompose(build_grid(-20, 20, 2048), spec)
        errs = []
        for j in (2, 3, 4):
            exact = multiplier_eigen(d, lambda lam: prof(2.0 ** (-j) * lam))
            series = hebisch_multiplier(d, prof, j, 256)
            errs.append(float(np.max(np.abs(series.values - exact.values))))
        worst[label] = max(errs)
    ok = max(worst.values()) <= 1e-6
    return ok, ", ".join(f"{k}: sup error {v:.2e}" for k, v in worst.items())


def criterion_4():
    """V = 0: S_j(N) varies by less than a factor 3 over j = -6..6 for alpha 0, 1 and N <= 4."""
    fam = make_dyadic_family("inhomogeneous", -6, 6)
    src = grid_source(PotentialSpec.free(), fam)
    spread = {}
    for alpha in (0, 1):
        rep = decay_sweep(src, fam.kind, fam.j_range, [0, 1, 2, 3, 4], alpha)
        for N in rep.N_values:
            _, S = rep.series(N)
            spread[(alpha, N)] = float(S.max() / S.min())
    worst = max(spread, key=spread.get)
    ok = spread[worst] < 3 and all(math.isfinite(v) for v in spread.values())
    return ok, f"largest max/min = {spread[worst]:.3f} at alpha={worst[0]}, N={worst[1]}"


def criterion_5():
    """Oscillatory weighted norms over (1+|k|)^{1/2+a} bounded by one constant."""
    d = decompose(build_grid(-40, 40, 1024), PotentialSpec.free())
    cols = d.grid.central_indices(0.5)[::8]
    ks = [0, 1, 2, 4, 8, 16, 32, 64]
    constant, growing = 0.0, []
    for j in (-2, 0, 2):
        for a in (0, 2):
            ratios = [oscillatory_weighted_bound(d, j, k, a, cols) / (1 + k) ** (0.5 + a) for k in ks]
            constant = max(constant, max(ratios))
            if classify_trend(range(len(ks)), ratios)["verdict"] == "diverges toward +inf":
                growing.append((j, a))
    ok = math.isfinite(constant) and not growing
    return ok, f"constant = {constant:.4f}; ratio sequences growing in k: {growing or 'none'}"


_SOLITON_CACHE: dict = {}


def _soliton_report():
    if "rep" not in _SOLITON_CACHE:
        fam = make_dyadic_family("inhomogeneous", -8, 8, bump_profile())
        _SOLITON_CACHE["rep"] = decay_sweep(soliton_source(1, fam), fam.kind, fam.j_range, [0, 1, 2, 3, 4], 0)
    return _SOLITON_CACHE["rep"]


def criterion_6():
    """(a) j <= 0 bounded for N <= 4; (b) j >= 1: N = 1 bounded, N = 2 grows >= 1.3 per j over the last 4."""
    rep = _soliton_report()
    neg = list(range(-8, 1))
    pos = list(range(1, 9))
    a_verdicts = {N: rep.trend(N, neg)["verdict"] for N in rep.N_values}
    ok_a = all(v == "bounded" for v in a_verdicts.values())
    n1 = rep.trend(1, pos)["verdict"]
    _, s2 = rep.series(2, pos)
    steps = s2[-3:] / s2[-4:-1]
    ok_b = n1 == "bounded" and bool(np.all(steps >= 1.3))
    detail = (
        f"(a) {'ok' if ok_a else 'FAIL'}: j<=0 max/median "
        f"{max(rep.trend(N, neg)['max_over_median'] for N in rep.N_values):.2f}; "
        f"(b) {'ok' if ok_b else 'FAIL'}: N=1 {n1}, N=2 ratios over j=5..8 {np.round(steps, 3).tolist()} (need >= 1.3)"
    )
    return ok_a and ok_b, detail


def criterion_7():
    """Annulus family, alpha = 1, N = 2: grows as j -> -inf, within factor 3 for j = 0..8."""
    fam = make_dyadic_family("annulus", -8, 8, bump_profile())
    rep = decay_sweep(soliton_source(1, fam), fam.kind, fam.j_range, [2], 1)
    _, neg = rep.series(2, range(-8, 0))
    _, pos = rep.series(2, range(0, 9))
    mono = bool(np.all(np.diff(neg) < 0))
    spread = float(pos.max() / pos.min())
    ok = mono and spread <= 3
    return ok, (
        f"j=-8..-1 strictly increasing toward -inf: {mono} ({neg[0]:.1f} at j=-8 vs {neg[-1]:.2f} at j=-1); "
        f"j=0..8 max/min {spread:.3f}"
    )


def criterion_8():
    """Feynman-Kac vs eigen heat kernel for nu = 1, t = 1, 1e5 paths: >= 4 of 5 cells within 3 stderr."""
    spec = PotentialSpec.poschl_teller(1)
    d = decompose(build_grid(-20, 20, 2048), spec)
    g = d.grid
    w = np.exp(-d.eigenvalues)
    z = []
    for i, (x, y) in enumerate([(0.0, 0.0), (0.5, -0.5), (1.0, 0.0), (-1.5, 0.5), (2.0, 2.0)]):
        ix, iy = g.index_of(x), g.index_of(y)
        exact = float(d.kernel_columns(w, [iy])[ix, 0])
        est, se = heat_kernel_feynman_kac(spec, 1.0, g.nodes[ix], g.nodes[iy], 100_000, seed=i)
        z.append(abs(est - exact) / se)
    hits = sum(v <= 3 for v in z)
    return hits >= 4, f"{hits}/5 cells within 3 stderr, |z| = {np.round(z, 2).tolist()}"


def criterion_9():
    """Submultiplicativity, duality, Fourier identities, Parseval and Littlewood-Paley at p = 2."""
    rng = np.random.default_rng(2024)
    g = build_grid(-5, 5, 64)
    weights = [WeightSpec.polynomial(2), WeightSpec.exp_poly(0.5, 1.0), WeightSpec.dyadic(2, 3, 0.2)]
    sub_viol = 0
    for trial in range(100):
        A, B = (rng.standard_normal((64, 64)) * (rng.random((64, 64)) < 0.1) for _ in range(2))
        KA, KB = KernelMatrix(g, A), KernelMatrix(g, B)
        w = weights[trial % 3]
        lhs = weighted_kernel_norm(KA.compose(KB), w, "all")
        sub_viol += lhs > weighted_kernel_norm(KA, w, "all") * weighted_kernel_norm(KB, w, "all") * (1 + 1e-12)

    d = decompose(build_grid(-20, 20, 512), PotentialSpec.poschl_teller(1))
    dual_viol = 0
    for _ in range(50):
        p, q = rng.standard_normal(4), rng.standard_normal(4)
        y = int(rng.integers(1, d.grid.n_points - 1))
        lhs, rhs = duality_column_bound(
            d, lambda lam: np.polyval(p, np.tanh(lam / 10)), lambda lam: np.polyval(q, np.tanh(lam / 10)), y
        )
        dual_viol += lhs > rhs * (1 + 1e-12)
    lhs, rhs = duality_column_bound(d, lambda lam: np.exp(1j * lam), lambda lam: np.exp(-0.5 * lam), 256)
    unimodular = abs(lhs - rhs) / rhs

    four = fourier_identity_check()
    four_err = max(four["max_error_even"], four["max_error_odd"])

    T = 2 * math.pi
    xs = np.arange(4096) * T / 4096
    l0, r0 = periodic_sobolev_check(bump_profile()((xs - T / 2) / (0.45 * T)), T, 0.0)
    parseval = abs(l0 / r0 - 1)

    df = decompose(build_grid(-20, 20, 512), PotentialSpec.free())
    fam = make_dyadic_family("annulus", -10, 6, partition="quadratic")
    occupied = df.eigenvalues <= 16
    lp = 0.0
    for _ in range(10):
        f = df.synthesize(np.where(occupied, rng.standard_normal(len(occupied)), 0.0))
        lp = max(lp, abs(littlewood_paley_ratio(df, fam, f, 2.0) - 1))

    ok = (
        sub_viol == 0
        and dual_viol == 0
        and unimodular <= 1e-10
        and four_err <= 1e-6
        and parseval <= 1e-6
        and lp <= 1e-6
    )
    return ok, (
        f"submultiplicativity violations {sub_viol}/100, duality violations {dual_viol}/50, "
        f"unimodular gap {unimodular:.1e}, Fourier error {four_err:.1e}, "
        f"Parseval gap {parseval:.1e}, LP p=2 gap {lp:.1e}"
    )


CRITERIA = {
    1: criterion_1,
    2: criterion_2,
    3: criterion_3,
    4: criterion_4,
    5: criterion_5,
    6: criterion_6,
    7: criterion_7,
    8: criterion_8,
    9: criterion_9,
}


def evaluate(n: int) -> tuple[bool, str]:
    start = time.perf_counter()
    ok, detail = CRITERIA[n]()
    elapsed = time.perf_counter() - start
    in_time = elapsed <= LIMITS[n]
    status = "PASS" if ok and in_time else "FAIL"
    timing = f"{elapsed:.1f} s of {LIMITS[n]} s" + ("" if in_time else " (over the limit)")
    return ok and in_time, f"{status} criterion {n}: {detail} [{timing}]"


@pytest.mark.parametrize("n", sorted(CRITERIA))
def test_criterion(n, capsys):
    ok, line = evaluate(n)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


if __name__ == "__main__":
    results = [evaluate(n) for n in sorted(CRITERIA)]
    for _, line in results:
        print(line)
    raise SystemExit(0 if all(ok for ok, _ in results) else 1)
