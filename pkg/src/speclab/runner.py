"""Execute an ExperimentConfig and assemble report.json, tables and plot data."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig, FamilyParams
from .decay import classify_trend, decay_sweep, grid_source, littlewood_paley_ratio, soliton_source
from .grid import decompose as _decompose
from .multipliers import hebisch_multiplier, multiplier_eigen, oscillatory_weighted_bound
from .profiles import profile_from_dict, semigroup_profile
from .semigroup import fit_gaussian_bound, heat_kernel_eigen, heat_kernel_feynman_kac, heat_kernel_gradient

SUITE_DIR = Path(__file__).with_name("suites")

_DECOMP_CACHE: dict = {}


def decompose(grid, potential):
    """Eigen-solves shared between the checks of a run (one entry kept)."""
    key = (grid, potential)
    if key not in _DECOMP_CACHE:
        _DECOMP_CACHE.clear()
        _DECOMP_CACHE[key] = _decompose(grid, potential)
    return _DECOMP_CACHE[key]


class CheckResult:
    def __init__(self, observed, summary=None, table=None, plot=None):
        self.observed = observed
        self.summary = summary or {}
        self.table = table  # (header, rows)
        self.plot = plot or []  # (series, x, y)


def _clean(v):
    """JSON-safe floats: NaN and inf become None."""
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


# ---------------------------------------------------------------------------
# checks


def run_gaussian_bound(cfg: ExperimentConfig, chk: dict) -> CheckResult:
    decomp = decompose(cfg.grid.build(), cfg.potential_spec())
    ts = chk.get("t", cfg.t_grid)
    observed, summary, rows, plot = {}, {}, [], []
    for alpha in chk.get("alpha", cfg.alpha):
        make = heat_kernel_gradient if alpha else heat_kernel_eigen
        fit = fit_gaussian_bound([(t, make(decomp, t)) for t in ts], alpha)
        observed[str(alpha)] = "holds" if fit.holds else "fails"
        summary[str(alpha)] = {k: fit.to_dict()[k] for k in ("c_n", "c", "residual", "margin", "noise", "holds")}
        rows.append([alpha, fit.c_n, fit.c, fit.residual, fit.margin, fit.noise, fit.holds])
        plot += [(f"alpha={alpha}", t, e) for t, e in fit.envelope.items()]
    return CheckResult(observed, summary, (["alpha", "c_n", "c", "residual", "margin", "noise", "holds"], rows), plot)


def run_decay_sweep(cfg: ExperimentConfig, chk: dict) -> CheckResult:
    fparams = FamilyParams(**chk["family"]) if "family" in chk else cfg.family
    family = fparams.build()
    alpha = int(chk.get("alpha", 0))
    Ns = chk.get("N", cfg.N)
    if chk.get("source", "grid") == "soliton":
        pot = cfg.potential_spec()
        if pot.kind != "poschl_teller":
            raise ValueError("the soliton source needs a poschl_teller potential")
        q = cfg.quadrature
        src = soliton_source(pot.nu, family, n_y=q.n_y, n_r=q.n_r, tol=q.tol)
    else:
        src = grid_source(cfg.potential_spec(), family, chk.get("half_width", 40.0), chk.get("n_points", 1024))
    rep = decay_sweep(src, fparams.kind, family.j_range, Ns, alpha)
    observed = {str(N): rep.verdict(N) for N in rep.N_values}
    summary = {
        "trends": {str(N): rep.trend(N) for N in rep.N_values},
        "stats": {f"{j},{N}": rep.stats[(j, N)] for j in rep.j_values for N in rep.N_values},
        "errors": {str(j): m for j, m in rep.errors.items()},
        "unconverged": rep.unconverged,
    }
    rows = [[fparams.kind, alpha, j, N, rep.stats[(j, N)]] for j in rep.j_values for N in rep.N_values]
    plot = [(f"N={N}", j, rep.stats[(j, N)]) for N in rep.N_values for j in rep.j_values]
    return CheckResult(observed, summary, (["family", "alpha", "j", "N", "S"], rows), plot)


def run_oscillatory_ratio(cfg: ExperimentConfig, chk: dict) -> CheckResult:
    decomp = decompose(cfg.grid.build(), cfg.potential_spec())
    ks = chk.get("k", [0, 1, 2, 4, 8, 16, 32, 64])
    cols = decomp.grid.central_indices(0.5)
    cols = cols[:: max(1, len(cols) // chk.get("n_cols", 64))]
    rows, plot, constants = [], [], {}
    verdict = "holds"
    for j in chk.get("j", [-2, 0, 2]):
        for a in chk.get("a", [0, 2]):
            ratios = []
            for k in ks:
                value = oscillatory_weighted_bound(decomp, j, k, a, cols)
                bound = (1 + abs(k)) ** (0.5 + a)
                ratios.append(value / bound)
                rows.append([j, k, value, bound, value / bound])
                plot.append((f"j={j},a={a}", k, value / bound))
            constants[f"{j},{a}"] = max(ratios)
            # only growth toward large k contradicts the bound
            if classify_trend(range(len(ks)), ratios)["verdict"] == "diverges toward +inf":
                verdict = "fails"
    summary = {"constants": constants, "constant": max(constants.values())}
    return CheckResult(verdict, summary, (["j", "k_or_N", "value", "bound", "ratio"], rows), plot)


def run_feynman_kac(cfg: ExperimentConfig, chk: dict) -> CheckResult:
    grid = cfg.grid.build()
    pot = cfg.potential_spec()
    decomp = decompose(grid, pot)
    t = float(chk.get("t", 1.0))
    mc = cfg.monte_carlo
    w = np.exp(-t * decomp.eigenvalues)
    rows, hits = [], 0
    for i, (x, y) in enumerate(chk["points"]):
        ix, iy = grid.index_of(x), grid.index_of(y)
        xn, yn = grid.nodes[ix], grid.nodes[iy]
        exact = float(decomp.kernel_columns(w, [iy])[ix, 0])
        est, se = heat_kernel_feynman_kac(pot, t, xn, yn, mc.paths, mc.steps, mc.seed + i)
        z = abs(est - exact) / se if se > 0 else (0.0 if est == exact else math.inf)
        hits += z <= 3
        rows.append([xn, yn, est, se, exact, z])
    need = math.ceil(0.8 * len(rows))
    observed = "holds" if hits >= need else "fails"
    summary = {"within_3_stderr": int(hits), "cells": len(rows)}
    return CheckResult(observed, summary, (["x", "y", "monte_carlo", "stderr", "eigen", "z"], rows))


def run_hebisch_series(cfg: ExperimentConfig, chk: dict) -> CheckResult:
    decomp = decompose(cfg.grid.build(), cfg.potential_spec())
    profile = profile_from_dict(chk["profile"]) if "profile" in chk else semigroup_profile()
    k_trunc = int(chk.get("k_trunc", cfg.quadrature.k_trunc))
    tol = float(chk.get("tol", 1e-6))
    rows = []
    for j in chk.get("j", [2, 3, 4]):
        exact = multiplier_eigen(decomp, lambda lam: profile(2.0 ** (-j) * lam))
        series = hebisch_multiplier(decomp, profile, j, k_trunc)
        rows.append([j, k_trunc, float(np.max(np.abs(series.values - exact.values))), series.imag_residual])
    worst = max(r[2] for r in rows)
    return CheckResult("holds" if worst <= tol else "fails", {"max_error": worst}, (["j", "k_trunc", "sup_error", "imag_residual"], rows))


def run_littlewood_paley(cfg: ExperimentConfig, chk: dict) -> CheckResult:
    fparams = FamilyParams(**chk["family"]) if "family" in chk else cfg.family
    family = fparams.build()
    decomp = decompose(cfg.grid.build(), cfg.potential_spec())
    rng = np.random.default_rng(cfg.monte_carlo.seed)
    band = float(chk.get("band", 2.0 ** (fparams.j_range[1] - 1)))
    occupied = np.flatnonzero(decomp.eigenvalues <= band)
    C = float(chk.get("C", 4.0))
    rows, plot = [], []
    worst_p2 = 0.0
    spread = (math.inf, 0.0)
    for n in range(int(chk.get("n_functions", 20))):
        c = np.zeros(len(decomp.eigenvalues))
        c[occupied] = rng.standard_normal(len(occupied))
        f = decomp.synthesize(c)
        for p in chk.get("p", [1.5, 2.0, 3.0, 4.0]):
            ratio = littlewood_paley_ratio(decomp, family, f, p)
            rows.append([n, p, ratio])
            plot.append((f"p={p}", n, ratio))
            if p == 2:
                worst_p2 = max(worst_p2, abs(ratio - 1))
            spread = (min(spread[0], ratio), max(spread[1], ratio))
    ok = worst_p2 <= 1e-6 and spread[0] >= 1 / C and spread[1] <= C
    summary = {"p2_max_deviation": worst_p2, "ratio_min": spread[0], "ratio_max": spread[1]}
    return CheckResult("holds" if ok else "fails", summary, (["function", "p", "ratio"], rows), plot)


RUNNERS = {
    "gaussian_bound": run_gaussian_bound,
    "decay_sweep": run_decay_sweep,
    "oscillatory_ratio": run_oscillatory_ratio,
    "feynman_kac": run_feynman_kac,
    "hebisch_series": run_hebisch_series,
    "littlewood_paley": run_littlewood_paley,
}


# ---------------------------------------------------------------------------
# driver


def _matches(observed, expected) -> bool:
    if expected is None:
        return True
    if isinstance(expected, dict):
        return isinstance(observed, dict) and all(observed.get(str(k)) == v for k, v in expected.items())
    return observed == expected


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def run_config(cfg: ExperimentConfig, out_dir=None, seed_override: int | None = None) -> tuple[dict, bool]:
    """Run every check; return (report, all verdicts matched).

    Writes report.json, tables/<check>.csv and plotdata/<check>.csv when an
    output directory is given (argument or ``cfg.output_dir``).
    """
    if seed_override is not None:
        cfg = replace(cfg, monte_carlo=replace(cfg.monte_carlo, seed=int(seed_override)))
    out_dir = out_dir or cfg.output_dir
    results = []
    all_ok = True
    outputs = {}
    for chk in cfg.checks:
        res = RUNNERS[chk["type"]](cfg, chk)
        expected = chk.get("expect")
        ok = _matches(res.observed, expected)
        all_ok &= ok
        results.append(
            {
                "name": chk["name"],
                "type": chk["type"],
                "observed": res.observed,
                "expected": expected,
                "match": ok,
                "summary": res.summary,
            }
        )
        outputs[chk["name"]] = res
    report = _clean(
        {
            "suite": cfg.name,
            "version": __version__,
            "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "config": cfg.to_dict(),
            "checks": results,
            "all_matched": all_ok,
        }
    )
    if out_dir is not None:
        out = Path(out_dir)
        (out / "tables").mkdir(parents=True, exist_ok=True)
        (out / "plotdata").mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")
        for name, res in outputs.items():
            if res.table is not None:
                _write_csv(out / "tables" / f"{name}.csv", *res.table)
            if res.plot:
                _write_csv(out / "plotdata" / f"{name}.csv", ["series", "x", "y"], res.plot)
    return report, all_ok


def list_suites(directory=None) -> list[tuple[str, str, str]]:
    """(name, description, claim) of every bundled suite, sorted by name."""
    directory = Path(directory) if directory is not None else SUITE_DIR
    if not directory.is_dir():
        return []
    out = []
    for path in sorted(directory.glob("*.json")):
        d = json.loads(path.read_text())
        out.append((d.get("name", path.stem), d.get("description", ""), d.get("claim", "")))
    return out


def resolve_config(ref: str) -> Path:
    """A config path, or the name of a bundled suite."""
    p = Path(ref)
    if p.exists():
        return p
    bundled = SUITE_DIR / f"{ref}.json"
    if bundled.exists():
        return bundled
    return p
