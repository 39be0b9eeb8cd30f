"""Smooth cutoff profiles and dyadic families built from them."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import expit

MAX_DERIVATIVE = 4


def exp_step(u, a: float = 1.0):
    """C^inf step: 0 for u <= 0, 1 for u >= 1, built from exp(-a/u)."""
    u = np.asarray(u, float)
    out = np.where(u >= 1, 1.0, 0.0)
    mid = (u > 0) & (u < 1)
    um = u[mid]
    out[mid] = expit(a / (1 - um) - a / um)
    return out


def _numeric_derivative_bounds(func, lo, hi, kmax=MAX_DERIVATIVE, n=40001):
    x = np.linspace(lo, hi, n)
    h = x[1] - x[0]
    d = func(x)
    bounds = [float(np.max(np.abs(d)))]
    for _ in range(kmax):
        d = np.gradient(d, h, edge_order=2)
        bounds.append(float(np.max(np.abs(d))))
    return bounds


@dataclass(frozen=True)
class CutoffProfile:
    """A compactly supported function on the real line.

    ``name``/``params`` identify the construction so families can be
    serialized; ``func`` is the vectorized evaluator.
    """

    func: Callable[[np.ndarray], np.ndarray]
    support: tuple[float, float]
    smoothness: str = "C^inf"
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def __call__(self, x):
        x = np.asarray(x, float)
        lo, hi = self.support
        inside = (x >= lo) & (x <= hi)
        return np.where(inside, self.func(np.where(inside, x, 0.5 * (lo + hi))), 0.0)

    def samples(self, n: int = 4001, pad: float = 0.25):
        lo, hi = self.support
        w = hi - lo
        x = np.linspace(lo - pad * w, hi + pad * w, n)
        return x, self(x)

    def dilate(self, factor: float) -> "CutoffProfile":
        """``x -> Phi(x / factor)``."""
        lo, hi = self.support
        return CutoffProfile(
            lambda x: self.func(np.asarray(x) / factor),
            (lo * factor, hi * factor),
            self.smoothness,
            self.name,
            {**self.params, "dilation": self.params.get("dilation", 1.0) * factor},
        )

    def to_dict(self) -> dict:
        return {"name": self.name, "params": self.params, "support": list(self.support)}


def bump_profile(a: float = 1.0) -> CutoffProfile:
    """Even C^inf cutoff: 1 on [-1/2, 1/2], 0 off (-1, 1), exp-step in |x|."""

    def f(x):
        return exp_step((1 - np.abs(x)) / 0.5, a)

    return CutoffProfile(f, (-1.0, 1.0), "C^inf", "bump", {"a": a})


def semigroup_profile(a: float = 2.0) -> CutoffProfile:
    """C^inf cutoff, 1 on [-1/2, 1/2], support [-1, 1], with the transitions
    linear in ``y = e^{-x}``.

    Under ``g(y) = Phi(-log y) / y`` each transition becomes a plain
    exp-step in y, which keeps the Fourier coefficients of g small; the
    transition near y = e^{-1} is the narrow one.
    """
    e = math.e
    lo_y, hi_y = math.exp(-1.0), math.exp(-0.5)
    lo_n, hi_n = math.exp(0.5), e

    def f(x):
        x = np.asarray(x, float)
        y = np.exp(-np.clip(x, -1.0, 1.0))
        pos = exp_step((y - lo_y) / (hi_y - lo_y), a)
        neg = exp_step((hi_n - y) / (hi_n - lo_n), a)
        return np.where(x >= 0, pos, neg)

    return CutoffProfile(f, (-1.0, 1.0), "C^inf", "semigroup", {"a": a})


def zero_profile() -> CutoffProfile:
    return CutoffProfile(lambda x: np.zeros_like(np.asarray(x, float)), (-1.0, 1.0), "C^inf", "zero")


PROFILES = {"bump": bump_profile, "semigroup": semigroup_profile, "zero": zero_profile}


def profile_from_dict(d: dict) -> CutoffProfile:
    params = dict(d.get("params", {}))
    dilation = params.pop("dilation", None)
    prof = PROFILES[d["name"]](**params)
    return prof.dilate(dilation) if dilation else prof


@dataclass(frozen=True)
class DyadicFamily:
    """``phi_j(x) = phi(2^{-j} x)`` for j in ``[j_min, j_max]``.

    ``inhomogeneous``: phi = Phi, so supp phi_j is within |x| <= 2^j.
    ``annulus``: phi(x) = Phi(x) - Phi(2x) (``partition="linear"``) or
    sqrt(Phi(x)^2 - Phi(2x)^2) (``partition="quadratic"``), supported in
    2^{j-2} <= |x| <= 2^j. The linear version telescopes to a partition of
    unity, the quadratic one to sum phi_j^2 = 1.
    """

    kind: str
    base: CutoffProfile
    j_min: int
    j_max: int
    partition: str = "linear"
    derivative_bounds: tuple[float, ...] = ()

    @property
    def j_range(self) -> range:
        return range(self.j_min, self.j_max + 1)

    def mother(self, x):
        x = np.asarray(x, float)
        if self.kind == "inhomogeneous":
            return self.base(x)
        outer, inner = self.base(x), self.base(2 * x)
        if self.partition == "quadratic":
            return np.sqrt(np.clip(outer**2 - inner**2, 0.0, None))
        return outer - inner

    def member(self, j: int) -> Callable[[np.ndarray], np.ndarray]:
        scale = 2.0 ** (-j)
        return lambda x: self.mother(scale * np.asarray(x, float))

    def __call__(self, j: int, x):
        return self.member(j)(x)

    def support(self, j: int) -> tuple[float, float]:
        """Radial support ``(r_min, r_max)`` of phi_j."""
        top = 2.0**j
        return (0.0, top) if self.kind == "inhomogeneous" else (2.0 ** (j - 2), top)

    def total(self, x):
        return sum(self(j, x) for j in self.j_range)

    def total_squares(self, x):
        return sum(self(j, x) ** 2 for j in self.j_range)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "j_range": [self.j_min, self.j_max],
            "partition": self.partition,
            "bump": self.base.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "DyadicFamily":
        j_min, j_max = d["j_range"]
        return make_dyadic_family(d["kind"], j_min, j_max, profile_from_dict(d["bump"]), d.get("partition", "linear"))


def _validate(family: DyadicFamily, rtol: float = 0.02):
    lo, hi = -1.1, 1.1
    for j in family.j_range:
        scale = 2.0**j
        phi = family.member(j)
        x = np.linspace(lo * scale, hi * scale, 20001)
        vals = phi(x)
        r_min, r_max = family.support(j)
        off = (np.abs(x) > r_max * (1 + 1e-12)) | (np.abs(x) < r_min * (1 - 1e-12))
        if np.any(vals[off] != 0):
            raise ValueError(f"phi_{j} is nonzero outside its declared support")
        d = vals
        h = x[1] - x[0]
        for k in range(1, MAX_DERIVATIVE + 1):
            d = np.gradient(d, h, edge_order=2)
            if np.max(np.abs(d)) > family.derivative_bounds[k] * scale ** (-k) * (1 + rtol):
                raise ValueError(f"derivative bound of order {k} fails for phi_{j}")


def make_dyadic_family(kind: str, j_min: int, j_max: int, base: CutoffProfile | None = None, partition: str = "linear") -> DyadicFamily:
    if kind not in ("inhomogeneous", "annulus"):
        raise ValueError(f"unknown family kind {kind!r}")
    if j_min > j_max:
        raise ValueError("need j_min <= j_max")
    if partition not in ("linear", "quadratic"):
        raise ValueError(f"unknown partition {partition!r}")
    base = bump_profile() if base is None else base
    proto = DyadicFamily(kind, base, int(j_min), int(j_max), partition)
    bounds = _numeric_derivative_bounds(proto.mother, -1.1, 1.1, n=20001)
    family = DyadicFamily(kind, base, int(j_min), int(j_max), partition, tuple(b * 1.01 for b in bounds))
    _validate(family)
    return family
