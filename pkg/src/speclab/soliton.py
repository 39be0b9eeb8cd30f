"""Exact Poschl-Teller machinery for H_nu = -d^2/dx^2 - nu(nu+1) sech^2 x.

Continuum eigenfunctions

    e(x, k) = sign(k)^nu prod_{j=1}^nu (j + i|k|)^{-1} P_nu(x, k) e^{ikx},

with ``P_nu(x, k) = p_nu(tanh x, ik)`` generated by

    p_nu = (1 - tau^2) d/dtau p_{nu-1} + (ik - nu tau) p_{nu-1},  p_0 = 1.

Kernels of phi(H_nu) E_ac are integrals over k of phi(k^2) e(x,k) conj e(y,k);
they need no spatial grid, which makes them the oracle for the dyadic sweeps.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import sympy as sp

from .errors import QuadratureError, QuadratureWarning
from .quadrature import gauss_legendre, integrate

MAX_BOUND_NU = 3


@dataclass(frozen=True)
class PtPolynomial:
    """``p_nu(tau, kappa) = sum_{m,r} coeffs[m, r] tau^m kappa^r`` with kappa = ik."""

    nu: int
    coeffs: np.ndarray

    def __call__(self, tau, kappa):
        tau = np.asarray(tau)
        kappa = np.asarray(kappa)
        out = np.zeros(np.broadcast(tau, kappa).shape, complex)
        for m, r in zip(*np.nonzero(self.coeffs)):
            out = out + self.coeffs[m, r] * tau**m * kappa**r
        return out

    def d_tau(self) -> np.ndarray:
        m = np.arange(self.coeffs.shape[0])[:, None]
        return (m * self.coeffs)[1:]

    def leading_tau_coefficient(self) -> int:
        return int(self.coeffs[self.nu, 0])

    def to_dict(self) -> dict:
        return {"nu": self.nu, "coeffs": self.coeffs.tolist()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


@lru_cache(maxsize=None)
def pt_recursion(nu: int) -> PtPolynomial:
    if nu < 0:
        raise ValueError("nu must be non-negative")
    c = np.ones((1, 1), dtype=np.int64)
    for n in range(1, nu + 1):
        deg = c.shape[0]
        new = np.zeros((deg + 1, c.shape[1] + 1), dtype=np.int64)
        # (1 - tau^2) d/dtau
        for m in range(1, deg):
            new[m - 1, : c.shape[1]] += m * c[m]
            new[m + 1, : c.shape[1]] -= m * c[m]
        # (kappa - n tau)
        new[:deg, 1:] += c
        new[1:, : c.shape[1]] -= n * c
        c = new
    return PtPolynomial(nu, c)


def _tau_powers(tau, nu):
    return tau[..., None] ** np.arange(nu + 1)


def _pt_matrix(poly: PtPolynomial, x, k, derivative: bool):
    """``P(x_i, k_m)`` (or ``d/dx [P e^{ikx}] e^{-ikx}``) as an (n_x, n_k) array."""
    nu = poly.nu
    tau = np.tanh(x)
    kap = (1j * k)[:, None] ** np.arange(poly.coeffs.shape[1])
    T = _tau_powers(tau, nu)
    P = T @ poly.coeffs @ kap.T
    if not derivative:
        return P
    dcoef = poly.d_tau()
    if dcoef.shape[0]:
        dP = (T[:, : dcoef.shape[0]] @ dcoef @ kap.T) * (1 - tau**2)[:, None]
    else:
        dP = np.zeros_like(P)
    return dP + P * (1j * k)[None, :]


def amplitude(nu: int, k):
    """``sign(k)^nu prod_j (j + i|k|)^{-1}``."""
    k = np.asarray(k, float)
    a = np.ones(k.shape, complex)
    for j in range(1, nu + 1):
        a = a / (j + 1j * np.abs(k))
    return np.sign(k) ** nu * a


def eigenfunction_matrix(nu: int, x, k, derivative: bool = False) -> np.ndarray:
    """``e(x_i, k_m)`` or ``d/dx e(x_i, k_m)``."""
    x = np.atleast_1d(np.asarray(x, float))
    k = np.atleast_1d(np.asarray(k, float))
    P = _pt_matrix(pt_recursion(nu), x, k, derivative)
    return P * amplitude(nu, k)[None, :] * np.exp(1j * np.outer(x, k))


def eigenfunction(nu: int, x, k, derivative: bool = False):
    """Pointwise ``e(x, k)`` (broadcasting x against k)."""
    x, k = np.broadcast_arrays(np.asarray(x, float), np.asarray(k, float))
    if np.any(k == 0):
        raise ValueError("e(x, k) is undefined at k = 0")
    xf, kf = x.ravel(), k.ravel()
    poly = pt_recursion(nu)
    tau = np.tanh(xf)
    kappa = 1j * kf
    P = poly(tau, kappa)
    if derivative:
        dpoly = PtPolynomial(nu, poly.d_tau()) if poly.d_tau().size else None
        dP = dpoly(tau, kappa) * (1 - tau**2) if dpoly is not None else 0.0
        P = dP + kappa * P
    out = amplitude(nu, kf) * P * np.exp(1j * kf * xf)
    return out.reshape(x.shape) if x.ndim else complex(out[0])


# bound states: energy -m^2, eigenfunction a linear combination of sech^a tanh^b
_X = sp.Symbol("x", real=True)
_BOUND_FORMS = {
    1: {1: sp.sech(_X)},
    2: {2: sp.sech(_X) ** 2, 1: sp.sech(_X) * sp.tanh(_X)},
    3: {3: sp.sech(_X) ** 3, 2: sp.sech(_X) ** 2 * sp.tanh(_X), 1: sp.sech(_X) * (5 * sp.tanh(_X) ** 2 - 1)},
}


@dataclass(frozen=True)
class BoundState:
    energy: float
    func: object
    second_derivative: object
    norm: float

    def __call__(self, x):
        return self.func(np.asarray(x, float)) / self.norm

    def d2(self, x):
        return self.second_derivative(np.asarray(x, float)) / self.norm


@dataclass(frozen=True)
class BoundStateSet:
    nu: int
    states: tuple[BoundState, ...]

    @property
    def energies(self) -> list[float]:
        return [s.energy for s in self.states]

    def residual(self, x) -> float:
        """max |(-e'' + V e) - E e| over the points x."""
        x = np.asarray(x, float)
        V = -self.nu * (self.nu + 1) / np.cosh(x) ** 2
        return float(max(np.max(np.abs(-s.d2(x) + V * s(x) - s.energy * s(x))) for s in self.states))

    def gram(self, L: float = 40.0, n_panels: int = 400) -> np.ndarray:
        x, w = gauss_legendre(-L, L, n_panels)
        vals = np.array([s(x) for s in self.states])
        return (vals * w) @ vals.T

    def project(self, f, x, w) -> np.ndarray:
        """``sum_n (f, e_n) e_n`` evaluated at the quadrature nodes x."""
        out = np.zeros_like(x)
        for s in self.states:
            e = s(x)
            out += np.sum(w * f * e) * e
        return out


@lru_cache(maxsize=None)
def bound_states(nu: int) -> BoundStateSet:
    if nu < 1 or nu > MAX_BOUND_NU:
        raise ValueError(f"bound states are tabulated for 1 <= nu <= {MAX_BOUND_NU}")
    states = []
    for m, expr in sorted(_BOUND_FORMS[nu].items(), key=lambda p: -p[0]):
        f = sp.lambdify(_X, expr, "numpy")
        d2 = sp.lambdify(_X, sp.diff(expr, _X, 2), "numpy")
        norm = math.sqrt(integrate(lambda x: f(x) ** 2, -40.0, 40.0, 400))
        states.append(BoundState(-float(m * m), f, d2, norm))
    return BoundStateSet(nu, tuple(states))


@dataclass
class AcKernel:
    """Kernel of phi(H_nu) E_ac sampled on ``xs`` x ``ys``."""

    values: np.ndarray
    xs: np.ndarray
    ys: np.ndarray
    alpha: int
    imag_residual: float
    achieved_tol: float
    n_nodes: int
    converged: bool


def _k_nodes(k_min, k_max, n_panels, order=16):
    k, w = gauss_legendre(k_min, k_max, n_panels, order)
    return np.concatenate([-k[::-1], k]), np.concatenate([w[::-1], w])


def _ac_sum(nu, phi, xs, ys, alpha, k, w):
    Ex = eigenfunction_matrix(nu, xs, k, derivative=bool(alpha))
    Ey = eigenfunction_matrix(nu, ys, k)
    weights = w * np.asarray(phi(k**2), float)
    return (Ex * weights[None, :]) @ Ey.conj().T / (2 * math.pi)


def effective_k_max(phi, k_guess: float = 1.0, floor: float = 1e-18, limit: float = 1e4) -> float:
    """Smallest 2^m * k_guess beyond which |phi(k^2)| stays below ``floor``."""
    k = k_guess
    while k < limit:
        probe = np.linspace(k, 2 * k, 64)
        if np.max(np.abs(phi(probe**2))) < floor:
            return k
        k *= 2
    return limit


def ac_kernel_matrix(nu, phi, xs, ys, alpha=0, k_max=None, k_min=0.0, tol=1e-10, n_panels=None, max_panels=1 << 14) -> AcKernel:
    """``(2 pi)^{-1} int phi(k^2) d_x^alpha e(x,k) conj e(y,k) dk`` for all (x, y).

    Composite Gauss-Legendre on the symmetric k-support, doubling the panel
    count until successive results agree to ``tol`` (relative to the largest
    entry). The rule is symmetric in k, so nodes never hit k = 0.
    """
    xs = np.atleast_1d(np.asarray(xs, float))
    ys = np.atleast_1d(np.asarray(ys, float))
    if k_max is None:
        k_max = effective_k_max(phi)
    span = float(np.max(np.abs(xs[:, None] - ys[None, :])))
    if n_panels is None:
        n_panels = max(4, int(math.ceil((k_max - k_min) * (span + 4) / math.pi)))
    k, w = _k_nodes(k_min, k_max, n_panels)
    prev = _ac_sum(nu, phi, xs, ys, alpha, k, w)
    err = math.inf
    while n_panels < max_panels:
        n_panels *= 2
        k, w = _k_nodes(k_min, k_max, n_panels)
        cur = _ac_sum(nu, phi, xs, ys, alpha, k, w)
        scale = max(float(np.max(np.abs(cur))), 1e-300)
        err = float(np.max(np.abs(cur - prev))) / scale
        prev = cur
        if err <= tol:
            break
    converged = err <= tol
    if not converged:
        warnings.warn(f"k-quadrature reached relative change {err:.2e} > {tol:.0e}", QuadratureWarning, stacklevel=2)
    return AcKernel(prev.real, xs, ys, int(alpha), float(np.max(np.abs(prev.imag))), err, len(k), converged)


def ac_kernel(nu, phi, x, y, alpha=0, k_max=None, k_min=0.0, tol=1e-10, strict=False) -> float:
    """Scalar kernel value of phi(H_nu) E_ac (or its x-derivative)."""
    res = ac_kernel_matrix(nu, phi, [x], [y], alpha, k_max, k_min, tol)
    if strict and not res.converged:
        raise QuadratureError("k-quadrature did not converge", res.achieved_tol)
    return float(res.values[0, 0])


def fourier_identity_check(k=None, L: float = 40.0, n_panels: int = 800) -> dict:
    """Compare numerical transforms of e^{-|x|} and sign(x) e^{-|x|} with 2/(1+k^2), -2ik/(1+k^2)."""
    k = np.linspace(-8, 8, 161) if k is None else np.atleast_1d(np.asarray(k, float))
    x, w = gauss_legendre(0.0, L, n_panels)
    decay = w * np.exp(-x)
    # split at the kink; each half-line integral is an even/odd combination
    even = 2 * np.cos(np.outer(k, x)) @ decay
    odd = -2j * np.sin(np.outer(k, x)) @ decay
    exact_even = 2 / (1 + k**2)
    exact_odd = -2j * k / (1 + k**2)
    return {
        "k": k.tolist(),
        "even": even.tolist(),
        "odd_imag": odd.imag.tolist(),
        "max_error_even": float(np.max(np.abs(even - exact_even))),
        "max_error_odd": float(np.max(np.abs(odd - exact_odd))),
    }


def completeness_check(nu, f, k_cut: float = 40.0, profile=None, L: float = 12.0, n_panels: int = 96, include_bound=True, return_parts=False):
    """``max |E_ac f + sum_n (f, e_n) e_n - f|`` with E_ac replaced by Phi(H/k_cut^2) E_ac.

    f must be smooth and negligible outside [-L, L].
    """
    from .profiles import bump_profile

    profile = bump_profile() if profile is None else profile
    x, w = gauss_legendre(-L, L, n_panels)
    fx = np.asarray(f(x), float)
    phi = lambda lam: profile(lam / k_cut**2)
    k, wk = _k_nodes(0.0, k_cut, max(64, int(math.ceil(k_cut * (2 * L + 4) / math.pi))))
    E = eigenfunction_matrix(nu, x, k)
    coeff = (E.conj().T * w[None, :]) @ fx
    ac = (E @ (wk * phi(k**2) * coeff)) / (2 * math.pi)
    bound = bound_states(nu).project(fx, x, w) if (include_bound and nu >= 1) else np.zeros_like(x)
    defect = float(np.max(np.abs(ac.real + bound - fx)))
    if return_parts:
        return defect, x, ac.real, bound, fx
    return defect


def psi_check_transform(profile_j, r, k_max, n_panels=None):
    """``Psi_j^vee(r) = (2 pi)^{-1} int Phi_j(k^2) e^{ikr} dk`` at offsets r."""
    r = np.atleast_1d(np.asarray(r, float))
    n_panels = n_panels or max(8, int(math.ceil(k_max * (np.max(np.abs(r)) + 4) / math.pi)) * 2)
    k, w = _k_nodes(0.0, k_max, n_panels)
    vals = w * profile_j(k**2)
    return (np.cos(np.outer(r, k)) @ vals) / (2 * math.pi)


def psi_envelope_constant(K: AcKernel, psi_vee, c: float = 1.0, u_max: float | None = None, n_u: int = 4001) -> float:
    """Smallest C with ``|K(x,y)| <= C (|Psi^vee(x-y)| + int |Psi^vee(u)| e^{-c|x-y-u|} du)``.

    ``psi_vee`` maps offsets to Psi_j^vee values.
    """
    r = K.xs[:, None] - K.ys[None, :]
    u_max = u_max or float(np.max(np.abs(r))) + 30.0 / c
    u = np.linspace(-u_max, u_max, n_u)
    du = u[1] - u[0]
    pu = np.abs(psi_vee(u))
    rr = np.unique(np.round(r.ravel(), 12))
    conv = (np.exp(-c * np.abs(rr[:, None] - u[None, :])) @ pu) * du
    bound = np.abs(psi_vee(rr)) + conv
    lookup = np.interp(r, rr, bound)
    return float(np.max(np.abs(K.values) / lookup))


def write_kernel_slices(path, rows) -> None:
    """Rows of ``(j, x, y, K, dK)``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["j", "x", "y", "K", "dK"])
        for row in rows:
            w.writerow([row[0]] + [repr(float(v)) for v in row[1:]])
