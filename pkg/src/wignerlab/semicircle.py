"""Semicircle-law quantities: density, Stieltjes transform, entry functionals,
phi kernels, and the limit variances predicted for normalized matrix entries.

All expectations against the semicircle density are evaluated with
Gauss-Chebyshev (second kind) quadrature under the substitution x = 2*sigma*cos(theta);
node counts double until two successive levels agree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "REAL",
    "HERMITIAN",
    "SupportDomainError",
    "QuadratureConvergenceError",
    "InvalidCumulantError",
    "SemicircleParams",
    "EntryFunctionals",
    "SemicirclePrediction",
    "PhiKernels",
    "density",
    "stieltjes",
    "stieltjes_derivative",
    "expect",
    "entry_functionals",
    "predict_entry_fluctuation",
    "phi_kernels",
    "phi_kernels_quadrature",
    "predict_field_covariance",
]

REAL = "real"
HERMITIAN = "hermitian"

QUAD_MIN_NODES = 32
QUAD_MAX_NODES = 2**14
QUAD_TOL = 1e-12


class SupportDomainError(ValueError):
    """Argument lies on the closed support interval [-2*sigma, 2*sigma]."""


class QuadratureConvergenceError(RuntimeError):
    """Node doubling failed to stabilize; carries the achieved error estimate."""

    def __init__(self, message: str, error_estimate: float):
        super().__init__(f"{message} (achieved error estimate {error_estimate:.3e})")
        self.error_estimate = error_estimate


class InvalidCumulantError(ValueError):
    """kappa4 below the moment-constraint floor produced a negative variance."""


@dataclass(frozen=True)
class SemicircleParams:
    """Scale of the semicircle law; the support is exactly [-2*sigma, 2*sigma]."""

    sigma: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0.0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")

    @property
    def support(self) -> tuple[float, float]:
        return (-2.0 * self.sigma, 2.0 * self.sigma)


def _check_symmetry(symmetry: str) -> str:
    if symmetry not in (REAL, HERMITIAN):
        raise ValueError(f"symmetry must be '{REAL}' or '{HERMITIAN}', got {symmetry!r}")
    return symmetry


def density(x, params: SemicircleParams = SemicircleParams()):
    """Semicircle density (1 / 2 pi sigma^2) * sqrt(4 sigma^2 - x^2) on the support."""
    x = np.asarray(x, dtype=float)
    s2 = params.sigma * params.sigma
    inside = np.clip(4.0 * s2 - x * x, 0.0, None)
    out = np.sqrt(inside) / (2.0 * math.pi * s2)
    return out if out.ndim else float(out)


def _on_support(z, params: SemicircleParams) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    return (z.imag == 0.0) & (np.abs(z.real) <= 2.0 * params.sigma)


def stieltjes(z, params: SemicircleParams = SemicircleParams()):
    """Stieltjes transform g(z) on the branch decaying like 1/z at infinity.

    Solves sigma^2 g^2 - z g + 1 = 0; raises SupportDomainError on the cut.
    """
    z = np.asarray(z, dtype=complex)
    if np.any(_on_support(z, params)):
        raise SupportDomainError("stieltjes transform undefined on [-2*sigma, 2*sigma]")
    s2 = params.sigma * params.sigma
    # z*sqrt(1 - 4 sigma^2/z^2) continues the large-|z| branch across the plane;
    # the rationalized form 2/(z + root) avoids cancellation for large |z|.
    root = z * np.sqrt(1.0 - 4.0 * s2 / (z * z))
    g = 2.0 / (z + root)
    return g if g.ndim else complex(g)


def stieltjes_derivative(z, params: SemicircleParams = SemicircleParams()):
    """g'(z) from implicit differentiation of the defining quadratic."""
    g = stieltjes(z, params)
    z = np.asarray(z, dtype=complex)
    s2 = params.sigma * params.sigma
    out = g / (2.0 * s2 * g - z)
    return out if np.ndim(out) else complex(out)


def expect(fn, params: SemicircleParams = SemicircleParams(), tol: float = QUAD_TOL,
           max_nodes: int = QUAD_MAX_NODES):
    """E[fn(eta)] for eta semicircle-distributed, by doubled Gauss-Chebyshev-2 rule.

    fn must accept numpy arrays.  Complex-valued fn is allowed.
    """
    two_sigma = 2.0 * params.sigma
    prev = None
    n = QUAD_MIN_NODES
    err = math.inf
    while n <= max_nodes:
        k = np.arange(1, n + 1)
        theta = k * math.pi / (n + 1)
        nodes = two_sigma * np.cos(theta)
        weights = (2.0 / (n + 1)) * np.sin(theta) ** 2
        cur = np.sum(weights * np.asarray(fn(nodes)))
        if prev is not None:
            err = abs(cur - prev)
            if err <= tol * (1.0 + abs(cur)):
                return complex(cur) if np.iscomplexobj(cur) else float(cur)
        prev = cur
        n *= 2
    raise QuadratureConvergenceError("semicircle quadrature did not stabilize", float(err))


@dataclass(frozen=True)
class EntryFunctionals:
    """The three functionals of a test function that drive the entry CLTs."""

    alpha: float
    beta: float
    omega2: float

    def __post_init__(self):
        if self.omega2 < -1e-10:
            raise ValueError(f"omega2 must be nonnegative, got {self.omega2}")


def entry_functionals(f, params: SemicircleParams = SemicircleParams(),
                      tol: float = QUAD_TOL) -> EntryFunctionals:
    """alpha(f), beta(f), omega^2(f) against the semicircle law of scale sigma."""
    s = params.sigma
    mean_f = expect(lambda x: np.asarray(f(x), dtype=float), params, tol)
    alpha = expect(lambda x: np.asarray(f(x), dtype=float) * x, params, tol) / s
    beta = expect(lambda x: np.asarray(f(x), dtype=float) * (x * x - s * s), params, tol) / (s * s)
    omega2 = expect(lambda x: (np.asarray(f(x), dtype=float) - mean_f) ** 2, params, tol)
    return EntryFunctionals(alpha=alpha, beta=beta, omega2=max(omega2, 0.0))


@dataclass(frozen=True)
class SemicirclePrediction:
    """Limit law of a normalized entry: sqrt(N) fluctuation = coeff_w * W_ij + N(0, limit_variance)."""

    coeff_w: float
    limit_variance: float
    symmetry: str
    diagonal: bool
    kappa4_row: float

    def __post_init__(self):
        if self.limit_variance < 0.0:
            raise ValueError(f"limit_variance must be nonnegative, got {self.limit_variance}")


def predict_entry_fluctuation(f, params: SemicircleParams, kappa4_row: float,
                              symmetry: str, diagonal: bool) -> SemicirclePrediction:
    """Variance prediction for sqrt(N)(f(X)_ij - center) minus its W_ij part.

    Diagonal real-symmetric entries get v1^2 = 2(omega^2 - alpha^2 + kappa4 beta^2 / (2 sigma^4)),
    diagonal Hermitian entries v2^2 = omega^2 - alpha^2 + kappa4 beta^2 / sigma^4,
    off-diagonal entries d^2 = omega^2 - alpha^2 in both symmetry classes.
    """
    _check_symmetry(symmetry)
    fn = entry_functionals(f, params)
    s4 = params.sigma**4
    base = fn.omega2 - fn.alpha**2
    if not diagonal:
        var = base
    elif symmetry == REAL:
        var = 2.0 * (base + kappa4_row / (2.0 * s4) * fn.beta**2)
    else:
        var = base + kappa4_row / s4 * fn.beta**2
    if var < -1e-9 * max(1.0, fn.omega2):
        raise InvalidCumulantError(
            f"kappa4={kappa4_row} drives the predicted variance negative ({var:.3e}); "
            "it lies below the moment-constraint floor"
        )
    return SemicirclePrediction(
        coeff_w=fn.alpha / params.sigma,
        limit_variance=max(var, 0.0),
        symmetry=symmetry,
        diagonal=diagonal,
        kappa4_row=kappa4_row,
    )


@dataclass(frozen=True)
class PhiKernels:
    """phi(z, w) and its real-part / imaginary-part projections."""

    phi: complex
    phi_pp: float
    phi_mm: float
    phi_pm: float


# Relative |w - z| gap below which phi switches to the derivative form.
PHI_SWITCH = 1e-6


def _phi(z: complex, w: complex, params: SemicircleParams) -> complex:
    if abs(w - z) < PHI_SWITCH * (1.0 + abs(z)):
        return -stieltjes_derivative(z, params)
    return -(stieltjes(w, params) - stieltjes(z, params)) / (w - z)


def phi_kernels(z: complex, w: complex,
                params: SemicircleParams = SemicircleParams()) -> PhiKernels:
    """Closed-form phi kernels; raises SupportDomainError if z or w is on the cut."""
    for point in (z, w):
        if _on_support(point, params):
            raise SupportDomainError("phi kernels undefined on the support")
    z = complex(z)
    w = complex(w)
    p = _phi(z, w, params)
    p_cc = _phi(z.conjugate(), w.conjugate(), params)
    p_cz = _phi(z.conjugate(), w, params)
    p_cw = _phi(z, w.conjugate(), params)
    pp = 0.25 * (p + p_cc + p_cz + p_cw)
    mm = -0.25 * (p + p_cc - p_cz - p_cw)
    pm = -0.25j * (p + p_cz - p_cc - p_cw)
    return PhiKernels(phi=p, phi_pp=float(pp.real), phi_mm=float(mm.real), phi_pm=float(pm.real))


def phi_kernels_quadrature(z: complex, w: complex,
                           params: SemicircleParams = SemicircleParams(),
                           tol: float = 1e-11) -> PhiKernels:
    """phi kernels by direct quadrature of their defining integrals (dual route)."""
    for point in (z, w):
        if _on_support(point, params):
            raise SupportDomainError("phi kernels undefined on the support")
    z = complex(z)
    w = complex(w)
    phi = expect(lambda x: 1.0 / ((z - x) * (w - x)), params, tol)
    pp = expect(lambda x: (1.0 / (z - x)).real * (1.0 / (w - x)).real, params, tol)
    mm = expect(lambda x: (1.0 / (z - x)).imag * (1.0 / (w - x)).imag, params, tol)
    pm = expect(lambda x: (1.0 / (z - x)).real * (1.0 / (w - x)).imag, params, tol)
    return PhiKernels(phi=complex(phi), phi_pp=float(pp), phi_mm=float(mm), phi_pm=float(pm))


def predict_field_covariance(z: complex, w: complex, params: SemicircleParams,
                             kappa4_row: float, symmetry: str,
                             entry: tuple[int, int]) -> np.ndarray:
    """2x2 covariance block of (Re Y_ij(z), Im Y_ij(w)) of the limit resolvent field.

    Rows index (Re, Im) at z, columns (Re, Im) at w.  The kappa4 term enters
    only on the diagonal (i == j).
    """
    _check_symmetry(symmetry)
    i, j = entry
    diagonal = i == j
    s4 = params.sigma**4
    gz = stieltjes(z, params)
    gw = stieltjes(w, params)
    k_zw = phi_kernels(z, w, params)
    k_wz = phi_kernels(w, z, params)
    if symmetry == REAL:
        coef = 2.0 * s4 if diagonal else s4
        rr = coef * k_zw.phi_pp
        ii = coef * k_zw.phi_mm
        ri = coef * k_zw.phi_pm
        ir = coef * k_wz.phi_pm
    elif diagonal:
        rr = s4 * k_zw.phi_pp
        ii = s4 * k_zw.phi_mm
        ri = s4 * k_zw.phi_pm
        ir = s4 * k_wz.phi_pm
    else:
        half = 0.5 * s4
        rr = half * (k_zw.phi_pp + k_zw.phi_mm)
        ii = rr
        ri = half * (k_zw.phi_pm - k_wz.phi_pm)
        ir = -ri
    if diagonal:
        rr += kappa4_row * gz.real * gw.real
        ii += kappa4_row * gz.imag * gw.imag
        ri += kappa4_row * gz.real * gw.imag
        ir += kappa4_row * gz.imag * gw.real
    return np.array([[rr, ri], [ir, ii]])
