"""Closed catalog of test functions with exact derivatives, Fourier transforms,
Sobolev-type norms, and the quasi-analytic extension used by the
Helffer-Sjostrand evaluation path.

Fourier convention throughout: fhat(k) = (1/sqrt(2 pi)) * integral exp(-i k x) f(x) dx.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy import integrate

__all__ = [
    "DerivativeOrderError",
    "NonIntegrableError",
    "SobolevMembershipError",
    "TestFunction",
    "Monomial",
    "Polynomial",
    "GaussianBump",
    "SmoothCutoff",
    "ResolventReal",
    "ResolventImag",
    "Sampled",
    "FunctionNorms",
    "function_norms",
    "parse_function_id",
    "hs_extension",
    "hs_dbar_grid",
    "poly_coeffs",
]

_SQRT_2PI = math.sqrt(2.0 * math.pi)
_FOURIER_ABS_TOL = 1e-10
MAX_ORDER = 10


class DerivativeOrderError(ValueError):
    """Requested derivative order exceeds what the catalog member provides."""


class NonIntegrableError(ValueError):
    """The function is not absolutely integrable; no Fourier transform."""


class SobolevMembershipError(ValueError):
    """The Sobolev-norm integral diverges: the function is not in H_s."""


class TestFunction:
    """Base class; members are real-valued functions of a real variable."""

    max_derivative_order: int = MAX_ORDER
    support: tuple[float, float] | None = None
    integrable: bool = True

    # -- evaluation ---------------------------------------------------------

    def evaluate(self, x, order: int = 0):
        """order-th derivative at x (order 0 is the function itself)."""
        if order < 0 or order > self.max_derivative_order:
            raise DerivativeOrderError(
                f"{self.function_id} provides derivatives up to order "
                f"{self.max_derivative_order}, requested {order}"
            )
        x = np.asarray(x, dtype=float)
        out = self._derivative(x, order)
        return out if out.ndim else float(out)

    def __call__(self, x):
        return self.evaluate(x, 0)

    def derivatives(self, x, up_to: int) -> np.ndarray:
        """Stack of derivatives 0..up_to, shape (up_to + 1, len(x))."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return np.stack([np.atleast_1d(self.evaluate(x, n)) for n in range(up_to + 1)])

    def _derivative(self, x: np.ndarray, order: int) -> np.ndarray:
        raise NotImplementedError

    # -- Fourier side -------------------------------------------------------

    def fourier(self, k):
        """fhat(k); closed form where available, adaptive quadrature otherwise."""
        if not self.integrable:
            raise NonIntegrableError(f"{self.function_id} is not absolutely integrable")
        k = np.asarray(k, dtype=float)
        out = self._fourier(k)
        return out if out.ndim else complex(out)

    def _fourier(self, k: np.ndarray) -> np.ndarray:
        if self.support is None:
            raise NonIntegrableError(
                f"{self.function_id} has no closed-form transform and unbounded support"
            )
        lo, hi = self.support
        vals = np.empty(k.shape, dtype=complex)
        for idx, kk in np.ndenumerate(k):
            re = integrate.quad(lambda x: float(self.evaluate(x)) * math.cos(kk * x),
                                lo, hi, epsabs=_FOURIER_ABS_TOL, limit=200)[0]
            im = integrate.quad(lambda x: -float(self.evaluate(x)) * math.sin(kk * x),
                                lo, hi, epsabs=_FOURIER_ABS_TOL, limit=200)[0]
            vals[idx] = re + 1j * im
        return vals / _SQRT_2PI

    def _fourier_sq_modulus(self, k: np.ndarray) -> np.ndarray:
        return np.abs(self._fourier(np.asarray(k, dtype=float))) ** 2

    def sobolev_norm(self, s: float) -> float:
        """H_s norm (integral of (1 + 2|k|)^{2s} |fhat|^2)^(1/2) for s > 1/2."""
        if s <= 0.5:
            raise ValueError(f"sobolev_norm requires s > 1/2, got {s}")
        if not self.integrable:
            raise SobolevMembershipError(f"{self.function_id} is not in H_s")

        def integrand(k):
            return (1.0 + 2.0 * abs(k)) ** (2.0 * s) * float(self._fourier_sq_modulus(np.asarray(k)))

        total = 0.0
        lo, hi = 0.0, 1.0
        while True:
            piece, _ = integrate.quad(integrand, lo, hi, epsabs=1e-12, limit=200)
            total += piece
            if hi > 4.0 and abs(piece) <= 1e-13 * max(total, 1e-300):
                break
            if hi > 1e9:
                raise SobolevMembershipError(
                    f"H_{s} integral for {self.function_id} did not converge by |k|={hi:.1e}"
                )
            lo, hi = hi, 2.0 * hi
        return math.sqrt(2.0 * total)

    # -- identity -----------------------------------------------------------

    @property
    def function_id(self) -> str:
        raise NotImplementedError

    def __repr__(self):
        return f"<{type(self).__name__} {self.function_id}>"


@dataclass(frozen=True, repr=False)
class Monomial(TestFunction):
    degree: int

    def __post_init__(self):
        if self.degree < 0:
            raise ValueError("degree must be nonnegative")

    integrable = False

    def _derivative(self, x, order):
        d = self.degree
        if order > d:
            return np.zeros_like(x)
        coef = math.factorial(d) / math.factorial(d - order)
        return coef * x ** (d - order)

    @property
    def function_id(self):
        return f"monomial:{self.degree}"


@dataclass(frozen=True, repr=False)
class Polynomial(TestFunction):
    coeffs: tuple[float, ...]  # ascending powers

    integrable = False

    def _derivative(self, x, order):
        c = npoly.polyder(np.asarray(self.coeffs, dtype=float), order) if order else self.coeffs
        return npoly.polyval(x, np.asarray(c, dtype=float))

    @property
    def function_id(self):
        return "poly:" + ",".join(repr(float(c)) for c in self.coeffs)


@lru_cache(maxsize=64)
def _hermite_coeffs(n: int) -> tuple[float, ...]:
    # Probabilists' Hermite polynomial He_n, ascending coefficients.
    if n == 0:
        return (1.0,)
    if n == 1:
        return (0.0, 1.0)
    hm2, hm1 = np.array([1.0]), np.array([0.0, 1.0])
    for m in range(1, n):
        h = npoly.polysub(npoly.polymulx(hm1), m * np.pad(hm2, (0, hm1.size + 1 - hm2.size)))
        hm2, hm1 = hm1, h
    return tuple(hm1)


@dataclass(frozen=True, repr=False)
class GaussianBump(TestFunction):
    """exp(-(x - center)^2 / (2 width^2)); derivatives via Hermite polynomials."""

    center: float = 0.0
    width: float = 1.0

    def __post_init__(self):
        if self.width <= 0.0:
            raise ValueError("width must be positive")

    def _derivative(self, x, order):
        u = (x - self.center) / self.width
        he = npoly.polyval(u, np.asarray(_hermite_coeffs(order)))
        return (-1.0 / self.width) ** order * he * np.exp(-0.5 * u * u)

    def _fourier(self, k):
        return self.width * np.exp(-0.5 * (self.width * k) ** 2) * np.exp(-1j * k * self.center)

    def _fourier_sq_modulus(self, k):
        return self.width**2 * np.exp(-((self.width * k) ** 2))

    @property
    def function_id(self):
        return f"gauss:{self.center:g}:{self.width:g}"


# -- smooth cutoff via the exp(-1/t) mollifier --------------------------------


@lru_cache(maxsize=32)
def _psi_poly(n: int) -> tuple[float, ...]:
    # d^n/dt^n exp(-1/t) = exp(-1/t) * P_n(1/t);  P_{n+1}(u) = u^2 (P_n(u) - P_n'(u)).
    if n == 0:
        return (1.0,)
    p = np.asarray(_psi_poly(n - 1))
    q = npoly.polysub(p, npoly.polyder(p))
    return tuple(npoly.polymulx(npoly.polymulx(q)))


def _psi_taylor(t: float, m: int) -> np.ndarray:
    """Taylor coefficients of exp(-1/t) at t (zeros for t <= 0)."""
    out = np.zeros(m + 1)
    if t <= 0.0:
        return out
    base = math.exp(-1.0 / t)
    if base == 0.0:
        return out
    u = 1.0 / t
    for n in range(m + 1):
        out[n] = base * npoly.polyval(u, np.asarray(_psi_poly(n))) / math.factorial(n)
    return out


def _series_div(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    c = np.zeros_like(a)
    c[0] = a[0] / b[0]
    for k in range(1, a.size):
        c[k] = (a[k] - np.dot(b[1 : k + 1], c[k - 1 :: -1][: k])) / b[0]
    return c


def _smoothstep_derivs(t: float, m: int) -> np.ndarray:
    """Derivatives 0..m of s(t) = psi(t) / (psi(t) + psi(1-t)) (0 -> 1 on [0, 1])."""
    out = np.zeros(m + 1)
    if t <= 0.0:
        return out
    if t >= 1.0:
        out[0] = 1.0
        return out
    a = _psi_taylor(t, m)
    b = _psi_taylor(1.0 - t, m)
    signs = np.array([(-1.0) ** n for n in range(m + 1)])
    denom = a + signs * b
    if denom[0] == 0.0:  # both exponentials underflowed; midpoint is far from that
        return out
    c = _series_div(a, denom)
    facts = np.array([math.factorial(n) for n in range(m + 1)], dtype=float)
    return c * facts


@dataclass(frozen=True, repr=False)
class SmoothCutoff(TestFunction):
    """C-infinity plateau function: 1 on [-inner, inner], 0 outside [-outer, outer]."""

    inner: float
    outer: float

    def __post_init__(self):
        if not 0.0 < self.inner < self.outer:
            raise ValueError("need 0 < inner < outer")

    @property
    def support(self):  # type: ignore[override]
        return (-self.outer, self.outer)

    def _derivative(self, x, order):
        shape = x.shape
        x = np.atleast_1d(x)
        out = np.zeros_like(x)
        if order == 0:
            out[np.abs(x) <= self.inner] = 1.0
        band = (np.abs(x) > self.inner) & (np.abs(x) < self.outer)
        if np.any(band):
            scale = self.outer - self.inner
            for idx in np.nonzero(band)[0]:
                xx = x[idx]
                t = (self.outer - abs(xx)) / scale
                d = _smoothstep_derivs(t, order)[order]
                out[idx] = d * (-math.copysign(1.0, xx) / scale) ** order
        return out.reshape(shape)

    def derivatives(self, x, up_to):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros((up_to + 1, x.size))
        out[0, np.abs(x) <= self.inner] = 1.0
        band = (np.abs(x) > self.inner) & (np.abs(x) < self.outer)
        scale = self.outer - self.inner
        for idx in np.nonzero(band)[0]:
            xx = x[idx]
            t = (self.outer - abs(xx)) / scale
            derivs = _smoothstep_derivs(t, up_to)
            fac = -math.copysign(1.0, xx) / scale
            out[:, idx] = derivs * fac ** np.arange(up_to + 1)
        return out

    @property
    def function_id(self):
        return f"cutoff:{self.inner:g}:{self.outer:g}"


# -- resolvent test functions -------------------------------------------------


@dataclass(frozen=True, repr=False)
class _ResolventBase(TestFunction):
    pole: complex

    def __post_init__(self):
        if self.pole.imag == 0.0:
            raise ValueError("pole must have nonzero imaginary part")

    def _complex_derivative(self, x, order):
        base = x - self.pole
        return (-1.0) ** order * math.factorial(order) * base ** (-(order + 1))


@dataclass(frozen=True, repr=False)
class ResolventReal(_ResolventBase):
    """f(x) = Re(1 / (x - pole))."""

    def _derivative(self, x, order):
        return self._complex_derivative(x, order).real

    def _fourier(self, k):
        y = abs(self.pole.imag)
        envelope = np.exp(-np.abs(k) * y - 1j * k * self.pole.real)
        return -0.5j * _SQRT_2PI * np.sign(k) * envelope

    def _fourier_sq_modulus(self, k):
        return 0.5 * math.pi * np.exp(-2.0 * np.abs(k) * abs(self.pole.imag)) * (k != 0.0)

    @property
    def function_id(self):
        return f"resre:{self.pole.real:g}:{self.pole.imag:g}"


@dataclass(frozen=True, repr=False)
class ResolventImag(_ResolventBase):
    """f(x) = Im(1 / (x - pole)); transform sqrt(pi/2) exp(-|k| y0 - i k x0) for Im pole = y0 > 0."""

    def _derivative(self, x, order):
        return self._complex_derivative(x, order).imag

    def _fourier(self, k):
        y = self.pole.imag
        envelope = np.exp(-np.abs(k) * abs(y) - 1j * k * self.pole.real)
        return math.copysign(1.0, y) * math.sqrt(math.pi / 2.0) * envelope

    def _fourier_sq_modulus(self, k):
        return 0.5 * math.pi * np.exp(-2.0 * np.abs(k) * abs(self.pole.imag))

    @property
    def function_id(self):
        return f"resim:{self.pole.real:g}:{self.pole.imag:g}"


@dataclass(frozen=True, repr=False)
class Sampled(TestFunction):
    """Piecewise-linear interpolant of tabulated values; order-0 evaluation only."""

    grid: tuple[float, ...]
    values: tuple[float, ...]

    max_derivative_order = 0

    def __post_init__(self):
        if len(self.grid) != len(self.values) or len(self.grid) < 2:
            raise ValueError("grid and values must have equal length >= 2")
        if np.any(np.diff(self.grid) <= 0):
            raise ValueError("grid must be strictly increasing")

    @property
    def support(self):  # type: ignore[override]
        return (self.grid[0], self.grid[-1])

    def _derivative(self, x, order):
        if order > 0:
            raise DerivativeOrderError("sampled functions support order 0 only")
        return np.interp(x, self.grid, self.values, left=0.0, right=0.0)

    def _fourier(self, k):
        xs = np.asarray(self.grid)
        vals = np.asarray(self.values)
        out = np.empty(k.shape, dtype=complex)
        for idx, kk in np.ndenumerate(k):
            out[idx] = np.trapezoid(vals * np.exp(-1j * kk * xs), xs)
        return out / _SQRT_2PI

    @property
    def function_id(self):
        return f"sampled:<{len(self.grid)} points>"


def poly_coeffs(f: TestFunction) -> np.ndarray | None:
    """Ascending coefficients if f is polynomial, else None (enables fast paths)."""
    if isinstance(f, Monomial):
        c = np.zeros(f.degree + 1)
        c[-1] = 1.0
        return c
    if isinstance(f, Polynomial):
        return np.asarray(f.coeffs, dtype=float)
    return None


def parse_function_id(spec: str) -> TestFunction:
    """Construct a catalog member from its string id, e.g. 'monomial:3', 'gauss:0:1'."""
    parts = spec.strip().split(":")
    kind = parts[0].lower()
    try:
        if kind == "monomial" and len(parts) == 2:
            return Monomial(int(parts[1]))
        if kind == "poly" and len(parts) == 2:
            return Polynomial(tuple(float(c) for c in parts[1].split(",")))
        if kind == "gauss" and len(parts) == 3:
            return GaussianBump(float(parts[1]), float(parts[2]))
        if kind == "cutoff" and len(parts) == 3:
            return SmoothCutoff(float(parts[1]), float(parts[2]))
        if kind == "resre" and len(parts) == 3:
            return ResolventReal(complex(float(parts[1]), float(parts[2])))
        if kind == "resim" and len(parts) == 3:
            return ResolventImag(complex(float(parts[1]), float(parts[2])))
    except ValueError as exc:
        raise ValueError(f"malformed function id {spec!r}: {exc}") from exc
    raise ValueError(f"unknown function id {spec!r}")


# -- norms --------------------------------------------------------------------


@dataclass(frozen=True)
class FunctionNorms:
    """The norms the entry CLT hypotheses are phrased in."""

    sobolev_s: float
    cn: float
    l1n: float
    l1n_plus: float


def _norm_grid(f: TestFunction, half_width: float, points: int = 4001) -> np.ndarray:
    lo, hi = f.support if f.support is not None else (-half_width, half_width)
    return np.linspace(lo, hi, points)


def function_norms(f: TestFunction, s: float, n: int = 4, half_width: float = 10.0) -> FunctionNorms:
    """Sobolev, C^n, and weighted-L1 norms (grid-based to trapezoid accuracy)."""
    xs = _norm_grid(f, half_width)
    orders = min(n, f.max_derivative_order)
    derivs = f.derivatives(xs, orders)
    cn = float(np.max(np.abs(derivs)))
    l1 = float(max(np.trapezoid(np.abs(d), xs) for d in derivs))
    l1p = float(max(np.trapezoid((np.abs(xs) + 1.0) * np.abs(d), xs) for d in derivs))
    return FunctionNorms(sobolev_s=f.sobolev_norm(s), cn=cn, l1n=l1, l1n_plus=l1p)


# -- quasi-analytic extension (Helffer-Sjostrand) ------------------------------

# Vertical cutoff: identically 1 for |y| <= 1/2, 0 for |y| >= 1.
Y_CUTOFF = SmoothCutoff(0.5, 1.0)


def hs_extension(f: TestFunction, l: int, z: complex) -> tuple[complex, complex]:
    """(ftilde(z), dbar ftilde(z)) for the order-l quasi-analytic extension."""
    ft, db = hs_dbar_grid(f, l, np.array([z.real]), np.array([z.imag]), with_ftilde=True)
    return complex(ft[0, 0]), complex(db[0, 0])


def hs_dbar_grid(f: TestFunction, l: int, x, y, with_ftilde: bool = False):
    """dbar ftilde on the tensor grid x cross y, shape (len(y), len(x)).

    With with_ftilde=True returns (ftilde, dbar) instead.
    """
    if f.max_derivative_order < l + 1:
        raise DerivativeOrderError(
            f"extension order {l} needs {l + 1} derivatives; "
            f"{f.function_id} provides {f.max_derivative_order}"
        )
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    derivs = f.derivatives(x, l + 1)
    sigma = np.atleast_1d(Y_CUTOFF.evaluate(y, 0))
    dsigma = np.atleast_1d(Y_CUTOFF.evaluate(y, 1))
    iy = 1j * y
    poly = np.zeros((y.size, x.size), dtype=complex)
    for nn in range(l + 1):
        poly += np.outer(iy**nn / math.factorial(nn), derivs[nn])
    dbar = 0.5j * dsigma[:, None] * poly + 0.5 * np.outer(
        iy**l * sigma / math.factorial(l), derivs[l + 1]
    )
    if with_ftilde:
        return sigma[:, None] * poly, dbar
    return dbar
