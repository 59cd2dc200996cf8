"""Dense spectral engine: eigendecomposition, matrix functions f(X),
resolvents, resolvent-derivative identities, and the Helffer-Sjostrand
plane-integral evaluation of f(X).

The HS integral is computed by a midpoint tensor rule over the upper half
plane; for real f and self-adjoint X the lower half contributes the adjoint,
so the result is -(2/pi) Re of the upper-half sum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from wignerlab import testfns

__all__ = [
    "SpectralDecomposition",
    "ResolventSample",
    "HsGrid",
    "NotSelfAdjointError",
    "SpectrumProximityError",
    "GridCoverageError",
    "eigh",
    "operator_norm",
    "apply_function",
    "resolvent",
    "resolvent_columns",
    "hs_apply",
    "resolvent_derivative_check",
]

# Residual thresholds scale with dimension; see SpectralDecomposition checks.
_RECON_TOL = 1e-10
_ORTHO_TOL = 1e-10


class NotSelfAdjointError(ValueError):
    """Input matrix is not symmetric/Hermitian within tolerance."""


class SpectrumProximityError(ValueError):
    """Resolvent argument is within the exclusion distance of an eigenvalue."""


class GridCoverageError(ValueError):
    """HS grid does not cover the spectrum plus the required margin."""


@dataclass(frozen=True)
class SpectralDecomposition:
    """Ascending eigenvalues and orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.size


def eigh(x: np.ndarray) -> SpectralDecomposition:
    """Eigendecomposition of a self-adjoint matrix with residual validation."""
    x = np.asarray(x)
    n = x.shape[0]
    scale = max(float(np.max(np.abs(x))), 1e-300)
    asym = float(np.max(np.abs(x - x.conj().T)))
    if asym > 1e-12 * max(scale, 1.0):
        raise NotSelfAdjointError(f"matrix deviates from self-adjoint by {asym:.3e}")
    evals, evecs = np.linalg.eigh(x)
    lam_scale = max(float(np.max(np.abs(evals))), 1e-300)
    recon = np.max(np.abs((evecs * evals) @ evecs.conj().T - x))
    ortho = np.max(np.abs(evecs.conj().T @ evecs - np.eye(n)))
    if recon > _RECON_TOL * n * lam_scale or ortho > _ORTHO_TOL * n:
        raise RuntimeError(
            f"eigensolver residuals too large: reconstruction {recon:.3e}, "
            f"orthonormality {ortho:.3e}"
        )
    return SpectralDecomposition(eigenvalues=evals, eigenvectors=evecs)


def operator_norm(decomp: SpectralDecomposition) -> float:
    """Spectral norm max(|lambda_1|, |lambda_N|)."""
    ev = decomp.eigenvalues
    return float(max(abs(ev[0]), abs(ev[-1]))) if ev.size else 0.0


def apply_function(decomp: SpectralDecomposition, f) -> np.ndarray:
    """f(X) = Q f(Lambda) Q*; self-adjoint for real-valued f."""
    vals = np.asarray(f(decomp.eigenvalues), dtype=float)
    q = decomp.eigenvectors
    return (q * vals) @ q.conj().T


@dataclass(frozen=True)
class ResolventSample:
    """R(z) = (zI - X)^{-1} with its argument."""

    z: complex
    entries: np.ndarray


def resolvent(decomp: SpectralDecomposition, z: complex) -> ResolventSample:
    """Full resolvent from the decomposition; z must keep distance from the spectrum."""
    z = complex(z)
    dist = float(np.min(np.abs(z - decomp.eigenvalues)))
    if dist <= 1e-12:
        raise SpectrumProximityError(f"z={z} is within {dist:.2e} of the spectrum")
    q = decomp.eigenvectors
    r = (q / (z - decomp.eigenvalues)) @ q.conj().T
    return ResolventSample(z=z, entries=r)


def resolvent_columns(x: np.ndarray, z: complex, cols) -> np.ndarray:
    """Columns of (zI - X)^{-1} by a direct solve (reference path)."""
    n = x.shape[0]
    cols = np.atleast_1d(cols)
    rhs = np.zeros((n, cols.size), dtype=complex)
    rhs[cols, np.arange(cols.size)] = 1.0
    a = z * np.eye(n, dtype=complex) - x
    return np.linalg.solve(a, rhs)


def lanczos_resolvent_column(x: np.ndarray, z: complex, col: int = 0,
                             rtol: float = 1e-11, max_steps: int = 120) -> np.ndarray:
    """R(z) e_col by the Lanczos process with full reorthogonalization.

    Exponentially convergent for z away from the spectrum; falls back to a
    direct solve if the residual target is not met.
    """
    n = x.shape[0]
    dtype = complex if np.iscomplexobj(x) else float
    steps = min(n, max_steps)
    q = np.zeros((steps + 1, n), dtype=dtype)
    alphas = np.zeros(steps)
    betas = np.zeros(steps + 1)
    q[0, col] = 1.0
    k_done = 0
    for k in range(steps):
        v = x @ q[k]
        if k > 0:
            v -= betas[k] * q[k - 1]
        a = np.vdot(q[k], v)
        alphas[k] = a.real
        v -= a * q[k]
        # full reorthogonalization keeps the basis usable at high accuracy
        v -= q[: k + 1].T @ (q[: k + 1].conj() @ v)
        b = float(np.linalg.norm(v))
        betas[k + 1] = b
        k_done = k + 1
        if b < 1e-14:
            break
        q[k + 1] = v / b
        if k >= 8 and (k & 3) == 3:
            y = _tridiag_solve(alphas[: k + 1], betas[1 : k + 1], z)
            if betas[k + 1] * abs(y[-1]) <= rtol:
                k_done = k + 1
                break
    y = _tridiag_solve(alphas[:k_done], betas[1:k_done], z)
    sol = q[:k_done].T @ y
    e = np.zeros(n, dtype=dtype)
    e[col] = 1.0
    resid = float(np.linalg.norm(z * sol - x @ sol - e))
    if resid > 100.0 * rtol:
        return resolvent_columns(x, z, [col])[:, 0]
    return sol


def _tridiag_solve(alphas: np.ndarray, offdiag: np.ndarray, z: complex) -> np.ndarray:
    """(z I - T)^{-1} e_1 for the symmetric tridiagonal T (Thomas algorithm)."""
    k = alphas.size
    diag = z - alphas.astype(complex)
    lowup = -offdiag.astype(complex)
    c = np.zeros(k, dtype=complex)
    d = np.zeros(k, dtype=complex)
    rhs = np.zeros(k, dtype=complex)
    rhs[0] = 1.0
    c[0] = lowup[0] / diag[0] if k > 1 else 0.0
    d[0] = rhs[0] / diag[0]
    for i in range(1, k):
        denom = diag[i] - lowup[i - 1] * c[i - 1]
        if i < k - 1:
            c[i] = lowup[i] / denom
        d[i] = (rhs[i] - lowup[i - 1] * d[i - 1]) / denom
    y = np.zeros(k, dtype=complex)
    y[-1] = d[-1]
    for i in range(k - 2, -1, -1):
        y[i] = d[i] - c[i] * y[i + 1]
    return y


@dataclass(frozen=True)
class HsGrid:
    """Midpoint tensor grid over [x_min, x_max] x (0, y_max]."""

    x_min: float
    x_max: float
    nx: int
    ny: int
    y_max: float = 1.0

    def __post_init__(self):
        if self.x_min >= self.x_max or self.nx < 2 or self.ny < 2:
            raise ValueError("degenerate HS grid")
        if self.y_max < 1.0:
            raise ValueError("y range must cover (0, 1] where the cutoff lives")

    @property
    def xs(self) -> np.ndarray:
        h = (self.x_max - self.x_min) / self.nx
        return self.x_min + h * (np.arange(self.nx) + 0.5)

    @property
    def ys(self) -> np.ndarray:
        h = self.y_max / self.ny
        return h * (np.arange(self.ny) + 0.5)

    @property
    def cell(self) -> float:
        return (self.x_max - self.x_min) / self.nx * (self.y_max / self.ny)

    def doubled(self) -> "HsGrid":
        return HsGrid(self.x_min, self.x_max, 2 * self.nx, 2 * self.ny, self.y_max)


def hs_apply(x: np.ndarray, f, l: int = 3, grid: HsGrid | None = None) -> np.ndarray:
    """f(X) via the plane integral -(1/pi) dbl-integral dbar(ftilde) R(z) dx dy.

    The resolvent enters through the spectral representation, so the grid sum
    reduces to one scalar integral per eigenvalue.
    """
    decomp = eigh(x)
    norm = operator_norm(decomp)
    if grid is None:
        half = norm + 2.0
        grid = HsGrid(-half, half, 800, 400)
    if grid.x_min > -norm - 1.0 or grid.x_max < norm + 1.0:
        raise GridCoverageError(
            f"grid x-range [{grid.x_min}, {grid.x_max}] must cover "
            f"[{-norm - 1.0:.3f}, {norm + 1.0:.3f}]"
        )
    xs, ys = grid.xs, grid.ys
    dbar = testfns.hs_dbar_grid(f, l, xs, ys)  # shape (ny, nx)
    lam = decomp.eigenvalues
    sums = np.zeros(lam.size, dtype=complex)
    for jy, yv in enumerate(ys):
        denom = xs[:, None] + 1j * yv - lam[None, :]
        sums += dbar[jy] @ (1.0 / denom)
    sums *= grid.cell
    vals = -(2.0 / math.pi) * sums.real
    q = decomp.eigenvectors
    return (q * vals) @ q.conj().T


def resolvent_derivative_check(x: np.ndarray, z: complex, p: int, q: int,
                               h: float = 1e-6) -> float:
    """Central finite difference of R under a symmetrized perturbation of X_pq
    against the product identity; returns the max relative entry error."""
    if complex(z).imag == 0.0:
        raise ValueError("derivative check needs Im z != 0")
    n = x.shape[0]
    e = np.zeros_like(np.asarray(x, dtype=float))
    e[p, q] = 1.0
    if p != q:
        e[q, p] = 1.0
    decomp = eigh(x)
    r = resolvent(decomp, z).entries
    r_plus = resolvent(eigh(x + h * e), z).entries
    r_minus = resolvent(eigh(x - h * e), z).entries
    fd = (r_plus - r_minus) / (2.0 * h)
    if p != q:
        analytic = np.outer(r[:, p], r[q, :]) + np.outer(r[:, q], r[p, :])
    else:
        analytic = np.outer(r[:, p], r[p, :])
    scale = float(np.max(np.abs(analytic)))
    denom = np.maximum(np.abs(analytic), 1e-3 * scale)
    return float(np.max(np.abs(fd - analytic) / denom))
