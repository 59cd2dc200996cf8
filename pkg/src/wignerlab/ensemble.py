"""Wigner ensembles with row-dependent entry laws.

Covers seeded sampling of real-symmetric and Hermitian matrices, the
truncation-and-mixture regularization (bounded entries, mean exactly 0,
off-diagonal variance exactly sigma^2), Lindeberg-type truncated-moment
functionals, and per-row fourth-moment / fourth-cumulant reports.

Seeding: every sampler takes a numpy Generator or a seed; streams are
counter-based (Philox) keyed by (master seed, stream tag), so replicas drawn
on any thread schedule are identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy import special

from wignerlab.semicircle import HERMITIAN, REAL

__all__ = [
    "EntryLaw",
    "TailMoments",
    "EnsembleProfile",
    "LindebergReport",
    "RowMoments",
    "TruncationInfeasibleError",
    "rng_from_seed",
    "sample",
    "truncate_regularize",
    "repaired_entry_sample",
    "matrix_replacement_probability",
    "lindeberg",
    "row_moments",
]

_SQRT3 = math.sqrt(3.0)
_MC_TAIL_DRAWS = 2_000_000


class TruncationInfeasibleError(ValueError):
    """The mixture repair weight left [0, 1]: eps_N too small for this law."""


def rng_from_seed(seed: int, *key: int) -> np.random.Generator:
    """Counter-based stream keyed by (seed, *key); schedule-independent."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence((int(seed),) + tuple(int(k) for k in key))))


@dataclass(frozen=True)
class TailMoments:
    """Moments of a standardized law restricted to {|y| >= t}; m1 is signed."""

    p: float
    m1: float
    m2: float
    m4: float
    exact: bool = True
    stderr_m4: float | None = None


@dataclass(frozen=True)
class EntryLaw:
    """Standardized entry distribution: mean 0, variance 1, finite 4th moment."""

    name: str
    param: float | None = None

    # -- constructors ------------------------------------------------------

    @staticmethod
    def gaussian() -> "EntryLaw":
        return EntryLaw("gaussian")

    @staticmethod
    def rademacher() -> "EntryLaw":
        return EntryLaw("rademacher")

    @staticmethod
    def uniform() -> "EntryLaw":
        return EntryLaw("uniform")

    @staticmethod
    def two_point(p: float) -> "EntryLaw":
        if not 0.0 < p < 1.0:
            raise ValueError("two-point weight must lie in (0, 1)")
        return EntryLaw("twopoint", p)

    @staticmethod
    def student(df: float) -> "EntryLaw":
        if df <= 4.0:
            raise ValueError("student law needs df > 4 for a finite fourth moment")
        return EntryLaw("student", df)

    @staticmethod
    def from_id(spec: str) -> "EntryLaw":
        parts = spec.strip().lower().split(":")
        if parts[0] in ("gaussian", "rademacher", "uniform") and len(parts) == 1:
            return EntryLaw(parts[0])
        if parts[0] == "twopoint" and len(parts) == 2:
            return EntryLaw.two_point(float(parts[1]))
        if parts[0] == "student" and len(parts) == 2:
            return EntryLaw.student(float(parts[1]))
        raise ValueError(f"unknown entry law {spec!r}")

    @property
    def law_id(self) -> str:
        return self.name if self.param is None else f"{self.name}:{self.param:g}"

    # -- atoms (discrete laws) ----------------------------------------------

    def _atoms(self) -> tuple[np.ndarray, np.ndarray] | None:
        if self.name == "rademacher":
            return np.array([1.0, -1.0]), np.array([0.5, 0.5])
        if self.name == "twopoint":
            p = self.param
            return (
                np.array([math.sqrt((1 - p) / p), -math.sqrt(p / (1 - p))]),
                np.array([p, 1 - p]),
            )
        return None

    # -- sampling ------------------------------------------------------------

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.name == "gaussian":
            return rng.standard_normal(size)
        if self.name == "rademacher":
            return rng.integers(0, 2, size).astype(float) * 2.0 - 1.0
        if self.name == "uniform":
            return rng.uniform(-_SQRT3, _SQRT3, size)
        if self.name == "twopoint":
            a, b = math.sqrt((1 - self.param) / self.param), -math.sqrt(self.param / (1 - self.param))
            return np.where(rng.random(size) < self.param, a, b)
        if self.name == "student":
            return rng.standard_t(self.param, size) / math.sqrt(self.param / (self.param - 2.0))
        raise AssertionError(self.name)

    # -- exact moments --------------------------------------------------------

    @property
    def m4(self) -> float:
        """Exact fourth moment of the standardized law."""
        if self.name == "gaussian":
            return 3.0
        if self.name == "rademacher":
            return 1.0
        if self.name == "uniform":
            return 9.0 / 5.0
        if self.name == "twopoint":
            p = self.param
            return (1 - p) ** 2 / p + p**2 / (1 - p)
        if self.name == "student":
            return 3.0 * (self.param - 2.0) / (self.param - 4.0)
        raise AssertionError(self.name)

    @property
    def bound(self) -> float:
        """sup |y| (inf for unbounded laws)."""
        atoms = self._atoms()
        if atoms is not None:
            return float(np.max(np.abs(atoms[0])))
        if self.name == "uniform":
            return _SQRT3
        return math.inf

    def tail_moments(self, t: float, rng: np.random.Generator | None = None,
                     mc_draws: int = _MC_TAIL_DRAWS) -> TailMoments:
        """Moments over {|y| >= t}: closed form where available, else Monte Carlo."""
        if t <= 0.0:
            return TailMoments(1.0, 0.0, 1.0, self.m4)
        if self.name == "gaussian":
            q = 0.5 * special.erfc(t / math.sqrt(2.0))
            pdf = math.exp(-0.5 * t * t) / math.sqrt(2.0 * math.pi)
            return TailMoments(
                p=2.0 * q,
                m1=0.0,
                m2=2.0 * (t * pdf + q),
                m4=2.0 * (pdf * (t**3 + 3.0 * t) + 3.0 * q),
            )
        if self.name == "uniform":
            if t >= _SQRT3:
                return TailMoments(0.0, 0.0, 0.0, 0.0)
            return TailMoments(
                p=1.0 - t / _SQRT3,
                m1=0.0,
                m2=1.0 - t**3 / (3.0 * _SQRT3),
                m4=9.0 / 5.0 - t**5 / (5.0 * _SQRT3),
            )
        atoms = self._atoms()
        if atoms is not None:
            vals, weights = atoms
            keep = np.abs(vals) >= t
            w = weights * keep
            return TailMoments(
                p=float(w.sum()),
                m1=float((vals * w).sum()),
                m2=float((vals**2 * w).sum()),
                m4=float((vals**4 * w).sum()),
            )
        # Student: no convenient closed form; per-entry Monte Carlo.
        if rng is None:
            rng = rng_from_seed(0x7A11, int(self.param * 1024), int(t * 2**20) & 0xFFFFFFFF)
        draws = self.sample(rng, mc_draws)
        mask = np.abs(draws) >= t
        x4 = draws**4 * mask
        m4 = float(x4.mean())
        stderr = float(x4.std(ddof=1) / math.sqrt(mc_draws))
        return TailMoments(
            p=float(mask.mean()),
            m1=float((draws * mask).mean()),
            m2=float((draws**2 * mask).mean()),
            m4=m4,
            exact=False,
            stderr_m4=stderr,
        )

    def complex_tail_m4(self, t: float, rng: np.random.Generator | None = None,
                        mc_draws: int = _MC_TAIL_DRAWS) -> tuple[float, float | None]:
        """E|c|^4 1{|c| >= t} for c = (y1 + i y2)/sqrt(2), independent copies.

        Returns (value, stderr); stderr None on the closed-form path.
        """
        if self.name == "gaussian":
            # |c|^2 is Exp(1): integral of u^2 e^-u over [t^2, inf).
            x = t * t
            return math.exp(-x) * (x * x + 2.0 * x + 2.0), None
        if self.bound <= t:
            # |c|^2 = (y1^2 + y2^2)/2 <= bound^2, so the tail is empty.
            return 0.0, None
        if rng is None:
            rng = rng_from_seed(0xC0, int(t * 2**20) & 0xFFFFFFFF)
        y1 = self.sample(rng, mc_draws)
        y2 = self.sample(rng, mc_draws)
        mod2 = 0.5 * (y1 * y1 + y2 * y2)
        vals = mod2 * mod2 * (mod2 >= t * t)
        return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(mc_draws))

    @property
    def complex_m4(self) -> float:
        """E|c|^4 for the standardized complex pair built from this law."""
        return 0.5 * (self.m4 + 1.0)


_GAUSSIAN = EntryLaw.gaussian()


@dataclass(frozen=True)
class EnsembleProfile:
    """Wigner ensemble description: symmetry class, scales, per-row entry laws.

    Off-diagonal entry (i, j) follows the override for row min(i, j) when one
    is present, the default law otherwise; a row override also covers that
    row's diagonal entry.  Laws are standardized and then scaled to
    variance sigma^2 off the diagonal and diag_sigma1^2 on it (for the
    Hermitian class, Re and Im parts carry sigma^2/2 each).
    """

    symmetry: str = REAL
    sigma: float = 1.0
    diag_sigma1: float | None = None
    law: EntryLaw = _GAUSSIAN
    diag_law: EntryLaw = _GAUSSIAN
    row_overrides: tuple[tuple[int, EntryLaw], ...] = ()
    n: int | None = None

    def __post_init__(self):
        if self.symmetry not in (REAL, HERMITIAN):
            raise ValueError(f"symmetry must be {REAL!r} or {HERMITIAN!r}")
        if self.sigma <= 0.0:
            raise ValueError("sigma must be positive")
        if self.diag_sigma1 is not None and self.diag_sigma1 <= 0.0:
            raise ValueError("diag_sigma1 must be positive")
        rows = [r for r, _ in self.row_overrides]
        if len(rows) != len(set(rows)) or any(r < 0 for r in rows):
            raise ValueError("row overrides must use distinct nonnegative rows")
        object.__setattr__(self, "row_overrides", tuple(sorted(self.row_overrides)))

    @staticmethod
    def goe(sigma: float = 1.0) -> "EnsembleProfile":
        return EnsembleProfile(symmetry=REAL, sigma=sigma)

    @staticmethod
    def gue(sigma: float = 1.0) -> "EnsembleProfile":
        return EnsembleProfile(symmetry=HERMITIAN, sigma=sigma)

    def with_row_law(self, row: int, law: EntryLaw) -> "EnsembleProfile":
        overrides = dict(self.row_overrides)
        overrides[row] = law
        return replace(self, row_overrides=tuple(sorted(overrides.items())))

    @property
    def diag_scale(self) -> float:
        if self.diag_sigma1 is not None:
            return self.diag_sigma1
        return math.sqrt(2.0) * self.sigma if self.symmetry == REAL else self.sigma

    @property
    def overrides(self) -> dict[int, EntryLaw]:
        return dict(self.row_overrides)

    def law_at(self, i: int, j: int) -> EntryLaw:
        if i == j:
            return self.overrides.get(i, self.diag_law)
        return self.overrides.get(min(i, j), self.law)

    def m4_entry(self, i: int, j: int) -> float:
        """Exact E|W_ij|^4 of an off-diagonal entry."""
        if i == j:
            raise ValueError("m4_entry is defined off the diagonal")
        law = self.law_at(i, j)
        m4 = law.m4 if self.symmetry == REAL else law.complex_m4
        return self.sigma**4 * m4

    def kappa4_limit(self, row: int) -> float:
        """Limiting row cumulant kappa4(i) (the override law dominates row i)."""
        law = self.overrides.get(row, self.law)
        s4 = self.sigma**4
        if self.symmetry == REAL:
            return s4 * (law.m4 - 3.0)
        return s4 * (law.complex_m4 - 2.0)


def sample(profile: EnsembleProfile, n: int | None = None,
           seed: int | None = None, rng: np.random.Generator | None = None) -> np.ndarray:
    """Draw W_N (unnormalized; X_N = W_N / sqrt(N)).  Bit-reproducible per (profile, n, seed)."""
    n = n if n is not None else profile.n
    if n is None or n < 1:
        raise ValueError("matrix dimension n must be a positive integer")
    if rng is None:
        rng = rng_from_seed(0 if seed is None else seed)
    overrides = profile.overrides
    if profile.symmetry == REAL:
        lower = np.tril(profile.law.sample(rng, (n, n)), -1)
        diag = profile.diag_law.sample(rng, n)
        for r in sorted(overrides):
            col = overrides[r].sample(rng, n)
            lower[r + 1 :, r] = col[r + 1 :]
            diag[r] = col[r]
        w = profile.sigma * (lower + lower.T)
        w[np.diag_indices(n)] = profile.diag_scale * diag
        return w
    lower = np.tril(profile.law.sample(rng, (n, n)) + 1j * profile.law.sample(rng, (n, n)), -1)
    diag = profile.diag_law.sample(rng, n)
    for r in sorted(overrides):
        col_re = overrides[r].sample(rng, n)
        col_im = overrides[r].sample(rng, n)
        lower[r + 1 :, r] = col_re[r + 1 :] + 1j * col_im[r + 1 :]
        diag[r] = col_re[r]
    lower /= math.sqrt(2.0)
    w = profile.sigma * (lower + lower.conj().T)
    w[np.diag_indices(n)] = profile.diag_scale * diag
    return w


# -- truncation-and-mixture regularization ------------------------------------


@dataclass(frozen=True)
class RepairParams:
    """Mixture repair for one entry class at truncation level t.

    With probability `weight` the truncated entry is replaced by +-t with
    P(+t) = q_plus; the weights solve mean = 0 exactly and (off the diagonal)
    second moment = scale^2 exactly.
    """

    threshold: float
    weight: float
    q_plus: float
    p_tail: float


def _repair_params(law: EntryLaw, scale: float, t: float, diagonal: bool,
                   rng: np.random.Generator | None = None) -> RepairParams | None:
    tm = law.tail_moments(t / scale, rng=rng)
    if tm.p == 0.0:
        return None
    e_wbar = -scale * tm.m1  # E[W 1{|W| <= t}]
    if diagonal:
        weight = abs(e_wbar) / t
    else:
        gamma2 = scale * scale * tm.m2
        if t * t <= scale * scale:
            raise TruncationInfeasibleError(
                f"mixture weight exceeds 1 at threshold {t:.4g} <= sigma {scale:.4g}; "
                "eps_N too small for this law"
            )
        weight = gamma2 / (t * t - scale * scale + gamma2)
    if weight == 0.0:
        return RepairParams(t, 0.0, 0.5, tm.p)
    mu_a = -(1.0 - weight) * e_wbar / weight
    q_plus = 0.5 * (1.0 + mu_a / t)
    if not -1e-9 <= q_plus <= 1.0 + 1e-9:
        raise TruncationInfeasibleError(
            f"repair atom weight {q_plus:.4g} outside [0, 1]; eps_N too small for this law"
        )
    return RepairParams(t, float(weight), float(min(max(q_plus, 0.0), 1.0)), tm.p)


def _repair_values(values: np.ndarray, params: RepairParams | None,
                   rng: np.random.Generator) -> np.ndarray:
    if params is None:
        return values
    t = params.threshold
    out = np.where(np.abs(values) <= t, values, 0.0)
    if params.weight > 0.0:
        replaced = rng.random(values.shape) < params.weight
        atoms = np.where(rng.random(values.shape) < params.q_plus, t, -t)
        out = np.where(replaced, atoms, out)
    return out


def repaired_entry_sample(law: EntryLaw, scale: float, t: float, size,
                          rng: np.random.Generator, diagonal: bool = False) -> np.ndarray:
    """Draws from the repaired entry law (sample, truncate, mixture-replace)."""
    params = _repair_params(law, scale, t, diagonal, rng=rng)
    return _repair_values(scale * law.sample(rng, size), params, rng)


def truncate_regularize(w: np.ndarray, profile: EnsembleProfile, eps_n: float,
                        seed: int | None = None,
                        rng: np.random.Generator | None = None) -> np.ndarray:
    """Bounded-entry regularization W~ of W: |W~_ij| <= eps_n sqrt(N), per-entry
    law has mean exactly 0 and off-diagonal variance exactly sigma^2."""
    n = w.shape[0]
    t = eps_n * math.sqrt(n)
    if not t > 0.0:
        raise ValueError("eps_n * sqrt(N) must exceed the numerical floor")
    if rng is None:
        rng = rng_from_seed(0 if seed is None else seed, 0x72)
    overrides = profile.overrides
    hermitian = profile.symmetry == HERMITIAN

    def column_law(c: int) -> EntryLaw:
        return overrides.get(c, profile.law)

    lower = np.tril(w, -1).copy()
    strict = np.tril_indices(n, -1)
    cols = strict[1]
    if hermitian:
        comp_scale = profile.sigma / math.sqrt(2.0)
        comp_t = t / math.sqrt(2.0)
    else:
        comp_scale, comp_t = profile.sigma, t
    groups = [(None, cols >= 0)] if not overrides else []
    if overrides:
        default_mask = ~np.isin(cols, list(overrides))
        groups = [(None, default_mask)] + [(r, cols == r) for r in sorted(overrides)]
    for key, mask in groups:
        if not np.any(mask):
            continue
        law = profile.law if key is None else overrides[key]
        idx = (strict[0][mask], strict[1][mask])
        if hermitian:
            params = _repair_params(law, comp_scale, comp_t, diagonal=False, rng=rng)
            re = _repair_values(lower[idx].real, params, rng)
            im = _repair_values(lower[idx].imag, params, rng)
            lower[idx] = re + 1j * im
        else:
            params = _repair_params(law, comp_scale, comp_t, diagonal=False, rng=rng)
            lower[idx] = _repair_values(lower[idx], params, rng)
    diag = np.real(np.diag(w)).astype(float).copy()
    diag_groups: dict[str, tuple[EntryLaw, list[int]]] = {}
    for i in range(n):
        law = overrides.get(i, profile.diag_law)
        diag_groups.setdefault(law.law_id, (law, []))[1].append(i)
    for law, idxs in diag_groups.values():
        params = _repair_params(law, profile.diag_scale, t, diagonal=True, rng=rng)
        diag[idxs] = _repair_values(diag[idxs], params, rng)
    out = lower + (lower.conj().T if hermitian else lower.T)
    out[np.diag_indices(n)] = diag
    return out


def _entry_replacement_probability(law: EntryLaw, scale: float, t: float,
                                   diagonal: bool, hermitian: bool) -> float:
    """P(entry changed) for continuous laws; exact zero for in-bound laws."""
    if hermitian and not diagonal:
        p_comp = _entry_replacement_probability(law, scale / math.sqrt(2.0), t / math.sqrt(2.0),
                                                False, False)
        return 1.0 - (1.0 - p_comp) ** 2
    params = _repair_params(law, scale, t, diagonal)
    if params is None:
        return 0.0
    return (1.0 - params.weight) * params.p_tail + params.weight


def matrix_replacement_probability(profile: EnsembleProfile, n: int, eps_n: float) -> float:
    """P(W != W~) from exact per-entry probabilities composed over the triangle."""
    t = eps_n * math.sqrt(n)
    hermitian = profile.symmetry == HERMITIAN
    overrides = profile.overrides
    log_keep = 0.0
    for r, count in _pair_counts(n, overrides):
        law = profile.law if r is None else overrides[r]
        p = _entry_replacement_probability(law, profile.sigma, t, False, hermitian)
        log_keep += count * math.log1p(-p)
    for law, count in _diag_counts(n, profile):
        p = _entry_replacement_probability(law, profile.diag_scale, t, True, False)
        log_keep += count * math.log1p(-p)
    return -math.expm1(log_keep)


# -- Lindeberg functionals -----------------------------------------------------

OFFDIAG_L = "offdiag"
DIAG_SMALL = "diag"
ROW_L = "row"


@dataclass(frozen=True)
class LindebergReport:
    variant: str
    epsilon: float
    value: float
    stderr: float | None = None


def _m4_tail_scaled(profile: EnsembleProfile, law: EntryLaw, t: float,
                    rng: np.random.Generator | None) -> tuple[float, float | None]:
    s4 = profile.sigma**4
    if profile.symmetry == REAL:
        tm = law.tail_moments(t / profile.sigma, rng=rng)
        se = None if tm.stderr_m4 is None else s4 * tm.stderr_m4
        return s4 * tm.m4, se
    val, se = law.complex_tail_m4(t / profile.sigma, rng=rng)
    return s4 * val, None if se is None else s4 * se


def lindeberg(profile: EnsembleProfile, n: int, epsilon: float, variant: str,
              row: int | None = None, seed: int = 0) -> LindebergReport:
    """Truncated-moment functionals; analytic where the law allows, MC otherwise."""
    rng = rng_from_seed(seed, 0x11D)
    overrides = profile.overrides
    if variant == OFFDIAG_L:
        t = epsilon * math.sqrt(n)
        total, var_total = 0.0, 0.0
        for r, count in _pair_counts(n, overrides):
            law = profile.law if r is None else overrides[r]
            val, se = _m4_tail_scaled(profile, law, t, rng)
            total += count * val
            if se is not None:
                var_total += (count * se) ** 2
        value = total / (n * n)
        stderr = math.sqrt(var_total) / (n * n) if var_total else None
        return LindebergReport(variant, epsilon, value, stderr)
    if variant == DIAG_SMALL:
        t = epsilon * math.sqrt(n)
        total = 0.0
        for law, count in _diag_counts(n, profile):
            tm = law.tail_moments(t / profile.diag_scale, rng=rng)
            total += count * profile.diag_scale**2 * tm.m2
        return LindebergReport(variant, epsilon, total / n, None)
    if variant == ROW_L:
        if row is None:
            raise ValueError("row variant requires a row index")
        t = epsilon * n**0.25
        total, var_total = 0.0, 0.0
        law_counts: dict[str, tuple[EntryLaw, int]] = {}
        for j in range(n):
            if j == row:
                continue
            law = profile.law_at(row, j)
            key = law.law_id
            law_counts[key] = (law, law_counts.get(key, (law, 0))[1] + 1)
        for law, count in law_counts.values():
            val, se = _m4_tail_scaled(profile, law, t, rng)
            total += count * val
            if se is not None:
                var_total += (count * se) ** 2
        stderr = math.sqrt(var_total) / n if var_total else None
        return LindebergReport(variant, epsilon, total / n, stderr)
    raise ValueError(f"unknown Lindeberg variant {variant!r}")


def _pair_counts(n: int, overrides: dict[int, EntryLaw]):
    """(override row or None, pair count) over the strict upper triangle."""
    default = 0
    for i in range(n - 1):
        if i in overrides:
            yield i, n - 1 - i
        else:
            default += n - 1 - i
    if default:
        yield None, default


def _diag_counts(n: int, profile: EnsembleProfile):
    counts: dict[str, tuple[EntryLaw, int]] = {}
    for i in range(n):
        law = profile.overrides.get(i, profile.diag_law)
        key = law.law_id
        counts[key] = (law, counts.get(key, (law, 0))[1] + 1)
    return counts.values()


@dataclass(frozen=True)
class RowMoments:
    """Finite-N row-averaged fourth moment and the matching cumulant."""

    m4_row: float
    kappa4_row: float


def row_moments(profile: EnsembleProfile, n: int, row: int) -> RowMoments:
    """m4(i) = (1/N) sum_{j != i} E|W_ij|^4 from exact law moments."""
    if not 0 <= row < n:
        raise ValueError(f"row {row} outside dimension {n}")
    total = sum(profile.m4_entry(row, j) for j in range(n) if j != row)
    m4_row = total / n
    s4 = profile.sigma**4
    kappa = m4_row - (3.0 * s4 if profile.symmetry == REAL else 2.0 * s4)
    floor = -2.0 * s4 if profile.symmetry == REAL else -s4
    assert kappa >= floor - 1e-12 * s4
    return RowMoments(m4_row=m4_row, kappa4_row=kappa)
