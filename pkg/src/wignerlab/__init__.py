"""Numerical laboratory for entry fluctuations of regular functions of Wigner matrices.

Analytic side: semicircle-law functionals, Stieltjes transform, phi kernels,
and the variance predictions for normalized matrix entries.  Empirical side:
seeded Monte Carlo over real-symmetric / Hermitian ensembles with
row-dependent entry laws, resolvent scaling scans, and quadratic-form CLT
checks.
"""

__version__ = "0.1.0"

from wignerlab.semicircle import (
    EntryFunctionals,
    PhiKernels,
    SemicircleParams,
    SemicirclePrediction,
    density,
    entry_functionals,
    phi_kernels,
    predict_entry_fluctuation,
    predict_field_covariance,
    stieltjes,
)
from wignerlab.ensemble import EnsembleProfile, EntryLaw, sample
from wignerlab.testfns import TestFunction, parse_function_id

__all__ = [
    "__version__",
    "SemicircleParams",
    "EntryFunctionals",
    "SemicirclePrediction",
    "PhiKernels",
    "density",
    "stieltjes",
    "entry_functionals",
    "predict_entry_fluctuation",
    "phi_kernels",
    "predict_field_covariance",
    "EnsembleProfile",
    "EntryLaw",
    "sample",
    "TestFunction",
    "parse_function_id",
]
