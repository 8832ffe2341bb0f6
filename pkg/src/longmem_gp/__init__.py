"""Covariance kernels, validity analysis and exact sampling for long-memory Gaussian processes."""
from ._backend import NAME as BACKEND
from .errors import (
    ConfigurationError,
    DomainError,
    FactorizationError,
    NumericalError,
    ParameterError,
    ToleranceError,
)
from .families import Family, FamilySpec, Regime
from .kernels import cov, cov_matrix, incr_cov, incr_var
from .pd_analysis import (
    GramMatrix,
    PsdCertificate,
    TimeGrid,
    ValidityVerdict,
    Witness,
    classify,
    gram,
    psd_certificate,
    violation_witness,
)
from .properties import VerificationReport
from .sampling import PathEnsemble, regenerate, sample
from .suites import run_suite

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ConfigurationError",
    "DomainError",
    "FactorizationError",
    "NumericalError",
    "ParameterError",
    "ToleranceError",
    "Family",
    "FamilySpec",
    "Regime",
    "cov",
    "cov_matrix",
    "incr_cov",
    "incr_var",
    "GramMatrix",
    "PsdCertificate",
    "TimeGrid",
    "ValidityVerdict",
    "Witness",
    "classify",
    "gram",
    "psd_certificate",
    "violation_witness",
    "VerificationReport",
    "PathEnsemble",
    "regenerate",
    "sample",
    "run_suite",
]
