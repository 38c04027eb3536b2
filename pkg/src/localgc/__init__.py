"""Local Granger causality for locally stationary multivariate time series.

Kernel-weighted local Whittle fitting of a time-varying VAR(1) spectral
model, the frequency-domain causality functional built on it, and the
associated test statistics and Monte Carlo harness.
"""

from localgc.errors import (
    DimensionError,
    DomainError,
    EmptyFile,
    LocalGCError,
    NonHermitianResidual,
    NotConverged,
    NotPSD,
    ParseError,
    RaggedRows,
    SingularMatrix,
    ZeroGradient,
)

__version__ = "0.1.0"

__all__ = [
    "DimensionError",
    "DomainError",
    "EmptyFile",
    "LocalGCError",
    "NonHermitianResidual",
    "NotConverged",
    "NotPSD",
    "ParseError",
    "RaggedRows",
    "SingularMatrix",
    "ZeroGradient",
]
