"""Companion-process spectra and the local Granger causality functional.

For a block partition ``X = (X1, X2)`` with sizes ``(m, M)`` the causality
from ``X2`` to ``X1`` at one rescaled time is

    GC = (1/2pi) int FGC(lambda) d lambda,
    FGC = log |f11| - log |f11 - 2pi g12 S22~^{-1} g21|,

where ``g`` is the spectral matrix of ``(X1, Y2)``, ``Y2`` being ``X2`` minus
its projection on the joint past and the present of ``X1``, and ``S22~`` is
the Schur complement of the innovation covariance.
"""

from dataclasses import dataclass, field

import numpy as np

from localgc.errors import DimensionError, NonHermitianResidual, SingularMatrix
from localgc.spectra import (
    TWO_PI,
    FreqGrid,
    VarParams,
    transfer_inverse,
    var_factorization,
    var_spectral_density_grid,
)

HERMITIAN_TOL = 1e-9
DET_FLOOR = 1e-300


@dataclass(frozen=True)
class Partition:
    """Sizes of the effect block ``m`` and the cause block ``M``."""

    m: int = 1
    M: int = 1

    def __post_init__(self):
        if self.m < 1 or self.M < 1:
            raise DimensionError(f"both blocks need at least one channel, got m={self.m}, M={self.M}")

    @property
    def p(self) -> int:
        return self.m + self.M

    def check(self, params: VarParams):
        if params.p != self.p:
            raise DimensionError(f"partition ({self.m}, {self.M}) does not match p = {params.p}")


@dataclass
class CausalityValue:
    at_u: float
    gc: float
    fgc_curve: list = field(default_factory=list, repr=False)


def sigma_tilde_22(params: VarParams, part: Partition) -> np.ndarray:
    """Schur complement ``s22 - s21 s11^{-1} s12``."""
    part.check(params)
    s = params.s
    m = part.m
    s11 = s[:m, :m]
    if abs(np.linalg.det(s11)) <= 1e-14 * max(1.0, float(np.abs(s11).max())) ** m:
        raise SingularMatrix("s11 is singular")
    st = s[m:, m:] - s[m:, :m] @ np.linalg.solve(s11, s[:m, m:])
    return 0.5 * (st + st.T)


def _projection_row(params: VarParams, part: Partition) -> np.ndarray:
    """``[-s21 s11^{-1}, I_M]``, the map from innovations to ``Y2``."""
    m = part.m
    s = params.s
    coef = s[m:, :m] @ np.linalg.inv(s[:m, :m])
    return np.hstack([-coef, np.eye(part.M)])


def _companion_blocks(params: VarParams, part: Partition, lam):
    """``(f, g21, g22)`` on an array of frequencies.

    ``g21 = P Lambda(0) Lambda(e^{i lambda})^{-1} f[:, :m]`` and
    ``g22 = P Lambda(0) Lambda(e^{i lambda})^{-1} f Lambda(...)^{-*} Lambda(0)^* P^T``,
    where ``Lambda(0) Lambda(e^{i lambda})^{-1} = I + a e^{i lambda}``.
    """
    part.check(params)
    lam = np.atleast_1d(np.asarray(lam, dtype=np.float64))
    f = var_spectral_density_grid(params, lam)
    proj = _projection_row(params, part)
    whitening = proj[None] @ transfer_inverse(params, lam)
    g21 = whitening @ f[:, :, : part.m]
    g22 = whitening @ f @ np.conj(np.swapaxes(whitening, 1, 2))
    return f, g21, g22


def companion_cross_spectrum(params: VarParams, part: Partition, lam: float) -> np.ndarray:
    """Cross spectrum ``g21(lambda)`` of ``(Y2, X1)``, shape ``(M, m)``.

    Built from the explicit spectral factor, ``P Lambda(0) Lambda(e^{i lambda})^{-1} f[:, :m]``.
    ``g12(lambda)`` is its conjugate transpose.
    """
    part.check(params)
    root, lambda_inv_at = var_factorization(params)
    f = var_spectral_density_grid(params, [lam])[0]
    return _projection_row(params, part) @ root @ lambda_inv_at(lam) @ f[:, : part.m]


def companion_auto_spectrum(params: VarParams, part: Partition, lam) -> np.ndarray:
    """``g22(lambda)``; equal to ``S22~ / 2pi`` at every frequency."""
    _, _, g22 = _companion_blocks(params, part, lam)
    return g22[0] if np.ndim(lam) == 0 else g22


def _logdet_hermitian(mats: np.ndarray) -> np.ndarray:
    dets = np.linalg.det(mats).real
    if np.any(dets <= 0.0):
        raise SingularMatrix("causality residual has a nonpositive determinant")
    return np.log(np.maximum(dets, DET_FLOOR))


def fgc_grid(params: VarParams, part: Partition, lam) -> np.ndarray:
    """FGC at each frequency in ``lam``."""
    f, g21, _ = _companion_blocks(params, part, lam)
    m = part.m
    f11 = f[:, :m, :m]
    st_inv = np.linalg.inv(sigma_tilde_22(params, part))
    g12 = np.conj(np.swapaxes(g21, 1, 2))
    resid = f11 - TWO_PI * g12 @ st_inv @ g21
    anti = resid - np.conj(np.swapaxes(resid, 1, 2))
    scale = max(1.0, float(np.abs(f11).max()))
    if float(np.abs(anti).max()) > HERMITIAN_TOL * scale:
        raise NonHermitianResidual(
            f"residual anti-Hermitian part {float(np.abs(anti).max()):.3e} exceeds tolerance")
    resid = 0.5 * (resid + np.conj(np.swapaxes(resid, 1, 2)))
    f11 = 0.5 * (f11 + np.conj(np.swapaxes(f11, 1, 2)))
    return _logdet_hermitian(f11) - _logdet_hermitian(resid)


def fgc(params: VarParams, part: Partition, lam: float) -> float:
    """Frequency-wise causality density at one frequency."""
    return float(fgc_grid(params, part, [lam])[0])


def gc_value(params: VarParams, part: Partition, grid: FreqGrid) -> float:
    """``(1/2pi) sum_j g_j FGC(lambda_j)``."""
    return float(grid.weight * np.sum(fgc_grid(params, part, grid.nodes)) / TWO_PI)


def gc_measure(params: VarParams, part: Partition, grid: FreqGrid, at_u: float = float("nan")) -> CausalityValue:
    curve = fgc_grid(params, part, grid.nodes)
    gc = float(grid.weight * np.sum(curve) / TWO_PI)
    return CausalityValue(at_u=at_u, gc=gc, fgc_curve=list(zip(grid.nodes.tolist(), curve.tolist())))


def gc_gradient(params: VarParams, part: Partition, grid: FreqGrid, rel_step: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of GC in the flat ``theta`` coordinates."""
    theta = params.theta
    grad = np.empty_like(theta)
    for i in range(theta.size):
        h = rel_step * (1.0 + abs(theta[i]))
        tp, tm = theta.copy(), theta.copy()
        tp[i] += h
        tm[i] -= h
        grad[i] = (gc_value(params.with_theta(tp), part, grid)
                   - gc_value(params.with_theta(tm), part, grid)) / (2.0 * h)
    return grad
