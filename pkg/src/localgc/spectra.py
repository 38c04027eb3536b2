"""Pre-periodograms, parametric VAR(1) spectra and their factorization.

Spectral convention: a process with autocovariances
``Gamma(h) = E[X_{t+h} X_t^T]`` has density ``(1/2pi) sum_h Gamma(h) exp(i lambda h)``.
The parametric family is

    f_theta(lambda) = (1/2pi) (I + a e^{i lambda})^{-1} s (I + a^T e^{-i lambda})^{-1},

so the simulator recursion ``X_t = A X_{t-1} + eps_t`` corresponds to
``a = -A``. The pre-periodogram below uses the same exponent sign, which
makes it an asymptotically unbiased estimate of this density.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Tuple

import numpy as np

from localgc.cxla import cinv, psd_sqrt
from localgc.errors import DimensionError, DomainError, SingularMatrix
from localgc.procsim import as_panel

TWO_PI = 2.0 * math.pi
STABILITY_MARGIN = 1e-6
MAX_DENOMINATOR = 10 ** 9


@dataclass(frozen=True)
class FreqGrid:
    """Regular grid ``lambda_j = -pi + 2 pi j / N`` with rectangle weights ``2 pi / N``."""

    count: int

    def __post_init__(self):
        if self.count < 2 or self.count % 2:
            raise DomainError(f"grid size must be a positive even integer, got {self.count}")

    @property
    def nodes(self) -> np.ndarray:
        return -math.pi + TWO_PI * np.arange(self.count) / self.count

    @property
    def weights(self) -> np.ndarray:
        return np.full(self.count, TWO_PI / self.count)

    @property
    def weight(self) -> float:
        return TWO_PI / self.count


def default_grid(length: int) -> FreqGrid:
    """``N = max(512, 4 T)``, which keeps all pre-periodogram lags alias-free."""
    return FreqGrid(max(512, 4 * int(length)))


class VarParams:
    """VAR(1) spectral parameters ``(a, s)``.

    The flat vector ``theta`` lists ``a`` row-major followed by the upper
    triangle of ``s`` (row-major), e.g. ``(a11, a12, a21, a22, s11, s12, s22)``.
    Pass ``check=False`` to skip the stability / positive-definiteness checks,
    which finite-difference stencils need near the boundary.
    """

    __slots__ = ("a", "s", "p")

    def __init__(self, a, s, check=True):
        a = np.array(a, dtype=np.float64)
        s = np.array(s, dtype=np.float64)
        if a.ndim == 0:
            a = a.reshape(1, 1)
        if s.ndim == 0:
            s = s.reshape(1, 1)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or s.shape != a.shape:
            raise DimensionError(f"a and s must be matching square matrices, got {a.shape}, {s.shape}")
        s = 0.5 * (s + s.T)
        a.setflags(write=False)
        s.setflags(write=False)
        self.a = a
        self.s = s
        self.p = a.shape[0]
        if check:
            self.validate()

    def validate(self):
        rho = float(np.max(np.abs(np.linalg.eigvals(self.a))))
        if rho >= 1.0 - STABILITY_MARGIN:
            raise DomainError(f"spectral radius of a is {rho:.8f}, must be < 1 - 1e-6")
        try:
            np.linalg.cholesky(self.s)
        except np.linalg.LinAlgError:
            raise DomainError("s is not positive definite") from None

    @property
    def dim_theta(self) -> int:
        return self.p * self.p + self.p * (self.p + 1) // 2

    @property
    def theta(self) -> np.ndarray:
        iu = np.triu_indices(self.p)
        return np.concatenate([self.a.ravel(), self.s[iu]])

    @classmethod
    def from_theta(cls, theta, p=None, check=True) -> "VarParams":
        theta = np.asarray(theta, dtype=np.float64)
        if p is None:
            # d = p^2 + p(p+1)/2 = (3p^2 + p) / 2
            p = int(round((-1 + math.sqrt(1 + 24 * theta.size)) / 6))
        if theta.size != p * p + p * (p + 1) // 2:
            raise DimensionError(f"theta of length {theta.size} does not match p = {p}")
        a = theta[: p * p].reshape(p, p)
        s = np.zeros((p, p))
        iu = np.triu_indices(p)
        s[iu] = theta[p * p:]
        s = s + np.triu(s, 1).T
        return cls(a, s, check=check)

    @staticmethod
    def theta_names(p: int):
        names = [f"a{i + 1}{j + 1}" for i in range(p) for j in range(p)]
        names += [f"s{i + 1}{j + 1}" for i, j in zip(*np.triu_indices(p))]
        return names

    def with_theta(self, theta, check=False) -> "VarParams":
        return VarParams.from_theta(theta, self.p, check=check)

    def __repr__(self):
        return f"VarParams(a={self.a.tolist()}, s={self.s.tolist()})"

    def __eq__(self, other):
        return (isinstance(other, VarParams) and np.array_equal(self.a, other.a)
                and np.array_equal(self.s, other.s))

    def __hash__(self):
        return hash((self.a.tobytes(), self.s.tobytes()))

    def __reduce__(self):
        return (VarParams, (self.a, self.s, False))


# ---------------------------------------------------------------------------
# pre-periodogram


def _center_twice(u: float, T: int) -> Fraction:
    """``2 u T + 1`` in exact rational arithmetic.

    ``u`` is first snapped to the nearest fraction with denominator at most
    1e9, so ``0.35`` means 7/20 and ``k / T`` means exactly that, not the
    binary float next to it.
    """
    return 2 * Fraction(u).limit_denominator(MAX_DENOMINATOR) * T + 1


def pre_periodogram_lags(panel, u: float) -> Tuple[np.ndarray, np.ndarray]:
    """Lag products entering the pre-periodogram at rescaled time ``u``.

    Returns ``(lags, prods)`` where ``prods[i] = X_{[uT+1/2+l/2]} X_{[uT+1/2-l/2]}^T``
    for every lag ``l = lags[i]`` whose two (1-based) indices lie in ``1..T``.
    """
    if not (0.0 <= u <= 1.0):
        raise DomainError(f"u must lie in [0, 1], got {u}")
    x = as_panel(panel).values
    T = x.shape[0]
    c2 = _center_twice(u, T)
    lags, prods = [], []
    for l in range(-2 * T - 1, 2 * T + 2):
        hi = math.floor((c2 + l) / 2)
        lo = math.floor((c2 - l) / 2)
        if 1 <= hi <= T and 1 <= lo <= T:
            lags.append(l)
            prods.append(np.outer(x[hi - 1], x[lo - 1]))
    p = x.shape[1]
    return np.array(lags, dtype=np.int64), np.array(prods).reshape(-1, p, p)


def lag_series_to_grid(lags, coeffs, grid: FreqGrid) -> np.ndarray:
    """Evaluate ``(1/2pi) sum_l C_l exp(i lambda l)`` at every grid node."""
    lam = grid.nodes
    phase = np.exp(1j * np.outer(lam, lags))
    return np.einsum("nl,lij->nij", phase, coeffs) / TWO_PI


def pre_periodogram(panel, u: float, grid: FreqGrid) -> np.ndarray:
    """Pre-periodogram matrices ``I_T(u, lambda_j)``, shape ``(N, p, p)``.

    Observations with indices outside ``1..T`` contribute nothing (they are
    treated as zero).
    """
    lags, prods = pre_periodogram_lags(panel, u)
    return lag_series_to_grid(lags, prods, grid)


# ---------------------------------------------------------------------------
# parametric spectra


def transfer_inverse(params: VarParams, lam) -> np.ndarray:
    """``I + a exp(i lambda)``; shape ``(p, p)`` or ``(N, p, p)``."""
    lam = np.asarray(lam, dtype=np.float64)
    z = np.exp(1j * lam)
    eye = np.eye(params.p)
    if lam.ndim == 0:
        return eye + params.a * z
    return eye[None] + params.a[None] * z[:, None, None]


def var_spectral_density_grid(params: VarParams, lam) -> np.ndarray:
    """Vectorized :func:`var_spectral_density` over an array of frequencies."""
    lam = np.atleast_1d(np.asarray(lam, dtype=np.float64))
    b = transfer_inverse(params, lam)
    h = np.linalg.solve(b, np.broadcast_to(np.eye(params.p, dtype=complex), b.shape))
    f = h @ params.s @ np.conj(np.swapaxes(h, 1, 2)) / TWO_PI
    return 0.5 * (f + np.conj(np.swapaxes(f, 1, 2)))


def var_spectral_density(params: VarParams, lam: float) -> np.ndarray:
    """``f_theta(lambda)`` for a single frequency."""
    b = transfer_inverse(params, float(lam))
    h = cinv(b)
    f = h @ params.s @ h.conj().T / TWO_PI
    return 0.5 * (f + f.conj().T)


def var_inverse_density_grid(params: VarParams, lam) -> np.ndarray:
    """``f_theta(lambda)^{-1} = 2 pi (I + a^T e^{-i lambda}) s^{-1} (I + a e^{i lambda})``."""
    b = transfer_inverse(params, np.atleast_1d(lam))
    s_inv = np.linalg.inv(params.s)
    return TWO_PI * np.conj(np.swapaxes(b, 1, 2)) @ s_inv @ b


def var_factorization(params: VarParams) -> Tuple[np.ndarray, Callable[[float], np.ndarray]]:
    """Spectral factor ``Lambda(z) = (I + a z)^{-1} s^{1/2}``.

    Returns ``Lambda(0) = s^{1/2}`` and the map ``lambda -> Lambda(e^{i lambda})^{-1}``.
    With this factor ``f_theta(lambda) = (1/2pi) Lambda(e^{i lambda}) Lambda(e^{i lambda})^*``
    and ``Lambda(0) Lambda(0)^* = s``.
    """
    root = psd_sqrt(params.s)
    root_inv = cinv(root)

    def lambda_inv_at(lam: float) -> np.ndarray:
        return root_inv @ transfer_inverse(params, float(lam))

    return root, lambda_inv_at


def spectral_factor_at(params: VarParams, lam: float) -> np.ndarray:
    """``Lambda(e^{i lambda})``."""
    return cinv(transfer_inverse(params, float(lam))) @ psd_sqrt(params.s)


def log_det_density_sum(params: VarParams, grid: FreqGrid) -> float:
    """Rectangle-rule value of ``int log det f_theta`` on ``grid``, in closed form.

    Over the N-th roots of unity ``prod_j (1 + mu e^{i lambda_j}) = 1 - mu^N``
    (N even), so no grid sweep is needed.
    """
    n = grid.count
    sign, logdet_s = np.linalg.slogdet(params.s)
    if sign <= 0:
        raise SingularMatrix("s is not positive definite")
    mu = np.linalg.eigvals(params.a)
    with np.errstate(over="ignore"):
        alias = np.abs(1.0 - mu.astype(complex) ** n)
    if np.any(alias == 0.0) or not np.all(np.isfinite(alias)):
        raise SingularMatrix("I + a exp(i lambda) is singular on the grid")
    logdet_transfer = 2.0 * float(np.sum(np.log(alias)))
    return TWO_PI * (logdet_s - params.p * math.log(TWO_PI)) - grid.weight * logdet_transfer


def kolmogorov_check(params: VarParams, grid: FreqGrid) -> float:
    """Residual ``|det s - exp((1/2pi) int log det 2 pi f_theta)|`` on ``grid``."""
    f = var_spectral_density_grid(params, grid.nodes)
    _, logdet = np.linalg.slogdet(TWO_PI * f)
    integral = float(np.sum(grid.weights * logdet.real)) / TWO_PI
    return abs(float(np.linalg.det(params.s)) - math.exp(integral))
