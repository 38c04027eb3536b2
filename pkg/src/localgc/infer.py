"""Asymptotic covariance, curvature and test statistics for local non-causality."""

from dataclasses import dataclass, field
from typing import Callable, Dict, Optional

import numpy as np
from scipy import special

from localgc.causality import Partition, gc_gradient, gc_value
from localgc.errors import DimensionError, DomainError, SingularMatrix, ZeroGradient
from localgc.spectra import TWO_PI, FreqGrid, VarParams, transfer_inverse, var_spectral_density_grid
from localgc.whittle import KernelSpec, WhittleFit, kernel_l2

LEVELS = (0.01, 0.05, 0.10, 0.15)
MULTIPLIERS = ("corrected", "closed-form", "plugin")
HESSIAN_STEP = 1e-4
GRADIENT_STEP = 1e-5
# below this the optimizer's own resolution dominates the GC gradient
ZERO_GRADIENT_TOL = 1e-6
MAX_CONDITION = 1e10


# ---------------------------------------------------------------------------
# chi-squared distribution


def chisq_cdf(x: float, df: float) -> float:
    if x <= 0.0:
        return 0.0
    return float(special.gammainc(0.5 * df, 0.5 * x))


def chisq_sf(x: float, df: float) -> float:
    if x <= 0.0:
        return 1.0
    return float(special.gammaincc(0.5 * df, 0.5 * x))


def chisq_quantile(df: int, prob: float, tol: float = 1e-10) -> float:
    """Inverse CDF of chi-squared by bisection on the regularized lower incomplete gamma."""
    if df < 1 or int(df) != df:
        raise DomainError(f"df must be a positive integer, got {df}")
    if not (0.0 < prob < 1.0):
        raise DomainError(f"prob must lie in (0, 1), got {prob}")
    lo, hi = 0.0, max(1.0, float(df))
    while chisq_cdf(hi, df) < prob:
        lo, hi = hi, 2.0 * hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if chisq_cdf(mid, df) < prob:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# matrices


def _flat_derivatives(p):
    """Unit perturbation directions (da, ds) for each theta coordinate."""
    dirs = []
    for i in range(p):
        for j in range(p):
            da = np.zeros((p, p))
            da[i, j] = 1.0
            dirs.append((da, np.zeros((p, p))))
    for i, j in zip(*np.triu_indices(p)):
        ds = np.zeros((p, p))
        ds[i, j] = ds[j, i] = 1.0
        dirs.append((np.zeros((p, p)), ds))
    return dirs


def inverse_density_derivatives(params: VarParams, grid: FreqGrid) -> np.ndarray:
    """``d f_theta^{-1} / d theta_a`` on the grid, shape ``(d, N, p, p)``.

    ``f^{-1} = 2pi B^* s^{-1} B`` with ``B = I + a e^{i lambda}``.
    """
    lam = grid.nodes
    z = np.exp(1j * lam)[:, None, None]
    b = transfer_inverse(params, lam)
    bh = np.conj(np.swapaxes(b, 1, 2))
    s_inv = np.linalg.inv(params.s)
    out = []
    for da, ds in _flat_derivatives(params.p):
        db = da[None] * z
        dbh = np.conj(np.swapaxes(db, 1, 2))
        ds_inv = -s_inv @ ds @ s_inv
        out.append(TWO_PI * (dbh @ s_inv @ b + bh @ s_inv @ db + bh @ ds_inv @ b))
    return np.array(out)


def plugin_divergence(params: VarParams, target: VarParams, grid: FreqGrid) -> float:
    """``int log det f_params + tr(f_target f_params^{-1})`` on the grid."""
    f_t = var_spectral_density_grid(target, grid.nodes)
    f = var_spectral_density_grid(params, grid.nodes)
    _, logdet = np.linalg.slogdet(f)
    tr = np.einsum("nij,nji->n", f_t, np.linalg.inv(f)).real
    return float(grid.weight * np.sum(logdet.real + tr))


def _central_hessian(fun: Callable[[np.ndarray], float], x: np.ndarray, rel_step: float) -> np.ndarray:
    d = x.size
    h = rel_step * (1.0 + np.abs(x))
    f0 = fun(x)
    hess = np.empty((d, d))
    for i in range(d):
        ei = np.zeros(d)
        ei[i] = h[i]
        hess[i, i] = (fun(x + ei) - 2.0 * f0 + fun(x - ei)) / (h[i] * h[i])
        for j in range(i + 1, d):
            ej = np.zeros(d)
            ej[j] = h[j]
            val = (fun(x + ei + ej) - fun(x + ei - ej) - fun(x - ei + ej) + fun(x - ei - ej)) / (4.0 * h[i] * h[j])
            hess[i, j] = hess[j, i] = val
    return 0.5 * (hess + hess.T)


def whittle_curvature(params: VarParams, grid: FreqGrid) -> np.ndarray:
    """Hessian of the plug-in divergence ``theta -> L(theta)`` at ``params``."""
    return _central_hessian(lambda t: plugin_divergence(params.with_theta(t), params, grid),
                            params.theta, HESSIAN_STEP)


def asymptotic_variance(params: VarParams, kernel: KernelSpec, grid: FreqGrid,
                        fourth_order: Optional[Callable[[VarParams], np.ndarray]] = None,
                        curvature: Optional[np.ndarray] = None) -> np.ndarray:
    """Sandwich ``M^{-1} V_theta M^{-1}`` of the local Whittle estimator.

    ``V_theta[a, b] = 4pi int K^2 int tr(f d_a f^{-1} f d_b f^{-1})`` is evaluated
    with ``f = f_theta`` (Gaussian innovations). ``fourth_order``, if given,
    returns the already-integrated cumulant contribution (a ``d x d`` matrix)
    added inside the bracket.
    """
    f = var_spectral_density_grid(params, grid.nodes)
    dinv = inverse_density_derivatives(params, grid)
    prod = f[None] @ dinv  # (d, N, p, p)
    inner = np.einsum("anij,bnji->ab", prod, prod).real * grid.weight
    if fourth_order is not None:
        inner = inner + np.asarray(fourth_order(params), dtype=float)
    v_theta = 2.0 * TWO_PI * kernel_l2(kernel) * inner
    m = whittle_curvature(params, grid) if curvature is None else curvature
    if np.linalg.cond(m) > MAX_CONDITION:
        raise SingularMatrix("curvature matrix of the divergence is numerically singular")
    m_inv = np.linalg.inv(m)
    v = m_inv @ v_theta @ m_inv
    v = 0.5 * (v + v.T)
    w, q = np.linalg.eigh(v)
    return (q * np.clip(w, 0.0, None)) @ q.T


def curvature_H(params: VarParams, part: Partition, grid: FreqGrid) -> np.ndarray:
    """``(1/2pi) int d^2 FGC / d theta d theta^T`` by central second differences of GC."""
    return _central_hessian(lambda t: gc_value(params.with_theta(t), part, grid),
                            params.theta, HESSIAN_STEP)


# ---------------------------------------------------------------------------
# statistics


@dataclass
class TestResult:
    at_u: float
    statistic: float
    statistic_kind: str
    reference: str
    df: Optional[int]
    p_value: Optional[float]
    reject_at: Dict[float, bool] = field(default_factory=dict)
    gc: float = float("nan")

    __test__ = False  # not a pytest class


def _decisions(statistic: float, df: int, levels) -> Dict[float, bool]:
    return {lvl: bool(statistic > chisq_quantile(df, 1.0 - lvl)) for lvl in levels}


def tilde_dagger_multiplier(params: VarParams, kernel: KernelSpec) -> float:
    """Reference closed-form bivariate multiplier.

    ``s11^4 / (int K^2 (1 + a11^2 - 2 a11 a22) (s11 s22 - s12^2)^2)``. Only
    ``a11^2`` and ``a11 a22`` enter, so the sign convention of ``a`` does not
    matter. This constant disagrees with the curvature of GC whenever
    ``a11 != 0`` or ``s != I``; see :func:`corrected_multiplier`.
    """
    if params.p != 2:
        raise DimensionError(f"the closed-form statistic needs a bivariate model, got p = {params.p}")
    a11, a22 = params.a[0, 0], params.a[1, 1]
    s11, s12, s22 = params.s[0, 0], params.s[0, 1], params.s[1, 1]
    denom = (1.0 + a11 * a11 - 2.0 * a11 * a22) * (s11 * s22 - s12 * s12) ** 2
    if denom <= 0.0:
        raise SingularMatrix("degenerate denominator in the closed-form statistic")
    return s11 ** 4 / (kernel_l2(kernel) * denom)


def corrected_multiplier(kernel: KernelSpec) -> float:
    """``1 / int K^2``.

    For the bivariate VAR(1) family at ``a12 = 0`` with uncorrelated
    innovations the only nonzero curvature entry satisfies
    ``H[a12, a12] V[a12, a12] / 2 = int K^2`` whatever the remaining
    parameters, so ``T b_T GC / int K^2`` is asymptotically chi-squared(1).
    With ``s12 != 0`` the identity is only approximate; use
    :func:`plugin_multiplier` there.
    """
    return 1.0 / kernel_l2(kernel)


def plugin_multiplier(params: VarParams, part: Partition, kernel: KernelSpec, grid: FreqGrid,
                      index: int = 1) -> float:
    """``2 / (H[i, i] V[i, i])`` for the coupling coordinate ``i`` (default ``a12``).

    Uses the numerically computed curvature and covariance instead of a
    closed form; reduces ``2 T b GC`` to chi-squared(1) when ``H`` is
    concentrated on that single coordinate.
    """
    h = curvature_H(params, part, grid)
    v = asymptotic_variance(params, kernel, grid)
    prod = h[index, index] * v[index, index]
    if prod <= 0.0:
        raise SingularMatrix("plug-in curvature times variance is not positive")
    return 2.0 / prod


def stat_tilde_dagger(fit: WhittleFit, kernel: KernelSpec, T: int, grid: FreqGrid, c: float = 0.0,
                      part: Partition = Partition(), multiplier_params: Optional[VarParams] = None,
                      multiplier: str = "corrected", levels=LEVELS) -> TestResult:
    """Scaled statistic ``T b_T * multiplier * (GC(theta_hat) - c)`` referred to chi-squared(1).

    ``multiplier`` selects the scaling: ``"corrected"`` (default, ``1/int K^2``),
    ``"closed-form"`` (:func:`tilde_dagger_multiplier`) or
    ``"plugin"`` (numerical curvature and covariance). ``multiplier_params``
    replaces ``theta_hat`` inside the multiplier (oracle mode).
    """
    params = fit.theta_hat
    if params.p != 2:
        raise DimensionError(f"S~dagger needs a bivariate model, got p = {params.p}")
    mparams = params if multiplier_params is None else multiplier_params
    if multiplier == "closed-form":
        mult = tilde_dagger_multiplier(mparams, kernel)
    elif multiplier == "corrected":
        mult = corrected_multiplier(kernel)
    elif multiplier == "plugin":
        mult = plugin_multiplier(mparams, part, kernel, grid)
    else:
        raise DomainError(f"unknown multiplier {multiplier!r}")
    gc = gc_value(params, part, grid)
    stat = T * kernel.bandwidth * mult * (gc - c)
    return TestResult(
        at_u=fit.at_u, statistic=float(stat), statistic_kind="S_tilde_dagger",
        reference="ChiSq", df=1, p_value=chisq_sf(stat, 1),
        reject_at=_decisions(stat, 1, levels), gc=gc,
    )


def quadratic_form_draws(V: np.ndarray, H: np.ndarray, n_draws: int = 100_000,
                         rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Samples of ``Z^T H Z`` with ``Z ~ N(0, V)``."""
    rng = np.random.default_rng(0) if rng is None else rng
    w, q = np.linalg.eigh(0.5 * (V + V.T))
    root = q * np.sqrt(np.clip(w, 0.0, None))
    z = rng.standard_normal((n_draws, V.shape[0])) @ root.T
    return np.einsum("ni,ij,nj->n", z, H, z)


def stat_dagger(fit: WhittleFit, kernel: KernelSpec, T: int, grid: FreqGrid, V: np.ndarray,
                H: np.ndarray, part: Partition = Partition(), n_draws: int = 100_000,
                rng: Optional[np.random.Generator] = None, levels=LEVELS) -> TestResult:
    """``2 T b_T GC(theta_hat)`` against the quadratic form ``N(0,V)^T H N(0,V)``."""
    gc = gc_value(fit.theta_hat, part, grid)
    stat = 2.0 * T * kernel.bandwidth * gc
    qf = quadratic_form_draws(V, H, n_draws, rng)
    pval = float(np.mean(qf >= stat))
    reject = {lvl: bool(stat > np.quantile(qf, 1.0 - lvl)) for lvl in levels}
    return TestResult(at_u=fit.at_u, statistic=float(stat), statistic_kind="S_dagger",
                      reference="QuadraticForm", df=None, p_value=pval, reject_at=reject, gc=gc)


def stat_wald(fit: WhittleFit, c: float, gc_grad: np.ndarray, V: np.ndarray, T: int,
              kernel: KernelSpec, grid: Optional[FreqGrid] = None, part: Partition = Partition(),
              gc: Optional[float] = None, df: Optional[int] = None, levels=LEVELS) -> TestResult:
    """Wald statistic ``T b_T (GC - c)^2 / (grad^T V grad)`` for ``H0: GC = c > 0``.

    The reference is chi-squared with ``df = d`` (the parameter dimension)
    unless ``df`` is given.
    """
    if not c > 0.0:
        raise DomainError(f"the Wald statistic needs c > 0, got {c}")
    g = np.asarray(gc_grad, dtype=float)
    if np.linalg.norm(g) <= ZERO_GRADIENT_TOL:
        raise ZeroGradient("GC gradient vanishes; use the S~dagger statistic instead")
    if gc is None:
        if grid is None:
            raise DomainError("either gc or grid must be supplied")
        gc = gc_value(fit.theta_hat, part, grid)
    sandwich = float(g @ V @ g)
    if not sandwich > 0.0:
        raise SingularMatrix("gradient sandwich grad^T V grad is not positive")
    stat = T * kernel.bandwidth * (gc - c) ** 2 / sandwich
    dof = g.size if df is None else int(df)
    return TestResult(at_u=fit.at_u, statistic=float(stat), statistic_kind="S_wald",
                      reference="ChiSq", df=dof, p_value=chisq_sf(stat, dof),
                      reject_at=_decisions(stat, dof, levels), gc=float(gc))


def wald_inputs(fit: WhittleFit, kernel: KernelSpec, grid: FreqGrid, part: Partition = Partition()):
    """Gradient of GC and plug-in covariance at ``theta_hat``."""
    grad = gc_gradient(fit.theta_hat, part, grid, GRADIENT_STEP)
    V = asymptotic_variance(fit.theta_hat, kernel, grid)
    return grad, V
