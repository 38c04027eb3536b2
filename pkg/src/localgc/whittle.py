"""Kernels, spectral divergences and the local Whittle estimator."""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate, optimize

from localgc.errors import DomainError, NotConverged, SingularMatrix
from localgc.procsim import as_panel
from localgc.spectra import (
    STABILITY_MARGIN,
    TWO_PI,
    FreqGrid,
    VarParams,
    lag_series_to_grid,
    log_det_density_sum,
    var_inverse_density_grid,
    var_spectral_density_grid,
)

logger = logging.getLogger(__name__)

KERNEL_KINDS = ("epanechnikov", "uniform", "triangular")

_KERNELS = {
    "epanechnikov": (lambda x: 0.75 * (1.0 - x * x), 3.0 / 5.0),
    "uniform": (lambda x: 0.5 + 0.0 * x, 0.5),
    "triangular": (lambda x: 1.0 - np.abs(x), 2.0 / 3.0),
}


@dataclass(frozen=True)
class KernelSpec:
    """Smoothing kernel on ``[-1, 1]`` with bandwidth ``b_T`` in rescaled time."""

    kind: str = "epanechnikov"
    bandwidth: float = 0.2

    def __post_init__(self):
        kind = self.kind.lower()
        if kind not in _KERNELS:
            raise DomainError(f"kernel must be one of {KERNEL_KINDS}, got {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if not (0.0 < self.bandwidth <= 1.0):
            raise DomainError(f"bandwidth must lie in (0, 1], got {self.bandwidth}")
        mass, _ = integrate.quad(self.__call__, -1.0, 1.0, epsabs=1e-13, epsrel=1e-13)
        if abs(mass - 1.0) > 1e-10:
            raise DomainError(f"kernel {kind} integrates to {mass}, not 1")

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        k = _KERNELS[self.kind][0](x)
        return np.where(np.abs(x) <= 1.0, k, 0.0)


def default_bandwidth(length: int) -> float:
    """Window of ``4 T^{1/3}`` observations, i.e. ``b_T = 4 T^{-2/3}`` (capped at 1)."""
    return min(1.0, 4.0 * float(length) ** (-2.0 / 3.0))


def kernel_l2(spec: KernelSpec) -> float:
    """Closed-form ``int K(v)^2 dv``."""
    return _KERNELS[spec.kind][1]


def kernel_weights(spec: KernelSpec, u: float, T: int) -> np.ndarray:
    """``w_k = K((u - k/T) / b_T) / (T b_T)`` for ``k = 1..T`` (no edge renormalization)."""
    if not (0.0 <= u <= 1.0):
        raise DomainError(f"u must lie in [0, 1], got {u}")
    k = np.arange(1, T + 1)
    b = spec.bandwidth
    return spec((u - k / T) / b) / (T * b)


# ---------------------------------------------------------------------------
# divergences


def _eval_true_density(f_true, grid: FreqGrid) -> np.ndarray:
    if isinstance(f_true, np.ndarray):
        return f_true
    lam = grid.nodes
    try:
        vals = np.asarray(f_true(lam))
        if vals.ndim == 3 and vals.shape[0] == lam.size:
            return vals
    except Exception:  # scalar-only callables
        pass
    return np.array([f_true(x) for x in lam])


def _divergence_on_grid(params: VarParams, target: np.ndarray, grid: FreqGrid, mass: float) -> float:
    f = var_spectral_density_grid(params, grid.nodes)
    sign, logdet = np.linalg.slogdet(f)
    if np.any(np.abs(sign) == 0):
        raise SingularMatrix("f_theta is singular at a grid node")
    f_inv = var_inverse_density_grid(params, grid.nodes)
    tr = np.einsum("nij,nji->n", target, f_inv).real
    return float(grid.weight * (mass * np.sum(logdet.real) + np.sum(tr)))


def spectral_divergence(params: VarParams, f_true, grid: FreqGrid) -> float:
    """``sum_j g_j [log det f_theta + tr(f_true f_theta^{-1})]``.

    ``f_true`` is either an ``(N, p, p)`` array of values at the grid nodes or
    a callable of the frequency.
    """
    return _divergence_on_grid(params, _eval_true_density(f_true, grid), grid, 1.0)


class LocalPeriodogram:
    """Kernel-aggregated pre-periodogram around one rescaled time ``u``.

    Holds ``W = sum_k w_k`` and the weighted lag products
    ``C_l = sum_k w_k X_{[k+1/2+l/2]} X_{[k+1/2-l/2]}^T``, which are all the
    data the local Whittle objective needs. Computed once, reused for every
    parameter value.
    """

    def __init__(self, panel, u: float, kernel: KernelSpec, grid: FreqGrid):
        self.panel = as_panel(panel)
        self.u = float(u)
        self.kernel = kernel
        self.grid = grid
        x = self.panel.values
        T, p = x.shape
        w = kernel_weights(kernel, self.u, T)
        self.k_idx = np.nonzero(w)[0] + 1
        self.w = w[self.k_idx - 1]
        self.mass = float(np.sum(self.w))
        # zero padding implements the "both indices in 1..T" restriction
        self._pad = np.zeros((3 * T + 2, p))
        self._pad[T + 1:2 * T + 1] = x
        self._offset = T
        self.T, self.p = T, p
        n = grid.count
        self.folded = {r: self._folded_lag(r, n) for r in (-1, 0, 1)}

    def lag_sum(self, l: int) -> np.ndarray:
        if self.k_idx.size == 0:
            return np.zeros((self.p, self.p))
        hi = self.k_idx + (1 + l) // 2 + self._offset
        lo = self.k_idx + (1 - l) // 2 + self._offset
        ok = (hi >= 1 + self._offset) & (hi <= self.T + self._offset) & \
             (lo >= 1 + self._offset) & (lo <= self.T + self._offset)
        if not np.any(ok):
            return np.zeros((self.p, self.p))
        xh = self._pad[hi[ok]]
        xl = self._pad[lo[ok]]
        return (xh * self.w[ok, None]).T @ xl

    def _folded_lag(self, r: int, n: int) -> np.ndarray:
        """Sum of ``C_l`` over all valid ``l`` congruent to ``r`` mod ``n``."""
        out = np.zeros((self.p, self.p))
        max_lag = 2 * self.T + 1
        l = r - ((r + max_lag) // n) * n
        while l <= max_lag:
            if abs(l) <= max_lag:
                out += self.lag_sum(l)
            l += n
        return out

    def all_lags(self):
        lags = np.arange(-2 * self.T - 1, 2 * self.T + 2)
        return lags, np.array([self.lag_sum(int(l)) for l in lags])

    def on_grid(self) -> np.ndarray:
        """``sum_k w_k I_T(u_k, lambda_j)`` at every node, shape ``(N, p, p)``."""
        lags, coeffs = self.all_lags()
        keep = np.any(coeffs != 0.0, axis=(1, 2))
        return lag_series_to_grid(lags[keep], coeffs[keep], self.grid)

    def local_covariance(self) -> np.ndarray:
        """Kernel-weighted local covariance ``C_0 / W``."""
        if self.mass <= 0.0:
            raise DomainError(f"no kernel mass at u = {self.u}")
        return self.folded[0] / self.mass

    def objective(self, params: VarParams) -> float:
        """Local Whittle objective ``L_T(theta, u)`` on the grid, in closed form.

        ``f_theta^{-1}`` is a trigonometric polynomial of degree one, so the
        rectangle rule picks out only the lag classes -1, 0, 1 (mod N).
        """
        a, s = params.a, params.s
        s_inv = np.linalg.inv(s)
        d0, dp, dm = self.folded[0], self.folded[1], self.folded[-1]
        q = d0 + a @ d0 @ a.T + a @ dm + dp @ a.T
        return self.mass * log_det_density_sum(params, self.grid) + TWO_PI * float(np.sum(s_inv * q))


def sample_divergence(params: VarParams, panel, u: float, kernel: KernelSpec, grid: FreqGrid,
                      cache: Optional[LocalPeriodogram] = None) -> float:
    """Kernel-weighted local Whittle divergence evaluated node by node on ``grid``.

    This is the direct quadrature; :meth:`LocalPeriodogram.objective` gives the
    same number without the grid sweep.
    """
    if cache is None:
        cache = LocalPeriodogram(panel, u, kernel, grid)
    target = getattr(cache, "_grid_cache", None)
    if target is None:
        target = cache.on_grid()
        cache._grid_cache = target
    return _divergence_on_grid(params, target, grid, cache.mass)


# ---------------------------------------------------------------------------
# optimizer


NM_MAXITER = 2000
NM_XATOL = 1e-8
NM_FATOL = 1e-10
PENALTY = 1e6


@dataclass
class WhittleFit:
    """Result of one local Whittle fit.

    ``theta_hat.a`` is in the ``(I + a e^{i lambda})`` convention; the
    corresponding recursion coefficient is ``recursion_coeff = -a``.
    """

    at_u: float
    theta_hat: VarParams
    objective: float
    converged: bool
    iterations: int
    init_objective: float
    nfev: int = 0
    cov: Optional[np.ndarray] = None
    trace: list = field(default_factory=list, repr=False)

    @property
    def recursion_coeff(self) -> np.ndarray:
        return -self.theta_hat.a


class _Reparam:
    """``x = (vec a, lower Cholesky factor of s)`` <-> ``VarParams``."""

    def __init__(self, p):
        self.p = p
        self.il = np.tril_indices(p)

    def to_x(self, params: VarParams) -> np.ndarray:
        chol = np.linalg.cholesky(params.s)
        return np.concatenate([params.a.ravel(), chol[self.il]])

    def split(self, x):
        p = self.p
        a = x[: p * p].reshape(p, p)
        chol = np.zeros((p, p))
        chol[self.il] = x[p * p:]
        return a, chol

    def to_params(self, x) -> VarParams:
        a, chol = self.split(x)
        return VarParams(a, chol @ chol.T, check=False)


def _penalized_bivariate(cache: LocalPeriodogram):
    """Scalar-arithmetic version of the penalized objective for ``p = 2``.

    Same value as the generic path; avoids numpy call overhead, which
    dominates for 2 x 2 matrices.
    """
    n = cache.grid.count
    wgt = cache.grid.weight
    mass = cache.mass
    const = TWO_PI * mass * (-2.0 * math.log(TWO_PI))
    (d11, d12), (d21, d22) = cache.folded[0].tolist()
    (p11, p12), (p21, p22) = cache.folded[1].tolist()
    (m11, m12), (m21, m22) = cache.folded[-1].tolist()
    limit = 1.0 - STABILITY_MARGIN

    def fun(x):
        a11, a12, a21, a22, l11, l21, l22 = x.tolist()
        if abs(l11) < 1e-150 or abs(l22) < 1e-150:
            return math.inf
        s11 = l11 * l11
        s12 = l11 * l21
        s22 = l21 * l21 + l22 * l22
        det_s = (l11 * l22) ** 2
        # eigenvalues of a
        half_tr = 0.5 * (a11 + a22)
        det_a = a11 * a22 - a12 * a21
        disc = half_tr * half_tr - det_a
        root = complex(disc) ** 0.5
        mu1 = half_tr + root
        mu2 = half_tr - root
        rho = max(abs(mu1), abs(mu2))
        try:
            alias = abs(1.0 - mu1 ** n) * abs(1.0 - mu2 ** n)
        except OverflowError:
            return math.inf
        if alias == 0.0 or not math.isfinite(alias):
            return math.inf
        logdet = TWO_PI * mass * math.log(det_s) + const - wgt * mass * 2.0 * math.log(alias)
        # q = d0 + a d0 a^T + a dm + dp a^T
        ad11 = a11 * d11 + a12 * d21
        ad12 = a11 * d12 + a12 * d22
        ad21 = a21 * d11 + a22 * d21
        ad22 = a21 * d12 + a22 * d22
        q11 = d11 + ad11 * a11 + ad12 * a12 + (a11 * m11 + a12 * m21) + (p11 * a11 + p12 * a12)
        q12 = d12 + ad11 * a21 + ad12 * a22 + (a11 * m12 + a12 * m22) + (p11 * a21 + p12 * a22)
        q21 = d21 + ad21 * a11 + ad22 * a12 + (a21 * m11 + a22 * m21) + (p21 * a11 + p22 * a12)
        q22 = d22 + ad21 * a21 + ad22 * a22 + (a21 * m12 + a22 * m22) + (p21 * a21 + p22 * a22)
        tr = (s22 * q11 - s12 * (q12 + q21) + s11 * q22) / det_s
        val = logdet + TWO_PI * tr
        excess = rho - limit
        if excess > 0.0:
            val += PENALTY * excess * excess
        return val if math.isfinite(val) else math.inf
    return fun


def _penalized(cache: LocalPeriodogram, rep: _Reparam):
    if rep.p == 2:
        return _penalized_bivariate(cache)

    def fun(x):
        a, chol = rep.split(x)
        diag = np.abs(np.diag(chol))
        if np.any(diag < 1e-150):
            return np.inf
        rho = float(np.max(np.abs(np.linalg.eigvals(a))))
        excess = rho - (1.0 - STABILITY_MARGIN)
        penalty = PENALTY * excess * excess if excess > 0 else 0.0
        val = cache.objective(VarParams(a, chol @ chol.T, check=False))
        if not math.isfinite(val):
            return np.inf
        return val + penalty
    return fun


def _central_gradient(fun, x, rel_step=1e-6):
    g = np.empty_like(x)
    for i in range(x.size):
        h = rel_step * (1.0 + abs(x[i]))
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (fun(x + e) - fun(x - e)) / (2.0 * h)
    return g


def local_whittle_fit(panel, u: float, kernel: KernelSpec, grid: Optional[FreqGrid] = None,
                      init: Optional[VarParams] = None, cache: Optional[LocalPeriodogram] = None,
                      record_trace: bool = False) -> WhittleFit:
    """Minimize the local Whittle objective at rescaled time ``u``.

    Nelder-Mead (standard coefficients, up to 2000 iterations) followed by a
    BFGS polish with central-difference gradients. ``s`` is searched through
    its Cholesky factor; leaving the stable region costs ``1e6 * excess^2``.

    A fit whose simplex did not meet the tolerances (objective spread 1e-10,
    diameter 1e-8) and whose polish did not succeed comes back with
    ``converged=False``. Degenerate data raise NotConverged.
    """
    panel = as_panel(panel)
    panel.check_estimable()
    if not (0.0 <= u <= 1.0):
        raise DomainError(f"u must lie in [0, 1], got {u}")
    if grid is None:
        from localgc.spectra import default_grid
        grid = default_grid(panel.length)
    if cache is None:
        cache = LocalPeriodogram(panel, u, kernel, grid)
    p = panel.dim
    rep = _Reparam(p)

    if init is None:
        try:
            cov = cache.local_covariance()
            np.linalg.cholesky(cov)
        except (DomainError, np.linalg.LinAlgError):
            raise NotConverged(f"local covariance at u={u} is degenerate; cannot initialize") from None
        init = VarParams(np.zeros((p, p)), cov, check=False)
    try:
        x0 = rep.to_x(init)
    except np.linalg.LinAlgError:
        raise NotConverged("initial s is not positive definite") from None

    fun = _penalized(cache, rep)
    f0 = fun(x0)
    if not math.isfinite(f0):
        raise NotConverged(f"objective is not finite at the initial point (u={u})")

    trace = []
    def callback(xk):
        trace.append(float(fun(xk)))

    nm = optimize.minimize(
        fun, x0, method="Nelder-Mead", callback=callback if record_trace else None,
        options={"maxiter": NM_MAXITER, "maxfev": 20 * NM_MAXITER,
                 "xatol": NM_XATOL, "fatol": NM_FATOL, "adaptive": False},
    )
    x_best, f_best = nm.x, float(nm.fun)
    nfev = int(nm.nfev)
    iterations = int(nm.nit)

    bfgs = optimize.minimize(fun, x_best, method="BFGS", jac=lambda x: _central_gradient(fun, x),
                             options={"gtol": 1e-8, "maxiter": 200})
    nfev += int(bfgs.nfev) * (2 * x_best.size + 1)
    iterations += int(bfgs.nit)
    bfgs_ok = bool(bfgs.success) or bfgs.status == 2  # status 2: precision loss at optimum
    if math.isfinite(bfgs.fun) and bfgs.fun <= f_best:
        x_best, f_best = bfgs.x, float(bfgs.fun)
        if record_trace:
            trace.append(f_best)

    params = rep.to_params(x_best)
    if not np.all(np.isfinite(params.theta)) or not math.isfinite(f_best):
        raise NotConverged(f"optimizer produced non-finite parameters at u={u}")
    converged = bool(nm.success) or bfgs_ok
    try:
        params.validate()
    except DomainError:
        converged = False
    fit = WhittleFit(
        at_u=float(u), theta_hat=params, objective=f_best, converged=converged,
        iterations=iterations, init_objective=float(f0), nfev=nfev, trace=trace,
    )
    if not converged:
        logger.debug("local Whittle fit at u=%.4f did not converge", u)
    return fit
