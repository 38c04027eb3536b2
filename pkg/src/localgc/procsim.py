"""Time-varying VAR(1) simulation and multichannel CSV input/output."""

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from localgc.cxla import psd_sqrt
from localgc.errors import DimensionError, DomainError, EmptyFile, ParseError, RaggedRows

STABILITY_GRID = 1000


@dataclass(frozen=True)
class TimeSeriesPanel:
    """A ``T x p`` block of real observations with optional channel labels."""

    values: np.ndarray
    labels: Optional[tuple] = None

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        if v.ndim == 1:
            v = v.reshape(-1, 1)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise DimensionError(f"panel values must be a non-empty T x p matrix, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise DomainError("panel contains NaN or Inf")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if self.labels is not None:
            labels = tuple(str(x) for x in self.labels)
            if len(labels) != v.shape[1]:
                raise DimensionError(f"{len(labels)} labels for {v.shape[1]} channels")
            object.__setattr__(self, "labels", labels)

    @property
    def length(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def column_labels(self):
        if self.labels is not None:
            return list(self.labels)
        return [f"x{j + 1}" for j in range(self.dim)]

    def check_estimable(self):
        """Raise unless there are at least ``2 p`` observations."""
        if self.length < 2 * self.dim:
            raise DomainError(
                f"need at least 2*p = {2 * self.dim} observations, got {self.length}"
            )


def as_panel(x) -> TimeSeriesPanel:
    return x if isinstance(x, TimeSeriesPanel) else TimeSeriesPanel(np.asarray(x))


# ---------------------------------------------------------------------------
# coefficient profiles


def _check_unit(u):
    arr = np.asarray(u, dtype=np.float64)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
        raise DomainError(f"rescaled time must lie in [0, 1], got {u!r}")
    return arr


def ramp_a12_v1(u):
    """Ramp from 0 to 1/2 between ``u = 1/pi`` and ``u = 2/pi``."""
    arr = _check_unit(u)
    out = np.clip(math.pi * (arr - 1.0 / math.pi) / 2.0, 0.0, 0.5)
    return float(out) if out.ndim == 0 else out


def ramp_a12_v2(u):
    """Zero up to ``u = 5/(2 pi)``, then linear with slope ``pi/2``."""
    arr = _check_unit(u)
    out = np.maximum(0.5 * math.pi * (arr - 2.5 / math.pi), 0.0)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# generator spec


def spectral_radius(a) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(np.asarray(a, dtype=float)))))


@dataclass(frozen=True)
class TvVarSpec:
    """Generator ``X_t = A(t/T) X_{t-1} + eps_t`` with ``eps_t ~ N(0, innov_cov)``.

    ``coeff`` maps rescaled time to a ``p x p`` matrix. Stability is checked
    on a 1000-point grid of ``[0, 1]`` at construction.
    """

    coeff: Callable[[float], np.ndarray]
    innov_cov: np.ndarray
    seed: int = 0
    burn_in: int = 0
    name: str = "custom"
    dim: int = field(init=False)

    def __post_init__(self):
        cov = np.array(self.innov_cov, dtype=np.float64)
        if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
            raise DimensionError("innov_cov must be square")
        if not np.allclose(cov, cov.T, atol=1e-12):
            raise DomainError("innov_cov must be symmetric")
        if np.linalg.eigvalsh(cov).min() < -1e-10:
            raise DomainError("innov_cov must be positive semidefinite")
        cov.setflags(write=False)
        object.__setattr__(self, "innov_cov", cov)
        object.__setattr__(self, "dim", cov.shape[0])
        if self.burn_in < 0:
            raise DomainError("burn_in must be >= 0")
        for u in np.linspace(0.0, 1.0, STABILITY_GRID):
            a = np.asarray(self.coeff(float(u)), dtype=float)
            if a.shape != cov.shape:
                raise DimensionError(f"A(u) has shape {a.shape}, expected {cov.shape}")
            rho = spectral_radius(a)
            if rho >= 1.0:
                raise DomainError(f"A({u:.4f}) has spectral radius {rho:.4f} >= 1")

    def coeff_at(self, u: float) -> np.ndarray:
        return np.asarray(self.coeff(u), dtype=np.float64)


def constant_spec(a, innov_cov=None, seed=0, burn_in=0, name="constant") -> TvVarSpec:
    a = np.array(a, dtype=np.float64)
    cov = np.eye(a.shape[0]) if innov_cov is None else innov_cov
    return TvVarSpec(lambda u: a, cov, seed=seed, burn_in=burn_in, name=name)


def model_spec(model: str, seed: int = 0, burn_in: int = 0) -> TvVarSpec:
    """Named generators.

    ``i`` and ``ii`` use the 0 -> 1/2 ramp with diagonals (1/2, 1/2) and
    (7/10, 3/10); ``power`` uses the late ramp with diagonal (1/2, 1/2);
    ``null`` has no coupling at all.
    """
    key = model.lower()
    if key in ("i", "model_i", "modeli"):
        diag, ramp = (0.5, 0.5), ramp_a12_v1
    elif key in ("ii", "model_ii", "modelii"):
        diag, ramp = (0.7, 0.3), ramp_a12_v1
    elif key in ("power", "powermodel", "power_model"):
        diag, ramp = (0.5, 0.5), ramp_a12_v2
    elif key == "null":
        diag, ramp = (0.5, 0.5), lambda u: 0.0
    else:
        raise DomainError(f"unknown model {model!r}")

    def coeff(u, _d=diag, _r=ramp):
        return np.array([[_d[0], _r(u)], [0.0, _d[1]]])

    return TvVarSpec(coeff, np.eye(2), seed=seed, burn_in=burn_in, name=key)


def causal_profile(model: str):
    """True coupling ``a12(u)`` of a named model."""
    key = model.lower()
    if key in ("i", "ii", "model_i", "model_ii", "modeli", "modelii"):
        return ramp_a12_v1
    if key in ("power", "powermodel", "power_model"):
        return ramp_a12_v2
    if key == "null":
        return lambda u: 0.0
    raise DomainError(f"unknown model {model!r}")


# ---------------------------------------------------------------------------
# simulation


def replicate_rng(seed: int, replicate: int = 0, attempt: int = 0) -> np.random.Generator:
    """Counter-based stream keyed by ``(seed, replicate, attempt)``.

    Streams for different replicates are independent of the order in which
    replicates are drawn.
    """
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, int(replicate), int(attempt)])
    return np.random.Generator(np.random.Philox(ss))


def simulate_tvvar(spec: TvVarSpec, length: int, replicate: int = 0, attempt: int = 0,
                   rng: Optional[np.random.Generator] = None) -> TimeSeriesPanel:
    """Draw ``length`` observations from ``spec``.

    The recursion starts from ``X_0 = 0`` so ``X_1 = eps_1``. With
    ``spec.burn_in = n`` a pre-sample of ``n`` steps run at ``A(0)`` is
    discarded and its last state used as ``X_0``.
    """
    if length < 2:
        raise DomainError("T must be >= 2")
    if rng is None:
        rng = replicate_rng(spec.seed, replicate, attempt)
    p = spec.dim
    root = psd_sqrt(spec.innov_cov).real
    n_total = spec.burn_in + length
    eps = rng.standard_normal((n_total, p)) @ root.T

    x = np.zeros(p)
    a0 = spec.coeff_at(0.0)
    for t in range(spec.burn_in):
        x = a0 @ x + eps[t]
    out = np.empty((length, p))
    for t in range(1, length + 1):
        x = spec.coeff_at(t / length) @ x + eps[spec.burn_in + t - 1]
        out[t - 1] = x
    return TimeSeriesPanel(out, labels=tuple(f"x{j + 1}" for j in range(p)))


# ---------------------------------------------------------------------------
# CSV


def _parse_float(tok: str) -> Optional[float]:
    try:
        v = float(tok)
    except ValueError:
        return None
    return v


def load_csv(path) -> TimeSeriesPanel:
    """Read a comma-separated panel (rows are observations).

    A first row made entirely of non-numeric tokens is taken as the header.
    Row and column numbers in errors are 1-based positions in the file.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh)]
    rows = [r for r in rows if r and any(tok.strip() for tok in r)]
    if not rows:
        raise EmptyFile(f"{path}: no data")

    labels = None
    start = 0
    first = [tok.strip() for tok in rows[0]]
    if all(_parse_float(tok) is None for tok in first):
        labels = tuple(first)
        start = 1
    if start >= len(rows):
        raise EmptyFile(f"{path}: header but no observations")

    width = len(labels) if labels is not None else len(rows[start])
    values = np.empty((len(rows) - start, width))
    for i, row in enumerate(rows[start:]):
        lineno = start + i + 1
        if len(row) != width:
            raise RaggedRows(f"{path}: row {lineno} has {len(row)} fields, expected {width}")
        for j, tok in enumerate(row):
            v = _parse_float(tok.strip())
            if v is None or not math.isfinite(v):
                raise ParseError(f"{path}: cannot parse {tok!r} at row {lineno} col {j + 1}",
                                 row=lineno, col=j + 1)
            values[i, j] = v
    return TimeSeriesPanel(values, labels=labels)


def format_float(v: float) -> str:
    return repr(float(v)) if math.isfinite(v) else ("nan" if math.isnan(v) else str(v))


def save_csv(panel: TimeSeriesPanel, path, labels: Optional[Sequence[str]] = None) -> None:
    """Write header plus rows at 17 significant digits, LF line endings."""
    header = list(labels) if labels is not None else panel.column_labels()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in panel.values:
            w.writerow(["%.17g" % v for v in row])
