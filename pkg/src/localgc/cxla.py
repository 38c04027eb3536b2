"""Small dense complex linear algebra.

Matrices are plain ``numpy`` arrays of shape ``(p, p)``; the routines here
are written for the tiny dimensions (p <= 16) that occur in spectral
matrices, where robustness matters more than speed.
"""

import numpy as np

from localgc.errors import DimensionError, NotPSD, SingularMatrix

#: Pivots below this fraction of the largest absolute entry count as zero.
SINGULAR_RTOL = 1e-14
#: Eigenvalues below ``-PSD_ATOL`` reject a matrix as not PSD.
PSD_ATOL = 1e-10


def as_cmat(m):
    """Return ``m`` as a square complex128 array, validating the shape."""
    a = np.array(m, dtype=np.complex128)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise DimensionError(f"expected a non-empty square matrix, got shape {a.shape}")
    return a


def is_hermitian(m, atol=1e-12):
    a = np.asarray(m)
    return bool(np.all(np.abs(a - a.conj().T) <= atol))


def hermitize(m):
    """Symmetric part ``(m + m^*) / 2``."""
    a = np.asarray(m)
    return 0.5 * (a + a.conj().T)


def _lu(a):
    """In-place LU with partial pivoting on a copy of ``a``.

    Returns ``(lu, perm, sign, singular)`` where ``singular`` flags a pivot
    under the relative threshold.
    """
    lu = a.copy()
    n = lu.shape[0]
    perm = np.arange(n)
    sign = 1.0
    scale = np.max(np.abs(lu)) if lu.size else 0.0
    tol = SINGULAR_RTOL * scale
    singular = scale == 0.0
    for k in range(n):
        piv = k + int(np.argmax(np.abs(lu[k:, k])))
        if piv != k:
            lu[[k, piv]] = lu[[piv, k]]
            perm[[k, piv]] = perm[[piv, k]]
            sign = -sign
        if abs(lu[k, k]) <= tol:
            singular = True
            continue
        lu[k + 1:, k] /= lu[k, k]
        lu[k + 1:, k + 1:] -= np.outer(lu[k + 1:, k], lu[k, k + 1:])
    return lu, perm, sign, singular


def cdet(m):
    """Determinant via LU with partial pivoting. Zero is a valid result."""
    a = as_cmat(m)
    lu, _, sign, _ = _lu(a)
    return complex(sign * np.prod(np.diag(lu)))


def cinv(m):
    """Inverse via LU with partial pivoting.

    Raises SingularMatrix when a pivot falls below ``1e-14`` times the
    largest absolute entry.
    """
    a = as_cmat(m)
    n = a.shape[0]
    lu, perm, _, singular = _lu(a)
    if singular:
        raise SingularMatrix("matrix is numerically singular")
    inv = np.empty((n, n), dtype=np.complex128)
    eye = np.eye(n, dtype=np.complex128)[perm]
    for col in range(n):
        y = eye[:, col].copy()
        for i in range(n):
            y[i] -= lu[i, :i] @ y[:i]
        for i in range(n - 1, -1, -1):
            y[i] = (y[i] - lu[i, i + 1:] @ y[i + 1:]) / lu[i, i]
        inv[:, col] = y
    return inv


def psd_sqrt(m):
    """Hermitian PSD square root ``R`` with ``R @ R^* == m``.

    Eigenvalues in ``[-1e-10, 0)`` are treated as zero; anything more
    negative raises NotPSD.
    """
    a = hermitize(as_cmat(m))
    w, v = np.linalg.eigh(a)
    if w.min() < -PSD_ATOL:
        raise NotPSD(f"smallest eigenvalue {w.min():.3e} is negative")
    r = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T
    return hermitize(r)
