"""
Small dense complex linear algebra helpers.

Everything here works on plain ``numpy`` arrays. Matrices are at most
16x16 in this package, so nothing is tuned for speed.
"""

import numpy as np
from numpy import ndarray
import scipy.linalg

MAX_DIM = 16


def as_cmatrix(M, name: str = "matrix") -> ndarray:
    """Return ``M`` as a finite, square complex array or raise ``ValueError``."""
    A = np.array(M, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
        raise ValueError(f"{name} must be a non-empty square matrix, "
                         f"got shape {A.shape}")
    if A.shape[0] > MAX_DIM:
        raise ValueError(f"{name} has dimension {A.shape[0]} > {MAX_DIM}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} has non-finite entries")
    return A


def expm(L, t: float = 1.0) -> ndarray:
    """
    Matrix exponential ``exp(L t)``.

    Scaling and squaring with a diagonal Pade approximant (delegated to
    ``scipy.linalg.expm``).

    Parameters
    ----------
    L : array_like
        Square generator.
    t : float
        Time; must be finite.

    Returns
    -------
    ndarray
        Complex matrix of the same shape as ``L``.
    """
    A = as_cmatrix(L, "generator")
    t = float(t)
    if not np.isfinite(t):
        raise ValueError("time must be finite")
    if t == 0.0:
        return np.eye(A.shape[0], dtype=complex)
    return scipy.linalg.expm(A * t)


def frobenius(M) -> float:
    A = np.asarray(M, dtype=complex)
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return float(np.sqrt(np.sum(np.abs(A) ** 2)))


def convolve_trapezoid(kernel, f, dt: float) -> ndarray:
    """
    Trapezoid approximation of ``int_0^{t_k} kernel(t_k - s) f(s) ds``.

    Both inputs are samples on the same lattice ``t_j = j*dt`` starting at
    zero. The result holds one value per lattice point; the first is 0.
    """
    K = np.asarray(kernel)
    F = np.asarray(f)
    if K.ndim != 1 or F.ndim != 1:
        raise ValueError("kernel and f must be one-dimensional samples")
    if K.shape != F.shape:
        raise ValueError(f"length mismatch: kernel {K.shape[0]}, f {F.shape[0]}")
    if K.shape[0] < 2:
        raise ValueError("need at least two samples")
    if not (np.isfinite(dt) and dt > 0):
        raise ValueError("dt must be positive and finite")
    n = K.shape[0]
    # full[k] = sum_{j<=k} K[k-j] F[j]; trapezoid halves both end points
    full = np.convolve(K, F)[:n]
    ends = 0.5 * (K * F[0] + K[0] * F)
    return dt * (full - ends)
