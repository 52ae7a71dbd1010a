"""Moore-Penrose pseudoinverse and minimum-norm least squares."""
import numpy as np

from .errors import InvalidInput, NumericalFailure

DEFAULT_RTOL = 1e-12


def _as_matrix(m, name):
    arr = np.asarray(m, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.size == 0:
        raise InvalidInput(f"{name} must be a non-empty 2D matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInput(f"{name} contains non-finite entries")
    return arr


def pinv(M, tol: float = DEFAULT_RTOL) -> np.ndarray:
    """Pseudoinverse via the thin SVD.

    Singular values at or below ``tol * sigma_max`` are treated as zero,
    which keeps the result well defined for rank-deficient input.
    """
    M = _as_matrix(M, "M")
    if tol < 0:
        raise InvalidInput("tol must be nonnegative")
    try:
        U, s, Vt = np.linalg.svd(M, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"SVD did not converge: {exc}") from exc
    cutoff = tol * s[0] if s.size else 0.0
    keep = s > cutoff
    s_inv = np.zeros_like(s)
    s_inv[keep] = 1.0 / s[keep]
    return (Vt.T * s_inv) @ U.T


def least_squares_solve(G, T, tol: float = DEFAULT_RTOL) -> np.ndarray:
    """Minimum-norm least-squares solution ``beta = pinv(G) @ T``."""
    G = _as_matrix(G, "G")
    T = _as_matrix(T, "T")
    if G.shape[0] != T.shape[0]:
        raise InvalidInput(f"row mismatch: G has {G.shape[0]} rows, T has {T.shape[0]}")
    return pinv(G, tol) @ T
