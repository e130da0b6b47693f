"""Small dense linear algebra: determinants, rectangular volume, least squares.

All matrices here are tiny (a handful of rows and columns), so the routines
favour clarity and explicit rank checks over speed.
"""
import numpy as np

from .exceptions import DimensionError, RankDeficiencyError

#: Relative rank tolerance, scaled by the dominant singular value.
RANK_TOL = 1e-12


def _as_matrix(A):
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise DimensionError(f"expected a non-empty 2-D matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise DimensionError("matrix has non-finite entries")
    return A


def determinant(A):
    """Signed determinant of a square matrix (LU with partial pivoting)."""
    A = _as_matrix(A)
    if A.shape[0] != A.shape[1]:
        raise DimensionError(f"determinant needs a square matrix, got {A.shape}")
    return float(np.linalg.det(A))


def gram(A):
    """Gram matrix of the thin side: ``A'A`` if tall, ``AA'`` if wide."""
    A = _as_matrix(A)
    return A.T @ A if A.shape[0] >= A.shape[1] else A @ A.T


def volume(A):
    """Volume of a full-rank rectangular matrix.

    The volume is the product of the non-zero singular values, computed as
    ``sqrt(det(A'A))`` for tall ``A`` and ``sqrt(det(AA'))`` for wide ``A``.
    For square ``A`` it equals ``|det(A)|``.

    Raises
    ------
    RankDeficiencyError
        If the volume falls below ``RANK_TOL * smax**min(rows, cols)``.
    """
    A = _as_matrix(A)
    k = min(A.shape)
    G = gram(A)
    smax = np.sqrt(np.max(np.abs(np.linalg.eigvalsh(G)))) if k > 1 else np.sqrt(G[0, 0])
    floor = RANK_TOL * smax**k
    try:
        L = np.linalg.cholesky(G)
    except np.linalg.LinAlgError:
        raise RankDeficiencyError(f"matrix of shape {A.shape} is rank deficient") from None
    vol = float(np.prod(np.diag(L)))
    if not vol > floor:
        raise RankDeficiencyError(
            f"volume {vol:.3e} below rank tolerance {floor:.3e} for shape {A.shape}"
        )
    return vol


def ols_fit(X, y):
    """Ordinary least squares.

    Parameters
    ----------
    X : array of shape (n, p)
    y : array of shape (n,)

    Returns
    -------
    coef : ndarray of shape (p,)
    residual_variance : float
        ``||y - X coef||^2 / n`` (maximum-likelihood divisor).
    """
    X = _as_matrix(X)
    y = np.asarray(y, dtype=float).ravel()
    n, p = X.shape
    if y.shape[0] != n:
        raise DimensionError(f"X has {n} rows but y has {y.shape[0]} entries")
    if n <= p:
        raise DimensionError(f"need more observations than regressors (n={n}, p={p})")
    coef, _, rank, sv = np.linalg.lstsq(X, y, rcond=None)
    if rank < p or sv[-1] <= RANK_TOL * sv[0]:
        raise RankDeficiencyError(f"design matrix has rank {rank} < {p}")
    resid = y - X @ coef
    return coef, float(resid @ resid) / n
