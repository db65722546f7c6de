"""Small dense linear algebra helpers on float64 arrays."""

import numpy as np

from .errors import ContractError


def singular_values(m):
    """Singular values of a dense matrix, sorted descending."""
    m = np.asarray(m, dtype=np.float64)
    if m.size == 0:
        raise ContractError("singular_values of an empty matrix")
    return np.linalg.svd(m, compute_uv=False)


def sym_eigenvalues(m):
    """Eigenvalues of a symmetric matrix, ascending."""
    return np.linalg.eigvalsh(np.asarray(m, dtype=np.float64))


def check_finite(a, what="array"):
    a = np.asarray(a)
    if not np.all(np.isfinite(a)):
        from .errors import NumericRangeError
        raise NumericRangeError(f"non-finite entries in {what}")
    return a
