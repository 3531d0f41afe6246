"""Small input-validation helpers shared across the package."""

import numpy as np


def as_vector(x, dim=None, name="x"):
    """Coerce to a 1-D float array, optionally checking its length."""
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise ValueError(f"{name} must have length {dim}, got {v.shape[0]}")
    return v


def as_square_matrix(m, dim=None, name="matrix"):
    """Coerce to a 2-D square float array, optionally checking its size."""
    a = np.asarray(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be square, got shape {a.shape}")
    if dim is not None and a.shape[0] != dim:
        raise ValueError(f"{name} must be {dim}x{dim}, got {a.shape[0]}x{a.shape[1]}")
    return a


def check_finite(arr, name="values"):
    """Raise if any entry is NaN or infinite."""
    a = np.asarray(arr, dtype=float)
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contain non-finite entries")
    return a


def positive_int(n, minimum=1, name="n"):
    """Validate an integer lower-bounded count."""
    if int(n) != n or n < minimum:
        raise ValueError(f"{name} must be an integer >= {minimum}, got {n!r}")
    return int(n)
