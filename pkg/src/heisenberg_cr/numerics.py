"""Shared comparison helpers and the tolerance policy."""
from __future__ import annotations

import numpy as np

# smallest magnitude used as a relative-error denominator
REL_FLOOR = 1e-30


def rel_err(a, b, scale: float = 0.0) -> float:
    """``max|a - b| / max(max|a|, max|b|, scale)`` over all entries.

    ``scale`` lets a caller supply the size of the ingredients when the
    compared quantities vanish analytically (e.g. a harmonic field's
    sublaplacian), where a pure relative error is meaningless.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    den = max(float(np.max(np.abs(a), initial=0.0)), float(np.max(np.abs(b), initial=0.0)),
              float(scale), REL_FLOOR)
    return float(np.max(np.abs(a - b), initial=0.0)) / den


def max_abs(a) -> float:
    return float(np.max(np.abs(np.asarray(a, dtype=float)), initial=0.0))


def psd_margin(A: np.ndarray, min_eig: float) -> float:
    """``min_eig / (1 + |A|_max)``: the quantity compared against ``-tol`` for "A >= 0"."""
    return min_eig / (1.0 + max_abs(A))
