"""Shared hypothesis strategies."""
import numpy as np
from hypothesis import strategies as st

from heisenberg_cr.core_group import Point

coord = st.floats(min_value=-3.0, max_value=3.0, allow_nan=False, allow_infinity=False)


@st.composite
def points(draw, n=1, lo=-3.0, hi=3.0, min_gauge=0.0):
    c = st.floats(min_value=lo, max_value=hi, allow_nan=False, allow_infinity=False)
    x = [draw(c) for _ in range(n)]
    y = [draw(c) for _ in range(n)]
    t = draw(c)
    p = Point(np.array(x), np.array(y), t)
    if min_gauge > 0:
        from hypothesis import assume
        from heisenberg_cr.core_group import gauge_norm
        assume(gauge_norm(p) > min_gauge)
    return p


positive = st.floats(min_value=1e-2, max_value=1e2, allow_nan=False)
