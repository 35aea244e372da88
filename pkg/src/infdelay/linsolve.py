"""Dense solves with diagonal equilibration.

Differentiation matrices on Laguerre-type meshes carry exponentially
varying entries (the barycentric weights span e^{O(N)}), so raw LU loses
most of its digits by N ~ 15.  Ruiz-style two-sided scaling restores the
conditioning of the underlying map; eigensolvers get the same effect from
LAPACK balancing, plain ``solve`` does not.
"""

from __future__ import annotations

import numpy as np


def equilibrated_solve(a: np.ndarray, b: np.ndarray, iterations: int = 3):
    """Solve a x = b after two-sided diagonal scaling of a.

    Returns (x, cond_scaled) with the condition number of the scaled
    matrix, a fair estimate of the attainable accuracy.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    n = a.shape[0]
    r = np.ones(n)
    c = np.ones(n)
    scaled = a.copy()
    for _ in range(iterations):
        row_max = np.max(np.abs(scaled), axis=1)
        row_max[row_max == 0.0] = 1.0
        r_step = 1.0 / np.sqrt(row_max)
        scaled = scaled * r_step[:, None]
        r *= r_step
        col_max = np.max(np.abs(scaled), axis=0)
        col_max[col_max == 0.0] = 1.0
        c_step = 1.0 / np.sqrt(col_max)
        scaled = scaled * c_step[None, :]
        c *= c_step
    x_scaled = np.linalg.solve(scaled, b * r)
    cond = float(np.linalg.cond(scaled))
    return c * x_scaled, cond
