"""Standard Laguerre polynomials and Gauss/Gauss-Radau-Laguerre rules.

Everything here lives on the positive half-line with weight e^{-t}.  Nodes
are found by Newton iteration on the three-term recurrence, seeded with the
classic interlacing-based initial guesses, so no external eigensolver is
needed at this layer.  To avoid overflow/underflow the recurrences are also
run on the damped functions e^{-t/2} L_n(t), which stay in [-1, 1]; the
"scaled" weights lambda_j e^{t_j} come straight out of those damped values
and remain O(1) even where lambda_j itself underflows.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceFailure

MAX_RULE_SIZE = 200  # beyond this, double-precision node separation degrades


class NodeFamily(str, enum.Enum):
    """Collocation-node family: zeros of L_N or extrema of L_{N+1}."""

    ZEROS = "zeros"
    EXTREMA = "extrema"


def laguerre_eval(n: int, t):
    """Evaluate L_n(t) by the three-term recurrence.

    Works for scalar or array ``t >= 0``; L_n(0) = 1 exactly.
    """
    if n < 0:
        raise ValueError("degree must be nonnegative")
    t_arr = np.asarray(t, dtype=float)
    out = _laguerre_pair(n, t_arr)[0]
    return float(out) if np.ndim(t) == 0 else out


def laguerre_deriv_eval(n: int, t):
    """Evaluate dL_n/dt via the identity dL_{n}/dt = -L_{n-1}^{(1)}."""
    if n < 1:
        raise ValueError("degree must be at least 1")
    t_arr = np.asarray(t, dtype=float)
    out = -_genlag1_pair(n - 1, t_arr)[0]
    return float(out) if np.ndim(t) == 0 else out


def genlaguerre1_eval(n: int, t):
    """Evaluate the generalized Laguerre polynomial L_n^{(1)}(t)."""
    if n < 0:
        raise ValueError("degree must be nonnegative")
    t_arr = np.asarray(t, dtype=float)
    out = _genlag1_pair(n, t_arr)[0]
    return float(out) if np.ndim(t) == 0 else out


def _laguerre_pair(n, t, damp=False):
    """Return (L_n, L_{n-1}) at t; with damp=True both are scaled by e^{-t/2}."""
    start = np.exp(-0.5 * t) if damp else np.ones_like(t)
    if n == 0:
        return start.copy(), np.zeros_like(t)
    lm1 = start.copy()
    l = (1.0 - t) * start
    for k in range(1, n):
        l, lm1 = ((2 * k + 1 - t) * l - k * lm1) / (k + 1), l
    return l, lm1


def _genlag1_pair(n, t, damp=False):
    """Return (L_n^{(1)}, L_{n-1}^{(1)}) at t, optionally damped by e^{-t/2}."""
    start = np.exp(-0.5 * t) if damp else np.ones_like(t)
    if n == 0:
        return start.copy(), np.zeros_like(t)
    lm1 = start.copy()
    l = (2.0 - t) * start
    for k in range(1, n):
        l, lm1 = ((2 * k + 2 - t) * l - (k + 1) * lm1) / (k + 1), l
    return l, lm1


def _initial_guess(i, n, alf, roots):
    """Interlacing-based initial guess chain for the i-th root (0-based)."""
    if i == 0:
        return (1.0 + alf) * (3.0 + 0.92 * alf) / (1.0 + 2.4 * n + 1.8 * alf)
    if i == 1:
        return roots[0] + (15.0 + 6.25 * alf) / (1.0 + 0.9 * alf + 2.5 * n)
    ai = i - 1.0
    step = ((1.0 + 2.55 * ai) / (1.9 * ai) + 1.26 * ai * alf / (1.0 + 3.5 * ai))
    return roots[i - 1] + step * (roots[i - 1] - roots[i - 2]) / (1.0 + 0.3 * alf)


def _newton_nodes(n, alf):
    """All positive zeros of L_n (alf=0) or L_n^{(1)} (alf=1), ascending."""
    pair = _laguerre_pair if alf == 0 else _genlag1_pair
    roots = np.empty(n)
    for i in range(n):
        z = _initial_guess(i, n, alf, roots)
        converged = False
        dz_prev = np.inf
        for it in range(100):
            val, valm1 = pair(n, np.asarray(z), damp=True)
            # t * d/dt L_n^{(a)} = n L_n^{(a)} - (n + a) L_{n-1}^{(a)}
            deriv = (n * val - (n + alf) * valm1) / z
            dz = val / deriv
            z -= dz
            if abs(dz) <= 1e-15 * max(1.0, abs(z)):
                converged = True
                break
            # recurrence noise floor: steps stop contracting but stay tiny
            if it > 3 and abs(dz) >= 0.5 * dz_prev \
                    and abs(dz) <= 1e-11 * max(1.0, abs(z)):
                converged = True
                break
            dz_prev = abs(dz)
        if not converged or not np.isfinite(z) or z <= 0:
            raise ConvergenceFailure(
                f"Newton failed for root {i + 1}/{n} (alpha={alf})"
            )
        roots[i] = z
    if np.any(np.diff(roots) <= 0):
        raise ConvergenceFailure("computed nodes are not strictly increasing")
    return roots


def laguerre_zeros(n: int) -> np.ndarray:
    """The n zeros of L_n, ascending."""
    return _newton_nodes(n, 0)


def laguerre_extrema(n: int) -> np.ndarray:
    """The n zeros of dL_{n+1}/dt (equivalently of L_n^{(1)}), ascending."""
    return _newton_nodes(n, 1)


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes/weights for integrating e^{-t} f(t) over the positive half-line.

    ``scaled_weights`` holds lambda_j * e^{t_j}, computed directly from the
    damped recurrence (never as an explicit product, which would be 0 * inf
    for large rules).
    """

    nodes: np.ndarray
    weights: np.ndarray
    scaled_weights: np.ndarray
    kind: str  # "gauss" | "gauss_radau"
    exactness_degree: int

    @property
    def size(self) -> int:
        return self.nodes.size

    def integrate(self, f) -> float:
        """Apply the rule to f: approximates integral of e^{-t} f(t) dt."""
        return float(np.dot(self.weights, f(self.nodes)))


def gauss_laguerre_rule(n: int) -> QuadratureRule:
    """N-point Gauss-Laguerre rule (nodes = zeros of L_n, degree 2n-1)."""
    _check_rule_size(n)
    x = laguerre_zeros(n)
    damped_next = _laguerre_pair(n + 1, x, damp=True)[0]
    scaled = x / ((n + 1) ** 2 * damped_next**2)
    # lambda_j = x_j e^{-x_j} / ((n+1)^2 (e^{-x_j/2} L_{n+1}(x_j))^2)
    weights = scaled * np.exp(-x)
    return QuadratureRule(x, weights, scaled, "gauss", 2 * n - 1)


def radau_laguerre_rule(n: int) -> QuadratureRule:
    """Gauss-Radau-Laguerre rule: node 0 plus the n extrema (degree 2n)."""
    _check_rule_size(n)
    x_int = laguerre_extrema(n)
    damped = _laguerre_pair(n, x_int, damp=True)[0]
    scaled_int = 1.0 / ((n + 1) * damped**2)
    nodes = np.concatenate(([0.0], x_int))
    scaled = np.concatenate(([1.0 / (n + 1)], scaled_int))
    weights = scaled * np.exp(-nodes)
    return QuadratureRule(nodes, weights, scaled, "gauss_radau", 2 * n)


def family_rule(family: NodeFamily, n: int) -> QuadratureRule:
    """The quadrature rule naturally attached to a node family."""
    if NodeFamily(family) is NodeFamily.ZEROS:
        return gauss_laguerre_rule(n)
    return radau_laguerre_rule(n)


def family_nodes(family: NodeFamily, n: int) -> np.ndarray:
    """Collocation nodes on the positive half-line for a family (no zero)."""
    if NodeFamily(family) is NodeFamily.ZEROS:
        return laguerre_zeros(n)
    return laguerre_extrema(n)


def _check_rule_size(n: int) -> None:
    if not 1 <= n <= MAX_RULE_SIZE:
        raise ValueError(f"rule size must be in [1, {MAX_RULE_SIZE}], got {n}")


def factorial_moment(k: int) -> float:
    """Exact value of integral t^k e^{-t} dt = k! (k <= 170)."""
    return math.factorial(k)
