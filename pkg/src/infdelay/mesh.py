"""Scaled collocation meshes on the negative half-line.

The positive Laguerre nodes t_j are mapped to theta_j = -t_j / (2 rho1).
Interpolation and differentiation use barycentric weights; the row sums of
the differentiation matrix are forced to zero by the negative-sum trick so
that constants differentiate to exactly zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateMesh
from .laguerre import NodeFamily, family_nodes, family_rule, QuadratureRule


@dataclass(frozen=True)
class ScaledMesh:
    """Collocation nodes theta_j = -t_j/(2 rho1), j = 1..N, all negative.

    ``nodes`` is ordered with theta_1 (closest to zero) first, matching the
    ordering theta_N < ... < theta_1 < 0; ``tnodes`` keeps the underlying
    ascending positive nodes.
    """

    family: NodeFamily
    n: int
    rho1: float
    nodes: np.ndarray
    tnodes: np.ndarray


@dataclass(frozen=True)
class ExtendedMesh:
    """Scaled mesh with theta_0 = 0 prepended (index 0)."""

    base: ScaledMesh
    nodes: np.ndarray  # length N+1, nodes[0] == 0.0

    @property
    def n(self) -> int:
        return self.base.n


@dataclass(frozen=True)
class DifferentiationMatrix:
    """Dense D with D[j, k] = l_k'(theta_j) on the extended mesh."""

    entries: np.ndarray
    mesh: ExtendedMesh


@dataclass(frozen=True)
class HalfLineQuadrature:
    """Laguerre rule mapped to the delay variable s = t/(2 rho1) >= 0.

    integral_0^inf f(s) ds ~= sum mapped_weights[j] f(mapped_nodes[j]),
    exact whenever f(s) = e^{-2 rho1 s} p(s) with p of admissible degree.
    """

    rule: QuadratureRule
    rho1: float
    mapped_nodes: np.ndarray
    mapped_weights: np.ndarray

    @property
    def exactness_degree(self) -> int:
        return self.rule.exactness_degree

    def integrate(self, f) -> float:
        return float(np.dot(self.mapped_weights, f(self.mapped_nodes)))


def build_scaled_mesh(family: NodeFamily, n: int, rho1: float) -> ScaledMesh:
    """Construct the scaled mesh for a family, size and scaling rate."""
    if n < 1:
        raise ValueError("mesh size must be at least 1")
    if rho1 <= 0:
        raise ValueError("rho1 must be positive")
    t = family_nodes(family, n)
    theta = -t / (2.0 * rho1)
    return ScaledMesh(NodeFamily(family), n, float(rho1), theta, t)


def extend_mesh(mesh: ScaledMesh) -> ExtendedMesh:
    """Prepend theta_0 = 0 to a scaled mesh."""
    nodes = np.concatenate(([0.0], mesh.nodes))
    return ExtendedMesh(mesh, nodes)


def barycentric_weights(nodes: np.ndarray) -> np.ndarray:
    """Barycentric weights for distinct nodes, normalized to max modulus 1."""
    x = np.asarray(nodes, dtype=float)
    n = x.size
    spacing = np.max(np.abs(x)) if n > 1 else 1.0
    diff = x[:, None] - x[None, :]
    off = ~np.eye(n, dtype=bool)
    if n > 1 and np.min(np.abs(diff[off])) <= 1e-14 * max(spacing, 1.0):
        raise DegenerateMesh("mesh nodes coincide within 1e-14 relative spacing")
    # log-magnitude accumulation keeps the products representable for n ~ 200
    logs = np.sum(np.log(np.abs(diff) + np.eye(n)), axis=1)
    signs = np.prod(np.where(off, np.sign(diff), 1.0), axis=1)
    logw = -logs
    logw -= np.max(logw)
    return signs * np.exp(logw)


def diff_matrix_from_nodes(nodes: np.ndarray,
                           diagonal: str = "analytic") -> np.ndarray:
    """Spectral differentiation matrix for arbitrary distinct nodes.

    The diagonal l_j'(x_j) = sum_k 1/(x_j - x_k) is summed directly by
    default.  The classic negative-sum trick zeroes the row sums exactly
    but commits an absolute diagonal error of eps * max|row|; on Laguerre
    meshes the barycentric weights span e^{O(N)}, which corrupts the late
    diagonal entries beyond N ~ 15, so it is opt-in only.
    """
    x = np.asarray(nodes, dtype=float)
    w = barycentric_weights(x)
    n = x.size
    diff = x[:, None] - x[None, :] + np.eye(n)
    d = (w[None, :] / w[:, None]) / diff
    np.fill_diagonal(d, 0.0)
    if diagonal == "negative_sum":
        np.fill_diagonal(d, -np.sum(d, axis=1))
    elif diagonal == "analytic":
        diag = np.sum(np.where(np.eye(n, dtype=bool), 0.0, 1.0 / diff), axis=1)
        np.fill_diagonal(d, diag)
    else:
        raise ValueError(f"unknown diagonal strategy {diagonal!r}")
    return d


def diff_matrix(ext: ExtendedMesh) -> DifferentiationMatrix:
    """Spectral differentiation matrix on the extended mesh."""
    return DifferentiationMatrix(diff_matrix_from_nodes(ext.nodes), ext)


def interp_matrix(ext: ExtendedMesh, points) -> np.ndarray:
    """Matrix E with (E @ values)[i] = interpolant of ``values`` at points[i].

    Rows for points that coincide with a node reduce to unit vectors, so
    stored values are returned exactly there.  For points well outside the
    node hull the second-kind denominator cancels to noise; those rows are
    rebuilt from the first-kind form in log space, anchored by evaluating
    the common weight factor at a safe interior point.
    """
    x = ext.nodes
    w = barycentric_weights(x)
    pts = np.atleast_1d(np.asarray(points, dtype=float))
    d = pts[:, None] - x[None, :]
    hit_rows, hit_cols = np.nonzero(d == 0.0)
    d[hit_rows, :] = 1.0
    q = w[None, :] / d
    denom = np.sum(q, axis=1)
    cancelled = np.abs(denom) < 1e-13 * np.sum(np.abs(q), axis=1)
    denom[cancelled] = 1.0
    e = q / denom[:, None]
    if np.any(cancelled):
        logw = np.log(np.abs(w))
        signw = np.sign(w)
        # common scale of the true weights from a cancellation-free point
        p0 = 0.5 * (x[0] + x[1])
        q0 = w / (p0 - x)
        log_k = math.log(abs(np.sum(q0))) + np.sum(np.log(np.abs(p0 - x)))
        sign_k = np.sign(np.sum(q0)) * np.prod(np.sign(p0 - x))
        for i in np.nonzero(cancelled)[0]:
            dist = pts[i] - x
            log_prod = np.sum(np.log(np.abs(dist)))
            sign_prod = np.prod(np.sign(dist))
            e[i, :] = (signw * np.sign(dist) * sign_prod * sign_k
                       * np.exp(logw - np.log(np.abs(dist)) + log_prod - log_k))
    for r, c in zip(hit_rows, hit_cols):
        e[r, :] = 0.0
        e[r, c] = 1.0
    return e


def interp_eval(ext: ExtendedMesh, values, points):
    """Barycentric evaluation of the interpolant of ``values`` at ``points``.

    Returns the stored value exactly when a point coincides with a node.
    """
    vals = np.asarray(values)
    vals = vals.astype(complex) if np.iscomplexobj(vals) else vals.astype(float)
    out = interp_matrix(ext, points) @ vals
    return out[0] if np.ndim(points) == 0 else out


def half_line_quadrature(family: NodeFamily, n: int, rho1: float) -> HalfLineQuadrature:
    """Family rule mapped to the delay variable (Gauss for zeros, Radau for extrema)."""
    if rho1 <= 0:
        raise ValueError("rho1 must be positive")
    rule = family_rule(family, n)
    scale = 2.0 * rho1
    return HalfLineQuadrature(rule, float(rho1), rule.nodes / scale,
                              rule.scaled_weights / scale)
