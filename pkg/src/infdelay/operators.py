"""Finite-dimensional operators of the pseudospectral reduction.

State convention
----------------
The reduction collocates the *unweighted* history profile: the prolonged
object is w(theta) p(theta) with p a polynomial, so the discrete state
holds plain profile samples,

* DDE: U = (v, psi(theta_1), ..., psi(theta_N)), v the head value, with
  the boundary value p(0) = v entering through column 0 of the
  differentiation matrix;
* RE:  U = (phi(theta_1), ..., phi(theta_N)) for the integrated state,
  with p(0) = 0 (the boundary column drops).

The weight never appears in the matrices; it re-enters only through the
error norms and the half-plane of validity Re(lambda) > -rho.  Weighted
samples w(theta_j) * U_j are available via ``weight_vector`` for anything
stated in the weighted coordinate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import quad as _adaptive_quad

from .errors import IntegrableSingularity, MeshQuadMismatch, NonFiniteRHS
from .kernels import GammaKernel, decay_rate, kernel_eval
from .laguerre import NodeFamily
from .mesh import (DifferentiationMatrix, ExtendedMesh, HalfLineQuadrature,
                   ScaledMesh, barycentric_weights, build_scaled_mesh,
                   diff_matrix, extend_mesh, half_line_quadrature, interp_eval)


@dataclass(frozen=True)
class LinearDDEProblem:
    """y'(t) = a y(t) + integral k(s) y(t-s) ds; roots solve lambda = a + khat."""

    a: float
    kernel: object
    rho: float


@dataclass(frozen=True)
class LinearREProblem:
    """y(t) = integral k(s) y(t-s) ds; roots solve 1 = khat(lambda)."""

    kernel: object
    rho: float


@dataclass(frozen=True)
class DiscretizedLinearOperator:
    """Dense realization of the reduced linear generator.

    ``functional_row`` holds the quadrature coefficients c_j (aligned with
    the extended mesh) of the distributed term, so the discrete
    characteristic function can be rebuilt without reassembling.
    """

    matrix: np.ndarray
    kind: str  # "dde" | "re"
    mesh: ScaledMesh
    ext: ExtendedMesh
    dmat: np.ndarray
    quad: HalfLineQuadrature
    rho: float
    functional_row: np.ndarray
    a: float | None
    problem: object
    quad_mode: str

    @property
    def n(self) -> int:
        return self.mesh.n

    @property
    def weight_vector(self) -> np.ndarray:
        """w(theta_j) = e^{rho theta_j} on the extended mesh."""
        return np.exp(self.rho * self.ext.nodes)


def _check_alignment(mesh: ScaledMesh, quad: HalfLineQuadrature) -> np.ndarray:
    """Map extended-mesh indices to quadrature coefficients; verify nodes agree."""
    interior = quad.mapped_nodes if quad.rule.kind == "gauss" else quad.mapped_nodes[1:]
    expected = -mesh.nodes
    if interior.size != expected.size or not np.allclose(
            interior, expected, rtol=0.0, atol=1e-12 * (1.0 + np.max(expected))):
        raise MeshQuadMismatch("quadrature nodes do not coincide with the mesh")
    if abs(quad.rho1 - mesh.rho1) > 1e-15 * mesh.rho1:
        raise MeshQuadMismatch("mesh and quadrature use different rho1")
    coeffs = np.zeros(mesh.n + 1)
    if quad.rule.kind == "gauss":
        coeffs[1:] = quad.mapped_weights
    else:
        coeffs[:] = quad.mapped_weights
    return coeffs


def _functional_row(kernel, mesh, quad, quad_mode):
    """Coefficients c_j with sum_j c_j p(theta_j) ~ integral k(s) p(-s) ds."""
    weights = _check_alignment(mesh, quad)
    svals = np.concatenate(([0.0], -mesh.nodes))
    if quad_mode == "gauss":
        row = np.zeros(mesh.n + 1)
        live = weights != 0.0
        if isinstance(kernel, GammaKernel) and kernel.sigma < 1.0 and live[0]:
            raise IntegrableSingularity(
                "gauss_radau rule places a node on the gamma-kernel singularity"
            )
        row[live] = weights[live] * kernel_eval(kernel, svals[live])
        return row
    if quad_mode == "adaptive":
        return _adaptive_functional_row(kernel, mesh)
    raise ValueError(f"unknown quadrature mode {quad_mode!r}")


def _adaptive_functional_row(kernel, mesh, tol=1e-12):
    """Row coefficients by adaptive integration of k(s) l_j(-s) per basis."""
    ext = extend_mesh(mesh)
    x = ext.nodes
    bw = barycentric_weights(x)
    rate = decay_rate(kernel)
    cutoff = max(50.0 / max(rate, 1e-3), 2.0 * np.max(-mesh.nodes))

    def basis(j, s):
        theta = -s
        d = theta - x
        if np.any(d == 0.0):
            return 1.0 if theta == x[j] else 0.0
        q = bw / d
        return q[j] / np.sum(q)

    row = np.empty(mesh.n + 1)
    for j in range(mesh.n + 1):
        val, _ = _adaptive_quad(
            lambda s: kernel_eval(kernel, s) * basis(j, s),
            0.0, np.inf, epsabs=tol, epsrel=tol, limit=400,
            points=[cutoff] if np.isfinite(cutoff) else None,
        )
        row[j] = val
    return row


def assemble_dde_linear(problem: LinearDDEProblem, mesh: ScaledMesh,
                        quad: HalfLineQuadrature,
                        quad_mode: str = "gauss") -> DiscretizedLinearOperator:
    """(N+1)-dimensional matrix for a linear DDE with infinite delay.

    Row 0 discretizes the extension rule a v + integral k psi; rows 1..N are
    differentiation-matrix rows with column 0 coupling to the head through
    the boundary value p(0) = v.
    """
    d = diff_matrix(extend_mesh(mesh)).entries
    row = _functional_row(problem.kernel, mesh, quad, quad_mode)
    m = d.copy()
    m[0, :] = row
    m[0, 0] += problem.a
    return DiscretizedLinearOperator(m, "dde", mesh, extend_mesh(mesh), d, quad,
                                     problem.rho, row, problem.a, problem,
                                     quad_mode)


def assemble_re_linear(problem: LinearREProblem, mesh: ScaledMesh,
                       quad: HalfLineQuadrature,
                       quad_mode: str = "gauss") -> DiscretizedLinearOperator:
    """N-dimensional matrix for a linear RE in the integrated formulation.

    The boundary value is identically zero, so the reduced differentiation
    block keeps rows/columns 1..N; the renewal functional acts on the
    derivative samples D phi and is subtracted from every row.
    """
    d = diff_matrix(extend_mesh(mesh)).entries
    row = _functional_row(problem.kernel, mesh, quad, quad_mode)
    g = row @ d  # functional applied to derivative samples
    m = d[1:, 1:] - np.outer(np.ones(mesh.n), g[1:])
    return DiscretizedLinearOperator(m, "re", mesh, extend_mesh(mesh), d, quad,
                                     problem.rho, row, None, problem, quad_mode)


def build_discretization(family: NodeFamily, n: int, rho1: float):
    """Matching (mesh, quadrature) pair for a family, size and rate."""
    mesh = build_scaled_mesh(family, n, rho1)
    quad = half_line_quadrature(family, n, rho1)
    return mesh, quad


class ProlongedState:
    """Boundary-consistent polynomial view of one discrete state vector.

    Nonlinear states are stored as rho1-weighted samples
    X_j = e^{rho1 theta_j} p(theta_j); in that coordinate every matrix row
    stays bounded.  Unweighting back to profile values - the single step
    that can overflow off-manifold - happens only here, so the right-hand
    side's finiteness guard audits it.
    """

    __slots__ = ("weighted_ext", "_ode")

    def __init__(self, ode: "DiscretizedODE", u: np.ndarray):
        if ode.kind == "dde":
            self.weighted_ext = u
        else:
            self.weighted_ext = np.concatenate(([0.0], u))
        self._ode = ode

    @property
    def head(self):
        """Unweighted head value p(0) (weight is one at zero)."""
        return self.weighted_ext[0]

    @property
    def quad_points(self) -> np.ndarray:
        return self._ode.quad.mapped_nodes

    @property
    def quad_weights(self) -> np.ndarray:
        return self._ode.quad.mapped_weights

    @property
    def quad_values(self) -> np.ndarray:
        """Unweighted profile samples aligned with ``quad_points``."""
        with np.errstate(over="ignore", invalid="ignore"):
            profile = self.weighted_ext / self._ode.w1
        if self._ode.quad.rule.kind == "gauss":
            return profile[1:]
        return profile


@dataclass
class DiscretizedODE:
    """Deterministic right-hand side U -> A_N U + F_N(U) for one model.

    ``w1`` holds e^{rho1 theta_j} on the extended mesh and ``dmat_damped``
    the similarity-scaled differentiation matrix W^-1 D W, whose entries
    stay O(poly) where the raw D spans e^{O(N)}.
    """

    kind: str
    mesh: ScaledMesh
    ext: ExtendedMesh
    dmat: np.ndarray
    dmat_damped: np.ndarray
    w1: np.ndarray
    quad: HalfLineQuadrature
    rho: float
    model: object
    dim: int
    _functional: Callable = field(repr=False, default=None)

    def rhs(self, u: np.ndarray) -> np.ndarray:
        state = ProlongedState(self, np.asarray(u, dtype=float))
        fval = self._functional(state)
        if self.kind == "dde":
            out = self.dmat_damped @ state.weighted_ext
            out[0] = fval
        else:
            out = (self.dmat_damped @ state.weighted_ext)[1:] \
                - self.w1[1:] * fval
        if not np.all(np.isfinite(out)):
            raise NonFiniteRHS("right-hand side produced non-finite values")
        return out

    def fd_jacobian(self, u: np.ndarray, rel_step: float = 1e-6) -> np.ndarray:
        """Central-difference Jacobian.

        The step uses one global reference scale: shrinking it with the
        exponentially small far-node components would push the column
        increments below the rounding floor of the other rows.
        """
        u = np.asarray(u, dtype=float)
        ref = max(1.0, float(np.max(np.abs(u))))
        jac = np.empty((self.dim, self.dim))
        for k in range(self.dim):
            h = rel_step * max(ref, abs(u[k]))
            up, um = u.copy(), u.copy()
            up[k] += h
            um[k] -= h
            jac[:, k] = (self.rhs(up) - self.rhs(um)) / (2.0 * h)
        return jac


def assemble_nonlinear_rhs(model, mesh: ScaledMesh,
                           quad: HalfLineQuadrature) -> DiscretizedODE:
    """Reduce a nonlinear model to a finite ODE system on the given mesh."""
    _check_alignment(mesh, quad)
    ext = extend_mesh(mesh)
    d = diff_matrix(ext).entries
    w1 = np.exp(mesh.rho1 * ext.nodes)
    damped = d * np.exp(mesh.rho1 * (ext.nodes[:, None] - ext.nodes[None, :]))
    dim = mesh.n + 1 if model.kind == "dde" else mesh.n
    ode = DiscretizedODE(model.kind, mesh, ext, d, damped, w1, quad,
                         model.rho, model, dim)
    ode._functional = model.functional
    return ode
