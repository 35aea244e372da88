"""Eigenvalues of reduced operators and their pairing with exact roots.

Holds the dense eigensolver front end, closed-form/Newton characteristic
roots of the benchmark problems, the discrete characteristic function, the
weighted eigenfunction errors, per-size convergence sweeps, and the
explicit bound quantities C(lambda), D_N used to judge observed rates.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import (NoConvergence, NonFiniteInput, OutOfHalfPlane,
                     OutOfStrip, SingularCollocation, StrayedOutOfStrip,
                     ZeroHeadComponent)
from .kernels import (ExponentialKernel, GammaKernel, SinModulatedKernel,
                      kernel_laplace, kernel_laplace_deriv)
from .laguerre import NodeFamily
from .linsolve import equilibrated_solve
from .mesh import ScaledMesh
from .operators import (DiscretizedLinearOperator, LinearDDEProblem,
                        LinearREProblem, assemble_dde_linear,
                        assemble_re_linear, build_discretization)


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues sorted by descending real part, then descending imaginary.

    ``eigenvectors`` (unit columns, aligned with the sorted order) is None
    when the decomposition was requested without vectors.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None = None

    @property
    def rightmost(self) -> complex:
        return complex(self.eigenvalues[0])


def eig_dense(m: np.ndarray, vectors: bool = True) -> Spectrum:
    """Backward-stable dense eigendecomposition (LAPACK via numpy).

    Any computed eigenvalue is exact for a perturbation E of m with
    ||E|| = O(eps ||m||); that contract, not the algorithm, is what callers
    rely on.
    """
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("expected a square matrix")
    if m.shape[0] > 2000:
        raise ValueError("matrix too large for the dense path")
    if not np.all(np.isfinite(m)):
        raise NonFiniteInput("matrix contains non-finite entries")
    try:
        if vectors:
            vals, vecs = np.linalg.eig(m)
        else:
            vals, vecs = np.linalg.eigvals(m), None
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(f"eigensolver did not converge: {exc}") from exc
    order = np.lexsort((-vals.imag, -vals.real))
    vals = vals[order]
    if vecs is not None:
        vecs = vecs[:, order]
    return Spectrum(vals, vecs)


def conjugate_pair_defect(spectrum: Spectrum, im_tol: float = 1e-9) -> float:
    """Worst mismatch between eigenvalues and their conjugates."""
    vals = spectrum.eigenvalues
    complex_vals = vals[np.abs(vals.imag) > im_tol]
    if complex_vals.size == 0:
        return 0.0
    return float(max(np.min(np.abs(vals - np.conj(v))) for v in complex_vals))


def exact_roots_exponential(a: float, mu: float, k0: float):
    """Both characteristic roots for an exponential kernel, closed form.

    Returns (roots, is_double); the roots solve lambda = a + k0/(lambda+mu).
    """
    disc = (mu + a) ** 2 + 4.0 * k0
    scale = max(1.0, (mu + a) ** 2, 4.0 * abs(k0))
    is_double = abs(disc) <= 1e-12 * scale
    root = cmath.sqrt(complex(disc))
    lam1 = (a - mu + root) / 2.0
    lam2 = (a - mu - root) / 2.0
    return (lam1, lam2), is_double


def char_fn(problem, lam: complex) -> complex:
    """Characteristic function: lambda - a - khat (DDE) or 1 - khat (RE)."""
    if isinstance(problem, LinearDDEProblem):
        return lam - problem.a - kernel_laplace(problem.kernel, lam)
    return 1.0 - kernel_laplace(problem.kernel, lam)


def char_root_solve(problem, guess: complex, tol: float = 1e-12,
                    maxiter: int = 100) -> complex:
    """Newton iteration on the characteristic function with analytic khat'."""
    lam = complex(guess)
    is_dde = isinstance(problem, LinearDDEProblem)
    for _ in range(maxiter):
        try:
            g = char_fn(problem, lam)
            dk = kernel_laplace_deriv(problem.kernel, lam)
        except OutOfStrip as exc:
            raise StrayedOutOfStrip(str(exc)) from exc
        dg = (1.0 - dk) if is_dde else -dk
        if dg == 0:
            raise NoConvergence("zero derivative in Newton step")
        step = g / dg
        lam -= step
        if abs(g) <= tol and abs(step) <= tol * max(1.0, abs(lam)):
            return lam
    raise NoConvergence(f"no root within {maxiter} Newton steps from {guess}")


@dataclass(frozen=True)
class CharValue:
    """Discrete characteristic function value with its natural scale."""

    value: complex
    scale: float


def discrete_char_fn(op: DiscretizedLinearOperator, lam: complex) -> CharValue:
    """det(I - A_N(lambda)) for the reduced problem, pole-free normalization.

    The collocation system for the basis data is solved by dense LU in the
    profile variable; the boundary map and the quadrature functional are
    then applied.  Zeros coincide with eigenvalues of the assembled matrix
    whose eigenvector has a nonzero head/functional component, which covers
    everything to the right of the spurious differentiation-matrix spectrum.
    """
    lam = complex(lam)
    n = op.n
    d = op.dmat
    a_sys = np.asarray(d, dtype=complex).copy()
    idx = np.arange(1, n + 1)
    a_sys[idx, idx] -= lam
    a_sys[0, :] = 0.0
    a_sys[0, 0] = 1.0
    if op.kind == "dde":
        rhs = np.zeros(n + 1, dtype=complex)
        rhs[0] = 1.0
        try:
            p, _ = equilibrated_solve(a_sys, rhs)
        except np.linalg.LinAlgError as exc:
            raise SingularCollocation(str(exc)) from exc
        functional = op.a + op.functional_row @ p
        return CharValue(lam - functional,
                         1.0 + abs(lam) + abs(op.a) + abs(functional))
    rhs = np.ones(n + 1, dtype=complex)
    rhs[0] = 0.0
    try:
        p, _ = equilibrated_solve(a_sys, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularCollocation(str(exc)) from exc
    functional = op.functional_row @ (d @ p)
    return CharValue(1.0 - functional, 1.0 + abs(functional))


def argument_principle_count(fn, re_lo, re_hi, im_lo, im_hi,
                             samples: int = 4000) -> int:
    """Winding number of fn along a rectangle boundary (zeros minus poles)."""
    corners = [complex(re_lo, im_lo), complex(re_hi, im_lo),
               complex(re_hi, im_hi), complex(re_lo, im_hi),
               complex(re_lo, im_lo)]
    per_side = max(samples // 4, 16)
    points = np.concatenate([
        corners[i] + (corners[i + 1] - corners[i]) * np.linspace(0, 1, per_side,
                                                                 endpoint=False)
        for i in range(4)
    ])
    vals = np.array([fn(z) for z in points])
    phases = np.unwrap(np.angle(np.append(vals, vals[0])))
    return int(round((phases[-1] - phases[0]) / (2.0 * math.pi)))


@dataclass
class RootMatch:
    """Pairing of an exact root with nearby computed eigenvalues."""

    exact: complex
    multiplicity: int
    computed: np.ndarray
    eig_indices: np.ndarray
    abs_error: float
    eigfun_error: float | None = None


def match_roots(exact_roots, spectrum: Spectrum):
    """Nearest-neighbor pairing with a rejection radius.

    ``exact_roots`` is a list of (root, multiplicity) pairs.  The radius for
    each root is half its distance to the nearest other exact root; computed
    eigenvalues left unmatched are returned, not treated as errors (the
    reduction owns spurious eigenvalues far left by design).
    """
    vals = spectrum.eigenvalues
    taken = np.zeros(vals.size, dtype=bool)
    matches = []
    roots = [complex(r) for r, _ in exact_roots]
    for (root, mult) in exact_roots:
        root = complex(root)
        others = [r for r in roots if r != root]
        radius = min((abs(root - r) for r in others), default=math.inf) * 0.5
        dist = np.abs(vals - root)
        dist[taken] = math.inf
        order = np.argsort(dist)
        chosen = [int(i) for i in order[:mult] if dist[i] <= radius]
        if not chosen:
            matches.append(RootMatch(root, mult, np.array([]),
                                     np.array([], dtype=int), math.inf))
            continue
        taken[chosen] = True
        picked = vals[chosen]
        matches.append(RootMatch(root, mult, picked, np.array(chosen),
                                 float(np.max(np.abs(picked - root)))))
    unmatched = vals[~taken]
    return matches, unmatched


def eigfun_error_dde(match: RootMatch, spectrum: Spectrum, mesh: ScaledMesh,
                     rho: float) -> float:
    """Weighted sup-norm error of the head-normalized eigenvector.

    The eigenvector holds profile samples; after normalizing the head entry
    to one it approximates e^{lambda theta}, and the error is measured as
    max_j w(theta_j) |v_j - e^{lambda theta_j}|.
    """
    if spectrum.eigenvectors is None or match.eig_indices.size == 0:
        raise ValueError("match carries no eigenvector")
    v = spectrum.eigenvectors[:, match.eig_indices[0]].copy()
    if abs(v[0]) < 1e-13:
        raise ZeroHeadComponent("head entry below 1e-13 in modulus")
    v /= v[0]
    lam = match.computed[0]
    target = np.exp(lam * mesh.nodes)
    weight = np.exp(rho * mesh.nodes)
    return float(np.max(weight * np.abs(v[1:] - target)))


def eigfun_error_re(match: RootMatch, spectrum: Spectrum, mesh: ScaledMesh,
                    dmat: np.ndarray, quad, rho: float) -> float:
    """Weighted 1-norm error of the differentiated, normalized eigenvector.

    The differentiation matrix maps the integrated-state samples to
    derivative samples approximating e^{lambda theta}; normalization makes
    the boundary component one, and the discrete weighted 1-norm uses the
    half-line rule attached to the mesh.
    """
    if spectrum.eigenvectors is None or match.eig_indices.size == 0:
        raise ValueError("match carries no eigenvector")
    v = spectrum.eigenvectors[:, match.eig_indices[0]]
    psi = dmat @ np.concatenate(([0.0], v))
    if abs(psi[0]) < 1e-13:
        raise ZeroHeadComponent("differentiated head entry below 1e-13")
    psi = psi / psi[0]
    lam = match.computed[0]
    svals = quad.mapped_nodes
    if quad.rule.kind == "gauss":
        samples = psi[1:]
    else:
        samples = psi
    target = np.exp(-lam * svals)
    return float(np.dot(quad.mapped_weights,
                        np.exp(-rho * svals) * np.abs(samples - target)))


@dataclass(frozen=True)
class TheoreticalBound:
    """Rate quantities of the root-convergence estimate."""

    c_of_lambda: complex
    d_n: float
    k_p_eps: float


def theoretical_bound(lam: complex, rho1: float, n: int, family: NodeFamily,
                      p=math.inf, eps: float = 0.0) -> TheoreticalBound:
    """C(lambda) = lambda/(lambda + 2 rho1) and the family rate D_N."""
    lam = complex(lam)
    if lam.real <= -rho1:
        raise OutOfHalfPlane("bound requires Re(lambda) > -rho1")
    c = lam / (lam + 2.0 * rho1)
    if NodeFamily(family) is NodeFamily.ZEROS:
        d_n = abs(c) ** n
    else:
        d_n = abs(c**n / (1.0 - c ** (n + 1)))
    if p == math.inf:
        k = 1.0
    else:
        if eps <= 0:
            raise ValueError("finite-p rate needs eps > 0")
        k = (p * eps / (2.0 * rho1)) ** (-1.0 / p)
    return TheoreticalBound(c, float(d_n), float(k))


@dataclass
class ConvergenceRecord:
    """One row of a convergence sweep; serializes to one CSV row."""

    case: str
    family: str
    rho1: float
    rho: float
    quad_mode: str
    n: int
    abs_error: float = math.nan
    eigfun_error: float = math.nan
    matched_lambda: complex = complex(math.nan, math.nan)
    bound_dn: float = math.nan
    error: str = ""


@dataclass(eq=False)
class BenchmarkCase:
    """One linear test problem with its exact-root provider."""

    case_id: str
    kind: str  # "dde" | "re"
    make_problem: object
    target_guess: complex = 0.0
    target_multiplicity: int = 1
    kernel_rate: float = 1.0  # mu of the kernel, for rho1 defaults
    closed_form_targets: object = None  # optional callable -> [(root, mult)]

    @property
    def default_rho1(self) -> float:
        return self.kernel_rate / 2.0

    def default_rho(self, rho1: float) -> float:
        return rho1 if self.kind == "dde" else self.kernel_rate

    def problem(self, rho: float):
        return self.make_problem(rho)

    def exact_targets(self, problem):
        """All tracked roots as (root, multiplicity) pairs."""
        if self.closed_form_targets is not None:
            return self.closed_form_targets(problem)
        root = char_root_solve(problem, self.target_guess)
        return [(root, self.target_multiplicity)]


def _exp_case_targets(track):
    def provider(problem):
        (lam1, lam2), double = exact_roots_exponential(
            problem.a, problem.kernel.mu, problem.kernel.k0)
        if double:
            return [((lam1 + lam2) / 2.0, 2)]
        roots = sorted([lam1, lam2], key=lambda z: (-z.real, -z.imag))
        if track == "all":
            out = [(r, 1) for r in roots]
            return out
        return [(roots[track], 1)]
    return provider


BENCHMARK_CASES = {
    "a1": BenchmarkCase(
        "a1", "dde",
        lambda rho: LinearDDEProblem(3.0, ExponentialKernel(-6.0, 2.0), rho),
        kernel_rate=2.0, closed_form_targets=_exp_case_targets(1)),
    "a2": BenchmarkCase(
        "a2", "dde",
        lambda rho: LinearDDEProblem(3.0, ExponentialKernel(-6.0, 2.0), rho),
        kernel_rate=2.0, closed_form_targets=_exp_case_targets(0)),
    "b": BenchmarkCase(
        "b", "dde",
        lambda rho: LinearDDEProblem(2.0, ExponentialKernel(-8.0, 2.0), rho),
        kernel_rate=2.0, closed_form_targets=_exp_case_targets(0)),
    "c": BenchmarkCase(
        "c", "dde",
        lambda rho: LinearDDEProblem(6.0, ExponentialKernel(-16.0, 2.0), rho),
        kernel_rate=2.0, closed_form_targets=_exp_case_targets(0)),
    "d": BenchmarkCase(
        "d", "dde",
        lambda rho: LinearDDEProblem(0.0, GammaKernel(4.0, 2.0), rho),
        target_guess=0.72, kernel_rate=4.0),
    "e": BenchmarkCase(
        "e", "dde",
        lambda rho: LinearDDEProblem(0.0, GammaKernel(4.0, math.pi), rho),
        target_guess=0.63, kernel_rate=4.0),
    "f": BenchmarkCase(
        "f", "re",
        lambda rho: LinearREProblem(SinModulatedKernel(1.0, 1.0, 1.0), rho),
        target_guess=0.5, kernel_rate=1.0),
    "g": BenchmarkCase(
        "g", "re",
        lambda rho: LinearREProblem(SinModulatedKernel(3.0, 1.5, 1.0), rho),
        target_guess=2.25, kernel_rate=1.5),
}


def assemble_case(case: BenchmarkCase, family: NodeFamily, n: int,
                  rho1: float, rho: float, quad_mode: str = "gauss"):
    """Mesh + matrix for one benchmark case at one size."""
    mesh, quad = build_discretization(family, n, rho1)
    problem = case.problem(rho)
    if case.kind == "dde":
        return assemble_dde_linear(problem, mesh, quad, quad_mode)
    return assemble_re_linear(problem, mesh, quad, quad_mode)


def convergence_study(case: BenchmarkCase | str, family: NodeFamily,
                      rho1: float, rho: float, n_list,
                      quad_mode: str = "gauss") -> list[ConvergenceRecord]:
    """Assemble/eig/match for each size; failures are recorded, not raised."""
    if isinstance(case, str):
        case = BENCHMARK_CASES[case]
    family = NodeFamily(family)
    n_list = list(n_list)
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("size list must be strictly ascending")
    problem = case.problem(rho)
    targets = case.exact_targets(problem)
    target, mult = targets[0]
    records = []
    for n in n_list:
        rec = ConvergenceRecord(case.case_id, family.value, rho1, rho,
                                quad_mode, n)
        try:
            rec.bound_dn = theoretical_bound(target, rho1, n, family).d_n
        except OutOfHalfPlane:
            pass
        try:
            op = assemble_case(case, family, n, rho1, rho, quad_mode)
            spectrum = eig_dense(op.matrix)
            matches, _ = match_roots([(target, mult)], spectrum)
            match = matches[0]
            if match.computed.size == 0:
                rec.error = "no eigenvalue inside the matching radius"
                records.append(rec)
                continue
            rec.abs_error = match.abs_error
            rec.matched_lambda = (complex(np.mean(match.computed))
                                  if mult > 1 else complex(match.computed[0]))
            if mult == 1:
                if case.kind == "dde":
                    rec.eigfun_error = eigfun_error_dde(match, spectrum,
                                                        op.mesh, rho)
                else:
                    rec.eigfun_error = eigfun_error_re(match, spectrum,
                                                       op.mesh, op.dmat,
                                                       op.quad, rho)
        except Exception as exc:  # per-size failures must not abort the sweep
            rec.error = f"{type(exc).__name__}: {exc}"
        records.append(rec)
    return records


def fit_loglog_slope(ns, errors) -> float:
    """Least-squares slope of log(error) against log(n)."""
    ns = np.asarray(ns, dtype=float)
    errors = np.asarray(errors, dtype=float)
    keep = np.isfinite(errors) & (errors > 0)
    if np.sum(keep) < 2:
        return math.nan
    return float(np.polyfit(np.log(ns[keep]), np.log(errors[keep]), 1)[0])


def fit_exponential_rate(ns, errors) -> float:
    """Least-squares slope of log(error) against n (log-linear rate)."""
    ns = np.asarray(ns, dtype=float)
    errors = np.asarray(errors, dtype=float)
    keep = np.isfinite(errors) & (errors > 0)
    if np.sum(keep) < 2:
        return math.nan
    return float(np.polyfit(ns[keep], np.log(errors[keep]), 1)[0])
