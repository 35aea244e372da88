"""Benchmark nonlinear models, equilibria, stability and continuation.

Two models are built in:

* ``beretta-breda``: an infinite-delay DDE with a gamma-distributed
  maturation kernel, an extra juvenile-mortality exponential and a
  Ricker-type nonlinearity.  The survival factor folds exactly into a
  rescaled gamma kernel with rate m/tau + delta_J.
* ``blowflies``: a renewal equation for the birth rate of Nicholson's
  blowflies, with maturation delay one.  Its right-hand side is evaluated
  through the integrated state (integration by parts removes all
  differentiation from inside the nonlinearity), so the discrete
  functional is a precomputed linear form fed into x e^{-x}.

Both models carry closed-form equilibria, which seed Newton and anchor the
independent oracles: the gamma chain ODE for integer shape, and the scalar
transcendental characteristic equation for the blowflies model.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (InvalidParameter, MissingHopf, NoConvergence,
                     NonFiniteRHS, StepFailure)
from .kernels import GammaKernel, kernel_eval
from .laguerre import NodeFamily
from .mesh import interp_matrix
from .operators import (DiscretizedODE, ProlongedState, assemble_nonlinear_rhs,
                        build_discretization)
from .spectra import Spectrum, eig_dense


@dataclass(eq=False)
class ModelSpec:
    """A nonlinear model reduced through a head/integral functional."""

    name: str
    kind: str  # "dde" | "re"
    params: dict
    rho1: float
    rho: float
    functional: object = field(repr=False, default=None)
    equilibrium_head: object = field(repr=False, default=None)
    profile_from_head: object = field(repr=False, default=None)

    def discretize(self, n: int,
                   family: NodeFamily = NodeFamily.EXTREMA) -> DiscretizedODE:
        mesh, quad = build_discretization(family, n, self.rho1)
        return assemble_nonlinear_rhs(self, mesh, quad)


def _require_positive(**values):
    for name, val in values.items():
        if not val > 0:
            raise InvalidParameter(f"parameter {name} must be positive, got {val}")


def model_beretta_breda(delta_a: float, delta_j: float, a: float, b: float,
                        m: float, tau: float) -> ModelSpec:
    """Gamma-kernel DDE with Ricker feedback; shape m may be non-integer."""
    _require_positive(delta_a=delta_a, delta_j=delta_j, a=a, b=b, m=m, tau=tau)
    mu_k = m / tau
    mu_eff = mu_k + delta_j
    survival = (mu_k / mu_eff) ** m  # exact folding of e^{-delta_j s}
    kernel = GammaKernel(mu_eff, m)
    rho1 = mu_eff / 4.0
    params = dict(delta_a=delta_a, delta_j=delta_j, a=a, b=b, m=m, tau=tau)
    coeff_cache: dict[int, np.ndarray] = {}

    def functional(state: ProlongedState) -> float:
        key = id(state._ode)
        coeffs = coeff_cache.get(key)
        if coeffs is None:
            coeffs = b * survival * state.quad_weights \
                * kernel_eval(kernel, state.quad_points)
            coeff_cache[key] = coeffs
        vals = state.quad_values
        ricker = np.exp(-a * np.maximum(vals, 0.0)) * vals
        return -delta_a * state.head + float(np.dot(coeffs, ricker))

    def equilibrium_head() -> float:
        """Nontrivial root of delta_a = b survival e^{-a y}; sign-free."""
        return math.log(b * survival / delta_a) / a

    def profile(head: float, ode: DiscretizedODE) -> np.ndarray:
        return head * ode.w1

    return ModelSpec("beretta-breda", "dde", params, rho1, rho1, functional,
                     equilibrium_head, profile)


def model_blowflies(beta0: float, mu: float) -> ModelSpec:
    """Renewal model for the total birth rate, maturation delay one.

    The distributed term over [1, inf) is computed from the integrated
    state: I(phi) = e^{-mu} phi(-1) - mu integral_1^inf e^{-mu s} phi(-s) ds,
    discretized with the family rule shifted by one.
    """
    if beta0 < 0 or mu <= 0:
        raise InvalidParameter("blowflies model needs beta0 >= 0 and mu > 0")
    rho1 = mu / 2.0
    params = dict(beta0=beta0, mu=mu)
    row_cache: dict[int, np.ndarray] = {}

    def functional(state: ProlongedState) -> float:
        key = id(state._ode)
        row = row_cache.get(key)
        if row is None:
            u = state.quad_points  # shifted rule: s = 1 + u
            coeff = state.quad_weights * np.exp(-mu * (1.0 + u))
            e_shift = interp_matrix(state._ode.ext, -(1.0 + u))
            e_one = interp_matrix(state._ode.ext, np.array([-1.0]))[0]
            profile_row = math.exp(-mu) * e_one - mu * (coeff @ e_shift)
            # act on the weighted samples; the shifted-kernel decay beats
            # the unweighting growth, so the entries stay bounded
            row = profile_row / state._ode.w1
            if not np.all(np.isfinite(row)):
                raise NonFiniteRHS("distributed-term coefficients overflowed")
            row_cache[key] = row
        intake = float(row @ state.weighted_ext)
        with np.errstate(over="ignore"):
            growth = float(np.exp(-intake))
        return beta0 * growth * intake  # off-manifold overflow -> rhs guard

    def equilibrium_head() -> float:
        if beta0 <= 0:
            return 0.0
        return (math.log(beta0 / mu) - mu) * mu * math.exp(mu)

    def profile(head: float, ode: DiscretizedODE) -> np.ndarray:
        return head * ode.mesh.nodes * ode.w1[1:]

    return ModelSpec("blowflies", "re", params, rho1, rho1, functional,
                     equilibrium_head, profile)


def linear_dde_as_model(problem, rho1: float) -> ModelSpec:
    """Degenerate model wrapper so linear problems flow through the
    nonlinear machinery (used to check that linearization and reduction
    commute)."""
    kernel = problem.kernel

    def functional(state: ProlongedState) -> float:
        coeffs = state.quad_weights * kernel_eval(kernel, state.quad_points)
        return problem.a * state.head + float(np.dot(coeffs, state.quad_values))

    return ModelSpec("linear-dde", "dde", {"a": problem.a}, rho1, problem.rho,
                     functional, lambda: 0.0,
                     lambda head, ode: head * ode.w1)


@dataclass
class EquilibriumResult:
    state: np.ndarray
    residual_norm: float
    converged: bool
    newton_iters: int


def equilibrium_newton(ode: DiscretizedODE, guess, tol: float = 1e-10,
                       max_iter: int = 50) -> EquilibriumResult:
    """Damped Newton with a central-difference Jacobian.

    Never raises on stagnation: the best iterate comes back with
    ``converged=False`` so continuation can react.
    """
    u = np.asarray(guess, dtype=float).copy()
    if not np.all(np.isfinite(u)):
        raise InvalidParameter("equilibrium guess must be finite")
    res = ode.rhs(u)
    rnorm = float(np.max(np.abs(res)))
    for it in range(max_iter):
        if rnorm <= tol:
            return EquilibriumResult(u, rnorm, True, it)
        jac = ode.fd_jacobian(u)
        try:
            step = np.linalg.solve(jac, -res)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(jac, -res, rcond=None)[0]
        damp = 1.0
        while damp >= 1e-4:
            trial = u + damp * step
            try:
                trial_res = ode.rhs(trial)
                trial_norm = float(np.max(np.abs(trial_res)))
            except NonFiniteRHS:
                trial_norm = math.inf
            if trial_norm < rnorm or trial_norm <= tol:
                break
            damp *= 0.5
        else:
            return EquilibriumResult(u, rnorm, rnorm <= tol, it)
        u, res, rnorm = trial, trial_res, trial_norm
    return EquilibriumResult(u, rnorm, rnorm <= tol, max_iter)


def equilibrium_profile_residual(ode: DiscretizedODE, state) -> float:
    """Deviation from the closed-form equilibrium profile.

    Reduced equilibria restrict w(theta) (B - theta F): weight times a
    constant for DDE states, weight times a line through zero for RE
    states.  The comparison happens in the stored weighted coordinate,
    which is the state-space norm.
    """
    u = np.asarray(state, dtype=float)
    if ode.kind == "dde":
        target = u[0] * ode.w1
        scale = max(1.0, float(np.max(np.abs(target))))
        return float(np.max(np.abs(u - target)) / scale)
    basis = ode.mesh.nodes * ode.w1[1:]
    slope = float(np.dot(basis, u) / np.dot(basis, basis))
    target = slope * basis
    scale = max(1.0, float(np.max(np.abs(target))))
    return float(np.max(np.abs(u - target)) / scale)


@dataclass
class StabilityResult:
    spectrum: Spectrum
    verdict: str  # "stable" | "unstable" | "marginal"
    rightmost: complex
    trusted: np.ndarray


def stability_at(ode: DiscretizedODE, equilibrium, rho: float | None = None,
                 margin: float = 0.05, tol: float = 1e-8) -> StabilityResult:
    """Verdict from the reduced spectrum restricted to Re > -rho + margin."""
    rho = ode.rho if rho is None else rho
    spectrum = eig_dense(ode.fd_jacobian(np.asarray(equilibrium, dtype=float)))
    vals = spectrum.eigenvalues
    trusted = vals[vals.real > -rho + margin]
    if trusted.size == 0:
        return StabilityResult(spectrum, "stable", spectrum.rightmost, trusted)
    top = float(np.max(trusted.real))
    verdict = "stable" if top < -tol else ("unstable" if top > tol else "marginal")
    return StabilityResult(spectrum, verdict, complex(trusted[0]), trusted)


@dataclass
class BranchRecord:
    param: float
    head: float
    state: np.ndarray
    rightmost: complex
    verdict: str


@dataclass
class BifurcationPoint:
    kind: str  # "branch_point" | "hopf"
    param: float
    critical_eigenvalue: complex
    residual: float


@dataclass
class Branch:
    records: list
    bifurcations: list
    warnings: list


def _test_functions(stab: StabilityResult, im_tol: float):
    vals = stab.trusted
    real_part = vals[np.abs(vals.imag) <= im_tol]
    pair_part = vals[vals.imag > im_tol]
    tf_real = float(np.max(real_part.real)) if real_part.size else -math.inf
    tf_pair = float(np.max(pair_part.real)) if pair_part.size else -math.inf
    return tf_real, tf_pair


def _critical_eig(stab: StabilityResult, kind: str, im_tol: float) -> complex:
    vals = stab.trusted
    sel = vals[np.abs(vals.imag) <= im_tol] if kind == "branch_point" \
        else vals[vals.imag > im_tol]
    if sel.size == 0:
        return complex(math.nan, math.nan)
    return complex(sel[np.argmax(sel.real)])


def continue_equilibrium(make_model, lo: float, hi: float, steps: int, n: int,
                         family: NodeFamily = NodeFamily.EXTREMA,
                         margin: float = 0.05, im_tol: float = 1e-6,
                         newton_tol: float = 1e-10) -> Branch:
    """Natural-parameter continuation with secant predictor/Newton corrector.

    Sign changes of the rightmost real eigenvalue flag branch points; sign
    changes of the largest real part over complex pairs flag Hopf points.
    Each detection is refined by bisection on the parameter.
    """
    if steps < 2:
        raise ValueError("need at least two steps")
    if not hi > lo:
        raise ValueError("empty parameter range")
    family = NodeFamily(family)
    span = hi - lo
    min_step = 1e-6 * span
    warnings: list[str] = []

    def solve_at(p, head_seed=None):
        model = make_model(p)
        ode = model.discretize(n, family)
        head = model.equilibrium_head() if head_seed is None else head_seed
        seed = model.profile_from_head(head, ode)
        eq = equilibrium_newton(ode, seed, tol=newton_tol)
        if not eq.converged:
            raise NoConvergence(f"corrector failed at parameter {p}")
        stab = stability_at(ode, eq.state, model.rho, margin)
        head_val = eq.state[0] if model.kind == "dde" else _re_head(ode, eq.state)
        return BranchRecord(p, head_val, eq.state, stab.rightmost, stab.verdict), stab

    def predict(history, p):
        if len(history) < 2:
            return None  # closed-form model seed
        (p1, h1), (p2, h2) = history[-2], history[-1]
        if p2 == p1:
            return h2
        return h2 + (h2 - h1) * (p - p2) / (p2 - p1)

    records: list[BranchRecord] = []
    bifurcations: list[BifurcationPoint] = []
    history: list[tuple] = []
    prev_tf = None
    prev_p = None

    targets = list(np.linspace(lo, hi, steps + 1))
    pending = targets[::-1]  # stack, consume from the end
    while pending:
        p = pending.pop()
        try:
            rec, stab = solve_at(p, predict(history, p))
        except (NoConvergence, NonFiniteRHS):
            if prev_p is None or p - prev_p <= min_step:
                raise StepFailure(f"step below {min_step} near parameter {p}")
            pending.append(p)
            pending.append(0.5 * (prev_p + p))
            continue
        tf = _test_functions(stab, im_tol)
        if prev_tf is not None:
            changed = [k for k in range(2)
                       if _sign_changed(prev_tf[k], tf[k])]
            if len(changed) == 2:
                warnings.append(
                    f"two test functions changed in ({prev_p}, {p}); "
                    "both refined")
            for k in changed:
                kind = "branch_point" if k == 0 else "hopf"
                bif = _refine_bifurcation(solve_at, predict, history, kind,
                                          prev_p, p, im_tol)
                if bif is not None:
                    bifurcations.append(bif)
        records.append(rec)
        history.append((p, rec.head))
        prev_tf, prev_p = tf, p
    bifurcations.sort(key=lambda b: b.param)
    return Branch(records, bifurcations, warnings)


def _re_head(ode: DiscretizedODE, state) -> float:
    """Equivalent scalar descriptor of an RE equilibrium: its slope."""
    basis = ode.mesh.nodes * ode.w1[1:]
    return float(np.dot(basis, state) / np.dot(basis, basis))


def _sign_changed(a: float, b: float) -> bool:
    return math.isfinite(a) and math.isfinite(b) and (a <= 0.0) != (b <= 0.0)


def _refine_bifurcation(solve_at, predict, history, kind, p_lo, p_hi, im_tol,
                        max_iter: int = 200):
    """Bisection on the relevant test function down to |Re| ~ 1e-12."""
    def tf_at(p):
        rec, stab = solve_at(p, predict(history, p))
        idx = 0 if kind == "branch_point" else 1
        return _test_functions(stab, im_tol)[idx], stab

    f_lo, _ = tf_at(p_lo)
    f_hi, _ = tf_at(p_hi)
    if not _sign_changed(f_lo, f_hi):
        return None
    stab_mid = None
    p_mid = 0.5 * (p_lo + p_hi)
    for _ in range(max_iter):
        p_mid = 0.5 * (p_lo + p_hi)
        f_mid, stab_mid = tf_at(p_mid)
        if abs(f_mid) <= 1e-12 or (p_hi - p_lo) <= 1e-14 * max(1.0, abs(p_mid)):
            break
        if _sign_changed(f_lo, f_mid):
            p_hi, f_hi = p_mid, f_mid
        else:
            p_lo, f_lo = p_mid, f_mid
    crit = _critical_eig(stab_mid, kind, im_tol)
    return BifurcationPoint(kind, float(p_mid), crit, abs(crit.real))


def hopf_curve_beretta_breda(m_values, tau_lo: float, tau_hi: float, n: int,
                             steps: int = 40, delta_a: float = 0.5,
                             delta_j: float = 1.0, a: float = 7.0,
                             b: float = 350.0,
                             family: NodeFamily = NodeFamily.EXTREMA):
    """Two-parameter Hopf curve: per shape value, both critical tau values.

    Returns (rows, missing): rows are (m, [tau_1, tau_2, ...]) with the
    Hopf parameters ascending; shapes whose window closed are listed in
    ``missing`` rather than raised.
    """
    rows = []
    missing = []
    for m in m_values:
        branch = continue_equilibrium(
            lambda tau, m=m: model_beretta_breda(delta_a, delta_j, a, b, m, tau),
            tau_lo, tau_hi, steps, n, family)
        taus = [bp.param for bp in branch.bifurcations if bp.kind == "hopf"]
        rows.append((float(m), taus))
        if len(taus) < 2:
            missing.append(float(m))
    return rows, missing


# ---------------------------------------------------------------------------
# independent oracles


def lct_chain_jacobian(delta_a, delta_j, a, b, m: int, tau, y: float):
    """Jacobian of the equivalent (m+1)-dimensional gamma-chain ODE at y."""
    mu_t = m / tau + delta_j
    kappa = ((m / tau) / mu_t) ** m
    gp = math.exp(-a * y) * (1.0 - a * y)
    jac = np.zeros((m + 1, m + 1))
    jac[0, 0] = -delta_a
    jac[0, m] = b * kappa
    jac[1, 0] = mu_t * gp
    jac[1, 1] = -mu_t
    for i in range(2, m + 1):
        jac[i, i - 1] = mu_t
        jac[i, i] = -mu_t
    return jac


def lct_equilibrium(delta_a, delta_j, a, b, m: int, tau):
    """Closed-form positive equilibrium of the chain ODE, Newton-polished."""
    mu_t = m / tau + delta_j
    kappa = ((m / tau) / mu_t) ** m
    if b * kappa <= delta_a:
        raise InvalidParameter("no positive equilibrium at this tau")
    y = math.log(b * kappa / delta_a) / a
    # scalar Newton on delta_a - b kappa e^{-a y} = 0 (already exact in
    # closed form; the loop guards against rounding in the parameters)
    for _ in range(5):
        f = delta_a - b * kappa * math.exp(-a * y)
        y -= f / (a * b * kappa * math.exp(-a * y))
    z = y * math.exp(-a * y)
    return np.concatenate(([y], np.full(m, z)))


def lct_char_residual(lam: complex, delta_a, delta_j, a, b, m: int, tau) -> complex:
    """Characteristic function of the linearized infinite-delay model."""
    mu_t = m / tau + delta_j
    kappa = ((m / tau) / mu_t) ** m
    y = lct_equilibrium(delta_a, delta_j, a, b, m, tau)[0]
    gp = math.exp(-a * y) * (1.0 - a * y)
    return lam + delta_a - b * kappa * gp * (mu_t / (lam + mu_t)) ** m


def lct_hopf_taus(delta_a, delta_j, a, b, m: int, tau_lo, tau_hi,
                  scan: int = 80):
    """Hopf parameters of the chain ODE by scan plus bisection."""
    if not (isinstance(m, int) and 0 < m <= 12):
        raise InvalidParameter("chain oracle needs integer shape m <= 12")

    def pair_re(tau):
        y = lct_equilibrium(delta_a, delta_j, a, b, m, tau)[0]
        vals = np.linalg.eigvals(lct_chain_jacobian(delta_a, delta_j, a, b,
                                                    m, tau, y))
        pairs = vals[vals.imag > 1e-9]
        return float(np.max(pairs.real)) if pairs.size else -math.inf

    grid = np.linspace(tau_lo, tau_hi, scan + 1)
    f = [pair_re(t) for t in grid]
    taus = []
    for i in range(scan):
        if _sign_changed(f[i], f[i + 1]):
            lo, hi = grid[i], grid[i + 1]
            flo = f[i]
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                fm = pair_re(mid)
                if abs(fm) <= 1e-12 or hi - lo <= 1e-14 * max(1.0, mid):
                    break
                if _sign_changed(flo, fm):
                    hi = mid
                else:
                    lo, flo = mid, fm
            taus.append(0.5 * (lo + hi))
    if not taus:
        raise MissingHopf("no Hopf point of the chain ODE in the window")
    return taus


def blowflies_equilibrium(beta0: float, mu: float) -> float:
    """Closed-form nontrivial equilibrium of the blowflies model."""
    return (math.log(beta0 / mu) - mu) * mu * math.exp(mu)


def blowflies_char_oracle(beta0: float, mu: float, guess: complex,
                          tol: float = 1e-12, maxiter: int = 100) -> complex:
    """Root of the linearized characteristic equation by complex Newton.

    The equation is 1 = mu (1 - xbar) e^{-lambda} / (lambda + mu) with
    xbar = log(beta0/mu) - mu; at beta0 = mu e^{mu} it is solved by
    lambda = 0 exactly.
    """
    if beta0 <= 0 or mu <= 0:
        raise InvalidParameter("oracle needs beta0, mu > 0")
    xbar = math.log(beta0 / mu) - mu
    coef = mu * (1.0 - xbar)
    lam = complex(guess)
    for _ in range(maxiter):
        try:
            ex = cmath.exp(-lam)
            f = 1.0 - coef * ex / (lam + mu)
            df = coef * ex * (1.0 / (lam + mu) + 1.0 / (lam + mu) ** 2)
            step = f / df
        except (OverflowError, ZeroDivisionError) as exc:
            raise NoConvergence(f"iterate left the computable region: {exc}")
        lam -= step
        if not (abs(lam) < 1e6):
            raise NoConvergence("iterate diverged")
        if abs(f) <= tol and abs(step) <= tol * max(1.0, abs(lam)):
            return lam
    raise NoConvergence("blowflies characteristic Newton stalled")


def blowflies_rightmost_root(beta0: float, mu: float,
                             seed: complex | None = None) -> complex:
    """Rightmost characteristic root inside the transform strip Re > -mu.

    With a seed the root is polished directly (used when tracking the root
    along a parameter sweep); otherwise a deterministic guess grid is
    scanned.
    """
    if seed is not None:
        lam = blowflies_char_oracle(beta0, mu, seed)
        if lam.real <= -mu + 1e-9:
            raise NoConvergence("tracked root left the strip")
        return complex(lam.real, abs(lam.imag))
    roots = []
    for sigma in (-0.8, -0.4, 0.0, 0.4, 0.8):
        for omega in np.arange(0.0, 8.1, 0.25):
            try:
                lam = blowflies_char_oracle(beta0, mu, complex(sigma, omega))
            except NoConvergence:
                continue
            if lam.real <= -mu + 1e-9:
                continue
            lam = complex(lam.real, abs(lam.imag))
            if not any(abs(lam - r) < 1e-8 for r in roots):
                roots.append(lam)
    if not roots:
        raise NoConvergence("no characteristic root located")
    return max(roots, key=lambda z: z.real)


def blowflies_hopf_beta0_oracle(mu: float, lo: float, hi: float) -> float:
    """Hopf parameter of the blowflies model by bisection on the oracle.

    The rightmost complex pair is located once at the upper end of the
    bracket (where it sits in the right half-plane) and then tracked by
    seeded Newton while the parameter is bisected on its real part.
    """
    seed_root = blowflies_rightmost_root(hi, mu)

    def crossing(b0, seed):
        return blowflies_rightmost_root(b0, mu, seed=seed)

    f_hi = seed_root.real
    root_at = {hi: seed_root}
    # walk down to the lower end, tracking the pair
    walk = np.linspace(hi, lo, 25)
    current = seed_root
    for b0 in walk[1:]:
        current = crossing(b0, current)
        root_at[b0] = current
    f_lo = current.real
    if not _sign_changed(f_lo, f_hi):
        raise MissingHopf("oracle sees no crossing inside the bracket")
    lo_root, hi_root = current, seed_root
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        root = crossing(mid, 0.5 * (lo_root + hi_root))
        fm = root.real
        if abs(fm) <= 1e-13 or hi - lo <= 1e-13 * max(1.0, mid):
            return mid
        if _sign_changed(f_lo, fm):
            hi, hi_root = mid, root
        else:
            lo, f_lo, lo_root = mid, fm, root
    return 0.5 * (lo + hi)
