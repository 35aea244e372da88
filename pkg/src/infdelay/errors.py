"""Exception types shared across the package."""


class InfDelayError(Exception):
    """Base class for all package-specific failures."""


class ConvergenceFailure(InfDelayError):
    """Newton iteration for quadrature nodes failed to reach tolerance."""


class DegenerateMesh(InfDelayError):
    """Two mesh nodes coincide (within relative spacing 1e-14)."""


class MeshQuadMismatch(InfDelayError):
    """Collocation mesh and quadrature nodes do not coincide."""


class IntegrableSingularity(InfDelayError):
    """Kernel is unbounded (but integrable) at s = 0; a quadrature node hit it."""


class OutOfStrip(InfDelayError):
    """Laplace-transform argument lies outside the kernel's convergence strip."""


class NonFiniteRHS(InfDelayError):
    """Right-hand-side evaluation produced non-finite values."""


class NonFiniteInput(InfDelayError):
    """Matrix handed to the eigensolver contains non-finite entries."""


class NoConvergence(InfDelayError):
    """Iterative solver hit its iteration cap."""


class StrayedOutOfStrip(InfDelayError):
    """Root iteration left the kernel's Laplace strip."""


class SingularCollocation(InfDelayError):
    """Collocation linear system is singular at this argument."""


class ZeroHeadComponent(InfDelayError):
    """Eigenvector head entry too small to normalize against."""


class OutOfHalfPlane(InfDelayError):
    """Argument violates Re(lambda) > -rho1."""


class HalfPlaneViolation(InfDelayError):
    """Recurrence requires Re(mu) < 1/2."""


class SingularSystem(InfDelayError):
    """Direct collocation matrix is singular."""


class InvalidDelta(InfDelayError):
    """Finite-p norms require a strictly positive tail weight delta."""


class TailNotNegligible(InfDelayError):
    """Requested norm cannot be certified on a truncated domain."""


class InvalidParameter(InfDelayError):
    """Model parameter outside its admissible range."""


class StepFailure(InfDelayError):
    """Continuation step fell below the minimum step size."""


class MissingHopf(InfDelayError):
    """Expected Hopf point not found inside the scanned window."""


class ConfigError(InfDelayError):
    """Run configuration failed validation."""
