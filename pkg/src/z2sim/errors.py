"""Exception types shared across the package."""


class Z2SimError(Exception):
    """Base class for package errors."""


class SchemaError(Z2SimError):
    """Configuration document is malformed (CLI exit code 2)."""


class PhysicsError(Z2SimError):
    """Infeasible parameters or failed numerics (CLI exit code 3)."""


class EmptySectorError(PhysicsError):
    """A requested symmetry sector contains no basis states."""


class ConvergenceError(PhysicsError):
    """Time-step refinement did not reach the requested tolerance."""
