"""Exception types shared across the package."""


class DecwaveError(Exception):
    """Base class for all errors raised by this package."""


class MeshError(DecwaveError):
    """Invalid mesh input (parse failure, bad index, degenerate or
    non-manifold geometry).  Carries the offending line number when the
    problem was detected while reading a file."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConfigError(DecwaveError):
    """Invalid simulation configuration."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class AssemblyError(DecwaveError):
    """Operator assembly failed (nonpositive dual area, zero edge length)."""


class DivergenceError(DecwaveError):
    """The time stepper produced a non-finite or absurdly large field."""

    def __init__(self, message: str, step: int):
        self.step = step
        super().__init__(f"step {step}: {message}")


class LinearSolveError(DecwaveError):
    """The iterative linear solver did not reach the requested tolerance."""

    def __init__(self, message: str, residual: float):
        self.residual = residual
        super().__init__(message)


class OutputError(DecwaveError):
    """Snapshot/probe/manifest emission failed."""
