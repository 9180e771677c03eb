class LabError(Exception):
    msg: str

    def __init__(self, msg: str = "") -> None:
        super().__init__(msg)
        self.msg = msg

    def __str__(self) -> str:
        return self.msg


class ConfigError(LabError):
    """configuration is invalid or cannot be read"""


class ResolutionError(ConfigError):
    """grid does not resolve the requested layer thickness"""


class CatalogError(ConfigError):
    """unknown or inadmissible Euler catalog entry"""


class OutputError(LabError):
    """output path is not writable"""


class DomainError(LabError, ValueError):
    """point lies outside the closed channel"""


class BoundaryConditionError(LabError, ValueError):
    """field does not satisfy the boundary condition an operation requires"""


class DegenerateFitError(LabError, ValueError):
    """data are zero or non-positive where a strictly positive quantity is needed"""


class HorizonError(LabError, ValueError):
    """query time lies beyond the recorded history"""


class SolverError(LabError):
    """numerical failure while time stepping"""


class PoissonConvergenceError(SolverError):
    """Raised when the pressure solve misses its tolerance."""

    def __init__(self, residual: float, iterations: int) -> None:
        super().__init__(
            f"pressure solve did not converge: relative residual {residual:.3e} "
            f"after {iterations} iterations"
        )
        self.residual = residual
        self.iterations = iterations

    def __reduce__(self):
        return type(self), (self.residual, self.iterations)


class StepRejectedError(SolverError):
    """Raised when a time step exceeds the advective stability limit."""

    def __init__(self, cfl: float) -> None:
        super().__init__(f"step rejected: CFL number {cfl:.4f} exceeds 1")
        self.cfl = cfl

    def __reduce__(self):
        return type(self), (self.cfl,)


class NonFiniteStateError(SolverError):
    """Raised when a step produces NaN or infinite values."""

    def __init__(self, step_index: int, time: float) -> None:
        super().__init__(f"non-finite state after step {step_index} (t={time:.6g})")
        self.step_index = step_index
        self.time = time

    def __reduce__(self):
        return type(self), (self.step_index, self.time)
