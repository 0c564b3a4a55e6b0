"""Exception hierarchy shared by all modules."""


class LVError(Exception):
    """Base class for every error raised by stochlv."""


class ValidationError(LVError, ValueError):
    """Input parameters violate a model invariant."""

    field: str | None = None


class NonPositiveCoefficient(ValidationError):
    def __init__(self, field: str, value: float):
        self.field = field
        self.value = value
        super().__init__(f"{field} must be strictly positive and finite, got {value!r}")


class DegenerateNoise(ValidationError):
    def __init__(self, species: int, detail: str = ""):
        self.species = species
        self.field = f"noise[{species}]"
        msg = f"species {species} has degenerate noise"
        super().__init__(f"{msg}: {detail}" if detail else msg)


class MixedModeUnsupported(ValidationError):
    def __init__(self):
        self.field = "gamma"
        super().__init__(
            "nonzero gamma together with nonzero alpha/beta is only supported "
            "for single boundary diffusions"
        )


class CriticalCase(LVError):
    """A threshold is zero within tolerance; no classification exists."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class NoStationaryDensity(LVError):
    pass


class QuadratureFailure(LVError):
    pass


class MomentDiverges(LVError, ValueError):
    pass


class BoundaryExtinct(LVError):
    def __init__(self, species: int, rate: float):
        self.species = species
        self.rate = rate
        super().__init__(
            f"species {species} dies out on its own axis (a - gamma^2/2 = {rate:.6g} <= 0)"
        )


class NonFiniteState(LVError, ArithmeticError):
    def __init__(self, step: int, path_index: int | None = None):
        self.step = step
        self.path_index = path_index
        where = f" (path {path_index})" if path_index is not None else ""
        super().__init__(f"non-finite state at step {step}{where}")


class ComponentExtinct(LVError):
    pass
