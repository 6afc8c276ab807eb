"""Exception types shared across the package."""


class DomainError(ValueError):
    """Input lies outside the domain where an operation is defined."""


class SingularityError(ArithmeticError):
    """Evaluation was requested at (or numerically on top of) a primary."""


class NumericError(ArithmeticError):
    """A numerical consistency check failed beyond its tolerance."""


class IntegrationError(RuntimeError):
    """An integration could not reach its stopping condition."""


class NoCollisionError(DomainError):
    """The Kepler ellipse does not meet the circle of the second primary."""
