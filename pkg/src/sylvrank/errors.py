"""Exception types raised across the package."""


class SylvrankError(Exception):
    """Base class for all package errors."""


class IncompatiblePointError(SylvrankError, ValueError):
    """An evaluation point does not match what a coefficient function needs."""


class SingularPencilError(SylvrankError, ArithmeticError):
    """The matrix pencil is singular or too ill-conditioned at a point."""

    def __init__(self, point, condition):
        self.point = point
        self.condition = condition
        super().__init__(
            f"pencil singular or ill-conditioned at {point!r} "
            f"(condition estimate {condition:.3e})"
        )


class DimensionError(SylvrankError, ValueError):
    pass


class NonFiniteError(SylvrankError, ArithmeticError):
    """An objective term became NaN or infinite."""

    def __init__(self, term):
        self.term = term
        super().__init__(f"non-finite value in objective term {term!r}")


class DivergenceError(SylvrankError, ArithmeticError):
    def __init__(self, step, value, initial, outer_index=None):
        self.step = step
        self.value = value
        self.initial = initial
        self.outer_index = outer_index
        where = f"step {step}" if outer_index is None else f"outer {outer_index}, step {step}"
        super().__init__(
            f"optimizer diverged at {where}: objective {value:.3e} "
            f"exceeds 1e6 x initial ({initial:.3e})"
        )


class ConjugatePairingError(SylvrankError, ValueError):
    """Sample points could not be paired with their complex conjugates."""
