"""Exception types shared across the package."""


class CalibrationError(RuntimeError):
    """No admissible parameter value satisfies the requested exponent equation."""


class UnsupportedVariantError(NotImplementedError):
    """The requested operation has no implementation for this process variant."""


class TestInapplicableError(RuntimeError):
    """A statistical test cannot be run on the supplied data (e.g. degenerate regressor)."""

    __test__ = False  # not a pytest test class, despite the name
