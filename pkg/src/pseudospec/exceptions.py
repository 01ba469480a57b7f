"""Exception types raised across the package."""


class PseudospecError(Exception):
    """Base class for all errors raised by pseudospec."""


class DimensionError(PseudospecError, ValueError):
    pass


class ConvergenceError(PseudospecError, RuntimeError):
    """The QR iteration hit its sweep cap.

    ``partial`` holds the eigenvalues that had already deflated.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = [] if partial is None else list(partial)


class StructureError(PseudospecError, ValueError):
    pass


class HypothesisError(PseudospecError, ValueError):
    """A resultant was requested for polynomials violating its degree hypothesis."""


class BoxError(PseudospecError, ValueError):
    pass


class PreconditionError(PseudospecError, ValueError):
    pass


class DiscontinuityError(PseudospecError, RuntimeError):
    pass


class CoverageError(PseudospecError, RuntimeError):
    pass


class InputFormatError(PseudospecError, ValueError):
    """A JSON input file does not follow its documented schema."""
