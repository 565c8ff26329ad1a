"""Exception hierarchy for detflow."""


class DetflowError(Exception):
    """Base class for all errors raised by detflow."""


class DimensionMismatch(DetflowError, ValueError):
    pass


class NonFiniteMatrix(DetflowError, ValueError):
    pass


class SingularMatrix(DetflowError, ArithmeticError):
    """Raised by ``inverse`` when the LU pivots fail the invertibility test."""


class OutOfRange(DetflowError, ValueError):
    """A tabulated coefficient was evaluated outside its knot range."""


class ValidationError(DetflowError, ValueError):
    """A scenario violates one or more invariants.

    ``errors`` holds one message per violation, prefixed with the field name.
    """

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class ParseError(DetflowError, ValueError):
    def __init__(self, message, *, line=None, field=None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class IntegrationError(DetflowError, ArithmeticError):
    pass


class StepSizeUnderflow(IntegrationError):
    pass


class NonFiniteState(IntegrationError):
    pass


class IdentityNotApplicable(DetflowError, ValueError):
    pass


class NotHomogeneous(IdentityNotApplicable):
    pass


class NotLeftOnly(IdentityNotApplicable):
    pass


class SingularStart(IdentityNotApplicable):
    pass
