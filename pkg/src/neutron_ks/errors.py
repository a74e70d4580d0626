"""Exception hierarchy shared across the package."""


class KSError(Exception):
    """Base class for all errors raised by neutron_ks."""


class NonHermitian(KSError, ValueError):
    pass


class NotNormalized(KSError, ValueError):
    pass


class NotProportionalToIdentity(KSError, ArithmeticError):
    """An operator product that should be +I or -I is neither."""


class PreparationUnavailable(KSError, ValueError):
    pass


class InvalidRate(KSError, ValueError):
    pass


class InsufficientData(KSError, ValueError):
    pass


class DegenerateDesign(KSError, ValueError):
    """The fringe design matrix is singular (aliased phase settings)."""


class ZeroTotal(KSError, ZeroDivisionError):
    pass


class LabelMismatch(KSError, ValueError):
    pass


class ConfigParse(KSError, ValueError):
    pass


class SchemaError(KSError, ValueError):
    pass


class MissingContext(KSError, LookupError):
    pass
