"""Exception hierarchy shared by all ciforge modules."""


class CiforgeError(Exception):
    """Base class for library errors."""


class ConfigurationError(CiforgeError, ValueError):
    """Invalid sizes, schemes or experiment settings."""


class NumericalError(CiforgeError):
    """Base class for numerical failures (CLI exit code 3)."""


class SingularChannelError(NumericalError):
    """Channel Gram matrix is rank deficient or too ill-conditioned."""


class SingularSubblockError(NumericalError):
    """A principal sub-block of the Gram inverse could not be factorized."""


class InfeasibleError(NumericalError):
    """The constraint set of a QP is empty."""


class NonConvergenceError(NumericalError):
    """The active-set iteration cap was reached."""


class SizeError(CiforgeError, ValueError):
    """Problem too large for an enumeration routine."""
