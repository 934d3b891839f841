"""Exception hierarchy shared by every module of the package."""


class PartialFairError(Exception):
    """Base class for all errors raised by partialfair."""


class ParameterError(PartialFairError, ValueError):
    """An argument violates a documented precondition."""


class DomainError(ParameterError):
    """An input value lies outside the functionality's domain."""


class CapacityError(PartialFairError):
    """An exact enumeration or table would exceed the configured budget."""


class HarnessError(PartialFairError):
    """An adversary strategy broke its contract (acted for an honest or
    already-aborted party, returned a malformed decision, ...)."""


class ReconstructionError(PartialFairError):
    """Too few valid shares were available to reconstruct a secret."""


class ConfigError(ParameterError):
    """An experiment configuration file is malformed."""
