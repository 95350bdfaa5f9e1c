"""Exception hierarchy shared by every module."""


class HCDepError(Exception):
    """Base class for all errors raised by hcdep."""


class DomainError(HCDepError, ValueError):
    """An argument lies outside the domain of the operation."""


class DegenerateRegimeError(DomainError):
    """kappa >= 1: the effective sample size collapses to a single block."""


class EmptyGridError(DomainError):
    """No candidate level of an HC grid lies inside [-t_n, t_n]."""


class ResourceError(HCDepError):
    """A size or runtime cap would be exceeded."""


class NonPSDError(HCDepError):
    """A covariance matrix is not positive semi-definite."""


class RareEventError(HCDepError):
    """Too few conditioning events were observed; lower the level."""
