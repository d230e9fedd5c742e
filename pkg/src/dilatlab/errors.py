"""Exception types shared across the package."""


class DilatlabError(Exception):
    """Base class for all package errors."""


class OutOfDomain(DilatlabError):
    """An operation was asked to act on a point outside its working ball."""


class NoInvert(DilatlabError):
    """Chart inversion failed to reach the required residual."""


class NoConvergence(DilatlabError):
    """A scale-limit estimator failed to settle over the grid tail."""


class NoiseFloor(DilatlabError):
    """All defect samples sit at floating-point noise; no order can be fitted."""


class DegenerateTangent(DilatlabError):
    """Tangent distance collapsed for distinct points.

    Degenerate tangent distances are legal; estimators flag them on the
    result instead of raising. The class exists for callers that want to
    promote the flag to an error.
    """


class UnsupportedVariant(DilatlabError):
    """Requested a norm variant the group does not support."""


class InvalidAlgebra(DilatlabError):
    """Structure constants violate a required identity."""


class UnknownName(DilatlabError):
    """Lookup of a structure or group id failed."""


class UnsupportedStep(DilatlabError):
    """Constructive decomposition is not available for this nilpotency step."""


class NotConverged(DilatlabError):
    """Optimizer finished without producing a certified feasible answer."""
