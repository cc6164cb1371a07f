"""Exception hierarchy shared by every gfflab module."""


class GffLabError(Exception):
    """Base class for all errors raised by gfflab."""


# domain construction
class MeshTooCoarse(GffLabError):
    pass


class EmptyInterior(GffLabError):
    pass


class DisconnectedInterior(GffLabError):
    pass


class BallNotContained(GffLabError):
    pass


class PointTooCloseToBoundary(GffLabError):
    pass


# linear algebra
class FactorizationFailure(GffLabError):
    pass


class SolveFailure(GffLabError):
    pass


class VertexNotInterior(GffLabError):
    pass


class DimensionMismatch(GffLabError, ValueError):
    pass


class TooCloseToBoundary(GffLabError):
    pass


# averaging and decomposition
class PointNotInSubdomain(GffLabError):
    pass


class SupportEscapesDomain(GffLabError):
    pass


class SubdomainNotContained(GffLabError):
    pass


class NotSimplyConnected(SubdomainNotContained):
    pass


# statistics
class InsufficientSamples(GffLabError):
    pass


class PointsTooClose(GffLabError):
    pass


class CoincidentPoints(GffLabError):
    pass


class DegenerateDesign(GffLabError):
    pass


# conformal maps
class PointOutsideSource(GffLabError):
    pass


class ImageEscapesTarget(GffLabError):
    pass


# one-dimensional paths
class InvalidGrid(GffLabError, ValueError):
    pass


class SubintervalOffGrid(GffLabError):
    pass


class HorizonTooShort(GffLabError):
    pass


# experiment runner
class ConfigInvalid(GffLabError):
    """Invalid configuration; ``key`` names the offending entry."""

    def __init__(self, key: str, reason: str = ""):
        self.key = key
        self.reason = reason
        super().__init__(f"{key}: {reason}" if reason else key)


class ExperimentFailed(GffLabError):
    pass
