"""Exception hierarchy for epidemigrid."""


class EpidemigridError(Exception):
    """Base class for all errors raised by this package."""


class MalformedImage(EpidemigridError):
    pass


class AllObstacle(EpidemigridError):
    pass


class DimensionMismatch(EpidemigridError):
    pass


class IllegalWeight(EpidemigridError, ValueError):
    pass


class EmptyGraph(EpidemigridError):
    pass


class Unreachable(EpidemigridError):
    pass


class NoBoundaryRoad(EpidemigridError):
    pass


class NoDestination(EpidemigridError):
    pass


class ConfigInvalid(EpidemigridError, ValueError):
    pass
