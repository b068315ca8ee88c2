"""Exception types shared across modules."""


class ArtifactError(Exception):
    """Base class for all library errors."""


class SeriesDiverged(ArtifactError):
    pass


class DomainError(ArtifactError, ValueError):
    pass


class PoleError(ArtifactError, ZeroDivisionError):
    pass


class Unresolved(ArtifactError):
    pass


class CollisionError(ArtifactError):
    pass


class ConfigTooLarge(ArtifactError):
    pass


class Unsupported(ArtifactError):
    pass


class QuadratureUnstable(ArtifactError):
    pass


class TruncationInsufficient(ArtifactError):
    pass


class RootFindFailure(ArtifactError):
    pass


class MatrixTooLarge(ArtifactError):
    pass


class BranchError(ArtifactError):
    pass


class SwallowedPoint(ArtifactError):
    pass


class StoppedDomain(ArtifactError):
    pass


class CoincidentPoints(ArtifactError, ValueError):
    pass


class UsageError(ArtifactError):
    pass
