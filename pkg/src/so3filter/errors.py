"""Exception types raised by so3filter."""


class So3FilterError(Exception):
    """Base class for every error raised by this package."""


class NotAntisymmetric(So3FilterError, ValueError):
    pass


class NotSymmetric(So3FilterError, ValueError):
    pass


class NonUnitAxis(So3FilterError, ValueError):
    pass


class NearPiRotation(So3FilterError, ValueError):
    """Rotation too close to 180 degrees for a Rodriguez vector to exist."""


class DegenerateMatrix(So3FilterError, ValueError):
    pass


class GimbalLock(So3FilterError, ValueError):
    pass


class DegenerateVector(So3FilterError, ValueError):
    pass


class CollinearPair(So3FilterError, ValueError):
    pass


class RankDeficient(So3FilterError, ValueError):
    pass


class SingularMatrix(So3FilterError, ValueError):
    pass


class RhoUnavailable(So3FilterError, ValueError):
    pass


class ConfigError(So3FilterError, ValueError):
    """Invalid scenario or run configuration."""


class NearUnstableSet(So3FilterError, RuntimeError):
    """The filter correction is singular (1 + Upsilon too close to zero).

    ``step`` holds the offending integration step index when raised from a
    simulation run, otherwise ``None``.
    """

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message)
        self.step = step
