"""Exception and warning types shared across the package."""


class BevTrackError(Exception):
    """Base class for all package-specific errors."""


class DegenerateInput(BevTrackError):
    """Input admits no unique solution (too few points, collinear, rank-deficient)."""


class OutOfDomain(BevTrackError):
    """A BEV point has no pixel preimage (behind the horizon, outside the linear range)."""


class DeadForecast(BevTrackError):
    """advance() was called on a forecast with no alive branches left."""


class NonMonotonicFrame(BevTrackError):
    """Tracker received a frame index not strictly greater than the last one."""


class ParseError(BevTrackError):
    """A file or config could not be parsed; message carries the location."""


class InvalidScenario(BevTrackError):
    """Scenario violates a structural invariant (bad fps, empty waypoints, ...)."""


class MissingGroundTruth(BevTrackError):
    """Ground truth lacks entries required by a metric (offending ids in args)."""


class HorizonInsideFootprint(UserWarning):
    """Some pixel columns have no usable linearization threshold of their own."""


class NonPositiveBox(UserWarning):
    """A CSV row carried a non-positive box width/height and was skipped."""
