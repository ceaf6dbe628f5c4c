"""Exception types shared across the boardwatch package."""


class BoardwatchError(Exception):
    """Base class for all boardwatch errors."""


class DimensionMismatch(BoardwatchError):
    """Two images (or an image and a grid) have incompatible dimensions."""


class DegenerateGeometry(BoardwatchError):
    """Board corner quadrilateral is non-convex or near-collinear."""


class ContrastTooLow(BoardwatchError):
    """Calibration mark is indistinguishable from the noise floor."""


class CaptureDisabled(BoardwatchError):
    """Capture has been disabled for this camera."""


class Obstructed(BoardwatchError):
    """Burst acquisition never produced a usable image within the retry budget."""


class SourceUnavailable(BoardwatchError):
    """The camera frame source is gone; detector state is preserved."""


class UnknownCamera(BoardwatchError):
    pass


class UnknownDetector(BoardwatchError):
    pass


class UnknownRecord(BoardwatchError):
    pass


class UnknownUser(BoardwatchError):
    pass


class NotOwner(BoardwatchError):
    """Acting user does not own the camera behind this record."""


class NotAuthorized(BoardwatchError):
    """Acting user is neither owner nor contributor."""


class EmptyChange(BoardwatchError):
    """No changed cells to derive a default share region from."""


class MalformedFilter(BoardwatchError):
    pass


class MalformedRange(BoardwatchError):
    pass


class NoCameraSelected(BoardwatchError):
    """Heatmap queries require exactly one camera."""


class EmptySelection(BoardwatchError):
    pass


class StorageFailure(BoardwatchError):
    pass


class InvalidScript(BoardwatchError):
    """Scenario script failed validation."""


class InvalidManifest(BoardwatchError):
    """Frame manifest failed validation (e.g. timestamps out of order)."""


class MissingFile(BoardwatchError):
    pass


class DecodeError(BoardwatchError):
    pass


class MismatchedSources(BoardwatchError):
    """Feed and ground truth do not come from the same source."""
