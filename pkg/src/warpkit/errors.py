"""Error taxonomy shared by the library, the CLI, and external bindings.

Every error carries a stable ``code`` string so that callers on the other
side of a process boundary can dispatch on it without parsing messages.
"""


class CoreError(Exception):
    """Base class for data-contract violations raised by this library."""

    code = "CoreError"


class ShapeMismatch(CoreError):
    """Inputs that must share an extent or dimension do not."""

    code = "ShapeMismatch"


class InvalidCoordinate(CoreError):
    """A coordinate is NaN or otherwise unusable."""

    code = "InvalidCoordinate"


class EmptyImage(CoreError):
    """An operation received a zero-sized image."""

    code = "EmptyImage"


class EmptyPose(CoreError):
    """No usable keypoints above the confidence floor."""

    code = "EmptyPose"


class InsufficientPoints(CoreError):
    """Fewer than four usable point correspondences."""

    code = "InsufficientPoints"


class DegenerateConfiguration(CoreError):
    """Point configuration does not determine a homography (rank < 8)."""

    code = "DegenerateConfiguration"


class SingularTransform(CoreError):
    """A transform matrix is not invertible."""

    code = "SingularTransform"


class InvalidWeight(CoreError):
    """A loss weight or scale parameter is out of range."""

    code = "InvalidWeight"


class RecordError(CoreError):
    """A curation record is malformed."""

    code = "RecordError"


class FormatError(CoreError):
    """A file payload does not match its declared format."""

    code = "FormatError"
