"""Exception types shared across the toolkit.

Everything raised intentionally derives from VeinforgeError so callers can
catch one type at the CLI boundary. File-not-found and OS-level failures use
the builtin exceptions.
"""


class VeinforgeError(Exception):
    """Base class for all toolkit errors."""


class UnsupportedFormatError(VeinforgeError):
    """Image or file format the toolkit refuses to handle (color, bad maxval)."""


class CorruptImageError(VeinforgeError):
    """Image header or payload is malformed or truncated."""


class InvalidParamError(VeinforgeError, ValueError):
    """Parameter outside its documented domain."""


class EmptyHistogramError(VeinforgeError):
    """Histogram with zero total mass where mass is required."""


class ParseError(VeinforgeError):
    """Malformed manifest, config, or report text."""


class DuplicateRecordError(VeinforgeError):
    """Two manifest records share the same identity key."""


class LayoutMismatchError(VeinforgeError):
    """Directory tree does not follow the requested dataset layout."""


class UnsplittableClassError(VeinforgeError):
    """A class cannot keep at least one train and one test sample."""


class OutOfBoundsError(VeinforgeError, IndexError):
    """Pixel coordinate outside the region an operator is defined on."""


class DimensionMismatchError(VeinforgeError):
    """Vector length or record set disagrees with what a consumer expects."""


class DegenerateDataError(VeinforgeError):
    """Data carries no variance where structure is required."""


class FormatError(VeinforgeError):
    """Binary or JSON artifact violates its declared layout or version."""


class EmptyNodeError(VeinforgeError):
    """Impurity requested for a node with no samples."""


class InvalidTrainingSetError(VeinforgeError):
    """Training set empty, single-class, or inconsistent."""


class UnknownLabelError(VeinforgeError):
    """Label absent from the model's class list."""


class EmptyTestSetError(VeinforgeError):
    """No test samples to build trials from."""


class UndefinedRateError(VeinforgeError):
    """Rate requested with a zero denominator."""


class UnsortedCurveError(VeinforgeError):
    """Curve points not ordered as the integrator requires."""


class DegenerateTrialSetError(VeinforgeError):
    """Trial set missing genuine or imposter trials."""


class UnachievableError(VeinforgeError):
    """No threshold on the sweep grid satisfies the requested rate."""


class EmptyInputError(VeinforgeError):
    """Operation received an empty collection where items are required."""
