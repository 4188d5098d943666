"""Exception types shared across the toolkit."""


class RRKitError(Exception):
    """Base class for all toolkit errors."""


class DegenerateQuad(RRKitError):
    """Point set is collinear or coincident; no enclosing rectangle exists."""


class InvalidConfig(RRKitError):
    """Configuration object violates its invariants."""


class InvalidArg(RRKitError):
    """Argument outside the documented domain."""


class NonFinite(RRKitError):
    """Computation would produce or consume a non-finite value."""


class ShapeMismatch(RRKitError):
    """Array arguments have incompatible shapes or channel counts."""


class UnknownVariant(RRKitError):
    """Requested interpolation variant is not one of the known names."""


class EmptyLocation(RRKitError):
    """A grid location carries no candidate where at least one is required."""


class DomainError(RRKitError):
    """Numeric input outside the mathematical domain of the function."""


class UnknownClass(RRKitError):
    """Class id not present in the declared category set."""


class UnknownTile(RRKitError):
    """Tile index does not refer to a window of the given plan."""


class ParseError(RRKitError):
    """Malformed text input.

    Carries the 1-based line number and a short reason.
    """

    def __init__(self, line_no, reason):
        self.line_no = line_no
        self.reason = reason
        super().__init__(f"line {line_no}: {reason}")
