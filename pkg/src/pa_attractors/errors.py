"""Exception hierarchy shared by all modules."""


class PaError(Exception):
    """Base class for every error raised by the package."""


# circle dynamics
class NonPositive(PaError, ValueError):
    pass


class BadResidue(PaError, ValueError):
    pass


class NotCoprime(PaError, ValueError):
    pass


# flat surfaces
class UnmatchedEdge(PaError, ValueError):
    pass


class NonTranslationGluing(PaError, ValueError):
    pass


class Disconnected(PaError, ValueError):
    pass


class OutsidePolygon(PaError, ValueError):
    pass


class HitConePoint(PaError):
    """A traced trajectory ran into a cone point."""

    def __init__(self, length, point=None):
        self.length = length
        self.point = point
        super().__init__(f"trajectory hits a cone point after length {float(length):.12g}")


class ArcTangentToLeaves(PaError, ValueError):
    pass


# pseudo-Anosov layer
class NonHyperbolicPeriod(PaError, ValueError):
    pass


class BranchSetNotInvariant(PaError, ValueError):
    pass


class NoContinuousSheetRule(PaError, ValueError):
    pass


class NotAffineImage(PaError, ValueError):
    pass


class DoesNotCommute(PaError, ValueError):
    pass


class OrderSearchExceeded(PaError):
    pass


class BranchInteriorToRectangle(PaError, ValueError):
    def __init__(self, rectangle_index, point):
        self.rectangle_index = rectangle_index
        self.point = point
        super().__init__(
            f"branch point {tuple(float(c) for c in point)} lies inside rectangle "
            f"{rectangle_index}; refine the partition first"
        )


class NotHyperbolic(PaError, ValueError):
    pass


class DegeneratePath(PaError):
    """A straight path passes exactly through a branch point translate."""


# suspension
class LoopNotClosed(PaError, ValueError):
    pass


class AmbiguousLift(PaError, ValueError):
    pass


# scenes / cli
class ParseError(PaError, ValueError):
    pass


class SchemaMismatch(PaError, ValueError):
    pass


class NotPseudoAnosov(PaError, ValueError):
    """A model map whose return composite is not pseudo-Anosov."""
