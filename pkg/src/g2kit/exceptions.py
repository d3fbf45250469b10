"""Exception hierarchy for g2kit."""


class G2KitError(Exception):
    """Base class for all errors raised by g2kit."""


class DimensionMismatch(G2KitError, ValueError):
    pass


class DegreeOverflow(G2KitError, ValueError):
    pass


class NotPositiveDefinite(G2KitError, ValueError):
    pass


class DegenerateMetric(NotPositiveDefinite):
    pass


class IndefiniteForm(G2KitError, ValueError):
    """A 3-form whose induced bilinear form is not definite."""


class NearAssociative(G2KitError, ValueError):
    pass


class DependentGenerators(G2KitError, ValueError):
    pass


class AssociativeLimit(G2KitError, ValueError):
    pass


class ZeroVolume(G2KitError, ValueError):
    def __init__(self, msg, location=None):
        super().__init__(msg)
        self.location = location


class IndefiniteTriple(G2KitError, ValueError):
    def __init__(self, msg, location=None):
        super().__init__(msg)
        self.location = location


class InvalidModel(G2KitError, ValueError):
    pass


class MixedType(G2KitError):
    def __init__(self, msg, witnesses=()):
        super().__init__(msg)
        self.witnesses = list(witnesses)


class WrongType(G2KitError, ValueError):
    pass


class NonFlatLeaf(G2KitError):
    pass


class SingularBasisChange(G2KitError, ValueError):
    pass


class NonClosedAlpha(G2KitError):
    pass


class AmbiguousOrder(G2KitError):
    def __init__(self, msg, slopes=None):
        super().__init__(msg)
        self.slopes = slopes
