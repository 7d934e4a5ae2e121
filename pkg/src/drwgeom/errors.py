"""Exception hierarchy.

Every error raised by the library derives from :class:`DRWGeomError`, so
callers can catch the whole family at once. The CLI maps these to a nonzero
exit status.
"""


class DRWGeomError(Exception):
    """Base class for all library errors."""


# graph construction -------------------------------------------------------

class GraphError(DRWGeomError, ValueError):
    """Invalid graph description."""


class DisconnectedGraph(GraphError):
    pass


class SelfLoop(GraphError):
    pass


class NonpositiveWeight(GraphError):
    pass


class FeatureDimMismatch(GraphError):
    pass


class DuplicateEdge(GraphError):
    pass


class DimensionMismatch(DRWGeomError, ValueError):
    pass


class ExponentOverflow(DRWGeomError, ArithmeticError):
    """Some ``theta @ phi_ij`` exceeds the representable exponent range."""


# class decomposition -----------------------------------------------------

class EmptyClass(DRWGeomError, ValueError):
    pass


class AllAbsorbing(DRWGeomError, ValueError):
    pass


class SpectralRadiusNotSubunit(DRWGeomError, ArithmeticError):
    pass


# hitting-time law --------------------------------------------------------

class SingularSystem(DRWGeomError, ArithmeticError):
    pass


class SeedNotTransient(DRWGeomError, ValueError):
    pass


class RadiusExceeded(DRWGeomError, ValueError):
    pass


class NonDiagonalizable(DRWGeomError, ArithmeticError):
    pass


# sensitivities -----------------------------------------------------------

class ZeroProbability(DRWGeomError, ArithmeticError):
    pass


class ZeroAbsorptionMass(DRWGeomError, ValueError):
    """The seed has no one-step absorption probability, ``e_q^T R == 0``."""


# quotient geometry -------------------------------------------------------

class EmptyField(DRWGeomError, ValueError):
    pass


class ZeroRank(DRWGeomError, ArithmeticError):
    pass


class RankDeficientBasis(DRWGeomError, ArithmeticError):
    pass


# scores / oracles / experiments -------------------------------------------

class LabeledQuery(DRWGeomError, ValueError):
    pass


class TooLarge(DRWGeomError, ValueError):
    pass


class GenerationFailed(DRWGeomError, RuntimeError):
    pass
