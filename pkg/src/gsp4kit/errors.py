"""Exception types shared across the toolkit."""


class Gsp4KitError(Exception):
    """Base class for all toolkit errors."""


class DimensionMismatch(Gsp4KitError):
    pass


class NotSquarefreeModP(Gsp4KitError):
    """Mod-p reduction has a repeated factor; raise precision or use the Unknown path."""


class NotSimilitude(Gsp4KitError):
    """No scalar c satisfies the Gram identity for the given matrix."""


class Singular(Gsp4KitError):
    pass


class NotTotallyOrdered(Gsp4KitError):
    """Two lattices in the input are incomparable under inclusion."""


class NotSelfDual(Gsp4KitError):
    """The chain is not closed under taking dual lattices."""


class NonStandardChain(Gsp4KitError):
    """Classification invariants fall outside the d=2 table."""


class NotIsotropic(Gsp4KitError):
    pass


class NotInLattice(Gsp4KitError):
    pass


class PreconditionFailed(Gsp4KitError):
    pass


class ReductionMismatch(Gsp4KitError):
    """The two subspaces have distinct summand-family reductions."""


class UnsupportedChainType(Gsp4KitError):
    pass


class BudgetExceeded(Gsp4KitError):
    pass


class NotRegular(Gsp4KitError):
    pass


class NotElliptic(Gsp4KitError):
    pass


class NotStablyConjugate(Gsp4KitError):
    pass


class NotStabilized(Gsp4KitError):
    pass


class IncompatibleAction(Gsp4KitError):
    pass
