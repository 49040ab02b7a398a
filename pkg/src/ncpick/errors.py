"""Exception types raised across ncpick."""


class NcPickError(Exception):
    """Base class for all library errors."""


class DimensionError(NcPickError, ValueError):
    """Operand shapes are inconsistent."""


class NumericalError(NcPickError):
    """A numerical precondition or postcondition failed."""


class SingularResolvent(NumericalError):
    """``I - T`` is numerically singular: the node is on or beyond the row-ball boundary."""


class NotPSD(NumericalError):
    """A matrix that must be positive semidefinite has a significantly negative eigenvalue."""


class NotHermitian(NumericalError):
    """A matrix that must be Hermitian is too far from it to be floating-point noise."""


class NotInAlgebra(NcPickError):
    """Some target blocks do not lie in the unital algebra generated by the node.

    ``offending`` lists ``((a, b), residual)`` pairs for each failing block.
    """

    def __init__(self, offending, message=None):
        self.offending = list(offending)
        if message is None:
            parts = ", ".join(f"block {ab}: residual {r:.3e}" for ab, r in self.offending)
            message = f"target not in alg_X ({parts})"
        super().__init__(message)


class NotInCommutant(NcPickError):
    """A preconditioner does not commute with ``I (x) X_i``."""


class NotInvertible(NumericalError):
    """A matrix that must be invertible is numerically singular."""


class NotCoisometry(NcPickError):
    """``sum X_i X_i^*`` differs from the identity."""


class NotIrreducible(NcPickError):
    """The node does not generate the full matrix algebra."""


class DegenerateGap(NumericalError):
    """The eigenvalue 1 of the transfer matrix is not simple."""


class NotFullRank(NumericalError):
    """The elementary Pick matrix is singular where invertibility is required."""


class IsometryFailure(NumericalError):
    """The dilation matrix failed its isometry check."""


class IdentityViolation(NumericalError):
    """A structural identity that must hold exactly was violated beyond tolerance."""


class RankTooSmall(NumericalError):
    """Fewer positive eigenvalues are available than targets requested."""


class NotUnitary(NcPickError, ValueError):
    """An input matrix that must be unitary is not."""


class BadWeights(NcPickError, ValueError):
    """Weights are zero or do not have unit l2 norm."""


class BudgetExhausted(NcPickError):
    """A search ran out of iterations before reaching its goal."""
