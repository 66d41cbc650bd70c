"""Exception types shared across the package.

Every error raised by critpop derives from CritpopError so callers can
catch the whole family at the CLI boundary.
"""


class CritpopError(Exception):
    pass


# -- rate matrix / switching chain ------------------------------------------

class RateMatrixError(CritpopError):
    pass


class NegativeOffDiagonal(RateMatrixError):
    def __init__(self, i, j, value):
        self.index = (i, j)
        super().__init__(f"off-diagonal rate q[{i},{j}] = {value} is negative")


class RowSumNonzero(RateMatrixError):
    def __init__(self, row, value):
        self.row = row
        super().__init__(f"row {row} sums to {value}, expected 0")


class NotIrreducible(RateMatrixError):
    def __init__(self, component):
        self.component = component
        super().__init__(
            f"rate matrix is not irreducible; states {sorted(component)} "
            "form a closed proper subset"
        )


class SingularSystem(CritpopError):
    """Stationary-law solve failed; should be unreachable for valid input."""


# -- integrators -------------------------------------------------------------

class NonFiniteState(CritpopError):
    def __init__(self, t, state):
        self.t = t
        self.state = state
        super().__init__(f"non-finite state at t={t}: {state}")


class StateLeftDomain(CritpopError):
    def __init__(self, t, state, detail=""):
        self.t = t
        self.state = state
        super().__init__(f"state left the model domain at t={t}: {state} {detail}".rstrip())


class OutOfDomain(CritpopError):
    pass


# -- accumulators ------------------------------------------------------------

class NonMonotoneTime(CritpopError):
    pass


class TooFewBatches(CritpopError):
    pass


class NonPositiveValue(CritpopError):
    pass


class ZeroVector(CritpopError):
    pass


class SingularAtBoundary(CritpopError):
    pass


# -- threshold tuning --------------------------------------------------------

class NoSignChange(CritpopError):
    pass


class BudgetExhausted(CritpopError):
    pass


# -- config ------------------------------------------------------------------

class ParseError(CritpopError):
    pass


class SchemaError(CritpopError):
    """Carries every violation found, not just the first."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))
