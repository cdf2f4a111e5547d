"""Exception types.  The CLI maps PreconditionError to exit 2 and BudgetError to exit 3."""


class RRGError(Exception):
    pass


class PreconditionError(RRGError, ValueError):
    pass


class BudgetError(RRGError, RuntimeError):
    pass


class SharedEdge(PreconditionError):
    def __init__(self, u: int, v: int):
        super().__init__(f"edge {u}-{v} appears in both graphs")
        self.edge = (u, v)


class NotAPermutation(PreconditionError):
    def __init__(self, sigma):
        super().__init__(f"not a permutation: {sigma}")


class ParityViolation(PreconditionError):
    pass


class OddN(PreconditionError):
    pass


class CapExceeded(PreconditionError):
    pass


class EmptySupport(PreconditionError):
    pass


class NotRegular(PreconditionError):
    pass


class HypothesisViolated(PreconditionError):
    def __init__(self, delta_hat: float, limit: float):
        super().__init__(f"Delta-hat {delta_hat} exceeds eps * sum(g) = {limit}")
        self.delta_hat = delta_hat
        self.limit = limit


class EdgeAlreadyPresent(PreconditionError):
    pass


class DegreeExceeded(PreconditionError):
    pass


class DegenerateX(PreconditionError):
    pass


class InfeasibleFlow(PreconditionError):
    pass


class SparseCells(PreconditionError):
    pass


class RejectionBudgetExceeded(BudgetError):
    def __init__(self, budget: int, what: str = "rejection sampler"):
        super().__init__(f"{what}: no acceptance within {budget} attempts")
        self.budget = budget


class NonTermination(BudgetError):
    pass
