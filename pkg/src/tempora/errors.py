"""Exception hierarchy shared by every tempora module."""


class TemporaError(Exception):
    pass


class UnboundVariable(TemporaError):
    def __init__(self, name):
        super().__init__(f"unbound variable {name}")
        self.name = name


class ArityMismatch(TemporaError):
    pass


class PoolExhausted(TemporaError):
    pass


class NegativeEpsilon(TemporaError):
    pass


class InvalidConfiguration(TemporaError):
    pass


class InconsistentCircleConfiguration(TemporaError):
    pass


class NotBalanced(TemporaError):
    pass


class OffsetExceedsDmax(TemporaError):
    pass


class BoundOverflow(TemporaError):
    pass


class SearchBudgetExceeded(TemporaError):
    pass


class SizeBoundViolation(TemporaError):
    pass


class ReplayMismatch(TemporaError):
    """The engine produced a trace it cannot replay. Always a bug."""


class NonTerminatingExpansion(TemporaError):
    pass


class IllegalStep(TemporaError):
    pass


class TraceSchemaError(TemporaError):
    pass
