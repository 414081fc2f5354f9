"""Exception hierarchy."""


class BellsimError(Exception):
    """Base class for all package errors."""


class InvalidPolicy(BellsimError, ValueError):
    pass


class ModelFailure(BellsimError):
    """A model produced a state or outcome outside its declared space."""


class InvalidWeights(BellsimError, ValueError):
    pass


class NoExactInterface(BellsimError):
    pass


class InsufficientRuns(BellsimError):
    pass


class UndiscretizableState(BellsimError):
    pass


class StrategyViolation(BellsimError):
    """A game strategy asked for data it is not allowed to see."""


class InvalidConfig(BellsimError, ValueError):
    pass
