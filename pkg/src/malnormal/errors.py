"""Exception hierarchy shared by every module of the package."""


class MalnormalError(Exception):
    """Base class. ``exit_code`` is what the CLI reports for it."""

    exit_code = 2


class InputError(MalnormalError):
    pass


class IndexOutOfRange(InputError):
    pass


class RankMismatch(InputError):
    pass


class ParseError(InputError):
    pass


class TrivialSubgroup(InputError):
    pass


class TrivialElement(InputError):
    pass


class SeedInCommutator(InputError):
    pass


class FiniteIndexInput(InputError):
    pass


class NotAGroup(InputError):
    pass


class NotAnAction(InputError):
    pass


class NotAnAutomorphism(InputError):
    pass


class NotClosed(InputError):
    pass


class InfiniteOrderElement(InputError):
    pass


class NotCentralized(InputError):
    pass


class ScalarObstruction(InputError):
    """Some nontrivial element of the action group fixes every line through
    e1 + N*e2, so no admissible exponent exists."""

    def __init__(self, message, matrix=None):
        super().__init__(message)
        self.matrix = matrix


class TorsionNotSubgroup(InputError):
    pass


class BudgetExhausted(MalnormalError):
    exit_code = 3

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state or {}


class TheoremViolation(MalnormalError):
    exit_code = 4

    def __init__(self, message, transcript=None):
        super().__init__(message)
        self.transcript = transcript or {}
