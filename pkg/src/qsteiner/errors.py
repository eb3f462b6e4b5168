class QSteinerError(Exception):
    '''Base class of all errors raised by the qsteiner package'''


class InvalidFieldSpec(QSteinerError):
    pass


class NonPrimeParameter(QSteinerError):
    pass


class NonPrimitivePolynomial(QSteinerError):
    pass


class FieldTooLarge(QSteinerError):
    pass


class UnsupportedParameters(QSteinerError):
    pass


class InvalidSubspace(QSteinerError):
    pass


class GroupCollision(QSteinerError):
    pass


class DegenerateGroup(QSteinerError):
    pass


class NotCosetComplete(QSteinerError):
    pass


class NotComplete(QSteinerError):
    pass


class MalformedInstance(QSteinerError):
    pass


class ConditionViolated(QSteinerError):
    def __init__(self, message: str, pair: tuple[int, int] | None = None, uncovered: tuple[int, ...] = ()):
        super().__init__(message)
        self.pair = pair
        self.uncovered = uncovered


class MemoryBudgetExceeded(QSteinerError):
    pass


class ValidationFailed(QSteinerError):
    pass


class PointsNotDistinct(QSteinerError):
    pass
