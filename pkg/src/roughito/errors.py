"""Exception hierarchy shared by every module."""


class RoughPathError(Exception):
    """Base class for library errors."""


class InvalidArgumentError(RoughPathError, ValueError):
    """Shapes, depths, grids or parameters do not satisfy a precondition."""


class UnsupportedFieldError(RoughPathError, NotImplementedError):
    """A vector field lacks a derivative that the requested operation needs."""


class DivergedError(RoughPathError, ArithmeticError):
    """A solver produced a non-finite or exploding state.

    ``time`` is the grid time at which the blow-up was detected and
    ``interval`` the partition interval index when raised from the
    averaging scheme (``None`` otherwise).
    """

    def __init__(self, message, time=None, interval=None):
        super().__init__(message)
        self.time = time
        self.interval = interval
