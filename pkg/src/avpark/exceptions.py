"""Exception types raised across the package."""


class AvparkError(Exception):
    """Base class for every error raised by avpark."""


class ParseError(AvparkError, ValueError):
    pass


class EmptyGrid(ParseError):
    pass


class IoError(AvparkError, OSError):
    pass


class OutOfBounds(AvparkError, IndexError):
    pass


class StartOutOfBounds(OutOfBounds):
    pass


class GoalOutOfBounds(OutOfBounds):
    pass


class StartBlocked(AvparkError):
    pass


class DegenerateInput(AvparkError, ValueError):
    pass


class GapTooLarge(AvparkError, ValueError):
    pass


class ParkingError(AvparkError):
    """Raised when a parking manoeuvre cannot be synthesised."""


class SpotTooSmall(ParkingError):
    pass


class ExitBlocked(ParkingError):
    pass


class Infeasible(ParkingError):
    def __init__(self, r_needed, r_max):
        super().__init__(
            f"minimum turning radius {r_needed:.3f} exceeds the spot's limit {r_max:.3f}"
        )
        self.r_needed = r_needed
        self.r_max = r_max


class NotFittedError(AvparkError, AttributeError):
    pass
