class BlowupDetected(RuntimeError):
    """Raised when a monitored Sobolev norm grows past its guard threshold."""

    def __init__(self, message: str, norm: float = float("nan"), step: int | None = None):
        super().__init__(message)
        self.norm = norm
        self.step = step


class FitUnreliable(RuntimeError):
    """Raised when too few error samples sit above the reference floor."""
