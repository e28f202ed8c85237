"""Exception types shared across the package."""


class SpikenetError(Exception):
    """Base class for errors raised by this package."""


class FormatError(SpikenetError):
    """Malformed file content (dataset files, model containers)."""


class StageError(SpikenetError):
    """Pipeline failure tagged with the stage it occurred in."""

    def __init__(self, stage, message):
        self.stage = stage
        super().__init__(f"[{stage}] {message}")
