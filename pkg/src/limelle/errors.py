"""Exception hierarchy. Every error raised by the engine derives from LimelleError."""

from __future__ import annotations


class LimelleError(Exception):
    """Base class. ``stage`` is filled in by the pipeline when an error crosses a stage boundary."""

    stage: str | None = None

    def __str__(self) -> str:
        msg = super().__str__()
        return f"[{self.stage}] {msg}" if self.stage else msg


class EmptyInput(LimelleError, ValueError):
    pass


class LengthMismatch(LimelleError, ValueError):
    pass


class InvalidValue(LimelleError, ValueError):
    """A domain value violates one of its construction invariants."""


class ExhaustedMaskSpace(LimelleError):
    pass


class MalformedResponse(LimelleError):
    pass


class MalformedPrompt(LimelleError):
    pass


class InsufficientNeighborhood(LimelleError):
    pass


class SingularSystem(LimelleError):
    pass


class NonFiniteInput(LimelleError, ValueError):
    pass


class ZeroVector(LimelleError):
    pass


class DegenerateRationale(LimelleError):
    pass


class MissingRationale(LimelleError):
    pass


class InsufficientSeeds(LimelleError):
    pass


class ConfigError(LimelleError):
    pass


class CacheIoError(LimelleError):
    pass


class BackendError(LimelleError):
    def __init__(self, message: str, status: int | None = None, body: str = ""):
        self.status = status
        self.body = body[:200]
        detail = message
        if status is not None:
            detail += f" (status {status})"
        if self.body:
            detail += f": {self.body}"
        super().__init__(detail)
