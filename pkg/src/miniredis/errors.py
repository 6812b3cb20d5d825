"""Exception types shared across the package."""

from __future__ import annotations


class ProtocolError(Exception):
    """Fatal wire-format violation; the byte stream cannot be resumed.

    ``offset`` is the absolute position in the stream (counting every byte
    ever fed to the decoder) of the byte that made the frame invalid.
    """

    def __init__(self, reason: str, offset: int | None = None):
        super().__init__(reason)
        self.reason = reason
        self.offset = offset

    def __str__(self) -> str:
        if self.offset is None:
            return self.reason
        return f"{self.reason} (at byte {self.offset})"


class InlineCommandError(Exception):
    """Malformed inline command line; the connection may keep going."""


class CommandError(Exception):
    """Command-level failure carrying the exact error-reply text."""

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class WrongTypeError(CommandError):
    """Operation applied to a key holding a different value family."""

    def __init__(self) -> None:
        super().__init__(
            "WRONGTYPE Operation against a key holding the wrong kind of value"
        )


class ReplyError(Exception):
    """Error reply received from the server, raised client-side."""


class RowDecodeError(ValueError):
    """Sorted-set member bytes do not form a packed numeric row."""
