"""RESP2 wire codec: typed values, encoder, and incremental decoders.

Wire forms::

    +<text>\r\n                     simple string
    -<text>\r\n                     error
    :<integer>\r\n                  signed 64-bit integer
    $<length>\r\n<bytes>\r\n        bulk string ($-1\r\n is the null bulk)
    *<count>\r\n<item>...           array (*-1\r\n is the null array)

Bulk strings and array elements are binary safe. Decoding is incremental:
arbitrary byte chunks go in, complete values come out, and the result does
not depend on where the chunk boundaries fall.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import InlineCommandError, ProtocolError

CRLF = b"\r\n"

INT64_MIN = -(1 << 63)
INT64_MAX = (1 << 63) - 1

_INTEGER_RE = re.compile(rb"[+-]?[0-9]+")


@dataclass(frozen=True)
class SimpleString:
    text: str


@dataclass(frozen=True)
class Error:
    text: str


@dataclass(frozen=True)
class Integer:
    value: int


@dataclass(frozen=True)
class BulkString:
    payload: bytes | None


@dataclass(frozen=True)
class Array:
    items: tuple["ProtocolValue", ...] | None

    def __post_init__(self) -> None:
        if self.items is not None and not isinstance(self.items, tuple):
            object.__setattr__(self, "items", tuple(self.items))


ProtocolValue = SimpleString | Error | Integer | BulkString | Array

OK = SimpleString("OK")
PONG = SimpleString("PONG")
NIL = BulkString(None)


@dataclass(frozen=True)
class DecodeLimits:
    """Hard ceilings the decoder enforces before buffering payloads."""

    max_bulk_length: int = 512 * 1024 * 1024
    max_array_length: int = 1024 * 1024
    max_depth: int = 32
    # An unterminated header or inline line must not grow the buffer forever.
    max_line_length: int = 64 * 1024


DEFAULT_LIMITS = DecodeLimits()


def encode(value: ProtocolValue) -> bytes:
    """Serialize one value to its exact wire form."""
    out = bytearray()
    _encode_into(value, out)
    return bytes(out)


def _encode_into(value: ProtocolValue, out: bytearray) -> None:
    if isinstance(value, SimpleString):
        _append_line(out, b"+", value.text)
    elif isinstance(value, Error):
        _append_line(out, b"-", value.text)
    elif isinstance(value, Integer):
        if not INT64_MIN <= value.value <= INT64_MAX:
            raise ValueError(f"integer reply out of 64-bit range: {value.value}")
        out += b":%d\r\n" % value.value
    elif isinstance(value, BulkString):
        if value.payload is None:
            out += b"$-1\r\n"
        else:
            out += b"$%d\r\n" % len(value.payload)
            out += value.payload
            out += CRLF
    elif isinstance(value, Array):
        if value.items is None:
            out += b"*-1\r\n"
        else:
            out += b"*%d\r\n" % len(value.items)
            for item in value.items:
                _encode_into(item, out)
    else:
        raise TypeError(f"not a protocol value: {value!r}")


def _append_line(out: bytearray, marker: bytes, text: str) -> None:
    if "\r" in text or "\n" in text:
        raise ValueError("line reply may not contain CR or LF")
    out += marker
    out += text.encode("utf-8")
    out += CRLF


class _Incomplete(Exception):
    """Internal signal: more bytes needed before the frame can finish."""


def _find_line(buf: bytearray, pos: int, limits: DecodeLimits) -> tuple[bytes, int]:
    idx = buf.find(CRLF, pos)
    if idx < 0:
        if len(buf) - pos > limits.max_line_length:
            raise ProtocolError("line exceeds maximum length", pos)
        raise _Incomplete
    if idx - pos > limits.max_line_length:
        raise ProtocolError("line exceeds maximum length", pos)
    return bytes(buf[pos:idx]), idx + 2


def _parse_header_int(line: bytes, pos: int, what: str) -> int:
    if not _INTEGER_RE.fullmatch(line):
        raise ProtocolError(f"invalid {what}", pos)
    return int(line)


def _parse_value(
    buf: bytearray, pos: int, depth: int, limits: DecodeLimits
) -> tuple[ProtocolValue, int]:
    if pos >= len(buf):
        raise _Incomplete
    marker = buf[pos]
    if marker == 0x2B:  # +
        line, end = _find_line(buf, pos + 1, limits)
        return SimpleString(_decode_line_text(line, pos, "simple string")), end
    if marker == 0x2D:  # -
        line, end = _find_line(buf, pos + 1, limits)
        return Error(_decode_line_text(line, pos, "error string")), end
    if marker == 0x3A:  # :
        line, end = _find_line(buf, pos + 1, limits)
        value = _parse_header_int(line, pos, "integer")
        if not INT64_MIN <= value <= INT64_MAX:
            raise ProtocolError("integer out of 64-bit range", pos)
        return Integer(value), end
    if marker == 0x24:  # $
        line, end = _find_line(buf, pos + 1, limits)
        length = _parse_header_int(line, pos, "bulk length")
        if length == -1:
            return BulkString(None), end
        if length < 0:
            raise ProtocolError("invalid bulk length", pos)
        if length > limits.max_bulk_length:
            raise ProtocolError("bulk length exceeds limit", pos)
        body_end = end + length
        if len(buf) < body_end + 2:
            raise _Incomplete
        if buf[body_end : body_end + 2] != CRLF:
            raise ProtocolError("bulk string missing trailing CRLF", body_end)
        return BulkString(bytes(buf[end:body_end])), body_end + 2
    if marker == 0x2A:  # *
        line, end = _find_line(buf, pos + 1, limits)
        count = _parse_header_int(line, pos, "array length")
        if count == -1:
            return Array(None), end
        if count < 0:
            raise ProtocolError("invalid array length", pos)
        if count > limits.max_array_length:
            raise ProtocolError("array length exceeds limit", pos)
        if depth + 1 > limits.max_depth:
            raise ProtocolError("array nesting exceeds depth limit", pos)
        items: list[ProtocolValue] = []
        cursor = end
        for _ in range(count):
            item, cursor = _parse_value(buf, cursor, depth + 1, limits)
            items.append(item)
        return Array(tuple(items)), cursor
    raise ProtocolError(f"unknown type byte {bytes([marker])!r}", pos)


def _decode_line_text(line: bytes, pos: int, what: str) -> str:
    if b"\r" in line or b"\n" in line:
        raise ProtocolError(f"stray CR or LF inside {what}", pos)
    try:
        return line.decode("utf-8")
    except UnicodeDecodeError:
        raise ProtocolError(f"invalid UTF-8 in {what}", pos) from None


class StreamDecoder:
    """Incremental decoder for any RESP2 value stream (client replies).

    ``feed`` buffers the chunk and returns every value completed by it.
    A ProtocolError poisons the decoder: the stream has no recovery point,
    so further feeding raises RuntimeError.
    """

    def __init__(self, limits: DecodeLimits | None = None):
        self._limits = limits or DEFAULT_LIMITS
        self._buf = bytearray()
        self._consumed = 0
        self._broken = False

    @property
    def pending_bytes(self) -> int:
        """Bytes buffered toward a value that is not complete yet."""
        return len(self._buf)

    def feed(self, data: bytes) -> list[ProtocolValue]:
        if self._broken:
            raise RuntimeError("decoder is unusable after a protocol error")
        self._buf.extend(data)
        values: list[ProtocolValue] = []
        pos = 0
        try:
            while pos < len(self._buf):
                value, pos = _parse_value(self._buf, pos, 0, self._limits)
                values.append(value)
        except _Incomplete:
            pass
        except ProtocolError as exc:
            self._broken = True
            raise ProtocolError(
                exc.reason, self._consumed + (exc.offset or 0)
            ) from None
        del self._buf[:pos]
        self._consumed += pos
        return values


class RequestDecoder:
    """Incremental decoder for the client-to-server command stream.

    Accepts both framings: arrays of bulk strings, and inline lines split
    on whitespace with optional quoting. ``feed`` returns a list whose
    entries are either an argv (list of byte strings) or an exception
    recording a malformed request *in stream order*, so pipelined replies
    stay aligned:

    - InlineCommandError: the offending line was consumed; decoding went on.
    - ProtocolError: fatal; it is the last entry and the decoder is dead.
    """

    def __init__(self, limits: DecodeLimits | None = None):
        self._limits = limits or DEFAULT_LIMITS
        self._buf = bytearray()
        self._consumed = 0
        self._broken = False

    def feed(
        self, data: bytes
    ) -> list[list[bytes] | InlineCommandError | ProtocolError]:
        if self._broken:
            raise RuntimeError("decoder is unusable after a protocol error")
        self._buf.extend(data)
        items: list[list[bytes] | InlineCommandError | ProtocolError] = []
        pos = 0
        while pos < len(self._buf):
            if self._buf[pos] == 0x2A:  # *
                try:
                    argv, pos = self._parse_request_array(pos)
                except _Incomplete:
                    break
                except ProtocolError as exc:
                    self._broken = True
                    items.append(
                        ProtocolError(exc.reason, self._consumed + (exc.offset or 0))
                    )
                    pos = len(self._buf)
                    break
                if argv:
                    items.append(argv)
            else:
                nl = self._buf.find(b"\n", pos)
                if nl < 0:
                    if len(self._buf) - pos > self._limits.max_line_length:
                        self._broken = True
                        items.append(
                            ProtocolError("too big inline request", self._consumed + pos)
                        )
                        pos = len(self._buf)
                    break
                line = bytes(self._buf[pos:nl])
                if line.endswith(b"\r"):
                    line = line[:-1]
                pos = nl + 1
                try:
                    tokens = tokenize_inline(line)
                except InlineCommandError as exc:
                    items.append(exc)
                    continue
                if tokens:
                    items.append(tokens)
        del self._buf[:pos]
        self._consumed += pos
        return items

    def _parse_request_array(self, pos: int) -> tuple[list[bytes], int]:
        limits = self._limits
        line, cursor = _find_line(self._buf, pos + 1, limits)
        count = _parse_header_int(line, pos, "multibulk length")
        if count < 0:
            raise ProtocolError("invalid multibulk length", pos)
        if count > limits.max_array_length:
            raise ProtocolError("invalid multibulk length", pos)
        argv: list[bytes] = []
        for _ in range(count):
            if cursor >= len(self._buf):
                raise _Incomplete
            marker = self._buf[cursor]
            if marker != 0x24:  # $
                raise ProtocolError(
                    f"expected '$', got {bytes([marker])!r}", cursor
                )
            line, after = _find_line(self._buf, cursor + 1, limits)
            length = _parse_header_int(line, cursor, "bulk length")
            if length < 0 or length > limits.max_bulk_length:
                raise ProtocolError("invalid bulk length", cursor)
            body_end = after + length
            if len(self._buf) < body_end + 2:
                raise _Incomplete
            if self._buf[body_end : body_end + 2] != CRLF:
                raise ProtocolError("bulk string missing trailing CRLF", body_end)
            argv.append(bytes(self._buf[after:body_end]))
            cursor = body_end + 2
        return argv, cursor


_INLINE_ESCAPES = {
    0x6E: 0x0A,  # \n
    0x72: 0x0D,  # \r
    0x74: 0x09,  # \t
    0x62: 0x08,  # \b
    0x61: 0x07,  # \a
}

_WHITESPACE = b" \t"


def tokenize_inline(line: bytes) -> list[bytes]:
    """Split one inline command line into argv tokens.

    Double-quoted tokens keep embedded whitespace and honor backslash
    escapes; single-quoted tokens are literal except for ``\\'``. A closing
    quote must end the token. Raises InlineCommandError on unbalanced or
    run-together quoting.
    """
    tokens: list[bytes] = []
    i, n = 0, len(line)
    while i < n:
        if line[i] in _WHITESPACE:
            i += 1
            continue
        token = bytearray()
        quote = line[i] if line[i] in b"\"'" else None
        if quote is None:
            while i < n and line[i] not in _WHITESPACE:
                token.append(line[i])
                i += 1
        else:
            i += 1
            while True:
                if i >= n:
                    raise InlineCommandError("unbalanced quotes in request")
                ch = line[i]
                if ch == quote:
                    i += 1
                    if i < n and line[i] not in _WHITESPACE:
                        raise InlineCommandError("unbalanced quotes in request")
                    break
                if ch == 0x5C and quote == 0x22 and i + 1 < n:  # escape in ""
                    nxt = line[i + 1]
                    token.append(_INLINE_ESCAPES.get(nxt, nxt))
                    i += 2
                    continue
                if ch == 0x5C and quote == 0x27 and i + 1 < n and line[i + 1] == 0x27:
                    token.append(0x27)
                    i += 2
                    continue
                token.append(ch)
                i += 1
        tokens.append(bytes(token))
    return tokens
