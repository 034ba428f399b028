"""Shared helpers for the little-endian, JSON-headed binary formats."""

import json
import struct

import numpy as np

from .errors import FormatError


def pack_header(magic, header):
    text = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return magic + struct.pack("<I", len(text)) + text


class Reader:
    """Cursor over a byte buffer that raises FormatError('truncated') on short reads."""

    def __init__(self, buf):
        self.buf = memoryview(buf)
        self.pos = 0

    def take(self, n):
        if self.pos + n > len(self.buf):
            raise FormatError(f"need {n} bytes at offset {self.pos}, have {len(self.buf) - self.pos}",
                              code="truncated")
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out

    def magic(self, expected):
        got = bytes(self.take(len(expected))) if len(self.buf) >= len(expected) else bytes(self.buf)
        if got != expected:
            raise FormatError(f"expected magic {expected!r}, got {got!r}", code="bad-magic")

    def json_header(self):
        (length,) = struct.unpack("<I", self.take(4))
        try:
            return json.loads(bytes(self.take(length)).decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise FormatError(f"unreadable header: {exc}", code="shape-mismatch") from None

    def u32(self):
        return struct.unpack("<I", self.take(4))[0]

    def array(self, dtype, count):
        dtype = np.dtype(dtype).newbyteorder("<")
        raw = self.take(dtype.itemsize * count)
        return np.frombuffer(raw, dtype=dtype, count=count).astype(dtype.newbyteorder("="))

    def finish(self):
        if self.pos != len(self.buf):
            raise FormatError(f"{len(self.buf) - self.pos} trailing bytes", code="shape-mismatch")


def le_bytes(arr, dtype):
    return np.ascontiguousarray(arr, dtype=np.dtype(dtype).newbyteorder("<")).tobytes()


def check_version(header, version):
    if header.get("version") != version:
        raise FormatError(f"file version {header.get('version')!r}, reader supports {version}",
                          code="version-mismatch")


def require_dims(header, *keys):
    for key in keys:
        value = header.get(key)
        if not isinstance(value, int) or value < 1:
            raise FormatError(f"header field {key}={value!r} is not a positive integer",
                              code="shape-mismatch")
