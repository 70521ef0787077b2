"""Length-prefixed JSON wire frames.

Frame = 4-byte big-endian body length + UTF-8 JSON body. Bodies carry
a protocol version ``v`` and a ``kind``; JSON is canonical (sorted
keys, no spaces) so frames are golden-file testable byte for byte.
"""

from __future__ import annotations

import json
import struct
from typing import Any

PROTOCOL_VERSION = 1
MAX_FRAME = 1 << 20  # 1 MiB
FRAME_KINDS = ("adopt", "send", "envelope", "examineReply", "event", "ack", "error")

_LEN = struct.Struct(">I")


class FrameError(Exception):
    pass


def encode_frame(body: dict[str, Any]) -> bytes:
    if body.get("v") != PROTOCOL_VERSION:
        raise FrameError(f"body must carry v={PROTOCOL_VERSION}")
    if body.get("kind") not in FRAME_KINDS:
        raise FrameError(f"unknown frame kind {body.get('kind')!r}")
    raw = json.dumps(body, sort_keys=True, separators=(",", ":")).encode("utf-8")
    if len(raw) > MAX_FRAME:
        raise FrameError("frame too large")
    return _LEN.pack(len(raw)) + raw


def frame(kind: str, **fields: Any) -> dict[str, Any]:
    return {"v": PROTOCOL_VERSION, "kind": kind, **fields}


class FrameDecoder:
    """Incremental decoder; feed bytes, get complete frame bodies."""

    def __init__(self) -> None:
        self._buf = bytearray()

    def feed(self, data: bytes) -> list[dict[str, Any]]:
        self._buf.extend(data)
        frames: list[dict[str, Any]] = []
        while True:
            if len(self._buf) < _LEN.size:
                return frames
            (length,) = _LEN.unpack_from(self._buf)
            if length > MAX_FRAME:
                raise FrameError("frame too large")
            if len(self._buf) < _LEN.size + length:
                return frames
            raw = bytes(self._buf[_LEN.size:_LEN.size + length])
            del self._buf[:_LEN.size + length]
            try:
                body = json.loads(raw.decode("utf-8"))
            except (UnicodeDecodeError, json.JSONDecodeError) as exc:
                raise FrameError(f"malformed frame body: {exc}") from exc
            if not isinstance(body, dict):
                raise FrameError("frame body must be an object")
            frames.append(body)


def check_frame(body: dict[str, Any]) -> str | None:
    """Validate version and kind; returns an error string or None."""
    if body.get("v") != PROTOCOL_VERSION:
        return f"unsupported protocol version {body.get('v')!r}"
    kind = body.get("kind")
    if kind not in FRAME_KINDS:
        return f"unknown frame kind {kind!r}"
    return None
