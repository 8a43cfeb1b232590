"""Quantum-random-number sourcing and session material.

Three byte providers share a `take(n) -> bytes` surface:

  * QrnPool            - file-backed entropy store with a persistent cursor
  * RemoteProvider     - one-shot HTTP(S) fetch from a QRNG endpoint
  * DeterministicProvider - seeded SHA-256 stream for tests (never quantum)

Every provider exposes `identity` and `is_quantum`; downstream reports must
carry the flag unchanged, so deterministic sources are always flagged False.

Pool file layout (little-endian):
  bytes 0-3   magic "QRNP"
  bytes 4-5   version (currently 1)
  bytes 6-13  total payload bytes
  bytes 14-21 cursor (consumed bytes)
  bytes 22-   payload
"""

from __future__ import annotations

import hashlib
import os
import struct
import urllib.error
import urllib.request
from pathlib import Path

from .cipher import QrnSessionMaterial, _check_rounds
from .errors import (
    DecodeError,
    IoFailure,
    MalformedMaterial,
    NetworkFailure,
    ParamError,
    PoolExhausted,
    ShortResponse,
)

POOL_MAGIC = b"QRNP"
POOL_VERSION = 1
_POOL_HEADER = struct.Struct("<4sHQQ")
_CURSOR_OFFSET = 14

MATERIAL_VERSION = 1
MASK_BYTES = 16

ENDPOINT_ENV = "QRECHACHA_QRN_ENDPOINT"
MODE_ENV = "QRECHACHA_QRN_MODE"


def material_bytes_needed(rounds: int) -> int:
    """Mask budget: 16 bytes for the constant mask + 16 per injection round."""
    return MASK_BYTES * (1 + _check_rounds(rounds) // 2)


class QrnPool:
    """File-backed entropy pool with a never-rewinding consumption cursor.

    The new cursor is flushed to disk before bytes are handed to the caller,
    so a crash can waste one request's entropy but never re-issue bytes.
    Concurrent takers must be serialized externally (single-writer contract).
    """

    def __init__(self, path, is_quantum: bool = True):
        self.path = Path(path)
        self.is_quantum = bool(is_quantum)
        self._read_header()

    @property
    def identity(self) -> str:
        return f"pool:{self.path.name}"

    @classmethod
    def create(cls, path, data: bytes, is_quantum: bool = True) -> "QrnPool":
        if not data:
            raise ParamError("pool payload must be nonempty")
        try:
            with open(path, "wb") as fh:
                fh.write(_POOL_HEADER.pack(POOL_MAGIC, POOL_VERSION, len(data), 0))
                fh.write(data)
                fh.flush()
                os.fsync(fh.fileno())
        except OSError as exc:
            raise IoFailure(f"cannot write pool {path}: {exc}") from exc
        return cls(path, is_quantum=is_quantum)

    def _read_header(self) -> None:
        try:
            with open(self.path, "rb") as fh:
                head = fh.read(_POOL_HEADER.size)
        except OSError as exc:
            raise IoFailure(f"cannot read pool {self.path}: {exc}") from exc
        if len(head) < _POOL_HEADER.size:
            raise IoFailure(f"{self.path} is not a pool file (truncated header)")
        magic, version, total, cursor = _POOL_HEADER.unpack(head)
        if magic != POOL_MAGIC:
            raise IoFailure(f"{self.path} is not a pool file (bad magic {magic!r})")
        if version != POOL_VERSION:
            raise IoFailure(f"unsupported pool version {version}")
        if cursor > total:
            raise IoFailure(f"corrupt pool {self.path}: cursor {cursor} past total {total}")
        self.total_bytes = total
        self.cursor_bytes = cursor

    @property
    def remaining(self) -> int:
        return self.total_bytes - self.cursor_bytes

    def take(self, nbytes: int) -> bytes:
        """Consume the next nbytes; the cursor advance hits disk first."""
        if nbytes < 0:
            raise ParamError("nbytes must be >= 0")
        self._read_header()
        if nbytes == 0:
            return b""
        if self.cursor_bytes + nbytes > self.total_bytes:
            raise PoolExhausted(
                f"pool {self.path} has {self.remaining} bytes left, need {nbytes}"
            )
        new_cursor = self.cursor_bytes + nbytes
        try:
            with open(self.path, "r+b") as fh:
                fh.seek(_POOL_HEADER.size + self.cursor_bytes)
                data = fh.read(nbytes)
                if len(data) != nbytes:
                    raise IoFailure(f"pool {self.path} payload shorter than header claims")
                fh.seek(_CURSOR_OFFSET)
                fh.write(struct.pack("<Q", new_cursor))
                fh.flush()
                os.fsync(fh.fileno())
        except OSError as exc:
            raise IoFailure(f"cannot update pool {self.path}: {exc}") from exc
        self.cursor_bytes = new_cursor
        return data


class DeterministicProvider:
    """Counter-mode SHA-256 byte stream; reproducible and explicitly non-quantum.

    The stream depends only on the seed, not on how takes are sized.
    """

    is_quantum = False

    def __init__(self, seed):
        if isinstance(seed, int):
            seed = seed.to_bytes(max(1, (seed.bit_length() + 7) // 8), "little")
        elif isinstance(seed, str):
            seed = seed.encode("utf-8")
        elif not isinstance(seed, (bytes, bytearray)):
            raise ParamError(f"seed must be bytes, str or int, got {type(seed).__name__}")
        self._seed = bytes(seed)
        self._counter = 0
        self._buf = b""

    @property
    def identity(self) -> str:
        return "deterministic:" + hashlib.sha256(self._seed).hexdigest()[:12]

    def take(self, nbytes: int) -> bytes:
        if nbytes < 0:
            raise ParamError("nbytes must be >= 0")
        out = bytearray(self._buf)
        while len(out) < nbytes:
            out += hashlib.sha256(
                self._seed + self._counter.to_bytes(8, "little")
            ).digest()
            self._counter += 1
        self._buf = bytes(out[nbytes:])
        return bytes(out[:nbytes])


def fetch_remote(endpoint: str, nbytes: int, mode: str = "raw", timeout: float = 10.0) -> bytes:
    """Fetch exactly nbytes from a QRNG HTTP(S) endpoint.

    "{nbytes}" in the URL is substituted with the request size.  mode "raw"
    takes the response body as-is; "hex" strips whitespace and decodes an
    ASCII hex body.  Longer responses are truncated to nbytes; shorter ones
    raise ShortResponse.
    """
    if nbytes <= 0:
        raise ParamError("nbytes must be > 0")
    if mode not in ("raw", "hex"):
        raise ParamError(f"decode mode must be 'raw' or 'hex', got {mode!r}")
    url = endpoint.replace("{nbytes}", str(nbytes))
    try:
        with urllib.request.urlopen(url, timeout=timeout) as resp:
            body = resp.read()
    except (urllib.error.URLError, OSError, ValueError) as exc:
        raise NetworkFailure(f"QRNG fetch from {url} failed: {exc}") from exc
    if mode == "hex":
        try:
            data = bytes.fromhex(body.decode("ascii").strip())
        except (UnicodeDecodeError, ValueError) as exc:
            raise DecodeError(f"response from {url} is not hex: {exc}") from exc
    else:
        data = body
    if len(data) < nbytes:
        raise ShortResponse(f"asked {url} for {nbytes} bytes, got {len(data)}")
    return data[:nbytes]


class RemoteProvider:
    """Adapter giving a remote QRNG endpoint the provider surface."""

    is_quantum = True

    def __init__(self, endpoint: str, mode: str = "raw", timeout: float = 10.0):
        self.endpoint = endpoint
        self.mode = mode
        self.timeout = timeout

    @property
    def identity(self) -> str:
        return f"remote:{self.endpoint}"

    def take(self, nbytes: int) -> bytes:
        return fetch_remote(self.endpoint, nbytes, mode=self.mode, timeout=self.timeout)


def derive_session(source, rounds: int) -> QrnSessionMaterial:
    """Consume mask material in the fixed order both endpoints must share:
    16 bytes of constant mask, then 16 bytes per injection round for
    r = 0, 2, ..., R-2.  Each group decodes to 4 little-endian words.
    """
    rounds = _check_rounds(rounds)
    data = source.take(material_bytes_needed(rounds))
    groups = [
        struct.unpack("<4I", data[off : off + MASK_BYTES])
        for off in range(0, len(data), MASK_BYTES)
    ]
    return QrnSessionMaterial(groups[0], tuple(groups[1:]))


def session_serialize(material: QrnSessionMaterial) -> bytes:
    """2-byte version, 2-byte rounds, then masks in derivation order (LE words)."""
    words = list(material.const_mask)
    for mask in material.round_masks:
        words.extend(mask)
    return struct.pack("<HH", MATERIAL_VERSION, material.rounds) + struct.pack(
        f"<{len(words)}I", *words
    )


def session_parse(data: bytes) -> QrnSessionMaterial:
    if len(data) < 4:
        raise MalformedMaterial(f"material truncated: {len(data)} bytes")
    version, rounds = struct.unpack_from("<HH", data)
    if version != MATERIAL_VERSION:
        raise MalformedMaterial(f"unsupported material version {version}")
    if rounds < 2 or rounds % 2:
        raise MalformedMaterial(f"invalid rounds field {rounds}")
    expect = 4 + material_bytes_needed(rounds)
    if len(data) != expect:
        raise MalformedMaterial(f"material for {rounds} rounds needs {expect} bytes, got {len(data)}")
    nwords = 4 * (1 + rounds // 2)
    words = struct.unpack_from(f"<{nwords}I", data, 4)
    masks = tuple(words[4 + 4 * i : 8 + 4 * i] for i in range(rounds // 2))
    return QrnSessionMaterial(words[:4], masks)


def read_material(path) -> QrnSessionMaterial:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read material {path}: {exc}") from exc
    return session_parse(data)


def write_material(path, material: QrnSessionMaterial) -> None:
    try:
        Path(path).write_bytes(session_serialize(material))
    except OSError as exc:
        raise IoFailure(f"cannot write material {path}: {exc}") from exc
