"""Encryption throughput harness.

Times xor_stream over in-memory payloads with a fresh random key per
repetition.  Key generation and QRN material derivation happen before the
clock starts, matching a deployment where masks are pre-stored; one
untimed warm-up repetition absorbs cold-start noise.  Absolute seconds are
machine-specific; comparisons should be read as ratios.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field

from .cipher import CipherParams, xor_stream
from .errors import InsufficientResults, ParamError
from .qrn import DeterministicProvider, derive_session

CIPHERS = ("chacha", "qre-chacha")
DEFAULT_SIZES_MB = (10, 20, 30, 40, 50)
MIN_REPS = 5


@dataclass
class BenchResult:
    cipher: str
    rounds: int
    payload_bytes: int
    repetitions: int
    times: list[float] = field(default_factory=list)

    @property
    def mean_seconds(self) -> float:
        return sum(self.times) / len(self.times)

    @property
    def mbps(self) -> float:
        return self.payload_bytes / self.mean_seconds / 1e6

    @property
    def ns_per_byte(self) -> float:
        return self.mean_seconds / self.payload_bytes * 1e9

    def to_dict(self) -> dict:
        return {
            "cipher": self.cipher,
            "rounds": self.rounds,
            "payload_bytes": self.payload_bytes,
            "repetitions": self.repetitions,
            "times": list(self.times),
            "mean_s": self.mean_seconds,
            "mbps": self.mbps,
            "ns_per_byte": self.ns_per_byte,
        }


def bench_cipher(cipher: str, rounds: int, payload_bytes: int, reps: int = MIN_REPS,
                 payload: bytes | None = None) -> BenchResult:
    """Time `reps` encryptions of one in-memory payload.

    cipher "chacha" runs without any mask work; "qre-chacha" derives random
    session material once, outside the timed region.
    """
    if cipher not in CIPHERS:
        raise ParamError(f"cipher must be one of {CIPHERS}, got {cipher!r}")
    if reps < MIN_REPS:
        raise ParamError(f"benchmark needs >= {MIN_REPS} repetitions, got {reps}")
    if payload is None:
        payload = os.urandom(payload_bytes)
    elif len(payload) != payload_bytes:
        raise ParamError("payload length does not match payload_bytes")

    material = None
    if cipher == "qre-chacha":
        material = derive_session(DeterministicProvider(os.urandom(32)), rounds)
    nonce = os.urandom(12)
    all_params = [
        CipherParams.from_bytes(os.urandom(32), nonce, 0, rounds) for _ in range(reps + 1)
    ]

    xor_stream(all_params[0], material, payload)  # warm-up, untimed
    times = []
    for params in all_params[1:]:
        t0 = time.perf_counter()
        xor_stream(params, material, payload)
        t1 = time.perf_counter()
        times.append(t1 - t0)
    return BenchResult(cipher, rounds, payload_bytes, reps, times)


def run_sweep(configs, sizes_mb=DEFAULT_SIZES_MB, reps: int = MIN_REPS) -> list[BenchResult]:
    """Bench every (cipher, rounds) config over every payload size.

    The payload for a given size is shared by all configs, and repetitions
    are interleaved round-robin across configs so background load spikes
    hit every configuration alike.
    """
    if reps < MIN_REPS:
        raise ParamError(f"benchmark needs >= {MIN_REPS} repetitions, got {reps}")
    results = []
    for size in sizes_mb:
        nbytes = int(size * 1_000_000)
        payload = os.urandom(nbytes)
        runs = []
        for cipher, rounds in configs:
            if cipher not in CIPHERS:
                raise ParamError(f"cipher must be one of {CIPHERS}, got {cipher!r}")
            material = None
            if cipher == "qre-chacha":
                material = derive_session(DeterministicProvider(os.urandom(32)), rounds)
            nonce = os.urandom(12)
            params = [CipherParams.from_bytes(os.urandom(32), nonce, 0, rounds)
                      for _ in range(reps + 1)]
            runs.append((BenchResult(cipher, rounds, nbytes, reps), material, params))
        for result, material, params in runs:
            xor_stream(params[0], material, payload)  # warm-up, untimed
        for rep in range(1, reps + 1):
            for result, material, params in runs:
                t0 = time.perf_counter()
                xor_stream(params[rep], material, payload)
                t1 = time.perf_counter()
                result.times.append(t1 - t0)
        results.extend(run[0] for run in runs)
    return results


@dataclass
class ComparisonReport:
    """Mean-time table (rows: payload size, columns: cipher/rounds) plus the
    full ratio matrix between configurations."""

    results: list[BenchResult]

    def __post_init__(self):
        if len(self.results) < 2:
            raise InsufficientResults("comparison needs at least two results")

    def _columns(self) -> list[tuple[str, int]]:
        cols = []
        for r in self.results:
            key = (r.cipher, r.rounds)
            if key not in cols:
                cols.append(key)
        return cols

    def _sizes(self) -> list[int]:
        sizes = []
        for r in self.results:
            if r.payload_bytes not in sizes:
                sizes.append(r.payload_bytes)
        return sizes

    def _cell(self, size: int, col: tuple[str, int]) -> BenchResult | None:
        for r in self.results:
            if r.payload_bytes == size and (r.cipher, r.rounds) == col:
                return r
        return None

    def ratio_matrix(self) -> dict[str, dict[str, float]]:
        """Mean-over-sizes time of each config divided by each other config."""
        cols = self._columns()
        means = {}
        for col in cols:
            cells = [self._cell(s, col) for s in self._sizes()]
            vals = [c.mean_seconds for c in cells if c is not None]
            means[col] = sum(vals) / len(vals)
        names = {col: f"{col[0]}{col[1]}" for col in cols}
        return {
            names[a]: {names[b]: means[a] / means[b] for b in cols} for a in cols
        }

    def to_dict(self) -> dict:
        return {
            "kind": "bench",
            "clock": "perf_counter",
            "clock_resolution_s": time.get_clock_info("perf_counter").resolution,
            "warmup_reps": 1,
            "results": [r.to_dict() for r in self.results],
            "ratios": self.ratio_matrix(),
        }

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    def to_csv(self) -> str:
        rows = ["cipher,rounds,bytes,reps,mean_s,mbps"]
        for r in self.results:
            rows.append(
                f"{r.cipher},{r.rounds},{r.payload_bytes},{r.repetitions},"
                f"{r.mean_seconds:.7f},{r.mbps:.3f}"
            )
        return "\n".join(rows) + "\n"

    def to_text(self) -> str:
        cols = self._columns()
        names = [f"{c}{r}" for c, r in cols]
        head = f"{'Payload':>12}" + "".join(f"{n:>16}" for n in names)
        out = ["Encryption time, seconds (mean of reps; warm-up excluded)", head]
        for size in self._sizes():
            row = f"{size / 1e6:>9.0f} MB"
            for col in cols:
                cell = self._cell(size, col)
                row += f"{cell.mean_seconds:>16.7f}" if cell else f"{'-':>16}"
            out.append(row)
        out.append("")
        out.append("time ratios (row / column, mean over sizes):")
        ratios = self.ratio_matrix()
        out.append(f"{'':>12}" + "".join(f"{n:>16}" for n in names))
        for a in names:
            out.append(f"{a:>12}" + "".join(f"{ratios[a][b]:>16.3f}" for b in names))
        return "\n".join(out)


def compare_report(results: list[BenchResult]) -> ComparisonReport:
    return ComparisonReport(list(results))
