"""Empirical security instrumentation.

Monte-Carlo proxies, not proofs: avalanche flip fractions for diffusion,
the injection-difference admissibility check, and an empirical estimator
of differential probabilities over a few rounds.  All estimators are pure
functions of their RNG seed and embarrassingly parallel over samples.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import vector
from .cipher import CipherParams, QrnSessionMaterial, _check_rounds, _check_words
from .errors import ParamError

FLIP_SEGMENTS = {"key": (4, 256), "nonce": (13, 96), "counter": (12, 32)}


def check_injection_constraint(mask_a, mask_b, state_a, state_b) -> bool:
    """True iff the mask difference avoids the state difference at every
    injected word: (maskA_i ^ maskB_i) != (stateA_i ^ stateB_i) for i < 4.

    state_a/state_b are the 16-word inputs to the same injection round in
    two related computations.  Symmetric under swapping the A and B sides.
    """
    mask_a = _check_words(mask_a, 4, "mask_a")
    mask_b = _check_words(mask_b, 4, "mask_b")
    return all(
        (mask_a[i] ^ mask_b[i]) != (int(state_a[i]) ^ int(state_b[i]))
        for i in range(4)
    )


@dataclass
class AvalancheReport:
    """Flip statistics for one flipped input bit over random keys/nonces.

    per_bit[32*w + j] is the flip fraction of bit j (LSB first) of output
    word w; aggregate averages all 512 output bits.
    """

    rounds: int
    trials: int
    flip_target: tuple[str, int]
    per_bit: np.ndarray
    aggregate: float
    half_width: float

    def to_dict(self) -> dict:
        return {
            "kind": "avalanche",
            "rounds": self.rounds,
            "trials": self.trials,
            "flip_target": {"segment": self.flip_target[0], "bit": self.flip_target[1]},
            "aggregate": self.aggregate,
            "half_width": self.half_width,
            "per_bit": [float(v) for v in self.per_bit],
        }

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)


def avalanche_metric(
    params: CipherParams,
    material: QrnSessionMaterial | None,
    flip_target: tuple[str, int],
    trials: int,
    rng=None,
) -> AvalancheReport:
    """Measure output-bit flip fractions when one input bit flips.

    Each trial draws a fresh random key and nonce (params supplies rounds
    and counter), flips the designated key/nonce/counter bit, and compares
    the two keystream blocks.  half_width is the three-sigma band
    3*sqrt(0.25/trials) around an ideal 0.5.
    """
    if trials < 1000:
        raise ParamError(f"avalanche needs >= 1000 trials, got {trials}")
    segment, bit = flip_target
    if segment not in FLIP_SEGMENTS:
        raise ParamError(f"flip segment must be one of {sorted(FLIP_SEGMENTS)}")
    base_row, nbits = FLIP_SEGMENTS[segment]
    bit = int(bit)
    if not 0 <= bit < nbits:
        raise ParamError(f"{segment} bit index must be in [0, {nbits})")
    row = base_row + bit // 32
    flip = np.uint32(1 << (bit % 32))
    rng = np.random.default_rng(rng)
    const_mask, masks = vector.material_arrays(material)

    flips = np.zeros((16, 32), dtype=np.int64)
    done = 0
    while done < trials:
        batch = min(4096, trials - done)
        x0 = np.empty((16, batch), dtype=np.uint32)
        x0[0:4] = np.array(
            [vector.CONSTANTS[i] ^ const_mask[i] for i in range(4)], dtype=np.uint32
        )[:, None]
        x0[4:12] = rng.integers(0, 1 << 32, size=(8, batch), dtype=np.uint32)
        x0[12] = np.uint32(params.counter)
        x0[13:16] = rng.integers(0, 1 << 32, size=(3, batch), dtype=np.uint32)
        x1 = x0.copy()
        x1[row] ^= flip
        za = vector.feedforward(x0, params.rounds, masks)
        zb = vector.feedforward(x1, params.rounds, masks)
        diff = za ^ zb
        for j in range(32):
            flips[:, j] += ((diff >> np.uint32(j)) & np.uint32(1)).sum(axis=1, dtype=np.int64)
        done += batch

    per_bit = (flips / trials).reshape(512)
    return AvalancheReport(
        rounds=params.rounds,
        trials=trials,
        flip_target=(segment, bit),
        per_bit=per_bit,
        aggregate=float(per_bit.mean()),
        half_width=3.0 * math.sqrt(0.25 / trials),
    )


@dataclass(frozen=True)
class DiffSpec:
    """Input/output XOR difference pair over a reduced round count."""

    input_diff: tuple[int, ...]
    output_diff: tuple[int, ...]
    rounds: int

    def __post_init__(self):
        object.__setattr__(self, "input_diff", _check_words(self.input_diff, 16, "input_diff"))
        object.__setattr__(self, "output_diff", _check_words(self.output_diff, 16, "output_diff"))
        if not any(self.input_diff):
            raise ParamError("input_diff must be nonzero")
        object.__setattr__(self, "rounds", _check_rounds(self.rounds))


@dataclass
class DiffProbEstimate:
    probability: float
    hits: int
    samples: int
    half_width: float
    rounds: int
    qrn_mode: str

    def to_dict(self) -> dict:
        return {
            "kind": "diffprob",
            "probability": self.probability,
            "hits": self.hits,
            "samples": self.samples,
            "half_width": self.half_width,
            "rounds": self.rounds,
            "qrn_mode": self.qrn_mode,
        }

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)


def _admissible_mask_pairs(rng, dx, batch):
    """Draw per-sample mask pairs for one injection round, redrawing any
    sample whose mask difference collides with its state difference dx."""
    ma = rng.integers(0, 1 << 32, size=(4, batch), dtype=np.uint32)
    mb = rng.integers(0, 1 << 32, size=(4, batch), dtype=np.uint32)
    while True:
        bad = ((ma ^ mb) == dx).any(axis=0)
        if not bad.any():
            return ma, mb
        idx = np.flatnonzero(bad)
        ma[:, idx] = rng.integers(0, 1 << 32, size=(4, idx.size), dtype=np.uint32)
        mb[:, idx] = rng.integers(0, 1 << 32, size=(4, idx.size), dtype=np.uint32)


def empirical_diff_probability(
    spec: DiffSpec,
    samples: int,
    qrn_mode: str = "fixed",
    material: QrnSessionMaterial | None = None,
    rng=None,
) -> DiffProbEstimate:
    """Fraction of random state pairs (X, X ^ input_diff) whose state
    difference after spec.rounds rounds equals output_diff.

    qrn_mode "fixed" runs both sides under one session material (None means
    zero masks, i.e. plain propagation).  "resampled" draws fresh,
    independent masks per sample and per side, rejecting draws whose mask
    difference equals the state difference at the injected words.
    """
    if qrn_mode not in ("fixed", "resampled"):
        raise ParamError(f"qrn_mode must be 'fixed' or 'resampled', got {qrn_mode!r}")
    if samples < 10_000:
        raise ParamError(f"estimator needs >= 10**4 samples, got {samples}")
    if spec.rounds > 4:
        raise ParamError("estimator is only meaningful for rounds <= 4")
    if qrn_mode == "fixed" and material is not None and material.rounds != spec.rounds:
        raise ParamError("material round count does not match spec.rounds")
    rng = np.random.default_rng(rng)
    in_diff = np.array(spec.input_diff, dtype=np.uint32)[:, None]
    out_diff = np.array(spec.output_diff, dtype=np.uint32)[:, None]
    fixed_masks = None
    if qrn_mode == "fixed" and material is not None:
        fixed_masks = np.asarray(material.round_masks, dtype=np.uint32)

    hits = 0
    done = 0
    while done < samples:
        batch = min(1 << 15, samples - done)
        xa = rng.integers(0, 1 << 32, size=(16, batch), dtype=np.uint32)
        xb = xa ^ in_diff
        for r in range(spec.rounds):
            if r % 2 == 0:
                if qrn_mode == "resampled":
                    ma, mb = _admissible_mask_pairs(rng, xa[0:4] ^ xb[0:4], batch)
                    xa[0:4] ^= ma
                    xb[0:4] ^= mb
                elif fixed_masks is not None:
                    xa[0:4] ^= fixed_masks[r >> 1][:, None]
                    xb[0:4] ^= fixed_masks[r >> 1][:, None]
                for g in ((0, 4, 8, 12), (1, 5, 9, 13), (2, 6, 10, 14), (3, 7, 11, 15)):
                    vector._qr(xa, *g)
                    vector._qr(xb, *g)
            else:
                for g in ((0, 5, 10, 15), (1, 6, 11, 12), (2, 7, 8, 13), (3, 4, 9, 14)):
                    vector._qr(xa, *g)
                    vector._qr(xb, *g)
        hits += int(((xa ^ xb) == out_diff).all(axis=0).sum())
        done += batch

    prob = hits / samples
    half = 3.0 * math.sqrt(max(prob * (1.0 - prob), 1.0 / samples) / samples)
    return DiffProbEstimate(prob, hits, samples, half, spec.rounds, qrn_mode)
