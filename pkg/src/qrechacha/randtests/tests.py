"""Statistical randomness tests.

NIST SP 800-22 subset: frequency, block frequency, runs, longest run of
ones, cumulative sums, approximate entropy, serial.  GM/T 0005-2021
additions: poker, binary derivation, autocorrelation, run distribution.

Each test maps one bit sequence to a TestResult holding the statistic and
its P-value; `passed` is P >= alpha.  A failed runs-test prerequisite is
reported as a not-applicable result with P = 0 rather than an exception.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.special import ndtr

from ..errors import ParamError, ParamTooLarge, SequenceTooShort
from .bits import as_bits
from .special import erfc, igamc

ALPHA_DEFAULT = 0.01

# longest-run class tables: (min n, block length M, lowest class, highest
# class, class probabilities).  Runs below the lowest class are pooled into
# it; likewise above the highest.
_LONGEST_RUN_TABLES = (
    (750000, 10000, 10, 16, (0.0882, 0.2092, 0.2483, 0.1933, 0.1208, 0.0675, 0.0727)),
    (6272, 128, 4, 9, (0.1174035788, 0.242955959, 0.249363483, 0.17517706, 0.102701071, 0.112398847)),
    (128, 8, 1, 4, (0.21484375, 0.3671875, 0.23046875, 0.1875)),
)


@dataclass(frozen=True)
class TestResult:
    test_id: str
    params: dict = field(default_factory=dict)
    statistic: float = 0.0
    p_value: float = 0.0
    alpha: float = ALPHA_DEFAULT
    applicable: bool = True
    note: str = ""

    @property
    def passed(self) -> bool:
        return self.p_value >= self.alpha

    def to_dict(self) -> dict:
        return {
            "test_id": self.test_id,
            "params": dict(self.params),
            "statistic": self.statistic,
            "p_value": self.p_value,
            "alpha": self.alpha,
            "pass": self.passed,
            "applicable": self.applicable,
            "note": self.note,
        }


def _clamp01(p: float) -> float:
    return min(1.0, max(0.0, p))


def monobit(seq, alpha: float = ALPHA_DEFAULT) -> TestResult:
    """Frequency test: S = #ones - #zeros, P = erfc(|S| / sqrt(2n))."""
    bits = as_bits(seq)
    n = bits.size
    s = 2 * int(bits.sum()) - n
    p = erfc(abs(s) / math.sqrt(2.0 * n))
    return TestResult("frequency", {"n": n}, float(s), p, alpha)


def block_frequency(seq, block_len: int, alpha: float = ALPHA_DEFAULT) -> TestResult:
    """Chi-square of per-block one-proportions; trailing bits are discarded."""
    bits = as_bits(seq)
    if block_len < 1:
        raise ParamError("block_len must be >= 1")
    nblocks = bits.size // block_len
    if nblocks < 1:
        raise SequenceTooShort(f"need at least one {block_len}-bit block")
    pis = bits[: nblocks * block_len].reshape(nblocks, block_len).mean(axis=1)
    chi = 4.0 * block_len * float(((pis - 0.5) ** 2).sum())
    p = igamc(nblocks / 2.0, chi / 2.0)
    return TestResult("block_frequency", {"M": block_len, "N": nblocks}, chi, p, alpha)


def runs(seq, alpha: float = ALPHA_DEFAULT) -> TestResult:
    """Total-runs test.

    Prerequisite |pi - 1/2| < 2/sqrt(n); when it fails the result is marked
    not applicable with P = 0 (counted as a failure downstream).
    """
    bits = as_bits(seq)
    n = bits.size
    pi = float(bits.mean())
    if pi in (0.0, 1.0) or abs(pi - 0.5) >= 2.0 / math.sqrt(n):
        return TestResult(
            "runs", {"n": n, "pi": pi}, 0.0, 0.0, alpha,
            applicable=False, note="frequency prerequisite failed",
        )
    v = 1 + int(np.count_nonzero(bits[1:] != bits[:-1]))
    p = erfc(abs(v - 2.0 * n * pi * (1 - pi)) / (2.0 * math.sqrt(2.0 * n) * pi * (1 - pi)))
    return TestResult("runs", {"n": n, "pi": pi}, float(v), p, alpha)


def _block_longest_ones(block: np.ndarray) -> int:
    zpos = np.flatnonzero(np.concatenate(([0], block, [0])) == 0)
    return int((np.diff(zpos) - 1).max())


def longest_run_of_ones(seq, alpha: float = ALPHA_DEFAULT) -> TestResult:
    """Longest run of ones per block, chi-squared against tabulated classes.

    Block length and classes depend on n (M = 8 / 128 / 10000).  For the
    max-run-of-zeros variant feed the complemented sequence.
    """
    bits = as_bits(seq)
    n = bits.size
    if n < 128:
        raise SequenceTooShort(f"longest-run test needs n >= 128, got {n}")
    for min_n, m, lo, hi, pi in _LONGEST_RUN_TABLES:
        if n >= min_n:
            break
    nblocks = n // m
    blocks = bits[: nblocks * m].reshape(nblocks, m)
    longest = np.fromiter(
        (_block_longest_ones(blocks[i]) for i in range(nblocks)), dtype=np.int64, count=nblocks
    )
    classes = np.clip(longest, lo, hi) - lo
    nu = np.bincount(classes, minlength=hi - lo + 1).astype(np.float64)
    expected = nblocks * np.asarray(pi)
    chi = float(((nu - expected) ** 2 / expected).sum())
    p = igamc((len(pi) - 1) / 2.0, chi / 2.0)
    return TestResult("longest_run_of_ones", {"M": m, "N": nblocks}, chi, p, alpha)


def cumulative_sums(seq, backward: bool = False, alpha: float = ALPHA_DEFAULT) -> TestResult:
    """Maximum partial sum of the +/-1 mapping, two-sided normal series."""
    bits = as_bits(seq)
    n = bits.size
    if n < 100:
        raise SequenceTooShort(f"cumulative-sums test needs n >= 100, got {n}")
    steps = bits.astype(np.int64) * 2 - 1
    if backward:
        steps = steps[::-1]
    z = int(np.abs(np.cumsum(steps)).max())
    sn = math.sqrt(n)
    ratio = Fraction(n, z)
    lo1, hi = math.ceil((1 - ratio) / 4), math.floor((ratio - 1) / 4)
    lo2 = math.ceil((-ratio - 3) / 4)
    k1 = np.arange(lo1, hi + 1, dtype=np.float64)
    k2 = np.arange(lo2, hi + 1, dtype=np.float64)
    sum1 = float((ndtr((4 * k1 + 1) * z / sn) - ndtr((4 * k1 - 1) * z / sn)).sum())
    sum2 = float((ndtr((4 * k2 + 3) * z / sn) - ndtr((4 * k2 + 1) * z / sn)).sum())
    p = _clamp01(1.0 - sum1 + sum2)
    direction = "backward" if backward else "forward"
    return TestResult("cumulative_sums", {"n": n, "direction": direction}, float(z), p, alpha)


def _pattern_counts(bits: np.ndarray, m: int) -> np.ndarray:
    """Counts of the n cyclic m-bit windows (sequence extended by m-1 bits)."""
    n = bits.size
    ext = np.concatenate((bits, bits[: m - 1])) if m > 1 else bits
    acc = np.zeros(n, dtype=np.int64)
    for j in range(m):
        acc = (acc << 1) | ext[j : j + n]
    return np.bincount(acc, minlength=1 << m)


def approximate_entropy(seq, m: int, alpha: float = ALPHA_DEFAULT) -> TestResult:
    """ApEn(m) = Phi(m) - Phi(m+1); chi-square 2n(ln2 - ApEn).

    Computes whenever m < log2(n); battery parameter choices stay under the
    stricter log2(n) - 5 rule so the chi-square approximation holds.
    """
    bits = as_bits(seq)
    n = bits.size
    if m < 1:
        raise ParamError("pattern length m must be >= 1")
    if m >= math.log2(n):
        raise ParamTooLarge(f"approximate entropy needs m < log2(n), got m={m}, n={n}")

    def phi(mm: int) -> float:
        counts = _pattern_counts(bits, mm)
        counts = counts[counts > 0].astype(np.float64)
        freq = counts / n
        return float((freq * np.log(freq)).sum())

    apen = phi(m) - phi(m + 1)
    chi = max(0.0, 2.0 * n * (math.log(2.0) - apen))
    p = igamc(2 ** (m - 1), chi / 2.0)
    return TestResult("approximate_entropy", {"m": m, "n": n, "apen": apen}, chi, p, alpha)


def serial(seq, m: int, alpha: float = ALPHA_DEFAULT) -> tuple[TestResult, TestResult]:
    """Psi-square statistics over cyclic m/(m-1)/(m-2) windows.

    Returns two results: first difference and second difference P-values.
    """
    bits = as_bits(seq)
    n = bits.size
    if m < 2:
        raise ParamError("serial test needs m >= 2")
    if m >= math.log2(n) - 2:
        raise ParamTooLarge(f"serial test needs m < log2(n) - 2, got m={m}, n={n}")

    def psi2(mm: int) -> float:
        if mm == 0:
            return 0.0
        counts = _pattern_counts(bits, mm).astype(np.float64)
        return float((2.0**mm / n) * (counts * counts).sum() - n)

    pm, pm1, pm2 = psi2(m), psi2(m - 1), psi2(m - 2)
    d1 = max(0.0, pm - pm1)
    d2 = max(0.0, pm - 2 * pm1 + pm2)
    r1 = TestResult(
        "serial", {"m": m, "part": 1}, d1, igamc(2 ** (m - 2), d1 / 2.0), alpha
    )
    r2 = TestResult(
        "serial", {"m": m, "part": 2}, d2, igamc(2 ** (m - 3), d2 / 2.0), alpha
    )
    return r1, r2


def poker(seq, m: int, alpha: float = ALPHA_DEFAULT) -> TestResult:
    """Occupancy chi-square over non-overlapping m-bit block patterns."""
    bits = as_bits(seq)
    if m < 1:
        raise ParamError("poker block length m must be >= 1")
    nblocks = bits.size // m
    if nblocks < 5 * (1 << m):
        raise SequenceTooShort(
            f"poker test with m={m} needs at least {5 * (1 << m)} blocks, got {nblocks}"
        )
    values = bits[: nblocks * m].reshape(nblocks, m) @ (1 << np.arange(m - 1, -1, -1, dtype=np.int64))
    counts = np.bincount(values, minlength=1 << m).astype(np.float64)
    v = float((1 << m) / nblocks * (counts * counts).sum() - nblocks)
    v = max(0.0, v)
    p = igamc(((1 << m) - 1) / 2.0, v / 2.0)
    return TestResult("poker", {"m": m, "N": nblocks}, v, p, alpha)


def binary_derivation(seq, k: int, alpha: float = ALPHA_DEFAULT) -> TestResult:
    """Monobit statistic after k adjacent-XOR derivative passes."""
    bits = as_bits(seq)
    if k < 0:
        raise ParamError("derivation count k must be >= 0")
    n = bits.size - k
    if n < 100:
        raise SequenceTooShort(f"binary derivation with k={k} needs n - k >= 100")
    der = bits
    for _ in range(k):
        der = der[:-1] ^ der[1:]
    s = 2 * int(der.sum()) - n
    p = erfc(abs(s) / math.sqrt(2.0 * n))
    return TestResult("binary_derivation", {"k": k, "n": n}, abs(s) / math.sqrt(n), p, alpha)


def autocorrelation(seq, shift: int, alpha: float = ALPHA_DEFAULT) -> TestResult:
    """Agreement between the sequence and its d-shift: A(d) = sum e_i xor e_{i+d}."""
    bits = as_bits(seq)
    if shift < 1:
        raise ParamError("shift d must be >= 1")
    n = bits.size - shift
    if n < 100:
        raise SequenceTooShort(f"autocorrelation with d={shift} needs n - d >= 100")
    a = int(np.count_nonzero(bits[:-shift] ^ bits[shift:]))
    v = 2.0 * (a - n / 2.0) / math.sqrt(n)
    p = erfc(abs(v) / math.sqrt(2.0))
    return TestResult("autocorrelation", {"d": shift, "A": a}, v, p, alpha)


def run_distribution(seq, alpha: float = ALPHA_DEFAULT) -> TestResult:
    """Chi-square of 0-run and 1-run length counts against the geometric law.

    Lengths are classified up to the cutoff e, the largest i whose expected
    count (n - i + 3) / 2**(i+2) is at least 5; longer runs still count
    toward the total but are not classified.  df = 2e - 2.
    """
    bits = as_bits(seq)
    n = bits.size
    if n < 100:
        raise SequenceTooShort(f"run-distribution test needs n >= 100, got {n}")
    e = 1
    while (n - (e + 1) + 3) / 2.0 ** (e + 3) >= 5.0:
        e += 1
    change = np.flatnonzero(bits[1:] != bits[:-1])
    bounds = np.concatenate(([0], change + 1, [n]))
    lengths = np.diff(bounds)
    starts = bits[bounds[:-1]]
    total = lengths.size
    ones = np.bincount(lengths[starts == 1], minlength=e + 1)[1 : e + 1]
    zeros = np.bincount(lengths[starts == 0], minlength=e + 1)[1 : e + 1]
    expected = total / 2.0 ** (np.arange(1, e + 1) + 1)
    v = float((((ones - expected) ** 2 + (zeros - expected) ** 2) / expected).sum())
    p = igamc(e - 1.0, v / 2.0)
    return TestResult("run_distribution", {"e": e, "runs": total}, v, p, alpha)
