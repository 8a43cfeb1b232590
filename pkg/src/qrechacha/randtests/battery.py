"""Two-level battery: per-sequence P-values, pass proportions, uniformity.

Level one runs every enabled test on every sequence at significance alpha.
Level two checks, per test row, that the pass proportion falls inside the
three-sigma interval (1-alpha) +/- 3*sqrt(alpha(1-alpha)/s) and that the
P-values are uniform (10-bin chi-square P >= alpha_uniformity).

Tests that cannot run at the given sequence length (pattern too long,
sequence too short) become not-applicable rows instead of errors.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..errors import ParamError, ParamTooLarge, SequenceTooShort
from . import tests as stattests
from .bits import as_bits
from .special import igamc

SUITES = ("nist", "gmt", "both")
UNIFORMITY_BINS = 10

# NIST parameterizations follow the reference tool defaults; GM/T rows use
# the standard's parameter sets.
NIST_BLOCK_LEN = 128
NIST_APEN_M = 10
NIST_SERIAL_M = 16
GMT_BLOCK_LEN = 10000
GMT_POKER_M = (4, 8)
GMT_DERIVATION_K = (3, 7)
GMT_AUTOCORR_D = (1, 2, 8, 16)
GMT_APEN_M = (2, 5)


@dataclass(frozen=True)
class PlanEntry:
    """One battery test invocation, possibly emitting several report rows."""

    row_ids: tuple[str, ...]
    labels: tuple[str, ...]
    func: str
    kwargs: dict = field(default_factory=dict)
    complement: bool = False

    def run(self, bits, alpha):
        fn = getattr(stattests, self.func)
        res = fn(bits ^ 1 if self.complement else bits, alpha=alpha, **self.kwargs)
        results = res if isinstance(res, tuple) else (res,)
        return [r.p_value for r in results]


def _entry(row_id, label, func, complement=False, **kwargs):
    return PlanEntry((row_id,), (label,), func, kwargs, complement)


def nist_plan() -> list[PlanEntry]:
    return [
        _entry("nist/frequency", "Frequency", "monobit"),
        _entry("nist/block_frequency", f"Block Frequency (M={NIST_BLOCK_LEN})",
               "block_frequency", block_len=NIST_BLOCK_LEN),
        _entry("nist/cumulative_sums_forward", "Cumulative Sums (Forward)",
               "cumulative_sums", backward=False),
        _entry("nist/cumulative_sums_backward", "Cumulative Sums (Backward)",
               "cumulative_sums", backward=True),
        _entry("nist/runs", "Runs", "runs"),
        _entry("nist/longest_run_of_ones", "Longest Run of Ones", "longest_run_of_ones"),
        _entry("nist/approximate_entropy", f"Approximate Entropy (m={NIST_APEN_M})",
               "approximate_entropy", m=NIST_APEN_M),
        PlanEntry(
            ("nist/serial_p1", "nist/serial_p2"),
            (f"Serial (m={NIST_SERIAL_M}) P1", f"Serial (m={NIST_SERIAL_M}) P2"),
            "serial",
            {"m": NIST_SERIAL_M},
        ),
    ]


def gmt_plan() -> list[PlanEntry]:
    plan = [
        _entry("gmt/frequency", "Single Bit Frequency", "monobit"),
        _entry("gmt/block_frequency", f"Block Frequency (m={GMT_BLOCK_LEN})",
               "block_frequency", block_len=GMT_BLOCK_LEN),
    ]
    for m in GMT_POKER_M:
        plan.append(_entry(f"gmt/poker_m{m}", f"Poker Test (m={m})", "poker", m=m))
    plan += [
        _entry("gmt/total_runs", "Total Runs", "runs"),
        _entry("gmt/run_distribution", "Run Distribution", "run_distribution"),
        _entry("gmt/max_run_of_ones", "Max Run of 1s", "longest_run_of_ones"),
        _entry("gmt/max_run_of_zeros", "Max Run of 0s", "longest_run_of_ones", complement=True),
    ]
    for k in GMT_DERIVATION_K:
        plan.append(_entry(f"gmt/binary_derivation_k{k}", f"Binary Derivation (k={k})",
                           "binary_derivation", k=k))
    for d in GMT_AUTOCORR_D:
        plan.append(_entry(f"gmt/autocorrelation_d{d}", f"Autocorrelation (d={d})",
                           "autocorrelation", shift=d))
    plan += [
        _entry("gmt/cumulative_sums_forward", "Cumulative Sums (Forward)",
               "cumulative_sums", backward=False),
        _entry("gmt/cumulative_sums_backward", "Cumulative Sums (Backward)",
               "cumulative_sums", backward=True),
    ]
    for m in GMT_APEN_M:
        plan.append(_entry(f"gmt/approximate_entropy_m{m}", f"Approximate Entropy (m={m})",
                           "approximate_entropy", m=m))
    return plan


def build_plan(suite: str) -> list[PlanEntry]:
    if suite not in SUITES:
        raise ParamError(f"suite must be one of {SUITES}, got {suite!r}")
    plan = []
    if suite in ("nist", "both"):
        plan += nist_plan()
    if suite in ("gmt", "both"):
        plan += gmt_plan()
    return plan


def proportion_interval(alpha: float, s: int) -> tuple[float, float]:
    """Three-sigma acceptance band for the pass proportion of s sequences."""
    half = 3.0 * (alpha * (1.0 - alpha) / s) ** 0.5
    return max(0.0, 1.0 - alpha - half), min(1.0, 1.0 - alpha + half)


def uniformity_p_value(p_values) -> float:
    """10-bin chi-square uniformity over per-sequence P-values."""
    p_values = np.asarray(p_values, dtype=np.float64)
    s = p_values.size
    bins = np.minimum((p_values * UNIFORMITY_BINS).astype(np.int64), UNIFORMITY_BINS - 1)
    freq = np.bincount(bins, minlength=UNIFORMITY_BINS)
    expected = s / UNIFORMITY_BINS
    chi = float(((freq - expected) ** 2 / expected).sum())
    return igamc((UNIFORMITY_BINS - 1) / 2.0, chi / 2.0)


@dataclass
class BatteryLine:
    row_id: str
    label: str
    pass_count: int
    total: int
    proportion: float
    interval: tuple[float, float]
    uniformity_p: float | None
    histogram: list[int]
    applicable: bool = True
    note: str = ""

    def ok(self, alpha_uniformity: float) -> bool:
        """Row verdict: pass count inside the three-sigma band (its lower
        edge rounded down to the achievable count grid, so 96/100 passes a
        0.9602 bound) and P-values uniform."""
        if not self.applicable:
            return False
        if self.pass_count < math.floor(self.interval[0] * self.total):
            return False
        return self.uniformity_p is None or self.uniformity_p >= alpha_uniformity

    def to_dict(self) -> dict:
        return {
            "test_id": self.row_id,
            "label": self.label,
            "pass_count": self.pass_count,
            "total": self.total,
            "proportion": self.proportion,
            "interval": list(self.interval),
            "uniformity_p": self.uniformity_p,
            "histogram": self.histogram,
            "applicable": self.applicable,
            "note": self.note,
        }


@dataclass
class BatteryReport:
    suite: str
    alpha: float
    alpha_uniformity: float
    sequences: int
    bits_per_sequence: int
    provider_identity: str
    provider_is_quantum: bool
    lines: list[BatteryLine]

    @property
    def passed(self) -> bool:
        return all(line.ok(self.alpha_uniformity) for line in self.lines)

    def to_dict(self) -> dict:
        return {
            "kind": "battery",
            "suite": self.suite,
            "alpha": self.alpha,
            "alpha_uniformity": self.alpha_uniformity,
            "sequences": self.sequences,
            "bits_per_sequence": self.bits_per_sequence,
            "provider": {
                "identity": self.provider_identity,
                "is_quantum": self.provider_is_quantum,
            },
            "passed": self.passed,
            "results": [line.to_dict() for line in self.lines],
        }

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    def to_csv(self) -> str:
        rows = ["test_id,label,pass_count,total,proportion,interval_lo,interval_hi,uniformity_p"]
        for ln in self.lines:
            uni = "" if ln.uniformity_p is None else f"{ln.uniformity_p:.6f}"
            rows.append(
                f"{ln.row_id},{ln.label},{ln.pass_count},{ln.total},"
                f"{ln.proportion:.6f},{ln.interval[0]:.6f},{ln.interval[1]:.6f},{uni}"
            )
        return "\n".join(rows) + "\n"

    def to_text(self) -> str:
        width = max(len(ln.label) for ln in self.lines) + 2
        out = [
            f"suite={self.suite}  sequences={self.sequences}  bits={self.bits_per_sequence}  "
            f"alpha={self.alpha}  alpha_uniformity={self.alpha_uniformity}",
            f"provider={self.provider_identity}  is_quantum={self.provider_is_quantum}",
            f"proportion interval: [{self.lines[0].interval[0]:.4f}, {self.lines[0].interval[1]:.4f}]"
            if self.lines else "",
            "",
            f"{'Test Item':<{width}}{'Pass Count':>12}{'Proportion':>12}{'Uniformity P':>14}  Verdict",
        ]
        for ln in self.lines:
            if not ln.applicable:
                out.append(f"{ln.label:<{width}}{'-':>12}{'-':>12}{'-':>14}  NOT APPLICABLE ({ln.note})")
                continue
            uni = "-" if ln.uniformity_p is None else f"{ln.uniformity_p:.6f}"
            verdict = "ok" if ln.ok(self.alpha_uniformity) else "FAIL"
            out.append(
                f"{ln.label:<{width}}{ln.pass_count:>12}{ln.proportion:>12.4f}{uni:>14}  {verdict}"
            )
        out.append("")
        out.append(f"overall: {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(out)


def _provider_info(provider) -> tuple[str, bool]:
    if provider is None:
        return "unspecified", False
    identity = getattr(provider, "identity", None)
    quantum = getattr(provider, "is_quantum", None)
    if identity is None or quantum is None:
        raise ParamError("provider must expose identity and is_quantum")
    return str(identity), bool(quantum)


def _run_sequence(args):
    packed, plan, alpha = args
    bits = np.frombuffer(packed, dtype=np.uint8)
    out = []
    for entry in plan:
        try:
            out.append(entry.run(bits, alpha))
        except (SequenceTooShort, ParamTooLarge) as exc:
            out.append(str(exc))
    return out


def battery_run(
    sequences,
    suite: str = "both",
    alpha: float = 0.01,
    alpha_uniformity: float = 1e-4,
    provider=None,
    jobs: int = 1,
) -> BatteryReport:
    """Run the chosen suite over an iterable of bit sequences.

    Sequences must all share one length; 10 or more are needed before the
    uniformity level means anything (fewer still compute, uniformity_p is
    reported as None).
    """
    plan = build_plan(suite)
    identity, quantum = _provider_info(provider)

    p_values: list[list[float]] = [[] for _ in plan]
    na_note: list[str | None] = [None] * len(plan)
    nbits = None
    count = 0

    def fold(results):
        nonlocal count
        count += 1
        for i, res in enumerate(results):
            if isinstance(res, str):
                na_note[i] = res
            else:
                p_values[i].extend(res)

    seq_iter = (as_bits(s) for s in sequences)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            args = []
            for bits in seq_iter:
                if nbits is None:
                    nbits = bits.size
                elif bits.size != nbits:
                    raise ParamError("all sequences must have the same length")
                args.append((bits.tobytes(), plan, alpha))
            for results in pool.map(_run_sequence, args, chunksize=4):
                fold(results)
    else:
        for bits in seq_iter:
            if nbits is None:
                nbits = bits.size
            elif bits.size != nbits:
                raise ParamError("all sequences must have the same length")
            fold(_run_sequence((bits, plan, alpha)))

    if count == 0:
        raise ParamError("battery needs at least one sequence")

    interval = proportion_interval(alpha, count)
    lines = []
    for entry, pvals, note in zip(plan, p_values, na_note):
        for j, (row_id, label) in enumerate(zip(entry.row_ids, entry.labels)):
            if note is not None:
                lines.append(BatteryLine(row_id, label, 0, count, 0.0, interval,
                                         None, [0] * UNIFORMITY_BINS, False, note))
                continue
            rows = np.asarray(pvals[j::len(entry.row_ids)], dtype=np.float64)
            passes = int((rows >= alpha).sum())
            bins = np.minimum((rows * UNIFORMITY_BINS).astype(np.int64), UNIFORMITY_BINS - 1)
            hist = np.bincount(bins, minlength=UNIFORMITY_BINS).tolist()
            uni = uniformity_p_value(rows) if count >= 10 else None
            lines.append(BatteryLine(row_id, label, passes, count, passes / count,
                                     interval, uni, hist))
    return BatteryReport(
        suite=suite,
        alpha=alpha,
        alpha_uniformity=alpha_uniformity,
        sequences=count,
        bits_per_sequence=int(nbits),
        provider_identity=identity,
        provider_is_quantum=quantum,
        lines=lines,
    )
