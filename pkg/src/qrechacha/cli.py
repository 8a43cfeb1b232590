"""Command-line surface.

Subcommands: encrypt, decrypt, keystream, qrn fetch|init|status,
material derive, test, avalanche, diffprob, bench.

Secrets travel through files or environment variables, never flag values.
Exit codes: 0 success, 2 usage, 3 I/O or transport, 4 pool exhausted,
5 verification/test failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import analysis, bench, generate, qrn
from .cipher import CipherParams, ROUND_PRESETS, xor_stream
from .errors import IoFailure, ParamError, QreChachaError, VerificationFailure
from .randtests.battery import battery_run
from .randtests.bits import bits_from_bytes


def _read(path) -> bytes:
    if str(path) == "-":
        return sys.stdin.buffer.read()
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc


def _write(path, data: bytes) -> None:
    if str(path) == "-":
        sys.stdout.buffer.write(data)
        sys.stdout.buffer.flush()
        return
    try:
        Path(path).write_bytes(data)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def _load_params(args, default_counter=0) -> CipherParams:
    key = _read(args.key)
    nonce = _read(args.nonce)
    counter = getattr(args, "counter", default_counter)
    return CipherParams.from_bytes(key, nonce, counter, args.rounds)


def _load_material(args):
    if getattr(args, "material", None) is None:
        return None
    return qrn.session_parse(_read(args.material))


def _emit_report(args, obj) -> None:
    """Print the text form; optionally write json/csv per --report extension."""
    print(obj.to_text() if hasattr(obj, "to_text") else obj.to_json())
    path = getattr(args, "report", None)
    if path is None:
        return
    suffix = Path(path).suffix.lower()
    if suffix == ".csv" and hasattr(obj, "to_csv"):
        _write(path, obj.to_csv().encode())
    elif suffix in (".txt", ".text") and hasattr(obj, "to_text"):
        _write(path, (obj.to_text() + "\n").encode())
    else:
        _write(path, (obj.to_json() + "\n").encode())


def cmd_crypt(args) -> int:
    params = _load_params(args)
    material = _load_material(args)
    _write(args.outfile, xor_stream(params, material, _read(args.infile)))
    return 0


def cmd_keystream(args) -> int:
    seed = bytes.fromhex(args.seed) if args.seed else os.urandom(32)
    spec = generate.CorpusSpec(seed, args.count, args.bits, args.rounds, args.counter)
    material = _load_material(args)
    source = args.material if args.material else "seed-derived"
    manifest = generate.write_corpus(
        spec, args.out_dir, material,
        material_source=str(source), is_quantum=args.quantum, debug_keys=args.debug_keys,
    )
    print(f"wrote {spec.count} sequence(s) of {spec.bits} bits under {args.out_dir}")
    print(f"manifest: {manifest}")
    return 0


def cmd_qrn_fetch(args) -> int:
    endpoint = args.endpoint or os.environ.get(qrn.ENDPOINT_ENV)
    if not endpoint:
        raise ParamError(f"no endpoint given and {qrn.ENDPOINT_ENV} unset")
    mode = args.mode or os.environ.get(qrn.MODE_ENV, "raw")
    data = qrn.fetch_remote(endpoint, args.nbytes, mode=mode, timeout=args.timeout)
    pool = qrn.QrnPool.create(args.out, data, is_quantum=True)
    print(f"pool {pool.path}: {pool.total_bytes} bytes, cursor {pool.cursor_bytes}")
    return 0


def cmd_qrn_init(args) -> int:
    if args.seed:
        data = qrn.DeterministicProvider(bytes.fromhex(args.seed)).take(args.nbytes)
        quantum = False
    else:
        data = os.urandom(args.nbytes)
        quantum = False  # OS entropy, not a QRNG
    pool = qrn.QrnPool.create(args.out, data, is_quantum=quantum)
    print(f"pool {pool.path}: {pool.total_bytes} bytes (non-quantum test pool)")
    return 0


def cmd_qrn_status(args) -> int:
    pool = qrn.QrnPool(args.pool)
    print(f"path:      {pool.path}")
    print(f"total:     {pool.total_bytes} bytes")
    print(f"cursor:    {pool.cursor_bytes} bytes consumed")
    print(f"remaining: {pool.remaining} bytes")
    return 0


def cmd_material_derive(args) -> int:
    if args.pool:
        source = qrn.QrnPool(args.pool, is_quantum=not args.non_quantum)
    else:
        source = qrn.DeterministicProvider(bytes.fromhex(args.seed))
    material = qrn.derive_session(source, args.rounds)
    qrn.write_material(args.out, material)
    print(f"derived material for {args.rounds} rounds from {source.identity} -> {args.out}")
    return 0


class _ManifestProvider:
    """Provider stub naming an in-process corpus for battery reports."""

    def __init__(self, identity: str, is_quantum: bool):
        self.identity = identity
        self.is_quantum = is_quantum


def cmd_test(args) -> int:
    if args.input_dir:
        paths = sorted(Path(args.input_dir).glob(args.glob))
        if not paths:
            raise IoFailure(f"no '{args.glob}' files under {args.input_dir}")
        sequences = (bits_from_bytes(_read(p), args.bits) for p in paths)
        provider = _ManifestProvider(f"files:{args.input_dir}", args.quantum)
    else:
        seed = bytes.fromhex(args.seed) if args.seed else os.urandom(32)
        spec = generate.CorpusSpec(seed, args.sequences, args.bits, args.rounds, 0)
        material = _load_material(args)
        quantum = args.quantum if args.material else False
        sequences = (
            bits_from_bytes(raw, args.bits)
            for raw in generate.iter_sequences(spec, material)
        )
        provider = _ManifestProvider(f"qre-chacha{args.rounds}:seed={seed.hex()[:16]}", quantum)
    report = battery_run(
        sequences,
        suite=args.suite,
        alpha=args.alpha,
        alpha_uniformity=args.alpha_uniformity,
        provider=provider,
        jobs=args.jobs,
    )
    _emit_report(args, report)
    if not report.passed:
        raise VerificationFailure("randomness battery failed; see report")
    return 0


def cmd_avalanche(args) -> int:
    params = CipherParams(key=(0,) * 8, nonce=(0,) * 3, counter=args.counter, rounds=args.rounds)
    if args.material:
        material = qrn.session_parse(_read(args.material))
    elif args.random_material:
        material = qrn.derive_session(qrn.DeterministicProvider(os.urandom(32)), args.rounds)
    else:
        material = None
    segment, _, bit = args.flip.partition(":")
    report = analysis.avalanche_metric(
        params, material, (segment, int(bit or 0)), args.trials, rng=args.rng_seed
    )
    print(f"avalanche rounds={report.rounds} trials={report.trials} "
          f"flip={report.flip_target[0]}:{report.flip_target[1]}")
    print(f"aggregate flip fraction: {report.aggregate:.6f} "
          f"(ideal 0.5 +/- {report.half_width:.6f})")
    if args.report:
        _write(args.report, (report.to_json() + "\n").encode())
    return 0


def _parse_diff(text: str) -> tuple[int, ...]:
    words = tuple(int(w, 16) for w in text.replace(",", " ").split())
    if len(words) != 16:
        raise ParamError(f"difference needs 16 hex words, got {len(words)}")
    return words


def cmd_diffprob(args) -> int:
    spec = analysis.DiffSpec(
        _parse_diff(args.input_diff), _parse_diff(args.output_diff), args.rounds
    )
    material = _load_material(args)
    est = analysis.empirical_diff_probability(
        spec, args.samples, qrn_mode=args.mode, material=material, rng=args.rng_seed
    )
    print(f"diffprob rounds={est.rounds} mode={est.qrn_mode} samples={est.samples}")
    print(f"estimate: {est.probability:.3e} ({est.hits} hits, +/- {est.half_width:.3e})")
    if args.report:
        _write(args.report, (est.to_json() + "\n").encode())
    return 0


def cmd_bench(args) -> int:
    configs = []
    for spec in args.ciphers.split(","):
        name, _, rounds = spec.partition(":")
        if name not in bench.CIPHERS:
            raise ParamError(f"unknown cipher {name!r}")
        configs.append((name, int(rounds) if rounds else 8))
    sizes = [float(s) for s in args.sizes.split(",")]
    results = bench.run_sweep(configs, sizes, args.reps)
    _emit_report(args, bench.compare_report(results))
    return 0


def _add_crypt(sub, name, helptext):
    p = sub.add_parser(name, help=helptext)
    p.add_argument("--key", required=True, help="32-byte key file")
    p.add_argument("--nonce", required=True, help="12-byte nonce file")
    p.add_argument("--material", help="session material file (omit for plain ChaCha)")
    p.add_argument("--rounds", type=int, default=20, choices=None,
                   metavar="R", help=f"even round count, presets {ROUND_PRESETS}")
    p.add_argument("--counter", type=int, default=0, help="starting block counter")
    p.add_argument("--in", dest="infile", required=True, help="input file or '-'")
    p.add_argument("--out", dest="outfile", required=True, help="output file or '-'")
    p.set_defaults(func=cmd_crypt)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qrechacha",
        description="ChaCha / QRE-ChaCha toolkit: encryption, QRN management, "
                    "randomness testing, diffusion analysis, benchmarks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    _add_crypt(sub, "encrypt", "encrypt a file (stream XOR)")
    _add_crypt(sub, "decrypt", "decrypt a file (same operation as encrypt)")

    p = sub.add_parser("keystream", help="emit keystream sequences plus a replay manifest")
    p.add_argument("--count", type=int, default=1, help="number of sequences")
    p.add_argument("--bits", type=int, required=True, help="bits per sequence")
    p.add_argument("--rounds", type=int, default=8)
    p.add_argument("--counter", type=int, default=0)
    p.add_argument("--seed", help="hex generation seed (random when omitted)")
    p.add_argument("--material", help="session material file (else derived from seed)")
    p.add_argument("--quantum", action="store_true",
                   help="mark supplied material as quantum-sourced")
    p.add_argument("--debug-keys", action="store_true",
                   help="record per-sequence keys in the manifest (debug only)")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_keystream)

    p = sub.add_parser("qrn", help="entropy pool management")
    qsub = p.add_subparsers(dest="qrn_command", required=True)
    f = qsub.add_parser("fetch", help="fetch bytes from a QRNG endpoint into a new pool")
    f.add_argument("--endpoint", help=f"URL; default from ${qrn.ENDPOINT_ENV}")
    f.add_argument("--mode", choices=("raw", "hex"), help=f"decode mode; default from ${qrn.MODE_ENV}")
    f.add_argument("--bytes", dest="nbytes", type=int, required=True)
    f.add_argument("--timeout", type=float, default=10.0)
    f.add_argument("--out", required=True)
    f.set_defaults(func=cmd_qrn_fetch)
    i = qsub.add_parser("init", help="create a local (non-quantum) test pool")
    i.add_argument("--bytes", dest="nbytes", type=int, required=True)
    i.add_argument("--seed", help="hex seed for a reproducible pool; default OS entropy")
    i.add_argument("--out", required=True)
    i.set_defaults(func=cmd_qrn_init)
    s = qsub.add_parser("status", help="show pool fill and cursor")
    s.add_argument("--pool", required=True)
    s.set_defaults(func=cmd_qrn_status)

    p = sub.add_parser("material", help="session material management")
    msub = p.add_subparsers(dest="material_command", required=True)
    d = msub.add_parser("derive", help="derive session material from a pool or seed")
    src = d.add_mutually_exclusive_group(required=True)
    src.add_argument("--pool", help="entropy pool file")
    src.add_argument("--seed", help="hex seed (deterministic, non-quantum)")
    d.add_argument("--non-quantum", action="store_true",
                   help="flag the pool contents as non-quantum")
    d.add_argument("--rounds", type=int, required=True)
    d.add_argument("--out", required=True)
    d.set_defaults(func=cmd_material_derive)

    p = sub.add_parser("test", help="run the randomness battery")
    p.add_argument("--suite", choices=("nist", "gmt", "both"), default="both")
    p.add_argument("--sequences", type=int, default=100)
    p.add_argument("--bits", type=int, default=1_000_000)
    p.add_argument("--rounds", type=int, default=8)
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--alpha-uniformity", type=float, default=1e-4)
    p.add_argument("--seed", help="hex corpus seed (random when omitted)")
    p.add_argument("--material", help="session material file (else derived from seed)")
    p.add_argument("--quantum", action="store_true",
                   help="mark supplied material/sequences as quantum-sourced")
    p.add_argument("--input-dir", help="test packed bit files instead of generating")
    p.add_argument("--glob", default="*.bits", help="pattern under --input-dir")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--report", help="write report here (.json/.csv/.txt by extension)")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("avalanche", help="measure input-bit avalanche")
    p.add_argument("--rounds", type=int, default=8)
    p.add_argument("--counter", type=int, default=0)
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--flip", default="key:0", help="segment:bit, e.g. key:17, nonce:3, counter:0")
    p.add_argument("--material", help="session material file")
    p.add_argument("--random-material", action="store_true",
                   help="derive throwaway random material")
    p.add_argument("--rng-seed", type=int, default=None)
    p.add_argument("--report", help="write JSON report here")
    p.set_defaults(func=cmd_avalanche)

    p = sub.add_parser("diffprob", help="estimate a differential probability empirically")
    p.add_argument("--rounds", type=int, required=True)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--input-diff", required=True, help="16 hex words")
    p.add_argument("--output-diff", required=True, help="16 hex words")
    p.add_argument("--mode", choices=("fixed", "resampled"), default="fixed")
    p.add_argument("--material", help="session material for fixed mode")
    p.add_argument("--rng-seed", type=int, default=None)
    p.add_argument("--report", help="write JSON report here")
    p.set_defaults(func=cmd_diffprob)

    p = sub.add_parser("bench", help="throughput benchmark")
    p.add_argument("--ciphers", default="qre-chacha:8,chacha:8,chacha:20",
                   help="comma list of cipher[:rounds]")
    p.add_argument("--sizes", default="10,20,30,40,50", help="payload sizes in MB")
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--report", help="write report here (.json/.csv/.txt by extension)")
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except QreChachaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
