"""Command-line interface: construct, encode, decode, simulate and analyze codes."""

from __future__ import annotations

import argparse
import re
import sys
from pathlib import Path

import numpy as np

from .adjacent import DEFAULT_MU
from .bec import bec_layers, construct_bec, gamma_metric, scaling_exponent, unpolarized_fraction
from .channels import parse_channel
from .construction import CodeSpec, abs_construct, information_set, standard_construct
from .crc import crc_select
from .decoder import PoolOverflow, scl_decode
from .encoder import bits_to_hex, encode, hex_to_bits
from .sim import SimConfig, run_fer

EXIT_USAGE = 2
EXIT_INVARIANT = 3


def _read_spec(path: str) -> CodeSpec:
    return CodeSpec.from_text(Path(path).read_text())


def cmd_construct(args) -> None:
    kind = args.channel.partition(":")[0].strip().lower()
    if kind == "bec":
        eps = float(args.channel.partition(":")[2])
        built = construct_bec(args.n, eps, args.family)
        spec = CodeSpec(args.n, args.k, built.perms,
                        information_set(1.0 - built.erasure_probs, args.k))
    else:
        rate = args.rate if args.rate is not None else args.k / args.n
        channel = parse_channel(args.channel, rate=rate, levels=args.levels)
        build = abs_construct if args.family == "abs" else standard_construct
        spec = build(args.n, args.k, channel, args.mu)
    text = spec.to_text()
    if args.out:
        Path(args.out).write_text(text)
    sys.stdout.write(text)


def cmd_encode(args) -> None:
    spec = _read_spec(args.spec)
    msg = hex_to_bits(args.msg, spec.k)
    print(bits_to_hex(encode(spec, msg)))


def _parse_llr_line(line: str, n: int) -> np.ndarray:
    values = np.array([float(v) for v in re.split(r"[,\s]+", line.strip()) if v])
    if values.size != n:
        raise ValueError(f"expected {n} LLRs per line, got {values.size}")
    return values


def cmd_decode(args) -> None:
    spec = _read_spec(args.spec)
    for line in Path(args.rx).read_text().splitlines():
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        result = scl_decode(spec, _parse_llr_line(line, spec.n), args.list)
        payload, passed = crc_select(result.candidates, args.crc)
        print(f"{bits_to_hex(payload)} {'PASS' if passed else 'FAIL'}")


def cmd_simulate(args) -> None:
    cfg = SimConfig(_read_spec(args.spec), args.channel, args.list, args.crc, args.trials,
                    args.target_errors or None, args.seed, args.workers, args.decoder)
    text = run_fer(cfg).to_csv()
    if args.out:
        Path(args.out).write_text(text)
    sys.stdout.write(text)


def cmd_bec_analyze(args) -> None:
    if not 1 <= args.min_log_n <= args.max_log_n:
        raise ValueError("need 1 <= --min-log-n <= --max-log-n")
    families = ("standard", "abs") if args.family == "both" else (args.family,)
    print("family,n,fraction,gamma")
    fits = []
    for family in families:
        fractions = {}
        for n, _, erasures in bec_layers(args.eps, 1 << args.max_log_n, family):
            if n < 1 << args.min_log_n:
                continue
            fractions[n] = unpolarized_fraction(erasures)
            print(f"{family},{n},{fractions[n]:.10f},{gamma_metric(erasures):.10f}")
        positive = {n: f for n, f in fractions.items() if f > 0}
        if len(positive) >= 3:
            fits.append((family, *scaling_exponent(positive)))
    for family, mu, c in fits:
        print(f"# regression family={family} mu={mu:.4f} c={c:.4f}")


def cmd_spec_show(args) -> None:
    spec = _read_spec(args.spec)
    print(f"n={spec.n} k={spec.k} rate={spec.k / spec.n:.4f} "
          f"family={'standard' if spec.perms.is_standard else 'abs'}")
    for n0, swaps in spec.perms.swap_sets.items():
        print(f"swaps at layer {n0}: {' '.join(map(str, swaps))}")
    print(f"information set: {' '.join(map(str, spec.info_set))}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="abs-polar", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("construct", help="build a code and print its spec file")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--channel", required=True, help="bec:<eps>, bsc:<p> or awgn:<EbN0 dB>")
    p.add_argument("--family", choices=("abs", "standard"), default="abs")
    p.add_argument("--mu", type=int, default=DEFAULT_MU, help="output alphabet bound")
    p.add_argument("--levels", type=int, default=64, help="AWGN quantization levels")
    p.add_argument("--rate", type=float, help="AWGN code rate (default k/n)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("encode", help="encode a hex message")
    p.add_argument("--spec", required=True)
    p.add_argument("--msg", required=True, help="k bits as hex, MSB first")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="decode LLR vectors, one per line")
    p.add_argument("--spec", required=True)
    p.add_argument("--list", type=int, default=8)
    p.add_argument("--crc", type=int, default=0)
    p.add_argument("--rx", required=True)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("simulate", help="estimate the frame error rate")
    p.add_argument("--spec", required=True)
    p.add_argument("--channel", required=True, help="awgn:<dB>, bec:<eps>, bsc:<p> or noiseless")
    p.add_argument("--list", type=int, default=8)
    p.add_argument("--crc", type=int, default=0)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--target-errors", type=int, default=100, help="0 disables early stopping")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--decoder", choices=("auto", "standard", "db", "abs"), default="auto")
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bec-analyze", help="unpolarized fractions over a BEC")
    p.add_argument("--eps", type=float, default=0.5)
    p.add_argument("--min-log-n", type=int, default=6)
    p.add_argument("--max-log-n", type=int, default=20)
    p.add_argument("--family", choices=("abs", "standard", "both"), default="both")
    p.set_defaults(func=cmd_bec_analyze)

    p = sub.add_parser("spec-show", help="summarize a spec file")
    p.add_argument("--spec", required=True)
    p.set_defaults(func=cmd_spec_show)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except PoolOverflow as exc:
        print(f"error: internal invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return 0


if __name__ == "__main__":
    sys.exit(main())
