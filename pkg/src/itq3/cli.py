"""Command-line front end: gen, quantize, dequantize, eval, ablate, selfcheck.

Raw weight files are flat IEEE 754 binary32, little-endian, row-major;
dimensions travel via flags.  Exit codes: 0 success, 1 validation
failure, 2 I/O or format error.  Every failure prints one line of the
form ``error[<ident>]: <message>`` on stderr.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .codec import (
    BLOCK_SIZES,
    QuantConfig,
    dequantize_tensor,
    quantize_tensor,
    read_container,
    write_container,
)
from .compute import (
    DISTRIBUTIONS,
    ablate_block_size,
    eval_container,
    eval_error,
    generate_weights,
    report_csv,
    report_json,
)
from .errors import ContainerError, CorruptionError, ItqError, SizeMismatchError
from .quantizer import ScalePolicy
from .selfcheck import run_selfcheck

POLICIES = {
    "paper": ScalePolicy(kind="constant"),
    "argmin": ScalePolicy(kind="argmin"),
    "meanabs": ScalePolicy(kind="mean-abs"),
}


class _Parser(argparse.ArgumentParser):
    """argparse with the documented exit-code contract (usage errors exit 1)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error[usage]: {message}", file=sys.stderr)
        raise SystemExit(1)


def _positive_int(text: str) -> int:
    value = int(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return value


def _bool_flag(text: str) -> bool:
    lowered = text.lower()
    if lowered not in ("true", "false"):
        raise argparse.ArgumentTypeError(f"expected true or false, got {text}")
    return lowered == "true"


def _block_list(text: str) -> tuple[int, ...]:
    try:
        sizes = tuple(int(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of block sizes, got {text!r}")
    for n in sizes:
        if n not in BLOCK_SIZES:
            raise argparse.ArgumentTypeError(f"block size {n} not in {BLOCK_SIZES}")
    return sizes


def _write_raw(path: str, w: np.ndarray) -> None:
    with open(path, "wb") as f:
        f.write(np.asarray(w, dtype="<f4").tobytes())


def _read_raw(path: str, rows: int, cols: int) -> np.ndarray:
    with open(path, "rb") as f:
        data = f.read()
    expected = 4 * rows * cols
    if len(data) != expected:
        raise SizeMismatchError(f"{path}: expected {expected} bytes for {rows}x{cols} binary32, got {len(data)}")
    return np.frombuffer(data, dtype="<f4").astype(np.float64).reshape(rows, cols)


def _emit_report(report, args) -> None:
    text = report_json(report) if args.format == "json" else report_csv(report)
    if args.report:
        with open(args.report, "w") as f:
            f.write(text if text.endswith("\n") else text + "\n")
        print(f"wrote {args.format} report to {args.report}")
    else:
        print(text)


def _quant_config(args) -> QuantConfig:
    return QuantConfig(
        block_n=args.block,
        variant=args.variant,
        policy=POLICIES[args.policy],
        symmetric=args.symmetric,
    )


def _cmd_gen(args) -> int:
    w = generate_weights(
        args.dist,
        args.rows,
        args.cols,
        args.seed,
        nu=args.nu,
        outlier_frac=args.outlier_frac,
        outlier_mult=args.outlier_mult,
    )
    _write_raw(args.out, w)
    print(f"wrote {args.rows}x{args.cols} {args.dist} weights to {args.out}")
    return 0


def _cmd_quantize(args) -> int:
    w = _read_raw(args.infile, args.rows, args.cols)
    q = quantize_tensor(w, _quant_config(args))
    nbytes = write_container(q, args.out)
    print(f"wrote {q.n_blocks} blocks, {nbytes} bytes ({q.bits_per_weight:.3f} bits/weight) to {args.out}")
    return 0


def _cmd_dequantize(args) -> int:
    q = read_container(args.infile)
    _write_raw(args.out, dequantize_tensor(q))
    print(f"wrote {q.rows}x{q.cols} binary32 values to {args.out}")
    return 0


def _cmd_eval(args) -> int:
    w = _read_raw(args.ref, args.rows, args.cols)
    if args.quant:
        report = eval_container(w, read_container(args.quant), policy=POLICIES[args.policy])
    else:
        report = eval_error(w, _quant_config(args))
    _emit_report(report, args)
    return 0


def _cmd_ablate(args) -> int:
    rows = ablate_block_size(
        sweep=args.blocks,
        dist=args.dist,
        rows=args.rows,
        cols=args.cols,
        base_seed=args.seed,
        replicates=args.replicates,
        cfg=QuantConfig(policy=POLICIES[args.policy], variant=args.variant),
        nu=args.nu,
        outlier_frac=args.outlier_frac,
        outlier_mult=args.outlier_mult,
    )
    _emit_report(rows, args)
    return 0


def _cmd_selfcheck(args) -> int:
    results = run_selfcheck()
    for r in results:
        mark = "✓" if r.passed else "✗"
        print(f"[{mark}] {r.name}: {r.detail}")
    n_pass = sum(r.passed for r in results)
    print(f"{n_pass}/{len(results)} properties passed")
    if n_pass == len(results):
        return 0
    bad = ", ".join(r.name for r in results if not r.passed)
    print(f"error[selfcheck-failed]: {bad}", file=sys.stderr)
    return 1


def _add_dims(p, required=True):
    p.add_argument("--rows", type=_positive_int, required=required, help="matrix rows")
    p.add_argument("--cols", type=_positive_int, required=required, help="matrix columns")


def _add_gen_flags(p):
    p.add_argument("--dist", choices=DISTRIBUTIONS, default="gaussian", help="weight distribution")
    p.add_argument("--seed", type=int, default=0, help="generator seed")
    p.add_argument("--nu", type=float, default=3.0, help="student-t degrees of freedom")
    p.add_argument("--outlier-frac", type=float, default=0.01, help="fraction of outlier weights")
    p.add_argument("--outlier-mult", type=float, default=20.0, help="outlier magnitude multiplier")


def _add_quant_flags(p):
    p.add_argument("--block", type=int, choices=BLOCK_SIZES, default=256, help="block length")
    p.add_argument("--variant", choices=("s", "ss"), default="s", help="scale layout variant")
    p.add_argument("--policy", choices=sorted(POLICIES), default="paper", help="scale selection policy")
    p.add_argument("--symmetric", type=_bool_flag, default=True, metavar="true|false",
                   help="force zero-point 0")


def _add_report_flags(p):
    p.add_argument("--report", help="output path (default: print to stdout)")
    p.add_argument("--format", choices=("json", "csv"), default="json", help="report format")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="itq3", description="Rotation-domain 3-bit ternary weight codec")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("gen", help="generate a raw binary32 weight file")
    _add_dims(p)
    _add_gen_flags(p)
    p.add_argument("--out", required=True, help="output raw weight file")
    p.set_defaults(fn=_cmd_gen)

    p = sub.add_parser("quantize", help="quantize raw weights into a container")
    p.add_argument("--in", dest="infile", required=True, help="input raw weight file")
    _add_dims(p)
    _add_quant_flags(p)
    p.add_argument("--out", required=True, help="output container file")
    p.set_defaults(fn=_cmd_quantize)

    p = sub.add_parser("dequantize", help="reconstruct raw weights from a container")
    p.add_argument("--in", dest="infile", required=True, help="input container file")
    p.add_argument("--out", required=True, help="output raw weight file")
    p.set_defaults(fn=_cmd_dequantize)

    p = sub.add_parser("eval", help="measure reconstruction error")
    p.add_argument("--ref", required=True, help="reference raw weight file")
    _add_dims(p)
    p.add_argument("--quant", help="existing container to evaluate (default: quantize on the fly)")
    _add_quant_flags(p)
    _add_report_flags(p)
    p.set_defaults(fn=_cmd_eval)

    p = sub.add_parser("ablate", help="sweep block sizes on synthetic data")
    p.add_argument("--blocks", type=_block_list, default=(32, 64, 128, 256), metavar="N,N,...",
                   help="comma-separated block sizes")
    _add_gen_flags(p)
    p.set_defaults(dist="outlier")
    p.add_argument("--rows", type=_positive_int, default=32, help="tensor rows")
    p.add_argument("--cols", type=_positive_int, default=512, help="tensor columns")
    p.add_argument("--replicates", type=_positive_int, default=9, help="tensors per block size")
    p.add_argument("--variant", choices=("s", "ss"), default="s", help="scale layout variant")
    p.add_argument("--policy", choices=sorted(POLICIES), default="paper", help="scale selection policy")
    _add_report_flags(p)
    p.set_defaults(fn=_cmd_ablate)

    p = sub.add_parser("selfcheck", help="run the embedded invariant suite")
    p.set_defaults(fn=_cmd_selfcheck)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ContainerError, CorruptionError) as e:
        print(f"error[{e.ident}]: {e}", file=sys.stderr)
        return 2
    except ItqError as e:
        print(f"error[{e.ident}]: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error[io-error]: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
