"""Command-line front end: ``partialmat gen | check | suite``.

Exit codes: 0 success/pass, 1 a check failed, 2 bad flags, unreadable input or
mismatched dimensions, 3 an input that is not PSD.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import catalog
from .block import BlockMat
from .errors import BadSpec, CapExceeded, DimMismatch, NotPSD
from .psd import ENSEMBLES, GenSpec, generate
from .tolerance import DEFAULT_TOL, Tolerance

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NOT_PSD = 0, 1, 2, 3
DEFAULT_DIMS = "2x2,3x2,2x3,2x4,4x2"

# check name -> number of matrix inputs
CHECK_ARITY = {
    "fischer": 1,
    "thompson": 1,
    "fiedler-markham": 1,
    "choi": 1,
    "mean-bounds": 1,
    "superadd": 2,
    "tensor-three": 3,
    "tensor-two-common": 3,
    "det-three": 3,
    "det-three-common": 3,
}


class InputError(Exception):
    """Unreadable or malformed matrix file."""


# ------------------------------------------------------------- matrix files


def matrix_to_dict(h: BlockMat) -> dict:
    flat = h.mat.ravel()
    return {"n": h.n, "k": h.k, "entries": [[float(z.real), float(z.imag)] for z in flat]}


def matrix_from_dict(doc: dict) -> BlockMat:
    try:
        n, k, entries = int(doc["n"]), int(doc["k"]), doc["entries"]
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"matrix file needs integer n, k and an entries list: {exc}") from exc
    dim = n * k
    if n < 1 or k < 1 or len(entries) != dim * dim:
        raise InputError(f"expected {dim * dim} entries for n={n}, k={k}, got {len(entries)}")
    try:
        arr = np.array(entries, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise InputError(f"entries must be [re, im] number pairs: {exc}") from exc
    if arr.shape != (dim * dim, 2):
        raise InputError("entries must be [re, im] number pairs")
    mat = (arr[:, 0] + 1j * arr[:, 1]).reshape(dim, dim)
    return BlockMat(n, k, mat)


def dump_matrix(h: BlockMat) -> str:
    return json.dumps(matrix_to_dict(h)) + "\n"


def load_matrix(path: str) -> BlockMat:
    try:
        text = sys.stdin.read() if path == "-" else Path(path).read_text()
        doc = json.loads(text)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read matrix from {path}: {exc}") from exc
    return matrix_from_dict(doc)


# ------------------------------------------------------------------ parsing


def _ensemble(text: str) -> str:
    name = text.replace("-", "_")
    if name not in ENSEMBLES:
        raise argparse.ArgumentTypeError(
            f"unknown ensemble {text!r}; choose from {', '.join(e.replace('_', '-') for e in ENSEMBLES)}"
        )
    return name


def _positive(text: str) -> int:
    try:
        val = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if val < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {val}")
    return val


def _seed(text: str) -> int:
    try:
        val = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer seed, got {text!r}") from None
    if not 0 <= val < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return val


def _dims(text: str) -> list[tuple[int, int]]:
    out = []
    for item in text.split(","):
        try:
            n, k = (int(x) for x in item.lower().split("x"))
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad dims entry {item!r}; expected NxK") from None
        if n < 1 or k < 1:
            raise argparse.ArgumentTypeError(f"dims must be positive, got {item!r}")
        out.append((n, k))
    return out


def _ensembles(text: str) -> list[str]:
    return [_ensemble(x) for x in text.split(",")]


def _env_tol() -> Tolerance:
    rel = os.environ.get("PARTIALMAT_TOL_REL")
    abs_ = os.environ.get("PARTIALMAT_TOL_ABS")
    return Tolerance(
        abs=float(abs_) if abs_ else DEFAULT_TOL.abs,
        rel=float(rel) if rel else DEFAULT_TOL.rel,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="partialmat", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a PSD block matrix file")
    gen.add_argument("--ensemble", type=_ensemble, default="ginibre")
    gen.add_argument("--n", type=_positive, required=True)
    gen.add_argument("--k", type=_positive, required=True)
    gen.add_argument("--rank", type=_positive)
    gen.add_argument("--seed", type=_seed, default=0)
    gen.add_argument("--out", help="output path (default: stdout)")

    tol_parent = argparse.ArgumentParser(add_help=False)
    tol_parent.add_argument("--tol-rel", type=float)
    tol_parent.add_argument("--tol-abs", type=float)

    chk = sub.add_parser("check", parents=[tol_parent], help="run one inequality check")
    chk.add_argument("name", choices=sorted(CHECK_ARITY))
    chk.add_argument("--in", dest="inputs", nargs="+", required=True, metavar="PATH")
    chk.add_argument("--side", type=int, choices=(1, 2))
    chk.add_argument("--realigned", action="store_true", help="fischer: use the realigned blocks")
    chk.add_argument("--which", choices=("fan-ky", "am-gm"), default="fan-ky")
    chk.add_argument("--r", type=_positive, default=2, help="tensor order")

    suite = sub.add_parser("suite", parents=[tol_parent], help="run the full check catalog")
    suite.add_argument("--trials", type=_positive, default=100)
    suite.add_argument("--seed", type=_seed, default=0)
    suite.add_argument("--dims", type=_dims, default=_dims(DEFAULT_DIMS))
    suite.add_argument("--ensembles", type=_ensembles, default=list(ENSEMBLES))
    suite.add_argument("--rank", type=_positive, help="wishart rank (default nk-1)")
    suite.add_argument("--tensor-cap", type=_positive, default=catalog.SUITE_TENSOR_CAP,
                       help="largest tensor-power dimension the suite builds")
    suite.add_argument("--format", choices=("json", "csv"), default="json")
    suite.add_argument("--records", choices=("all", "failures"),
                       help="which per-check records to write (default: failures for json, all for csv)")
    suite.add_argument("--out", help="report path (default: stdout)")
    return parser


# ----------------------------------------------------------------- commands


def _write(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_gen(args) -> int:
    spec = GenSpec(args.ensemble, args.n, args.k, args.seed, args.rank)
    try:
        h = generate(spec)
    except BadSpec as exc:
        print(f"partialmat gen: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _write(dump_matrix(h), args.out)
    return EXIT_OK


def _tol(args) -> Tolerance:
    base = _env_tol()
    return Tolerance(
        abs=args.tol_abs if args.tol_abs is not None else base.abs,
        rel=args.tol_rel if args.tol_rel is not None else base.rel,
    )


def _run_check(args, mats: list[BlockMat], tol: Tolerance) -> catalog.CheckResult:
    name = args.name
    if name == "fischer":
        return catalog.check_fischer(mats[0], args.realigned, tol)
    if name == "thompson":
        return catalog.check_thompson(mats[0], args.side or 2, tol)
    if name == "fiedler-markham":
        return catalog.check_fiedler_markham(mats[0], args.side or 2, tol)
    if name == "choi":
        return catalog.check_choi(mats[0], args.side or 1, tol)
    if name == "mean-bounds":
        return catalog.check_mean_bounds(mats[0], args.which.replace("-", "_"), tol)
    if name == "superadd":
        return catalog.check_superadd_partial_det(*mats, side=args.side or 2, tol=tol)
    if name == "tensor-three":
        return catalog.check_tensor_three(*mats, r=args.r, tol=tol)
    if name == "tensor-two-common":
        return catalog.check_tensor_two_common(*mats, r=args.r, tol=tol)
    if name == "det-three":
        return catalog.check_partial_det_three(*mats, side=args.side or 2, tol=tol)
    return catalog.check_partial_det_three_common(*mats, side=args.side or 2, tol=tol)


def cmd_check(args) -> int:
    want = CHECK_ARITY[args.name]
    if len(args.inputs) != want:
        print(f"partialmat check {args.name}: expected {want} input file(s), got {len(args.inputs)}",
              file=sys.stderr)
        return EXIT_USAGE
    try:
        mats = [load_matrix(p) for p in args.inputs]
        result = _run_check(args, mats, _tol(args))
    except (InputError, DimMismatch, CapExceeded) as exc:
        print(f"partialmat check: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NotPSD as exc:
        print(f"partialmat check: {exc}", file=sys.stderr)
        return EXIT_NOT_PSD
    record = result.to_record()
    record["label"] = result.label
    print(json.dumps(record))
    return EXIT_OK if result.passed else EXIT_FAIL


def cmd_suite(args) -> int:
    specs = [GenSpec(ens, n, k, args.seed, args.rank) for ens in args.ensembles
             for n, k in args.dims]
    for spec in specs:
        try:
            spec.validate()
        except BadSpec as exc:
            print(f"partialmat suite: {exc}", file=sys.stderr)
            return EXIT_USAGE
    report = catalog.run_suite(specs, args.trials, _tol(args), tensor_cap=args.tensor_cap,
                               metadata={"seed": args.seed})
    if args.format == "json":
        text = report.to_json(args.records or "failures")
    else:
        text = report.to_csv(args.records or "all")
    _write(text, args.out)
    log = sys.stderr if not args.out else sys.stdout
    for row in report.summary():
        status = "ok" if row["failures"] == 0 else f"FAILED {row['failures']}"
        print(f"{row['check']:<28} n={row['count']:<7} min_margin={row['min_margin']!r:<24} {status}",
              file=log)
    print(f"{len(report.records)} checks, {len(report.failures)} failures, "
          f"{report.duration:.1f}s", file=log)
    return EXIT_OK if report.passed else EXIT_FAIL


COMMANDS = {"gen": cmd_gen, "check": cmd_check, "suite": cmd_suite}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ValueError as exc:
        # bad env var tolerances and similar
        print(f"partialmat {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
