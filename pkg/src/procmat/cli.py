"""Command-line front end.

Subcommands: ``validate``, ``twirl``, ``invariance``, ``sector``, ``frame``,
``demo``. Reports go to stdout, diagnostics to stderr. Exit codes: 0 when the
command's check passes (or the command only produces output), 2 when a check
fails (invalid process, non-invariant operator, Born deviation above
tolerance), 1 on I/O, parse or usage errors. The environment variable
``PROCMAT_TOL`` overrides the default tolerance of 1e-9.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import fixtures as fx
from .frame import born_preservation_check, framed_layout
from .linalg import PartyLayout, hs_coefficients
from .process import (
    DEFAULT_TOL,
    Instrument,
    ProcessMatrix,
    allowed_term_mask,
    identity_instrument,
    random_instrument,
    validate_process,
    z_measure_instrument,
)
from .procfile import ProcessFile, ProcessFileError, read_process, write_file
from .symmetry import (
    apply_lab_permutation,
    charge_components,
    enumerate_sn,
    sector_feasibility,
    sector_projector,
    twirl,
)

FIXTURE_ORDER = ("identity", "branciard", "channel", "channel_mix")


def _env_tol() -> float:
    raw = os.environ.get("PROCMAT_TOL")
    if raw is None:
        return DEFAULT_TOL
    try:
        tol = float(raw)
    except ValueError:
        raise ProcessFileError(f"PROCMAT_TOL={raw!r} is not a number")
    if tol <= 0:
        raise ProcessFileError(f"PROCMAT_TOL={raw!r} must be positive")
    return tol


def _describe_layout(layout: PartyLayout) -> str:
    frame = "no frame"
    if layout.frame is not None:
        frame = f"frame d_in={layout.frame.d_in} d_out={layout.frame.d_out}"
    return f"{layout.n_parties} labs, d_in={layout.d_in}, d_out={layout.d_out}, {frame}"


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_validate(args) -> int:
    tol = args.tol if args.tol is not None else _env_tol()
    w = read_process(args.path)
    report = validate_process(w, tol)
    print(f"file: {args.path}")
    print(f"layout: {_describe_layout(w.layout)}")
    print(f"hermitian: {'yes' if report.hermitian else 'no'}")
    print(f"min eigenvalue: {report.min_eig:.17g}")
    print(
        f"trace: {report.trace:.17g} "
        f"(target {w.layout.total_output_dim}, deviation {report.trace_dev:.3e})"
    )
    print(f"forbidden coefficient norm: {report.forbidden_norm:.3e}")
    for idx, coeff in report.offending_terms:
        print(f"  forbidden term {idx}: coefficient {coeff:.6g}")
    if report.valid:
        print(f"verdict: VALID (tol {tol:g})")
        return 0
    print(f"verdict: INVALID (tol {tol:g}): {report.failure_reasons()}")
    return 2


def cmd_twirl(args) -> int:
    w = read_process(args.path)
    averaged = ProcessMatrix(twirl(w.mat, w.layout), w.layout)
    pf = ProcessFile.from_process(averaged, representation=args.representation)
    write_file(args.out, pf)
    print(f"wrote twirled process to {args.out} ({args.representation} representation)")
    return 0


def cmd_invariance(args) -> int:
    tol = args.tol if args.tol is not None else _env_tol()
    w = read_process(args.path)
    print(f"file: {args.path}")
    print(f"layout: {_describe_layout(w.layout)}")
    worst = 0.0
    for g in enumerate_sn(w.layout.n_parties):
        moved = apply_lab_permutation(w.mat, g, w.layout)
        dev = float(np.abs(moved.mat - w.mat.mat).max())
        worst = max(worst, dev)
        print(f"permutation {g.image}: deviation {dev:.3e}")
    if worst <= tol:
        print(f"verdict: INVARIANT (max deviation {worst:.3e}, tol {tol:g})")
        return 0
    print(f"verdict: NOT INVARIANT (max deviation {worst:.3e}, tol {tol:g})")
    return 2


def cmd_sector(args) -> int:
    tol = args.tol if args.tol is not None else _env_tol()
    layout = PartyLayout(args.n, args.din, args.dout)
    report = sector_feasibility(args.label, layout, tol=max(tol, 1e-10))
    print(f"label={report.label} n={args.n} d_in={args.din} d_out={args.dout}")
    print(
        f"sector_dim={report.sector_dim} "
        f"allowed_subspace_dim={report.allowed_subspace_dim} "
        f"max_trace={report.max_trace:.6e} "
        f"feasible={'true' if report.feasible else 'false'}"
    )
    return 0


def _demo_instruments(kind: str, layout: PartyLayout, seed: int) -> list[Instrument]:
    if kind == "identity":
        return [identity_instrument(layout.d_in) for _ in range(layout.n_parties)]
    if kind == "measure-z":
        if (layout.d_in, layout.d_out) != (2, 2):
            raise ValueError("measure-z instruments need qubit labs")
        return [z_measure_instrument() for _ in range(layout.n_parties)]
    if kind == "random":
        return [
            random_instrument(layout.d_in, layout.d_out, 2, seed + 17 * j)
            for j in range(layout.n_parties)
        ]
    raise ValueError(f"unknown instrument kind {kind!r}")


def cmd_frame(args) -> int:
    tol = args.tol if args.tol is not None else _env_tol()
    w = read_process(args.path)
    if w.layout.frame is not None:
        raise ValueError("input process already carries frame factors")
    framed = framed_layout(w.layout)
    print(f"file: {args.path}")
    print(f"layout: {_describe_layout(w.layout)}")
    print(f"framed: {_describe_layout(framed)}")
    worst = 0.0
    for rep in range(args.repeats):
        instruments = _demo_instruments(args.demo_instruments, w.layout, args.seed + rep)
        dev = born_preservation_check(w, instruments, framed)
        print(
            f"instrument set {rep} ({args.demo_instruments}): "
            f"born deviation {dev:.3e}"
        )
        worst = max(worst, dev)
    if worst <= tol:
        print(f"verdict: BORN RULE PRESERVED (max deviation {worst:.3e}, tol {tol:g})")
        return 0
    print(f"verdict: DEVIATION ABOVE TOLERANCE ({worst:.3e} > {tol:g})")
    return 2


def cmd_demo(args) -> int:
    tol = args.tol if args.tol is not None else _env_tol()
    outdir = args.outdir
    os.makedirs(outdir, exist_ok=True)
    named = fx.standard_fixtures()
    for name in FIXTURE_ORDER:
        path = os.path.join(outdir, f"{name}.json")
        write_file(path, ProcessFile.from_process(named[name]))
        print(f"wrote {path}")

    lines: list[str] = []
    emit = lines.append
    emit("procmat regression report")
    emit("=========================")
    emit("")
    emit("sector analysis (qubit labs)")
    for n in (2, 3):
        layout = PartyLayout(n, 2, 2)
        for label in ("symmetric", "antisymmetric"):
            rep = sector_feasibility(label, layout)
            emit(
                f"  n={n} {label:<14} rank={rep.sector_dim:<3} "
                f"allowed_dim={rep.allowed_subspace_dim:<4} "
                f"max_trace={rep.max_trace:.3e} feasible={'yes' if rep.feasible else 'no'}"
            )
    emit("")
    emit(f"fixture validation (tol {tol:g})")
    for name in FIXTURE_ORDER:
        report = validate_process(named[name], tol)
        verdict = "VALID" if report.valid else f"INVALID ({report.failure_reasons()})"
        emit(
            f"  {name:<12} min_eig={report.min_eig:+.3e} "
            f"trace={report.trace:.6g} forbidden={report.forbidden_norm:.2e} {verdict}"
        )
    emit(
        "  note: the branciard coefficients are published as 4-decimal roundings"
        " of a boundary point; validate with --tol 2e-5"
    )
    emit("")
    split = charge_components(named["branciard"])
    mask = allowed_term_mask(named["branciard"].layout)

    def forb_norm(mat):
        return float(np.sqrt((hs_coefficients(mat)[~mask] ** 2).sum()))

    emit("charge split of the branciard fixture")
    emit(f"  cross-sector norm {split.cross_norm:.3e}")
    emit(
        f"  component forbidden norms: plus {forb_norm(split.plus):.4f}, "
        f"minus {forb_norm(split.minus):.4f} (the sum carries none)"
    )
    emit("")
    emit("born-rule preservation with a material frame (2 random instrument sets)")
    for name in FIXTURE_ORDER:
        framed = framed_layout(named[name].layout)
        dev = 0.0
        for rep in range(2):
            instruments = _demo_instruments("random", named[name].layout, 101 + rep)
            dev = max(dev, born_preservation_check(named[name], instruments, framed))
        emit(f"  {name:<12} max deviation {dev:.3e}")
    emit("")
    for n in (2,):
        layout = PartyLayout(n, 2, 2)
        ranks = [
            sector_projector(label, layout).rank
            for label in ("symmetric", "antisymmetric")
        ]
        emit(f"sector ranks at n={n}: symmetric {ranks[0]}, antisymmetric {ranks[1]}")

    text = "\n".join(lines) + "\n"
    report_path = os.path.join(outdir, "report.txt")
    with open(report_path, "w", encoding="utf-8") as fh:
        fh.write(text)
    print(f"wrote {report_path}")
    print()
    print(text, end="")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="procmat",
        description="Validate and analyze process matrices with permutation symmetry.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check process validity constraints")
    p.add_argument("path")
    p.add_argument("--tol", type=float, default=None)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("twirl", help="write the permutation average of a process")
    p.add_argument("path")
    p.add_argument("--out", required=True)
    p.add_argument("--representation", choices=("hs", "dense"), default="hs")
    p.set_defaults(func=cmd_twirl)

    p = sub.add_parser("invariance", help="per-permutation deviation table")
    p.add_argument("path")
    p.add_argument("--tol", type=float, default=None)
    p.set_defaults(func=cmd_invariance)

    p = sub.add_parser("sector", help="sector feasibility scan")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--din", type=int, default=2)
    p.add_argument("--dout", type=int, default=2)
    p.add_argument(
        "--label", choices=("symmetric", "antisymmetric", "full"), required=True
    )
    p.add_argument("--tol", type=float, default=None)
    p.set_defaults(func=cmd_sector)

    p = sub.add_parser("frame", help="frame encoding and Born-rule preservation")
    p.add_argument("path")
    p.add_argument(
        "--demo-instruments",
        choices=("identity", "measure-z", "random"),
        default="random",
    )
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=None)
    p.set_defaults(func=cmd_frame)

    p = sub.add_parser("demo", help="regenerate bundled fixtures and the report table")
    p.add_argument("--outdir", default="procmat-fixtures")
    p.add_argument("--tol", type=float, default=None)
    p.set_defaults(func=cmd_demo)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ProcessFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
