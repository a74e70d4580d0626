"""Command-line front end.

Subcommands: ``verify-square``, ``bounds``, ``ideal``, ``simulate``,
``analyze`` and ``fit-fringe``. Results go to stdout (or ``--out``) as JSON
or CSV. Every artifact records the seed it was produced with.

Exit codes:
    0  success
    2  usage error (argparse)
    3  bad configuration or input state
    4  count data does not match the CSV schema or lacks a required scan
    5  a verification did not reproduce the expected values
    6  I/O failure
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from pathlib import Path

import numpy as np

from neutron_ks import dataio
from neutron_ks.algebra import StateVector, bell_state, expectation, tensor_observable
from neutron_ks.errors import (
    ConfigParse,
    KSError,
    MissingContext,
    NotNormalized,
    NotProportionalToIdentity,
    PreparationUnavailable,
    SchemaError,
)
from neutron_ks.interferometer import InstrumentConfig
from neutron_ks.measurement import (
    DEFAULT_FLUX_EXPOSURE,
    DEFAULT_PERIODS,
    DEFAULT_POINTS,
    analyze_records,
    fit_scans,
    group_scans,
    simulate_scans,
)
from neutron_ks.peres_mermin import (
    CLASSICAL_BOUNDS,
    INEQUALITIES,
    MagicSquare,
    assignment_contradiction,
    build_magic_square,
    classical_bound,
    qm_lhs,
    verify_square,
)

EXIT_OK = 0
EXIT_CONFIG = 3
EXIT_SCHEMA = 4
EXIT_MISMATCH = 5
EXIT_IO = 6


class _Mismatch(Exception):
    pass


def _csv_text(rows) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def _emit(args, payload: dict, csv_rows) -> None:
    if args.format == "json":
        text = dataio.dumps({"seed": args.seed, **payload})
    else:
        text = f"# seed={args.seed}\n" + _csv_text(csv_rows)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_verify_square(args, square: MagicSquare | None = None) -> int:
    square = build_magic_square() if square is None else square
    report = verify_square(square)
    contradiction = assignment_contradiction()
    ok = report.matches_expected and not contradiction.satisfiable
    payload = {
        "labels": [list(r) for r in square.labels],
        "row_signs": list(report.row_signs),
        "col_signs": list(report.col_signs),
        "compatible": report.compatible,
        "satisfiable": contradiction.satisfiable,
        "assignments_checked": contradiction.assignments_checked,
        "ok": ok,
    }
    rows = [("quantity", "value")]
    rows += [(f"row_sign_{i}", s) for i, s in enumerate(report.row_signs)]
    rows += [(f"col_sign_{j}", s) for j, s in enumerate(report.col_signs)]
    rows += [
        ("compatible", report.compatible),
        ("satisfiable", contradiction.satisfiable),
        ("assignments_checked", contradiction.assignments_checked),
        ("ok", ok),
    ]
    _emit(args, payload, rows)
    if not ok:
        raise _Mismatch("magic square does not reproduce the expected signs")
    return EXIT_OK


def cmd_bounds(args) -> int:
    reports = {i: classical_bound(i) for i in INEQUALITIES}
    payload = {i: r.to_dict() for i, r in reports.items()}
    rows = [("inequality_id", "classical_max", "qm_value", "assignments_checked", "n_maximizers", "first_maximizer")]
    for i, r in reports.items():
        first = ";".join(f"{k}={v:+d}" for k, v in r.maximizing_assignments[0].values.items())
        rows.append((i, r.classical_max, r.qm_value, r.assignments_checked, len(r.maximizing_assignments), first))
    _emit(args, payload, rows)
    for i, r in reports.items():
        if r.classical_max != CLASSICAL_BOUNDS[i] or not r.classical_max < r.qm_value:
            raise _Mismatch(f"{i}: classical max {r.classical_max} vs qm {r.qm_value}")
    return EXIT_OK


def parse_state(text: str) -> StateVector:
    """``"bell"`` or four comma-separated Python complex literals."""
    if text.strip().lower() == "bell":
        return bell_state()
    parts = [p.strip().replace(" ", "") for p in text.split(",")]
    if len(parts) != 4:
        raise ConfigParse(f"state needs 4 amplitudes, got {len(parts)}")
    try:
        amps = [complex(p) for p in parts]
    except ValueError:
        raise ConfigParse(f"cannot parse amplitudes {text!r}") from None
    state = StateVector(amps)
    if abs(state.norm_squared() - 1) > 1e-6:
        raise NotNormalized(f"state has norm² {state.norm_squared():.9g}")
    return state


_PREDICTIONS = (
    ("xs.xp", ("x", "x"), None),
    ("ys.yp", ("y", "y"), None),
    ("xs_yp.xs.yp", ("x", "y"), (("x", "id"), ("id", "y"))),
    ("ys_xp.ys.xp", ("y", "x"), (("y", "id"), ("id", "x"))),
    ("xs_yp.ys_xp", ("x", "y"), (("y", "x"),)),
)


def cmd_ideal(args) -> int:
    state = parse_state(args.state)
    values = {}
    for name, first, rest in _PREDICTIONS:
        op = tensor_observable(*first)
        for axes in rest or ():
            op = op @ tensor_observable(*axes)
        values[name] = expectation(op, state)
    lhs = {i: qm_lhs(i, state) for i in INEQUALITIES}
    payload = {"state": [[a.real, a.imag] for a in state.amplitudes], "expectations": values, "lhs": lhs}
    rows = [("quantity", "value")] + list(values.items()) + [(f"lhs_{i}", v) for i, v in lhs.items()]
    _emit(args, payload, rows)
    return EXIT_OK


def _load_config(args) -> InstrumentConfig:
    return InstrumentConfig.from_file(args.config) if args.config else InstrumentConfig()


def cmd_simulate(args) -> int:
    config = _load_config(args)
    state = parse_state(args.state) if args.state else None
    records = simulate_scans(
        config, args.seed, args.flux_exposure, n_points=args.points, periods=args.periods, state=state
    )
    comments = [f"seed={args.seed}", f"flux_exposure={args.flux_exposure!r}"]
    text = dataio.counts_csv_text(records, comments)
    fits = fit_scans(records)
    groups = group_scans(records)
    rows = [dataio.FRINGE_HEADER]
    for key, rs in groups.items():
        fit = fits[key]
        for r in rs:
            rows.append((r.context, repr(r.alpha), r.rotator, repr(r.chi), dataio.format_number(r.counts), repr(float(fit.curve(r.chi)))))
    fringe_text = "".join(f"# {c}\n" for c in comments) + _csv_text(rows)
    if args.out:
        out = Path(args.out)
        out.write_text(text)
        fringe_path = Path(args.fringe_out) if args.fringe_out else out.with_suffix(".fringe.csv")
        fringe_path.write_text(fringe_text)
    else:
        sys.stdout.write(text)
        if args.fringe_out:
            Path(args.fringe_out).write_text(fringe_text)
    return EXIT_OK


def _read_records(args):
    with open(args.counts_csv, newline="") as fh:
        meta = dataio.read_comments(fh)
        fh.seek(0)
        records = dataio.read_counts_csv(fh)
    if args.seed is None and "seed" in meta:
        try:
            args.seed = int(meta["seed"])
        except ValueError:
            pass
    return records


def cmd_analyze(args) -> int:
    result = analyze_records(_read_records(args))
    ineq = result.inequality
    payload = result.to_dict()
    rows = [("term", "value", "std_error")]
    rows += [(t.term_label, t.value, t.std_error) for t in ineq.terms]
    rows += [
        ("lhs", ineq.lhs, ineq.lhs_error),
        ("bound", ineq.bound, ""),
        ("violated", ineq.violated, ""),
        ("sigma_distance", ineq.sigma_distance, ""),
    ]
    _emit(args, payload, rows)
    return EXIT_OK


def cmd_fit_fringe(args) -> int:
    fits = fit_scans(_read_records(args))
    payload = {
        "fits": [
            {"context": ctx, "rotator": rot, "alpha_rad": alpha, **fit.to_dict()}
            for (ctx, rot, alpha), fit in fits.items()
        ]
    }
    rows = [("context", "rotator", "alpha_rad", "offset_A", "amplitude_B", "phase_phi", "sigma_A", "sigma_B", "sigma_phi", "chi_squared", "dof")]
    for (ctx, rot, alpha), fit in fits.items():
        sig = np.sqrt(np.diag(fit.covariance))
        rows.append((ctx, rot, alpha, fit.offset_A, fit.amplitude_B, fit.phase_phi, *sig, fit.chi_squared, fit.dof))
    _emit(args, payload, rows)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="instrument config (key = value lines)")
    common.add_argument("--seed", type=int, default=None, help="random seed (required by simulate)")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--out", metavar="PATH", help="write output here instead of stdout")
    common.add_argument("--flux-exposure", type=float, default=DEFAULT_FLUX_EXPOSURE,
                        help="expected counts at a joint-fringe mean per setting")

    parser = argparse.ArgumentParser(prog="neutron-ks", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify-square", parents=[common], help="check the magic square and its contradiction")
    p.set_defaults(func=cmd_verify_square)

    p = sub.add_parser("bounds", parents=[common], help="noncontextual bounds by enumeration")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("ideal", parents=[common], help="exact expectations for a pure state")
    p.add_argument("state", help="'bell' or four complex amplitudes, e.g. 1,0,0,0")
    p.set_defaults(func=cmd_ideal)

    p = sub.add_parser("simulate", parents=[common], help="simulate Poisson counts for all scans")
    p.add_argument("--points", type=int, default=DEFAULT_POINTS, help="chi points per scan")
    p.add_argument("--periods", type=int, default=DEFAULT_PERIODS, help="fringe periods per scan")
    p.add_argument("--fringe-out", metavar="PATH", help="fringe CSV (chi, counts, fitted_value)")
    p.add_argument("--state", help="replace the prepared state by a pure state (exact projections)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", parents=[common], help="fit scans and test the reduced inequality")
    p.add_argument("counts_csv")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("fit-fringe", parents=[common], help="fit every scan in a count CSV")
    p.add_argument("counts_csv")
    p.set_defaults(func=cmd_fit_fringe)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "simulate" and args.seed is None:
        parser.error("simulate requires --seed")
    if args.flux_exposure <= 0 or not math.isfinite(args.flux_exposure):
        parser.error("--flux-exposure must be positive")
    try:
        return args.func(args)
    except (_Mismatch, NotProportionalToIdentity) as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    except (ConfigParse, NotNormalized, PreparationUnavailable) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SchemaError, MissingContext) as exc:
        print(f"bad count data: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except KSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
