"""Command-line entry point: ``ngon-billiards <subcommand> ...``.

Exit codes: 0 success, 1 operational or usage error, 2 a verification check
failed.  Data goes to ``--out`` (or stdout); progress goes to stderr.  Every
output embeds the run configuration, including the argument vector, so a run
can be repeated from its own output.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
import time

from . import __version__
from .constants import (
    CSV_COLUMNS,
    DEFAULT_DIGITS,
    c_comb_closed,
    c_comb_pipeline,
    constants_report,
    fundamental_identity,
    native_filling_holonomies,
    omega_area_closed,
    omega_polygon,
    trig_sums,
)
from .counting import (
    calibrate_conventions,
    complexity_series,
    diagonal_series,
    sc_count_series,
)
from .errors import NgonBilliardsError
from .geometry import PRECISION_ENV_VAR, PrecisionConfig
from .polygons import NGonParams, load_polygon, polygon_alias, surface_alias
from .unfolding import (
    DEFAULT_NODE_BUDGET,
    DIAGONAL_FIELDS,
    ITEM_SCHEMA_VERSION,
    SADDLE_FIELDS,
    DiagonalConventions,
    diagonal_record,
    enumerate_diagonals,
    enumerate_saddle_connections,
    saddle_record,
)

log = logging.getLogger("ngon_billiards")

EXIT_OK, EXIT_ERROR, EXIT_VERIFY = 0, 1, 2
IDENTITY_TOLERANCE = 1e-9


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems are operational errors, not verification failures
        raise UsageError(message)


def _range(text: str) -> tuple[int, int]:
    try:
        lo, hi = text.split("..")
        return int(lo), int(hi)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected A..B, got {text!r}") from exc


def _bool(text: str) -> bool:
    if text.lower() in ("1", "true", "yes", "on"):
        return True
    if text.lower() in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--workers", type=int, default=1, help="worker processes for enumeration")
    common.add_argument("--seed", type=int, default=0, help="master RNG seed")
    common.add_argument("--digits", type=int, default=None, help=f"working decimal digits (env {PRECISION_ENV_VAR})")
    common.add_argument("--epsilon", type=float, default=1e-9, help="relative incidence tolerance")
    common.add_argument("--node-budget", type=int, default=DEFAULT_NODE_BUDGET)
    common.add_argument("--out", default="-", help="output path, '-' for stdout")

    parser = _Parser(prog="ngon-billiards", description="Billiard complexity constants for regular polygons.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("constants", parents=[common], help="closed-form and pipeline constants")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--n", type=int)
    group.add_argument("--n-range", type=_range)
    fmt = p.add_mutually_exclusive_group()
    fmt.add_argument("--json", action="store_true")
    fmt.add_argument("--csv", action="store_true")

    p = sub.add_parser("identities", parents=[common], help="check the trigonometric identities")
    p.add_argument("--m-max", type=int, required=True)
    p.add_argument("--k-max", type=int, default=200)

    for name, helptext in (("diagonals", "stream generalized diagonals"), ("complexity", "billiard language complexity")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("--polygon", help="square, triangle or ngon:N")
        src.add_argument("--polygon-file", help="polygon JSON file")
        p.add_argument("--oriented", type=_bool, default=True)
        p.add_argument("--include-boundary", type=_bool, default=True)
        p.add_argument("--count-links", type=_bool, default=True)
        if name == "diagonals":
            p.add_argument("--max-bounces", type=int, required=True)
            p.add_argument("--format", choices=("csv", "jsonl", "series"), default="csv")
        else:
            p.add_argument("--t", type=int, required=True)
            p.add_argument("--series", action="store_true", help="emit ρ(1..t) as CSV")

    p = sub.add_parser("saddles", parents=[common], help="stream saddle connections of a surface")
    p.add_argument("--surface", required=True, help="ngon:N")
    p.add_argument("--lmax", type=float, required=True, help="area-one geometric length bound")
    p.add_argument("--oriented", type=_bool, default=False)
    p.add_argument("--format", choices=("csv", "jsonl"), default="csv")

    p = sub.add_parser("converge", parents=[common], help="saddle-connection convergence series")
    p.add_argument("--surface", required=True, help="ngon:N")
    p.add_argument("--length", choices=("comb", "geom", "reg"), default="comb")
    p.add_argument("--lmax", type=float, required=True)
    p.add_argument("--lmin", type=float, default=None)
    p.add_argument("--tolerance", type=float, default=0.15, help="allowed relative gap of the last row")

    p = sub.add_parser("omega", parents=[common], help="Ω-region of the filling system of S_N")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("calibrate", parents=[common], help="recover the diagonal counting conventions")
    p.add_argument("--polygon", action="append", default=None, help="repeatable; default square and triangle")
    p.add_argument("--t-max", type=int, default=6)
    return parser


# ---------------------------------------------------------------------------


def _precision(args) -> PrecisionConfig:
    overrides = {"epsilon_incidence": args.epsilon}
    if args.digits is not None:
        overrides["working_digits"] = args.digits
    return PrecisionConfig.from_env(**overrides)


def _run_config(args, argv) -> dict:
    config = {k: v for k, v in vars(args).items() if k != "out"}
    for key, value in list(config.items()):
        if isinstance(value, tuple):
            config[key] = list(value)
    config["precision"] = _precision(args).to_dict()
    config["argv"] = [a for a in argv]
    config["version"] = __version__
    return config


def _write(args, text: str) -> None:
    if args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _csv_text(header, rows, config) -> str:
    buf = io.StringIO()
    buf.write(f"# config: {json.dumps(config, sort_keys=True)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _json_text(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _polygon(args):
    if getattr(args, "polygon_file", None):
        return load_polygon(args.polygon_file)
    return polygon_alias(args.polygon)


def _conventions(args) -> DiagonalConventions:
    return DiagonalConventions(args.oriented, args.include_boundary, args.count_links)


# ---------------------------------------------------------------------------


def cmd_constants(args, config) -> int:
    if args.n is not None:
        Ns = [args.n]
    else:
        lo, hi = args.n_range
        if lo > hi:
            raise UsageError("empty N range")
        Ns = list(range(lo, hi + 1))
    for N in Ns:
        if N < 3:
            raise UsageError(f"N must be >= 3, got {N}")
    digits = args.digits or DEFAULT_DIGITS
    reports = []
    for N in Ns:
        log.info("constants for N=%d", N)
        reports.append(constants_report(N, digits))
    failures = [r for r in reports if not r.dual_route_ok]
    if args.csv:
        rows = [[getattr(r, c) if getattr(r, c) is not None else "" for c in CSV_COLUMNS] for r in reports]
        _write(args, _csv_text(CSV_COLUMNS, rows, config))
    else:
        payload = {"config": config, "reports": [r.to_dict() for r in reports]}
        _write(args, _json_text(payload))
    if failures:
        sys.stderr.write("dual-route check failed:\n")
        sys.stderr.write(f"{'N':>6} {'closed':>22} {'pipeline':>22} {'rel gap':>10}\n")
        for r in failures:
            sys.stderr.write(f"{r.N:>6} {r.c_N_closed:>22.15g} {r.c_N_pipeline:>22.15g} {r.relative_gap:>10.3g}\n")
        return EXIT_VERIFY
    return EXIT_OK


def cmd_identities(args, config) -> int:
    if args.m_max < 2:
        raise UsageError("--m-max must be >= 2")
    if args.k_max < 1:
        raise UsageError("--k-max must be >= 1")
    digits = max(args.digits or 30, 30)
    worst_fi = 0.0
    for m in range(2, args.m_max + 1):
        lhs, rhs = fundamental_identity(m, digits)
        worst_fi = max(worst_fi, float(abs(lhs - rhs) / rhs))
    rows = [["fundamental_identity", f"m=2..{args.m_max}", f"{worst_fi:.3e}", worst_fi < IDENTITY_TOLERANCE]]
    worst = {}
    slip_rejected = True
    for k in range(1, args.k_max + 1):
        record = trig_sums(k, digits=digits)
        for name, err in record.errors.items():
            worst[name] = max(worst.get(name, 0.0), err)
        slip_rejected &= record.slip_rejected
    for name, err in worst.items():
        rows.append([name, f"k=1..{args.k_max}", f"{err:.3e}", err < IDENTITY_TOLERANCE])
    rows.append(["sigma_pi2_starstar_minus3_variant_rejected", f"k=1..{args.k_max}", "", slip_rejected])
    _write(args, _csv_text(["identity", "range", "max_relative_error", "pass"], rows, config))
    return EXIT_OK if all(r[3] for r in rows) else EXIT_VERIFY


def cmd_diagonals(args, config) -> int:
    P = _polygon(args)
    conv = _conventions(args)
    prec = _precision(args)
    if args.max_bounces < 0:
        raise UsageError("--max-bounces must be >= 0")
    if args.format == "series":
        series = diagonal_series(P, args.max_bounces, conv, prec, args.workers, args.node_budget)
        series.metadata["run"] = config
        _write(args, series.to_csv())
        return EXIT_OK
    items = enumerate_diagonals(P, args.max_bounces, conv, prec, args.workers, args.node_budget)
    log.info("%d generalized diagonals", len(items))
    records = [diagonal_record(d) for d in items]
    _write(args, _items_text(records, DIAGONAL_FIELDS, args.format, config))
    return EXIT_OK


def _items_text(records, fields, fmt, config) -> str:
    if fmt == "jsonl":
        lines = [json.dumps({"schema": ITEM_SCHEMA_VERSION, "config": config}, sort_keys=True)]
        lines += [json.dumps(r, sort_keys=True) for r in records]
        return "\n".join(lines) + "\n"
    buf = io.StringIO()
    buf.write(f"# schema: {ITEM_SCHEMA_VERSION}\n")
    buf.write(f"# config: {json.dumps(config, sort_keys=True)}\n")
    writer = csv.DictWriter(buf, fieldnames=list(fields), lineterminator="\n")
    writer.writeheader()
    writer.writerows(records)
    return buf.getvalue()


def cmd_complexity(args, config) -> int:
    P = _polygon(args)
    if args.t < 1:
        raise UsageError("--t must be >= 1")
    series = complexity_series(P, args.t, _conventions(args), _precision(args), args.workers, args.node_budget)
    series.metadata["run"] = config
    if args.series:
        _write(args, series.to_csv())
    else:
        _write(args, f"{series.rows[-1][1]}\n")
    return EXIT_OK


def cmd_saddles(args, config) -> int:
    S = surface_alias(args.surface)
    items = enumerate_saddle_connections(
        S, args.lmax, _precision(args), args.workers, args.node_budget, oriented=args.oriented
    )
    log.info("%d saddle connections", len(items))
    _write(args, _items_text([saddle_record(s) for s in items], SADDLE_FIELDS, args.format, config))
    return EXIT_OK


def _series_target(N: int, length: str) -> float | None:
    if N < 5:
        return None
    if length in ("comb", "reg"):
        return float(c_comb_closed(N))
    assembly = c_comb_pipeline(N)
    return assembly.native_area * assembly.c_geometric


def cmd_converge(args, config) -> int:
    S = surface_alias(args.surface)
    N = int(args.surface.split(":", 1)[1])
    kind = {"comb": "combinatorial", "geom": "geometric", "reg": "regularized"}[args.length]
    series = sc_count_series(S, args.lmax, kind, args.lmin, _precision(args), args.workers, args.node_budget)
    target = _series_target(N, args.length)
    series.metadata["run"] = config
    series.metadata["target"] = target
    _write(args, series.to_csv())
    if target is None or not series.rows:
        return EXIT_OK
    last = series.rows[-1][2]
    gap = abs(last - target) / target
    log.info("last normalized %.6g, target %.6g, relative gap %.3g", last, target, gap)
    return EXIT_OK if gap <= args.tolerance else EXIT_VERIFY


def cmd_omega(args, config) -> int:
    if args.n < 3:
        raise UsageError("--n must be >= 3")
    omega = omega_polygon(native_filling_holonomies(args.n))
    closed = omega_area_closed(args.n)
    certificate = omega.certificate()
    ok = abs(omega.area - closed) <= 1e-9 * closed and certificate < 1e-9 and omega.is_convex()
    payload = {
        "config": config,
        "N": args.n,
        "parity_class": NGonParams.of(args.n).parity_class,
        "vertices": [list(v.as_tuple()) for v in omega.vertices],
        "tau": list(omega.tau),
        "area": omega.area,
        "area_closed": closed,
        "vertex_certificate": certificate,
        "ok": ok,
    }
    if args.json:
        _write(args, _json_text(payload))
    else:
        rows = [[repr(v.x), repr(v.y)] for v in omega.vertices]
        _write(args, _csv_text(["x", "y"], rows, config))
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_calibrate(args, config) -> int:
    names = args.polygon or ["square", "triangle"]
    polygons = [polygon_alias(n) for n in names]
    result = calibrate_conventions(polygons, args.t_max, args.seed, _precision(args))
    payload = {"config": config, **result.to_dict()}
    _write(args, _json_text(payload))
    return EXIT_OK


COMMANDS = {
    "constants": cmd_constants,
    "identities": cmd_identities,
    "diagonals": cmd_diagonals,
    "complexity": cmd_complexity,
    "saddles": cmd_saddles,
    "converge": cmd_converge,
    "omega": cmd_omega,
    "calibrate": cmd_calibrate,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    logging.basicConfig(level=logging.INFO, format="%(name)s: %(message)s", stream=sys.stderr)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        config = _run_config(args, argv)
        started = time.perf_counter()
        code = COMMANDS[args.command](args, config)
        log.info("%s finished in %.2fs", args.command, time.perf_counter() - started)
        return code
    except UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return EXIT_ERROR
    except (NgonBilliardsError, OSError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
