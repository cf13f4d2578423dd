"""Command-line interface.

Exit codes:
    0  success
    2  invalid arguments
    3  degenerate normalization (zero total at a requested setting)
    4  output path not writable
    5  malformed counts-file row
    6  counts file lacks a setting the analysis needs (e.g. tilde partners)
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from datetime import datetime, timezone
from typing import Optional, Sequence

from . import __version__
from .audit import (
    CountsFileRow,
    MalformedCountsError,
    MissingSettingError,
    audit,
    read_counts_rows,
    write_counts_rows,
)
from .errors import BellSimError, DegenerateNormalizationError, DegenerateSamplingError, InvalidInputError
from .estimators import (
    BellSettings,
    NormalizationScheme,
    bell_parameter,
    correlation,
    correlations_for,
    probability_table,
)
from .lhv import enumerate_strategies, lhv_bound, strategy_bell_value
from .montecarlo import (
    SamplerConfig,
    boundary_outcomes,
    sample_counts,
    standard_error,
)
from .optimize import chsh_optimize
from .quantum import OUTCOME_PAIRS
from .scenarios import ScenarioKind, analytic_rates, default_source, shifted_setting_identities

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DEGENERATE = 3
EXIT_UNWRITABLE = 4
EXIT_MALFORMED = 5
EXIT_MISSING = 6

SEED_ENV = "BELLSIM_SEED"
MANIFEST_SCHEMA = "bellsim.manifest/1"
SAMPLE_SCHEMA = "bellsim.sample/1"
CHSH_SCHEMA = "bellsim.chsh/1"
SCAN_SCHEMA = "bellsim.scan/1"
SCAN_HEADER = ("alpha", "beta", "p_pp", "p_mp", "p_pm", "p_mm", "E")

SCENARIOS = [k.value for k in ScenarioKind]
SCHEMES = [s.value for s in NormalizationScheme]


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise CliError(EXIT_USAGE, f"{self.prog}: error: {message}")


def _angle(args, value: float) -> float:
    return math.radians(value) if args.degrees else value


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _resolve_seed(args) -> int:
    if args.seed is not None:
        seed = args.seed
    else:
        env = os.environ.get(SEED_ENV)
        if env is None:
            seed = 0
        else:
            try:
                seed = int(env)
            except ValueError:
                raise CliError(EXIT_USAGE, f"{SEED_ENV}={env!r} is not an integer") from None
    if not 0 <= seed < 2**64:
        raise CliError(EXIT_USAGE, "seed must be an unsigned 64-bit integer")
    return seed


def _manifest(args, argv: Sequence[str], **extra) -> dict:
    """Reproducible part of the run manifest (no timestamp)."""
    m = {
        "schema": MANIFEST_SCHEMA,
        "tool": "bellsim",
        "version": __version__,
        "command": args.command,
        "argv": list(argv),
    }
    m.update(extra)
    return m


def _write_text(path: str, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise CliError(EXIT_UNWRITABLE, f"cannot write {path}: {exc.strerror or exc}") from None


def _write_sidecar(path: str, manifest: dict) -> None:
    full = dict(manifest, timestamp=datetime.now(timezone.utc).isoformat())
    _write_text(path + ".manifest.json", json.dumps(full, indent=2, sort_keys=True) + "\n")


# ----------------------------------------------------------------- commands


def cmd_analytic(args, argv) -> int:
    kind = ScenarioKind(args.scenario)
    alpha, beta = _angle(args, args.alpha), _angle(args, args.beta)
    table = analytic_rates(kind, alpha, beta, default_source(kind, args.n0))
    out = sys.stdout
    out.write(f"scenario: {kind.value} ({table.angle_role.value})\n")
    out.write(f"alpha = {_fmt(alpha)}  beta = {_fmt(beta)}  N0 = {_fmt(args.n0)}\n")
    out.write("outcome  rate  observable\n")
    for jk in OUTCOME_PAIRS:
        out.write(f"{jk.label:7}  {_fmt(table.rates[jk])}  {'yes' if table.observable[jk] else 'no'}\n")
    for scheme in args.scheme or ["standard"]:
        try:
            p = probability_table(kind, scheme, alpha, beta, default_source(kind, args.n0))
        except DegenerateNormalizationError as exc:
            raise CliError(EXIT_DEGENERATE, f"{scheme}: {exc}") from None
        out.write(f"[{scheme}]\n")
        for jk, v in zip(OUTCOME_PAIRS, p.as_tuple()):
            out.write(f"p_{jk.label} = {_fmt(v)}\n")
        out.write(f"E = {_fmt(correlation(p))}\n")
    return EXIT_OK


def cmd_chsh(args, argv) -> int:
    kind = ScenarioKind(args.scenario)
    scheme = NormalizationScheme(args.scheme)
    src = default_source(kind, args.n0)
    report = {"schema": CHSH_SCHEMA, "scenario": kind.value, "scheme": scheme.value}
    if args.optimize:
        try:
            res = chsh_optimize(kind, scheme, args.grid_density, args.tol, src)
        except DegenerateNormalizationError as exc:
            raise CliError(EXIT_DEGENERATE, str(exc)) from None
        settings = res.settings
        report["optimize"] = {
            "grid_density": res.grid_density,
            "tolerance": args.tol,
            "grid_bell": res.grid_bell,
            "skipped_pairs": res.skipped_pairs,
            "skipped_quads": res.skipped_quads,
            "skipped_evaluations": res.skipped_evaluations,
            "evaluations": res.evaluations,
        }
    else:
        if args.angles is None:
            raise CliError(EXIT_USAGE, "chsh needs --angles A1 A2 B1 B2 or --optimize")
        settings = BellSettings(*(_angle(args, a) for a in args.angles))
    try:
        es = correlations_for(kind, scheme, settings, src)
    except DegenerateNormalizationError as exc:
        raise CliError(EXIT_DEGENERATE, str(exc)) from None
    b = bell_parameter(*es)

    out = sys.stdout
    out.write(f"scenario: {kind.value}  scheme: {scheme.value}\n")
    if args.optimize:
        o = report["optimize"]
        out.write(
            f"optimized on a {o['grid_density']}^4 grid; skipped {o['skipped_pairs']} degenerate setting pairs, "
            f"{o['skipped_quads']} grid quads, {o['skipped_evaluations']} refinement evaluations\n"
        )
    out.write("alpha1 = {:.7f}  alpha2 = {:.7f}  beta1 = {:.7f}  beta2 = {:.7f}\n".format(*settings.as_tuple()))
    for name, e in zip(("E11", "E12", "E21", "E22"), es):
        out.write(f"{name} = {e:.6f}\n")
    out.write(f"B = {b:.6f}\n")

    if args.output:
        report.update(
            settings=dict(zip(("alpha1", "alpha2", "beta1", "beta2"), settings.as_tuple())),
            correlations=list(es),
            bell=b,
        )
        manifest = _manifest(
            args, argv, scenario=kind.value, scheme=scheme.value, n0=args.n0, settings=report["settings"]
        )
        _write_text(args.output, json.dumps(report, indent=2, sort_keys=True) + "\n")
        _write_sidecar(args.output, manifest)
    return EXIT_OK


def cmd_scan(args, argv) -> int:
    kind = ScenarioKind(args.scenario)
    scheme = NormalizationScheme(args.scheme)
    src = default_source(kind, args.n0)
    if args.steps < 0:
        raise CliError(EXIT_USAGE, "--steps must be >= 0")
    lo, hi, beta = _angle(args, args.sum_min), _angle(args, args.sum_max), _angle(args, args.beta)
    if args.steps == 1:
        sums = [lo]
    else:
        sums = [lo + (hi - lo) * k / (args.steps - 1) for k in range(args.steps)]

    rows, skipped = [], 0
    for s in sums:
        alpha = s - beta
        try:
            p = probability_table(kind, scheme, alpha, beta, src)
        except DegenerateNormalizationError:
            skipped += 1
            continue
        rows.append([alpha, beta, *p.as_tuple(), correlation(p)])
    if skipped:
        sys.stderr.write(f"skipped {skipped} degenerate grid point(s)\n")

    try:
        fh = open(args.output, "w", encoding="utf-8", newline="")
    except OSError as exc:
        raise CliError(EXIT_UNWRITABLE, f"cannot write {args.output}: {exc.strerror or exc}") from None
    with fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SCAN_HEADER)
        for row in rows:
            writer.writerow([repr(float(v)) for v in row])
    manifest = _manifest(
        args,
        argv,
        output_schema=SCAN_SCHEMA,
        scenario=kind.value,
        scheme=scheme.value,
        n0=args.n0,
        scan={"sum_min": lo, "sum_max": hi, "steps": args.steps, "beta": beta},
        skipped_degenerate=skipped,
    )
    _write_sidecar(args.output, manifest)
    sys.stdout.write(f"wrote {len(rows)} rows to {args.output}\n")
    return EXIT_OK


def _sampler_config(args, seed: int) -> SamplerConfig:
    if args.mode == "fixed-pairs":
        if args.exposure is not None:
            raise CliError(EXIT_USAGE, "--exposure applies to --mode poisson only")
        return SamplerConfig.fixed(args.pairs if args.pairs is not None else 1_000_000, seed)
    if args.pairs is not None:
        raise CliError(EXIT_USAGE, "--pairs applies to --mode fixed-pairs only")
    return SamplerConfig.poisson(args.exposure if args.exposure is not None else 1_000_000.0, seed)


def cmd_sample(args, argv) -> int:
    kind = ScenarioKind(args.scenario)
    src = default_source(kind, args.n0)
    seed = _resolve_seed(args)
    if args.seed is None:
        argv = list(argv) + ["--seed", str(seed)]
    cfg = _sampler_config(args, seed)

    if args.angles is not None:
        base_settings = list(BellSettings(*(_angle(args, a) for a in args.angles)).pairs())
    else:
        base_settings = [(_angle(args, args.alpha), _angle(args, args.beta))]

    # setting i, shift k uses seed + 4 i + k, matching acquire_quad per base setting
    acquisitions = []
    for i, (a, b) in enumerate(base_settings):
        shifts = shifted_setting_identities(a, b) if args.shifted else [(None, (a, b))]
        for k, (_, (sa, sb)) in enumerate(shifts):
            acquisitions.append((sa, sb, cfg.with_seed_offset(4 * i + k)))

    records, rows = [], []
    for a, b, sub in acquisitions:
        try:
            counts = sample_counts(analytic_rates(kind, a, b, src), sub)
        except DegenerateSamplingError as exc:
            raise CliError(EXIT_DEGENERATE, str(exc)) from None
        exposure = sub.exposure if sub.exposure is not None else 1.0
        rec = {
            "alpha": a,
            "beta": b,
            "seed": sub.seed,
            "counts": {jk.label: counts.counts[jk] for jk in OUTCOME_PAIRS if jk in counts.counts},
            "total": counts.total,
        }
        if counts.total > 0:
            rec["standard_errors"] = {jk.label: v for jk, v in standard_error(counts).items()}
            rec["boundary"] = [jk.label for jk in boundary_outcomes(counts)]
        else:
            rec["standard_errors"] = None
            rec["boundary"] = []
        records.append(rec)
        rows.extend(CountsFileRow(a, b, jk, n, exposure) for jk, n in counts.counts.items())

    manifest = _manifest(
        args,
        argv,
        scenario=kind.value,
        n0=args.n0,
        sampler=cfg.to_dict(),
        settings=[[a, b] for a, b in base_settings],
        shifted=bool(args.shifted),
        acquisition="sequential, equal exposure per setting",
        rng="numpy PCG64",
    )
    doc = {
        "schema": SAMPLE_SCHEMA,
        "scenario": kind.value,
        "angle_role": analytic_rates(kind, 0.0, 0.0, src).angle_role.value,
        "sampler": cfg.to_dict(),
        "acquisitions": records,
        "manifest": manifest,
    }
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    sys.stdout.write(text)
    if args.output:
        _write_text(args.output, text)
        _write_sidecar(args.output, manifest)
    if args.counts_csv:
        buf = io.StringIO()
        write_counts_rows(rows, buf)
        _write_text(args.counts_csv, buf.getvalue())
        _write_sidecar(args.counts_csv, manifest)
    return EXIT_OK


def cmd_audit(args, argv) -> int:
    try:
        with open(args.counts_file, encoding="utf-8", newline="") as fh:
            rows = read_counts_rows(fh)
    except OSError as exc:
        raise CliError(EXIT_USAGE, f"cannot read {args.counts_file}: {exc.strerror or exc}") from None
    except MalformedCountsError as exc:
        raise CliError(EXIT_MALFORMED, f"{args.counts_file}: {exc}") from None
    angles = None
    if args.angles is not None:
        angles = BellSettings(*(_angle(args, a) for a in args.angles))
    try:
        report = audit(rows, args.scheme, angles, args.flatness_sigma, args.angle_tol)
    except MissingSettingError as exc:
        raise CliError(EXIT_MISSING, str(exc)) from None
    except DegenerateNormalizationError as exc:
        raise CliError(EXIT_DEGENERATE, str(exc)) from None
    except InvalidInputError as exc:
        raise CliError(EXIT_MALFORMED, str(exc)) from None
    sys.stdout.write(report.render())
    return EXIT_OK


def cmd_lhv(args, argv) -> int:
    strategies = enumerate_strategies()
    values = [strategy_bell_value(s) for s in strategies]
    out = sys.stdout
    out.write("a1 a2 b1 b2  B\n")
    for s, v in zip(strategies, values):
        out.write("{:+d} {:+d} {:+d} {:+d}  {}\n".format(*s, v))
    out.write(f"strategies: {len(strategies)}\n")
    out.write(f"max strategy value: {max(values)}\n")
    out.write(f"LHV bound: {lhv_bound()}\n")
    return EXIT_OK


def cmd_replay(args, argv) -> int:
    try:
        with open(args.manifest, encoding="utf-8") as fh:
            manifest = json.load(fh)
    except (OSError, ValueError) as exc:
        raise CliError(EXIT_USAGE, f"cannot load manifest {args.manifest}: {exc}") from None
    if manifest.get("schema") != MANIFEST_SCHEMA or not isinstance(manifest.get("argv"), list):
        raise CliError(EXIT_USAGE, f"{args.manifest} is not a bellsim run manifest")
    return main(manifest["argv"])


# ------------------------------------------------------------------- parser


def _finite_float(text: str) -> float:
    try:
        x = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number") from None
    if not math.isfinite(x):
        raise argparse.ArgumentTypeError(f"{text!r} is not finite")
    return x


def _positive_float(text: str) -> float:
    x = _finite_float(text)
    if x <= 0:
        raise argparse.ArgumentTypeError(f"{text!r} must be > 0")
    return x


def _positive_int(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if n <= 0:
        raise argparse.ArgumentTypeError(f"{text!r} must be > 0")
    return n


def _seed(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if not 0 <= n < 2**64:
        raise argparse.ArgumentTypeError("seed must be in [0, 2**64)")
    return n


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bellsim", description="Idealized polarization Bell-test simulator and audit tool.")
    parser.add_argument("--version", action="version", version=f"bellsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, angles=True):
        p.add_argument("--scenario", choices=SCENARIOS, default="standard")
        p.add_argument("--n0", type=_positive_float, default=1.0, help="source base rate N0 (default 1)")
        if angles:
            p.add_argument("--degrees", action="store_true", help="angle arguments are in degrees")

    p = sub.add_parser("analytic", help="print the analytic rate table, probabilities and E")
    common(p)
    p.add_argument("--alpha", type=_finite_float, required=True)
    p.add_argument("--beta", type=_finite_float, required=True)
    p.add_argument("--scheme", choices=SCHEMES, action="append", help="repeatable; default standard")
    p.set_defaults(func=cmd_analytic)

    p = sub.add_parser("chsh", help="Bell parameter at explicit angles or optimized")
    common(p)
    p.add_argument("--scheme", choices=SCHEMES, default="standard")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--angles", type=_finite_float, nargs=4, metavar=("A1", "A2", "B1", "B2"))
    g.add_argument("--optimize", action="store_true")
    p.add_argument("--grid-density", type=int, default=32)
    p.add_argument("--tol", type=_positive_float, default=1e-6)
    p.add_argument("--output", help="also write a JSON report (plus manifest sidecar)")
    p.set_defaults(func=cmd_chsh)

    p = sub.add_parser("scan", help="write probabilities and E along a grid of alpha + beta")
    common(p)
    p.add_argument("--scheme", choices=SCHEMES, default="standard")
    p.add_argument("--sum-min", type=_finite_float, default=0.0)
    p.add_argument("--sum-max", type=_finite_float, default=2 * math.pi)
    p.add_argument("--steps", type=int, default=65)
    p.add_argument("--beta", type=_finite_float, default=0.0, help="fixed beta; alpha = sum - beta")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("sample", help="Monte Carlo coincidence counts as JSON")
    common(p)
    p.add_argument("--alpha", type=_finite_float, default=0.0)
    p.add_argument("--beta", type=_finite_float, default=0.0)
    p.add_argument("--angles", type=_finite_float, nargs=4, metavar=("A1", "A2", "B1", "B2"),
                   help="sample the four CHSH setting pairs instead of one setting")
    p.add_argument("--shifted", action="store_true", help="also sample the three pi-shifted partners")
    p.add_argument("--mode", choices=["fixed-pairs", "poisson"], default="fixed-pairs")
    p.add_argument("--pairs", type=_positive_int, help="pairs per setting (fixed-pairs, default 1e6)")
    p.add_argument("--exposure", type=_positive_float, help="exposure per setting (poisson, default 1e6)")
    p.add_argument("--seed", type=_seed, help=f"RNG seed (default ${SEED_ENV} or 0)")
    p.add_argument("--output", help="also write the JSON record to this path")
    p.add_argument("--counts-csv", help="write the counts in audit-file format")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("audit", help="recompute B from a counts file and check the normalization")
    p.add_argument("counts_file")
    p.add_argument("--scheme", choices=SCHEMES, default="standard")
    p.add_argument("--angles", type=_finite_float, nargs=4, metavar=("A1", "A2", "B1", "B2"))
    p.add_argument("--degrees", action="store_true")
    p.add_argument("--flatness-sigma", type=_positive_float, default=3.0)
    p.add_argument("--angle-tol", type=_positive_float, default=1e-9)
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("lhv", help="enumerate deterministic local strategies")
    p.set_defaults(func=cmd_lhv)

    p = sub.add_parser("replay", help="re-run a command from its manifest sidecar")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
        return args.func(args, argv)
    except CliError as exc:
        sys.stderr.write(f"{exc}\n")
        return exc.code
    except SystemExit as exc:
        # --help / --version
        return int(exc.code or 0)
    except DegenerateNormalizationError as exc:
        sys.stderr.write(f"degenerate normalization: {exc}\n")
        return EXIT_DEGENERATE
    except (InvalidInputError, BellSimError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
