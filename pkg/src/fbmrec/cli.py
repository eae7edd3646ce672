"""Command-line front end.

Every run writes its tables (CSV) and a JSON document carrying the result and
a run manifest.  ``fbmrec replay MANIFEST`` re-executes a manifest and
reproduces the outputs byte for byte.

Exit codes: 0 success, 2 usage, 3 numerical failure, 4 insufficient
statistics, 5 IO.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .core import GeneratorId, as_hurst, generate_cholesky_oracle, generate_circulant, generate_durbin_levinson
from .errors import FbmRecError, InsufficientHits, InvalidHurst, NumericalFailure
from .experiments import (
    SCHEMA_VERSION,
    ExperimentConfig,
    ExperimentReport,
    estimate_argmax_prob,
    estimate_record_interval_prob,
    estimate_sup_tail,
    estimate_survival_prob,
    run_dimension_sweep,
)
from .records import record_mask

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_STATS, EXIT_IO = 0, 2, 3, 4, 5

GENERATORS = {
    "circulant": (generate_circulant, GeneratorId.CIRCULANT),
    "durbin-levinson": (generate_durbin_levinson, GeneratorId.DURBIN_LEVINSON),
    "cholesky": (generate_cholesky_oracle, GeneratorId.CHOLESKY),
}
DEFAULT_SWEEP_GRID = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9"
# Arguments that never reach the manifest: they change where or how fast, not what.
_NOT_IN_MANIFEST = {"out", "workers", "func", "command"}


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# Formatting
# ---------------------------------------------------------------------------


def fmt_num(x) -> str:
    """Shortest round-trip decimal; integral floats drop the trailing ``.0``."""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    s = repr(float(x))
    return s[:-2] if s.endswith(".0") else s


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt_num(v) for v in row])
    return buf.getvalue()


def json_text(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# Argument types
# ---------------------------------------------------------------------------


def _hurst(text: str) -> float:
    try:
        return as_hurst(float(text)).h
    except (ValueError, InvalidHurst) as exc:
        raise argparse.ArgumentTypeError(f"invalid Hurst index {text!r}: must be a number in (0, 1)") from exc


def _hurst_list(text: str) -> list[float]:
    return [_hurst(t) for t in text.split(",") if t.strip()]


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from exc
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _seed(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected an unsigned 64-bit integer, got {text!r}") from exc
    if not 0 <= value < 1 << 64:
        raise argparse.ArgumentTypeError(f"seed out of range: {value}")
    return value


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _float_list(text: str) -> list[float]:
    try:
        values = [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc
    if any(not math.isfinite(v) for v in values):
        raise argparse.ArgumentTypeError(f"non-finite value in {text!r}")
    return values


# ---------------------------------------------------------------------------
# Output plumbing
# ---------------------------------------------------------------------------


def _manifest(args, outputs: list[str]) -> dict:
    config = {k: v for k, v in sorted(vars(args).items()) if k not in _NOT_IN_MANIFEST}
    return {
        "schema_version": SCHEMA_VERSION,
        "subcommand": args.command,
        "config": config,
        "master_seed": args.seed,
        "artifact_version": __version__,
        "outputs": outputs,
    }


def _write_outputs(args, files: dict[str, str], document: dict | None) -> list[Path]:
    """Write ``files`` plus the JSON document and a manifest into ``--out``."""
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    name = args.command
    json_name = f"{name}.json"
    names = list(files) + ([json_name] if document is not None else [])
    manifest = _manifest(args, names)
    written = []
    for fname, text in files.items():
        written.append(out / fname)
        written[-1].write_text(text, encoding="utf-8", newline="")
    if document is not None:
        document = dict(document, manifest=manifest)
        written.append(out / json_name)
        written[-1].write_text(json_text(document), encoding="utf-8")
    written.append(out / f"{name}.manifest.json")
    written[-1].write_text(json_text(manifest), encoding="utf-8")
    return written


def _config(args, **extra) -> ExperimentConfig:
    try:
        return ExperimentConfig(
            hurst=extra.pop("hurst", getattr(args, "hurst", 0.5)),
            n=2**args.size_exp,
            replicates=args.replicates,
            master_seed=args.seed,
            workers=args.workers,
            **extra,
        )
    except (ValueError, InvalidHurst) as exc:
        raise UsageError(str(exc)) from exc


def _summary(report: ExperimentReport) -> str:
    lines = [f"{report.experiment}: {report.replicates} replicates, seed {report.master_seed}"]
    for p in report.points:
        lines.append(f"  param={p.param:<12g} p_hat={p.p_hat:.6f} se={p.stderr:.6f} hits={p.hits}")
    if report.exponent is not None:
        e = report.exponent
        lines.append(f"  exponent={e.exponent:.4f} +/- {e.stderr:.4f} (target {e.target:.4f})")
    lines.append(f"  wall-clock {report.elapsed_seconds:.1f}s")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_generate(args) -> list[Path]:
    generate, _ = GENERATORS[args.generator]
    try:
        path = generate(args.hurst, 2**args.size_exp, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    values = path.values
    running = np.maximum.accumulate(values)
    is_record = record_mask(values)
    t = path.times
    if args.format == "json":
        doc = {
            "hurst": args.hurst,
            "n": path.n,
            "seed": path.seed,
            "generator_id": path.generator_id.value,
            "t": t.tolist(),
            "x": values.tolist(),
            "running_max": running.tolist(),
            "is_record": is_record.astype(int).tolist(),
        }
        files = {}
    else:
        doc = None
        rows = zip(t, values, running, is_record)
        files = {"generate.csv": csv_text(["t", "x", "running_max", "is_record"], rows)}
    written = _write_outputs(args, files, doc)
    print(f"generated {path.generator_id.value} path: H={args.hurst}, n={path.n}, "
          f"{int(is_record.sum())} records, max={values.max():.6g}")
    return written


def _sweep_tables(report: ExperimentReport, args, with_curve: bool) -> dict[str, str]:
    if args.format == "json":
        return {}
    files = {}
    rows = report.extra["rows"]
    name = args.command
    files[f"{name}.csv"] = csv_text(
        ["hurst", "dim_mean", "dim_stderr", "replicates"],
        [(r["hurst"], r["dim_mean"], r["dim_stderr"], r["replicates"]) for r in rows],
    )
    if with_curve:
        curve = report.extra["mean_curves"][0]
        files[f"{name}_boxcount.csv"] = csv_text(
            ["k", "eps", "m_eps"], zip(curve["k"], curve["eps"], curve["m_eps"])
        )
    return files


def cmd_dim(args) -> list[Path]:
    cfg = _config(args, k_min=args.kmin, k_max=args.kmax)
    report = run_dimension_sweep(cfg)
    row = report.extra["rows"][0]
    files = {}
    if args.format != "json":
        curve = report.extra["mean_curves"][0]
        files["dim.csv"] = csv_text(["k", "eps", "m_eps"], zip(curve["k"], curve["eps"], curve["m_eps"]))
    k_min, k_max = report.extra["k_range"]
    estimate = {
        "kind": "box-counting",
        "slope": -row["dim_mean"],
        "dimension": row["dim_mean"],
        "stderr": row["dim_stderr"],
        "k_range": [k_min, k_max],
        "r_squared": row["r_squared"],
    }
    doc = {"estimate": estimate, "report": report.to_dict()}
    written = _write_outputs(args, files, doc)
    print(f"dimension (box-counting) H={args.hurst}: {row['dim_mean']:.4f} +/- {row['dim_stderr']:.4f} "
          f"over k in [{k_min}, {k_max}], {cfg.replicates} paths; per-path mean "
          f"{row['dim_path_mean']:.4f} +/- {row['dim_path_stderr']:.4f}")
    print(f"  wall-clock {report.elapsed_seconds:.1f}s", file=sys.stderr)
    return written


def cmd_sweep(args) -> list[Path]:
    grid = tuple(args.hurst)
    cfg = _config(args, hurst=grid[0], hurst_grid=grid, k_min=args.kmin, k_max=args.kmax)
    report = run_dimension_sweep(cfg)
    written = _write_outputs(args, _sweep_tables(report, args, with_curve=False), report.to_dict())
    for r in report.extra["rows"]:
        print(f"H={r['hurst']:.3f}  dim={r['dim_mean']:.4f} +/- {r['dim_stderr']:.4f}")
    print(f"  wall-clock {report.elapsed_seconds:.1f}s", file=sys.stderr)
    return written


def _probability_command(args, runner, **cfg_extra) -> list[Path]:
    cfg = _config(args, **cfg_extra)
    try:
        report = runner(cfg)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    files = {}
    if args.format != "json":
        rows = [(p.param, p.p_hat, p.stderr) for p in report.points]
        files[f"{args.command}.csv"] = csv_text(["param", "p_hat", "stderr"], rows)
    written = _write_outputs(args, files, report.to_dict())
    print(_summary(report))
    return written


def cmd_argmax(args):
    return _probability_command(args, estimate_argmax_prob, eps_exps=tuple(args.eps_exps))


def cmd_recprob(args):
    return _probability_command(
        args, estimate_record_interval_prob, eps_exps=tuple(args.eps_exps), anchor=args.anchor
    )


def cmd_survival(args):
    return _probability_command(args, estimate_survival_prob, thresholds=tuple(args.thresholds))


def cmd_tail(args):
    return _probability_command(args, estimate_sup_tail, thresholds=tuple(args.thresholds))


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fbmrec", description="Record statistics of fractional Brownian motion.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *, size_exp: int, replicates: int | None):
        p.add_argument("--size-exp", type=_positive_int, default=size_exp, help="grid size n = 2**k")
        p.add_argument("--seed", type=_seed, default=0, help="master seed (unsigned 64-bit)")
        if replicates is not None:
            p.add_argument("--replicates", type=_positive_int, default=replicates)
            p.add_argument("--workers", type=_positive_int, default=1, help="affects speed only")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("generate", help="sample one path; CSV t,x,running_max,is_record")
    p.add_argument("--hurst", type=_hurst, required=True)
    p.add_argument("--generator", choices=sorted(GENERATORS), default="circulant")
    common(p, size_exp=10, replicates=None)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("dim", help="box-counting dimension of the record set")
    p.add_argument("--hurst", type=_hurst, required=True)
    p.add_argument("--kmin", type=int, default=None)
    p.add_argument("--kmax", type=int, default=None)
    common(p, size_exp=16, replicates=1)
    p.set_defaults(func=cmd_dim)

    p = sub.add_parser("sweep", help="dimension against H over a grid")
    p.add_argument("--hurst", type=_hurst_list, default=_hurst_list(DEFAULT_SWEEP_GRID), help="comma-separated H grid")
    p.add_argument("--kmin", type=int, default=None)
    p.add_argument("--kmax", type=int, default=None)
    common(p, size_exp=16, replicates=20)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("argmax", help="P[argmax <= eps]")
    p.add_argument("--hurst", type=_hurst, required=True)
    p.add_argument("--eps-exps", type=_int_list, default=[2, 3, 4, 5, 6, 7, 8], help="eps = 2**-k, comma list")
    common(p, size_exp=14, replicates=10_000)
    p.set_defaults(func=cmd_argmax)

    p = sub.add_parser("recprob", help="P[record in [a, a + eps]]")
    p.add_argument("--hurst", type=_hurst, required=True)
    p.add_argument("--eps-exps", type=_int_list, default=[3, 4, 5, 6, 7, 8])
    p.add_argument("--anchor", type=float, default=0.75)
    common(p, size_exp=14, replicates=10_000)
    p.set_defaults(func=cmd_recprob)

    p = sub.add_parser("survival", help="P[max <= u]")
    p.add_argument("--hurst", type=_hurst, required=True)
    p.add_argument("--thresholds", type=_float_list, default=[0.05, 0.1, 0.2, 0.4])
    common(p, size_exp=14, replicates=10_000)
    p.set_defaults(func=cmd_survival)

    p = sub.add_parser("tail", help="P[max > v] against v**(1/H) Psi(v)")
    p.add_argument("--hurst", type=_hurst, required=True)
    p.add_argument("--thresholds", type=_float_list, default=[2.0, 2.5, 3.0])
    common(p, size_exp=10, replicates=1_000_000)
    p.set_defaults(func=cmd_tail)

    p = sub.add_parser("replay", help="re-run a manifest")
    p.add_argument("manifest")
    p.add_argument("--out", default=None, help="output directory (default: the manifest's directory)")
    p.add_argument("--workers", type=_positive_int, default=1)
    p.set_defaults(func=None)
    return parser


def _replay(parser: argparse.ArgumentParser, args) -> argparse.Namespace:
    path = Path(args.manifest)
    manifest = json.loads(path.read_text(encoding="utf-8"))
    command = manifest["subcommand"]
    defaults = parser.parse_args([command, *_required_stub(command)])
    ns = argparse.Namespace(**vars(defaults))
    for key, value in manifest["config"].items():
        setattr(ns, key, value)
    ns.out = args.out if args.out is not None else str(path.parent)
    if hasattr(ns, "workers"):
        ns.workers = args.workers
    return ns


def _required_stub(command: str) -> list[str]:
    return [] if command == "sweep" else ["--hurst", "0.5"]


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "replay":
            args = _replay(parser, args)
        args.func(args)
    except UsageError as exc:
        print(f"fbmrec: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InsufficientHits as exc:
        print(f"fbmrec: insufficient statistics: {exc}", file=sys.stderr)
        return EXIT_STATS
    except NumericalFailure as exc:
        print(f"fbmrec: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"fbmrec: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (KeyError, json.JSONDecodeError) as exc:
        print(f"fbmrec: malformed manifest: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FbmRecError as exc:
        print(f"fbmrec: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
