"""Command line front end: depkde {select|study|curve}.

Input series are one real per line (or a single-column CSV with optional
header); file order is draw order, which carries the dependence structure.
Numbers are serialized with 17 significant digits so CSV round-trips are
exact.  Exit codes: 0 success, 2 input error, 3 method failure, 4 config
error.
"""

import argparse
import csv
import json
import sys
from dataclasses import asdict

import numpy as np

from .density import build_grid, kde_curve
from .dependence import AutocorrSpec, kernel_iat_batch
from .experiment import ALL_METHODS, StudyConfig, run_study
from .samplers import TARGETS, iid_sample, MHConfig, mh_sample, tune_proposal
from .selectors import METHODS as SELECTOR_METHODS, default_config, select

EXIT_INPUT = 2
EXIT_METHOD = 3
EXIT_CONFIG = 4


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def read_series(path: str) -> np.ndarray:
    """Parse a one-column series file; raises CliError with the line number."""
    values = []
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}", EXIT_INPUT)
    for lineno, line in enumerate(lines, start=1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        token = text.split(",")[0].strip()
        try:
            values.append(float(token))
        except ValueError:
            if lineno == 1:  # optional header
                continue
            raise CliError(f"{path}:{lineno}: not a number: {token!r}", EXIT_INPUT)
    if len(values) < 2:
        raise CliError(f"{path}: need at least 2 values, got {len(values)}", EXIT_INPUT)
    arr = np.asarray(values)
    if not np.all(np.isfinite(arr)):
        bad = int(np.nonzero(~np.isfinite(arr))[0][0]) + 1
        raise CliError(f"{path}: non-finite value at entry {bad}", EXIT_INPUT)
    return arr


def _load_config_file(path: str) -> dict:
    """key = value lines; flags given on the command line take precedence."""
    out = {}
    try:
        with open(path) as fh:
            for lineno, line in enumerate(fh, start=1):
                text = line.split("#")[0].strip()
                if not text:
                    continue
                if "=" not in text:
                    raise CliError(f"{path}:{lineno}: expected key = value", EXIT_CONFIG)
                key, _, value = text.partition("=")
                out[key.strip().replace("-", "_")] = value.strip()
    except OSError as exc:
        raise CliError(f"cannot read config {path}: {exc}", EXIT_CONFIG)
    return out


def _zeta_spec(args) -> AutocorrSpec:
    return AutocorrSpec(max_lag=args.zeta_lag_mode)


def _obtain_series(args) -> tuple:
    """Series from --input, or generated from --dist/--sampler/--n/--seed."""
    if args.input:
        return read_series(args.input), None
    if not args.dist:
        raise CliError("either --input or --dist is required", EXIT_CONFIG)
    target = TARGETS[args.dist]()
    if args.sampler == "mh":
        probe = MHConfig(proposal_sd=2.4 * target.sd, n_draws=args.n, seed=(args.seed, 999_983))
        sd = tune_proposal(target, probe)
        res = mh_sample(target, MHConfig(proposal_sd=sd, n_draws=args.n, seed=(args.seed, 0)))
        return res.values, res.acceptance_rate
    return iid_sample(target, args.n, (args.seed, 0)), None


def _check_out_writable(path: str | None):
    if path is None:
        return
    try:
        with open(path, "a"):
            pass
    except OSError as exc:
        raise CliError(f"output path not writable: {exc}", EXIT_CONFIG)


def cmd_select(args) -> int:
    values, acceptance = _obtain_series(args)
    _check_out_writable(args.out)
    cfg = default_config(
        values, args.method,
        zeta_spec=_zeta_spec(args),
        include_diagonal=args.diagonal == "include",
        grid_points=args.grid_points,
    )
    try:
        result = select(values, cfg)
    except Exception as exc:
        raise CliError(f"selector failed: {exc}", EXIT_METHOD)
    report = {
        "method": args.method,
        "n": int(values.size),
        "h": result.h,
        "zeta": result.zeta_at_h,
        "objective": result.objective_at_h,
        "evaluations": result.evaluations,
        "converged": result.converged,
        "boundary_hit": result.boundary_hit,
        "note": result.note,
    }
    if acceptance is not None:
        report["acceptance"] = acceptance
    if args.out:
        _write_mapping(args.out, args.format, report)
    for key, val in report.items():
        print(f"{key}: {_fmt(val)}")
    return 0


_RECORD_COLUMNS = ("method", "replicate", "h", "ise", "zeta", "acceptance", "iat")
_SUMMARY_COLUMNS = ("method", "mean_h", "se_h", "mean_ise", "se_ise", "count", "failures")


def cmd_study(args) -> int:
    if not args.dist:
        raise CliError("study requires --dist", EXIT_CONFIG)
    _check_out_writable(args.out)
    methods = tuple(args.methods) if args.methods else ALL_METHODS
    cfg = StudyConfig(
        target=TARGETS[args.dist](),
        sampler=args.sampler,
        n=args.n,
        replicates=args.replicates,
        methods=methods,
        thin_k=args.thin_k,
        base_seed=args.seed,
        grid_points=args.grid_points,
        zeta_spec=_zeta_spec(args),
    )
    result = run_study(cfg)
    header = [
        f"dist={args.dist}", f"sampler={args.sampler}", f"n={args.n}",
        f"replicates={args.replicates}", f"thin_k={args.thin_k}", f"seed={args.seed}",
        f"methods={','.join(methods)}", f"zeta_lag_mode={args.zeta_lag_mode}",
        f"proposal_sd={_fmt(result.proposal_sd)}",
    ]
    if args.out:
        _write_study(args.out, args.format, result, header)
    _print_summary(result.summary)
    failed = {m: s for m, s in result.summary.items() if s["count"] == 0}
    if failed and len(failed) == len(result.summary):
        raise CliError(f"all replicates failed for all methods: {sorted(failed)}", EXIT_METHOD)
    return 0


def _print_summary(summary: dict):
    print("method mean_h se_h mean_ise se_ise count failures")
    for method, s in summary.items():
        print(
            f"{method} {_fmt(s['mean_h'])} {_fmt(s['se_h'])} "
            f"{_fmt(s['mean_ise'])} {_fmt(s['se_ise'])} {s['count']} {s['failures']}"
        )


def _summary_rows(summary: dict):
    for method, s in summary.items():
        yield {"method": method, **s}


def _write_study(out: str, fmt: str, result, header: list):
    if fmt == "json":
        payload = {
            "config": header,
            "summary": result.summary,
            "records": [asdict(rec) for rec in result.records],
        }
        with open(out, "w") as fh:
            json.dump(payload, fh, indent=2, allow_nan=True)
            fh.write("\n")
        return
    with open(out, "w", newline="") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(_RECORD_COLUMNS)
        for rec in result.records:
            writer.writerow([_fmt(getattr(rec, col)) for col in _RECORD_COLUMNS])
    summary_path = _companion_path(out, "summary")
    with open(summary_path, "w", newline="") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(_SUMMARY_COLUMNS)
        for row in _summary_rows(result.summary):
            writer.writerow([_fmt(row[col]) for col in _SUMMARY_COLUMNS])


def _companion_path(out: str, tag: str) -> str:
    if "." in out.rsplit("/", 1)[-1]:
        stem, _, ext = out.rpartition(".")
        return f"{stem}_{tag}.{ext}"
    return f"{out}_{tag}"


def _write_mapping(out: str, fmt: str, mapping: dict):
    if fmt == "json":
        with open(out, "w") as fh:
            json.dump(mapping, fh, indent=2, allow_nan=True)
            fh.write("\n")
        return
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(mapping.keys())
        writer.writerow([_fmt(v) for v in mapping.values()])


def cmd_curve(args) -> int:
    values, _ = _obtain_series(args)
    _check_out_writable(args.out)
    if args.h is not None:
        h = args.h
        if h <= 0:
            raise CliError(f"--h must be positive, got {h}", EXIT_CONFIG)
    else:
        method = args.method or "SJse"
        cfg = default_config(
            values, method,
            zeta_spec=_zeta_spec(args),
            include_diagonal=args.diagonal == "include",
            grid_points=args.grid_points,
        )
        try:
            h = select(values, cfg).h
        except Exception as exc:
            raise CliError(f"selector failed: {exc}", EXIT_METHOD)
    grid = build_grid(values, h, args.grid_points)
    curve = kde_curve(values, h, grid)
    columns = ["x", "density"]
    data = [grid.points, curve]
    if args.zeta_column:
        taus, _ = kernel_iat_batch(values, h, grid.points, _zeta_spec(args))
        columns.append("kernel_iat")
        data.append(taus)
    rows = zip(*data)
    if args.out:
        if args.format == "json":
            payload = {"h": h, "columns": columns,
                       "rows": [[float(v) for v in row] for row in rows]}
            with open(args.out, "w") as fh:
                json.dump(payload, fh, indent=2)
                fh.write("\n")
        else:
            with open(args.out, "w", newline="") as fh:
                fh.write(f"# h={_fmt(h)}\n")
                writer = csv.writer(fh)
                writer.writerow(columns)
                for row in rows:
                    writer.writerow([_fmt(float(v)) for v in row])
    else:
        print(f"# h={_fmt(h)}")
        print(",".join(columns))
        for row in rows:
            print(",".join(_fmt(float(v)) for v in row))
    return 0


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument("--dist", choices=sorted(TARGETS), help="built-in target distribution")
    parser.add_argument("--sampler", choices=["iid", "mh"], default="iid")
    parser.add_argument("--n", type=int, default=10_000)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--input", help="series file (one value per line, order = draw order)")
    parser.add_argument("--out", help="output file path")
    parser.add_argument("--format", choices=["csv", "json"], default="csv")
    parser.add_argument("--grid-points", type=int, default=2048)
    parser.add_argument("--zeta-lag-mode", choices=["adaptive", "full"], default="adaptive")
    parser.add_argument("--diagonal", choices=["include", "exclude"], default="include")
    parser.add_argument("--config", help="optional key = value config file (flags win)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="depkde", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_select = sub.add_parser("select", help="select a bandwidth for a series")
    _add_common(p_select)
    p_select.add_argument("--method", choices=SELECTOR_METHODS, required=True)

    p_study = sub.add_parser("study", help="run the replicate comparison study")
    _add_common(p_study)
    p_study.add_argument("--replicates", type=int, default=50)
    p_study.add_argument("--thin-k", type=int, default=5)
    p_study.add_argument("--methods", nargs="+", choices=ALL_METHODS)

    p_curve = sub.add_parser("curve", help="emit a density curve as plot data")
    _add_common(p_curve)
    p_curve.add_argument("--method", choices=SELECTOR_METHODS)
    p_curve.add_argument("--h", type=float, help="fixed bandwidth, bypasses selection")
    p_curve.add_argument("--zeta-column", action="store_true",
                         help="append the per-point kernel IAT diagnostic column")
    return parser


_COMMANDS = {"select": cmd_select, "study": cmd_study, "curve": cmd_curve}

_CONFIG_TYPES = {
    "n": int, "seed": int, "replicates": int, "thin_k": int, "grid_points": int,
    "h": float,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.config:
            defaults = _load_config_file(args.config)
            typed = {}
            for key, value in defaults.items():
                typed[key] = _CONFIG_TYPES[key](value) if key in _CONFIG_TYPES else value
            # re-parse with config values as defaults; explicit flags win
            sub_parser = build_parser()
            for action in sub_parser._subparsers._group_actions[0].choices.values():
                action.set_defaults(**typed)
            args = sub_parser.parse_args(argv)
        return _COMMANDS[args.subcommand](args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
