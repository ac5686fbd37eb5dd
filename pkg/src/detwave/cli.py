"""Command-line entry point: ``detwave <command> [options]``.

Commands
    simulate    run EMHD or Hall-MHD, write snapshots and a time series
    analyze     determining wavenumbers, dissipation numbers, Besov check
    sync        assimilated and control synchronization runs
    validate    numerical self-checks, printed as a table
    dispersion  linear whistler frequency test

Exit codes: 0 success, 1 a validation suite failed, 2 configuration error,
3 blow-up.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import __version__
from .config import Config, build_config, load_config, resolve_tree
from .dynamics import forced_equilibrium, initial_state, measure_whistler, simulate_run
from .errors import BlowUpError, ConfigError, DegenerateFitError, SnapshotError
from .io import (
    load_snapshot_with_header,
    save_snapshot,
    write_metadata,
    write_report,
)
from .sync_lab import SYNC_COLUMNS, decay_fit, run_sync
from .wavenumbers import (
    average_bound_check,
    besov_bound_check,
    lambda_b,
    lambda_u,
    measure_gradient_bernstein,
    report_row,
)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_BLOWUP = 3

SERIES_COLUMNS = ("t", "energy", "dissipation", "forcing_power")
LAMBDA_COLUMNS = ("t", "q", "lambda", "finite", "witness_p", "witness_value")
AVERAGE_COLUMNS = ("kind", "mean_lambda", "kappa", "epsilon", "quotient", "intermittency_ratio",
                   "lemma_max_ratio", "saturated_count", "samples", "t0", "T", "label")
BESOV_COLUMNS = ("t", "lambda", "bound", "besov_norm", "constant", "ok")
SYNC_SUMMARY_COLUMNS = ("run", "initial", "final", "ratio", "saturated_steps", "rate", "goodness")


def _out_dir(path: str) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _config_from_args(args) -> Config:
    return load_config(args.config, args.set)


def _initial(cfg: Config):
    run = cfg.run
    if run["initial"] == "forced_equilibrium":
        return forced_equilibrium(cfg.grid, cfg.physics, run["system"])
    return initial_state(cfg.grid, run["system"], cfg.seed, tuple(run["init_band"]),
                         run["amplitude_b"], run["amplitude_u"])


def cmd_simulate(args) -> int:
    cfg = _config_from_args(args)
    out = _out_dir(args.out)
    run = cfg.run
    rec = simulate_run(
        _initial(cfg), cfg.physics, run["T_end"], run["dt_max"], run["C_cfl"],
        snapshot_every=run["snapshot_cadence"], max_steps=run["max_steps"],
        snapshot_dt=run["snapshot_dt"],
    )
    for i, state in enumerate(rec.snapshots):
        save_snapshot(state.b, out / f"b_{i:06d}.snap", state.t, "b")
        if state.u is not None:
            save_snapshot(state.u, out / f"u_{i:06d}.snap", state.t, "u")
    write_report(({c: row[c] for c in SERIES_COLUMNS} for row in rec.series),
                 out / "series.csv", SERIES_COLUMNS)
    extra = {"steps": len(rec.series) - 1, "snapshots": len(rec.snapshots),
             "blowup": None if rec.blowup is None else str(rec.blowup)}
    write_metadata(out, cfg.tree, cfg.seed, "simulate", extra)
    print(f"simulate: {extra['steps']} steps, {extra['snapshots']} snapshots -> {out}")
    if rec.blowup is not None:
        print(f"blow-up: {rec.blowup}", file=sys.stderr)
        return EXIT_BLOWUP
    return EXIT_OK


def _read_snapshots(directory: Path):
    """``{"b": [(t, field)], "u": [...]}`` sorted by file name."""
    fields = {"b": [], "u": []}
    for path in sorted(directory.glob("*.snap")):
        f, header = load_snapshot_with_header(path)
        fields.setdefault(header["field"], []).append((header["time"], f))
    return fields


def cmd_analyze(args) -> int:
    src = Path(args.snapshots)
    if not src.is_dir():
        raise ConfigError(f"snapshot directory not found: {src}")
    if args.config is None and (src / "metadata.json").is_file():
        tree = json.loads((src / "metadata.json").read_text(encoding="utf-8"))["config"]
        cfg = build_config(resolve_tree(tree, args.set))
    else:
        cfg = _config_from_args(args)
    out = _out_dir(args.out)
    fields = _read_snapshots(src)
    if not fields["b"]:
        raise ConfigError(f"no magnetic-field snapshots in {src}")
    wp = cfg.wavenumber
    av = cfg.averaging
    summary = []
    for name, lam_fn, kind in (("b", lambda_b, "magnetic"), ("u", lambda_u, "velocity")):
        series = fields.get(name) or []
        if not series:
            continue
        times = [t for t, _ in series]
        write_report([report_row(t, lam_fn(f, wp)) for t, f in series],
                     out / f"lambda_{name}.csv", LAMBDA_COLUMNS)
        window = None if av["T"] is None else (av["t0"], av["T"] - av["t0"])
        if window is None and av["t0"] > times[0]:
            window = (av["t0"], times[-1] - av["t0"])
        if len(series) >= 2:
            rep = average_bound_check(times, [f for _, f in series], wp, kind, window)
            summary.append(rep.as_row())
    write_report(summary, out / "average.csv", AVERAGE_COLUMNS)
    if wp.delta > 1:
        bfields = [f for _, f in fields["b"]]
        cgrad = measure_gradient_bernstein(bfields, wp.r)
        rows = []
        for t, f in fields["b"]:
            chk = besov_bound_check(f, wp, cgrad)
            rows.append({"t": t, "lambda": chk.lam, "bound": chk.bound, "besov_norm": chk.besov_norm,
                         "constant": chk.constant, "ok": chk.ok})
        write_report(rows, out / "besov.csv", BESOV_COLUMNS)
    write_metadata(out, cfg.tree, cfg.seed, "analyze", {"source": str(src)})
    print(f"analyze: {len(fields['b'])} magnetic snapshots -> {out}")
    for row in summary:
        print(f"  {row['kind']}: <Lambda>={row['mean_lambda']:.6g} kappa={row['kappa']:.6g} "
              f"quotient={row['quotient']:.6g} intermittency={row['intermittency_ratio']:.6g}")
    return EXIT_OK


def _summary_row(name: str, rec, skip: int) -> dict:
    x = rec.difference_norm()
    rate, goodness = math.nan, math.nan
    try:
        rate, goodness = decay_fit(rec.column("t"), x, skip=skip)
    except DegenerateFitError:
        pass
    initial = float(x[0])
    final = float(x[-1])
    return {
        "run": name,
        "initial": initial,
        "final": final,
        "ratio": final / initial if initial > 0 else math.nan,
        "saturated_steps": rec.saturated_steps,
        "rate": rate,
        "goodness": goodness,
    }


def cmd_sync(args) -> int:
    cfg = _config_from_args(args)
    out = _out_dir(args.out)
    status = EXIT_OK
    summary = []
    runs = [("assimilated", True)]
    if not args.no_control:
        runs.append(("control", False))
    for name, flag in runs:
        rec = run_sync(cfg.sync_config(assimilate=flag))
        write_report(rec.rows, out / f"sync_{name}.csv", SYNC_COLUMNS)
        summary.append(_summary_row(name, rec, args.skip))
        if rec.blowup is not None:
            print(f"blow-up in {name} run: {rec.blowup}", file=sys.stderr)
            status = EXIT_BLOWUP
    write_report(summary, out / "sync_summary.csv", SYNC_SUMMARY_COLUMNS)
    write_metadata(out, cfg.tree, cfg.seed, "sync", {"s": cfg.sync_config().s_value})
    for row in summary:
        print(f"sync {row['run']}: ratio={row['ratio']:.6g} saturated_steps={row['saturated_steps']} "
              f"rate={row['rate']:.6g} goodness={row['goodness']:.6g}")
    return status


def cmd_validate(args) -> int:
    from .validation import SUITES, format_table, run_all

    names = args.suite or None
    if names:
        unknown = [n for n in names if n not in SUITES]
        if unknown:
            raise ConfigError(f"unknown suite(s) {unknown}; choose from {sorted(SUITES)}")
    results = run_all(names)
    print(format_table(results))
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAILED


def cmd_dispersion(args) -> int:
    cfg = _config_from_args(args)
    k = tuple(args.k)
    if len(k) != cfg.grid.n:
        raise ConfigError(f"--k needs {cfg.grid.n} integers for n={cfg.grid.n}")
    res = measure_whistler(cfg.grid, k, b0=args.b0, axis=args.axis, eps=args.eps,
                           d_i=cfg.physics.d_i)
    rel = abs(res["omega"] - res["omega_predicted"]) / res["omega_predicted"]
    print(f"dispersion k={k}: measured={res['omega']:.12g} predicted={res['omega_predicted']:.12g} "
          f"rel_err={rel:.3e}")
    if args.out:
        out = _out_dir(args.out)
        write_report([{"k": " ".join(map(str, k)), "measured": res["omega"],
                       "predicted": res["omega_predicted"], "rel_err": rel}],
                     out / "dispersion.csv", ("k", "measured", "predicted", "rel_err"))
        write_metadata(out, cfg.tree, cfg.seed, "dispersion",
                       {"k": list(k), "b0": args.b0, "axis": args.axis, "eps": args.eps})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="detwave", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"detwave {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_required=True):
        p.add_argument("--config", help="JSON config file (defaults apply when omitted)")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config key, e.g. --set physics.mu=0.1 (repeatable)")
        if out_required:
            p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("simulate", help="run the dynamics and write snapshots")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="wavenumber diagnostics from snapshots")
    p.add_argument("snapshots", help="directory of .snap files (e.g. a simulate output)")
    common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("sync", help="two-solution synchronization experiment")
    common(p)
    p.add_argument("--no-control", action="store_true", help="skip the unassimilated control run")
    p.add_argument("--skip", type=int, default=0, help="leading rows excluded from the decay fit")
    p.set_defaults(func=cmd_sync)

    p = sub.add_parser("validate", help="run numerical self-checks")
    p.add_argument("--suite", action="append", help="run only this suite (repeatable)")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("dispersion", help="linear whistler frequency test")
    common(p, out_required=False)
    p.add_argument("--out", help="optional output directory")
    p.add_argument("--k", type=int, nargs="+", default=[2, 1], help="wavevector (integers)")
    p.add_argument("--b0", type=float, default=1.0, help="background field strength")
    p.add_argument("--axis", type=int, default=0, help="background field direction")
    p.add_argument("--eps", type=float, default=1e-4, help="perturbation amplitude")
    p.set_defaults(func=cmd_dispersion)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, SnapshotError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BlowUpError as exc:
        print(f"blow-up: {exc}", file=sys.stderr)
        return EXIT_BLOWUP


if __name__ == "__main__":
    sys.exit(main())
