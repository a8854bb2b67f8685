"""Command-line interface: run simulations, convergence studies, preset docs.

Flags mirror RunConfig fields. A flat key=value config file can seed the
options; explicit flags win over file entries.
"""

from __future__ import annotations

import argparse
import sys

from . import driver


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="eqflow", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="integrate a configured problem")
    _add_run_flags(run_p)
    run_p.add_argument("--snapshot-times", default=None,
                       help="comma-separated times to dump field snapshots")

    conv_p = sub.add_parser("converge", help="time-step refinement study")
    _add_run_flags(conv_p)
    conv_p.add_argument("--dt-list", required=True,
                        help="comma-separated time steps, e.g. 1e-2,5e-3,2.5e-3")
    conv_p.add_argument("--ref-dt", type=float, default=None,
                        help="reference step (default: finest/8)")

    doc_p = sub.add_parser("print-preset", help="show a preset's exact formulas")
    doc_p.add_argument("--preset", default=None,
                       help="preset name; omit to list all")
    return p


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default=None, help="key=value config file")
    p.add_argument("--preset", default=None,
                   choices=sorted(driver.PRESET_DOCS), help="benchmark preset")
    p.add_argument("--model", default=None, choices=["ac", "ch", "mbe", "pfc"])
    p.add_argument("--scheme", default=None, choices=["cn", "bdf2"])
    p.add_argument("--relaxed", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--eta", type=float, default=None)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--t-end", type=float, default=None)
    p.add_argument("--nx", type=int, default=None)
    p.add_argument("--ny", type=int, default=None)
    p.add_argument("--lx", type=float, default=None)
    p.add_argument("--ly", type=float, default=None)
    p.add_argument("--log-every", type=int, default=None)
    p.add_argument("--tol", type=float, default=None, help="linear solver tolerance")
    p.add_argument("--max-iter", type=int, default=None)
    p.add_argument("--dealias", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--strict", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--init-snapshot", default=None, help=".pfield initial condition")
    p.add_argument("--out", default=None, help="output directory")
    for name in ("eps", "mobility", "gamma0", "a0", "b0", "c0"):
        p.add_argument(f"--{name}", type=float, default=None, help=f"model parameter {name}")


def _parse_bool(v: str) -> bool:
    if v.lower() in ("1", "true", "yes", "on"):
        return True
    if v.lower() in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


_FILE_PARSERS = {
    "preset": str, "model": str, "scheme": str,
    "relaxed": _parse_bool, "dealias": _parse_bool, "strict": _parse_bool,
    "eta": float, "dt": float, "t_end": float,
    "nx": int, "ny": int, "lx": float, "ly": float,
    "log_every": int, "solver_tol": float, "solver_max_iter": int,
    "output_dir": str, "init_snapshot": str,
    "eps": float, "mobility": float, "gamma0": float,
    "a0": float, "b0": float, "c0": float,
}


def load_config_file(path: str) -> dict:
    """Parse a flat key=value file; '#' starts a comment."""
    out = {}
    with open(path) as f:
        for lineno, line in enumerate(f, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            if key not in _FILE_PARSERS:
                raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
            out[key] = _FILE_PARSERS[key](value)
    return out


_PARAM_NAMES = ("eps", "mobility", "gamma0", "a0", "b0", "c0")

_FLAG_TO_FIELD = {
    "model": "model", "scheme": "scheme", "relaxed": "relaxed", "eta": "eta",
    "dt": "dt", "t_end": "t_end", "nx": "nx", "ny": "ny", "lx": "lx", "ly": "ly",
    "log_every": "log_every", "tol": "solver_tol", "max_iter": "solver_max_iter",
    "dealias": "dealias", "strict": "strict", "init_snapshot": "init_snapshot",
    "out": "output_dir",
}


def build_config(args: argparse.Namespace) -> driver.RunConfig:
    settings: dict = {}
    params: dict = {}
    preset = args.preset

    if args.config:
        file_values = load_config_file(args.config)
        preset = preset or file_values.pop("preset", None)
        for key, value in file_values.items():
            if key in _PARAM_NAMES:
                params[key] = value
            else:
                settings[key] = value

    for flag, fieldname in _FLAG_TO_FIELD.items():
        value = getattr(args, flag, None)
        if value is not None:
            settings[fieldname] = value
    for name in _PARAM_NAMES:
        value = getattr(args, name, None)
        if value is not None:
            params[name] = value
    if params:
        merged = dict(settings.pop("params", {}))
        merged.update(params)
        settings["params"] = merged

    snapshot_times = getattr(args, "snapshot_times", None)
    if snapshot_times:
        settings["snapshot_times"] = tuple(
            float(s) for s in snapshot_times.split(",") if s.strip()
        )

    preset = preset or "custom"
    return driver.preset_config(preset, **settings)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)

    if args.command == "print-preset":
        names = [args.preset] if args.preset else sorted(driver.PRESET_DOCS)
        for name in names:
            if name not in driver.PRESET_DOCS:
                print(f"unknown preset {name!r}", file=sys.stderr)
                return 2
            print(driver.PRESET_DOCS[name])
            print()
        return 0

    config = build_config(args)

    if args.command == "run":
        summary = driver.run(config)
        last = summary.rows[-1]
        print(
            f"{config.model}/{config.scheme}{'+relax' if config.relaxed else ''}: "
            f"{summary.n_steps} steps to t={summary.final_state.time:g} "
            f"in {summary.wall_time:.2f}s"
        )
        print(
            f"  E_modified={last.E_modified:.6g} F_original={last.F_original:.6g} "
            f"mass={last.mass:.6g} xi0 in [{summary.xi_min:.4g}, {summary.xi_max:.4g}]"
        )
        if summary.series_path:
            print(f"  wrote {summary.series_path}")
        return 0

    if args.command == "converge":
        dts = [float(s) for s in args.dt_list.split(",") if s.strip()]
        records = driver.convergence_study(config, dts, ref_dt=args.ref_dt)
        print(f"{'dt':>12}  {'error':>12}  {'order':>6}")
        for rec in records:
            order = f"{rec['order']:.2f}" if rec["order"] == rec["order"] else "-"
            print(f"{rec['dt']:>12.3e}  {rec['error']:>12.4e}  {order:>6}")
        return 0

    return 2


if __name__ == "__main__":
    raise SystemExit(main())
