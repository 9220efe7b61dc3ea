"""``sondlab`` command line: ``td``, ``bode``, ``adrc`` and ``verify``.

Exit codes: 0 success, 1 verification failure, 2 usage or config error,
3 numerical divergence.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import fields, replace

import numpy as np

from . import kernels
from .adrc import ADRC_COLUMNS, simulate_iadrc, summarize
from .differentiators import (
    PRESETS,
    SondParams,
    UnknownModel,
    default_params,
    magnitude_response_db,
    make_model,
    natural_frequency_damping,
    simulate_differentiator,
)
from .metrics import RULES, comparison_table, compute_metrics
from .ode import IntegrationDiverged, IntegratorConfig, write_csv_atomic
from .scenario import (
    ConfigError,
    bode_scenario_from_dict,
    load_adrc_config,
    load_json,
    td_scenario_from_dict,
)
from .signals import get_case
from . import verify as verify_mod

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_DIVERGED = 0, 1, 2, 3

TD_COLUMNS = ("t", "r", "x1", "x2", "r_hat", "dr_hat", "e")
OVERRIDE_MODELS = ("sond", "hgtd", "red")


class UsageError(Exception):
    pass


def _default_out() -> str:
    return os.environ.get("SONDLAB_OUT", ".")


def _override_epilog(labels) -> str:
    parts = [f"--{label}.{{{','.join(f.name for f in fields(type(default_params(label))))}}}" for label in labels]
    return "parameter overrides: " + "  ".join(parts)


def _add_overrides(parser, labels) -> None:
    group = parser.add_argument_group("parameter overrides")
    for label in labels:
        for f in fields(type(default_params(label))):
            group.add_argument(f"--{label}.{f.name}", dest=f"ov__{label}__{f.name}", type=float,
                               metavar="X", help=argparse.SUPPRESS)


def _collect_overrides(args) -> dict:
    out: dict = {}
    for key, value in vars(args).items():
        if key.startswith("ov__") and value is not None:
            _, label, name = key.split("__")
            out.setdefault(label, {})[name] = value
    return out


def _apply_overrides(label: str, base, overrides: dict):
    if label not in overrides:
        return base
    try:
        return type(base).from_dict(overrides[label], base=base)
    except ValueError as exc:
        raise UsageError(f"--{label}.*: {exc}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=None, help="output directory (default: $SONDLAB_OUT or .)")
    common.add_argument("--config", default=None, help="JSON scenario file")
    common.add_argument("--h", type=float, default=None, help="RK4 step size in seconds")

    parser = argparse.ArgumentParser(
        prog="sondlab",
        description="Tracking differentiator benchmarks, Bode sweeps, IADRC motor runs and property checks.",
        epilog="exit codes: 0 ok, 1 verify failure, 2 usage or config error, 3 numerical divergence",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    td = sub.add_parser("td", parents=[common], help="differentiator benchmark on a test signal",
                        epilog=_override_epilog(OVERRIDE_MODELS))
    td.add_argument("--case", default=None, choices=("case1", "case2", "clean"))
    td.add_argument("--models", default=None, help="comma-separated model labels (default: sond)")
    td.add_argument("--noise-phase", type=float, default=None, metavar="RADIANS",
                    help="phase offset of the noise sinusoid")
    td.add_argument("--tf", type=float, default=None)
    td.add_argument("--rule", choices=RULES, default="right", help="quadrature rule for the indices")
    _add_overrides(td, OVERRIDE_MODELS)

    bode = sub.add_parser("bode", parents=[common], help="magnitude sweep of the linearized SOND",
                          epilog=_override_epilog(("sond",)))
    bode.add_argument("--preset", default="sond-case1", choices=("sond-case1", "sond-adrc"))
    bode.add_argument("--omega-min", type=float, default=None)
    bode.add_argument("--omega-max", type=float, default=None)
    bode.add_argument("--points-per-decade", type=int, default=None)
    _add_overrides(bode, ("sond",))

    adrc = sub.add_parser("adrc", parents=[common], help="closed-loop motor simulation")
    adrc.add_argument("--tf", type=float, default=None)

    ver = sub.add_parser("verify", help="run the property checklist")
    ver.add_argument("--debug-rho-sign", type=float, default=1.0, help=argparse.SUPPRESS)
    ver.add_argument("--debug-lyapunov-scale", type=float, default=1.0, help=argparse.SUPPRESS)
    return parser


def cmd_td(args) -> int:
    if args.config:
        sc = td_scenario_from_dict(load_json(args.config), args.config)
    else:
        sc = td_scenario_from_dict({})
    if args.case:
        sc.case = args.case
    if args.models:
        sc.models = [m.strip() for m in args.models.split(",") if m.strip()]
    if args.noise_phase is not None:
        sc.noise_phase = args.noise_phase
    if args.tf is not None:
        sc.tf = args.tf
    if args.h is not None:
        sc.h = args.h
    overrides = _collect_overrides(args)

    models = []
    for label in sc.models:
        try:
            params = _apply_overrides(label, sc.params.get(label, default_params(label)), overrides)
            models.append(make_model(label, params))
        except UnknownModel as exc:
            raise UsageError(exc.args[0]) from None
    case = get_case(sc.case, sc.noise_phase)
    try:
        cfg = IntegratorConfig(sc.t0, sc.tf, sc.h, (0.0, 0.0))
    except ValueError as exc:
        raise UsageError(str(exc)) from None

    out = args.out or _default_out()
    rows = []
    for model in models:
        traj = simulate_differentiator(model, case, cfg)
        traj.to_csv(os.path.join(out, f"td_{sc.case}_{model.label}.csv"), TD_COLUMNS)
        rows.append((model.label, compute_metrics(traj["e"], traj.times, rule=args.rule)))
    text, csv_text, _ = comparison_table(rows)
    write_csv_atomic(
        os.path.join(out, f"metrics_{sc.case}.csv"),
        ["label", "mse", "iae", "itae", "itse"],
        [[r[0], *r[1].as_tuple()] for r in rows],
    )
    print(f"case={sc.case} h={sc.h:g} t=[{sc.t0:g},{sc.tf:g}] rule={args.rule} backend={kernels.backend_name()}")
    print(text, end="")
    return EXIT_OK


def bode_sweep(p: SondParams, omega_min: float, omega_max: float, points_per_decade: int):
    if not (0 < omega_min < omega_max) or not math.isfinite(omega_max):
        raise UsageError("bode range must satisfy 0 < omega_min < omega_max")
    if points_per_decade < 1:
        raise UsageError("--points-per-decade must be >= 1")
    decades = math.log10(omega_max / omega_min)
    n = max(2, int(round(decades * points_per_decade)) + 1)
    omega = np.geomspace(omega_min, omega_max, n)
    return omega, magnitude_response_db(p, omega)


def fitted_slope(omega, mag_db) -> float:
    """Least-squares slope in dB per decade."""
    return float(np.polyfit(np.log10(omega), mag_db, 1)[0])


def cmd_bode(args) -> int:
    sc = bode_scenario_from_dict(load_json(args.config), args.config) if args.config else None
    base = sc.sond if sc else PRESETS[args.preset]
    p = _apply_overrides("sond", base, _collect_overrides(args))
    wn, zeta = natural_frequency_damping(p)
    lo = args.omega_min if args.omega_min is not None else (sc.omega_min if sc and sc.omega_min else wn / 1e4)
    hi = args.omega_max if args.omega_max is not None else (sc.omega_max if sc and sc.omega_max else wn * 1e4)
    ppd = args.points_per_decade if args.points_per_decade is not None else (sc.points_per_decade if sc else 20)
    omega, mag = bode_sweep(p, lo, hi, ppd)
    path = os.path.join(args.out or _default_out(), "bode.csv")
    write_csv_atomic(path, ["omega", "magnitude_db"], zip(omega, mag),
                     comments=[f"wn={wn!r} zeta={zeta!r} a={p.a!r} b={p.b!r} c={p.c!r} rho={p.rho!r}"])
    print(f"wn = {wn:.4f} rad/s  zeta = {zeta:.6f}")
    first = omega <= omega[0] * 10.0 * (1 + 1e-12)
    last = omega >= omega[-1] / 10.0 * (1 - 1e-12)
    print(f"slope first decade {fitted_slope(omega[first], mag[first]):+.3f} dB/dec, "
          f"last decade {fitted_slope(omega[last], mag[last]):+.3f} dB/dec ({len(omega)} points) -> {path}")
    return EXIT_OK


def cmd_adrc(args) -> int:
    cfg = load_adrc_config(args.config)
    if args.h is not None or args.tf is not None:
        try:
            cfg = replace(cfg, h=args.h if args.h is not None else cfg.h,
                          tf=args.tf if args.tf is not None else cfg.tf)
            cfg.integrator()
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    traj = simulate_iadrc(cfg)
    out = args.out or _default_out()
    traj.to_csv(os.path.join(out, "adrc.csv"), ADRC_COLUMNS)
    summary = summarize(traj, cfg)
    write_csv_atomic(os.path.join(out, "adrc_summary.csv"), ["key", "value"],
                     [(k, "" if v is None else v) for k, v in summary.rows()])
    for key, value in summary.rows():
        shown = "-" if value is None else (f"{value:.6g}" if isinstance(value, float) else value)
        print(f"{key:<24} {shown}")
    return EXIT_OK


def cmd_verify(args) -> int:
    results = verify_mod.run_all(rho_sign=args.debug_rho_sign, lyapunov_scale=args.debug_lyapunov_scale)
    for r in results:
        print(r.line())
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f"violated: {', '.join(failed)}")
        return EXIT_VERIFY
    print(f"all {len(results)} checks passed")
    return EXIT_OK


COMMANDS = {"td": cmd_td, "bode": cmd_bode, "adrc": cmd_adrc, "verify": cmd_verify}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError) as exc:
        print(f"sondlab {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except IntegrationDiverged as exc:
        print(f"sondlab {args.command}: {exc}", file=sys.stderr)
        return EXIT_DIVERGED


if __name__ == "__main__":
    sys.exit(main())
