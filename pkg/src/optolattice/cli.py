"""Command-line entry point ``simulate``."""
from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import gutzwiller as gz
from . import lattice_bands as lb
from . import pipeline as pl
from .errors import InvalidParameterError, NumericalError, StageError
from .params_units import load_params, nominal_params

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 2, 3


def _params(args):
    return load_params(args.params) if args.params else nominal_params()


def _scenario(args):
    if getattr(args, "scenario", None):
        return pl.Scenario.load(args.scenario)
    return pl.Scenario.nominal(fast=getattr(args, "fast", False))


def _emit(args, header, rows, meta=None):
    if args.output and args.output != "-":
        pl.write_csv(args.output, header, rows, meta)
    else:
        pl.write_csv(sys.stdout, header, rows, meta)


def _run_one(path, outdir):
    sc = pl.Scenario.load(path)
    rec = pl.run(sc)
    pl.write_record(rec, outdir)
    return str(outdir)


def cmd_run(args):
    out = Path(args.output or "results")
    if len(args.scenarios) == 1:
        print(_run_one(args.scenarios[0], out))
        return
    # a batch: one isolated output directory per scenario file
    dirs = [out / Path(s).stem for s in args.scenarios]
    with ProcessPoolExecutor(max_workers=args.jobs) as pool:
        for d in pool.map(_run_one, args.scenarios, dirs):
            print(d)


def cmd_fig2(args):
    grid = np.linspace(args.y2_min, args.y2_max, args.n)
    _emit(args, *pl.figure2(_params(args), grid, args.v0_crit))


def cmd_fig3(args):
    _emit(args, *pl.figure3(_params(args), tuple(args.y2)))


def cmd_fig4(args):
    _emit(args, *pl.figure4(_scenario(args)))


def cmd_fig5(args):
    _emit(args, *pl.figure5(_scenario(args)))


def cmd_dynamics(args):
    sc = pl.Scenario.load(args.scenario)
    if args.mode:
        sc.mode = args.mode
    traj = pl.integrate_mirror(sc)
    _emit(args, ["tau", "Y2", "xi", "xidot", "X2"], traj.rows())


def cmd_bands(args):
    lo, hi, step = args.v0_range
    curve = lb.hubbard_curve(args.g_eff, target_ratio=args.target_ratio, v0_crit=args.v0_crit,
                             v0_min=lo, v0_max=hi, step=step)
    _emit(args, ["V0", "J", "U", "ratio_2J_U"], curve.rows(), {"g_eff": curve.g_eff})


def cmd_calibrate(args):
    g = lb.calibrate_g(args.v0_crit, args.target_ratio)
    print(json.dumps({"g_eff": g, "v0_crit": args.v0_crit, "target_ratio": args.target_ratio,
                      "J": lb.tunneling_J(args.v0_crit),
                      "onsite_integral": lb.onsite_integral(args.v0_crit)}))


def _read_schedule(path):
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    header = [h.strip() for h in lines[0].split(",")]
    data = np.loadtxt(lines[1:], delimiter=",", ndmin=2)
    cols = dict(zip(header, data.T))
    if "tau" not in cols:
        raise InvalidParameterError("schedule needs a 'tau' column")
    return cols


def cmd_gutzwiller(args):
    cols = _read_schedule(args.schedule)
    tau = cols["tau"]
    if len(tau) < 2 or np.any(np.diff(tau) <= 0):
        raise InvalidParameterError("tau column must be strictly increasing")
    if "J" in cols and "U" in cols:
        J_of = lambda t: np.interp(t, tau, cols["J"])  # noqa: E731
        U_of = lambda t: np.interp(t, tau, cols["U"])  # noqa: E731
    elif "V0" in cols:
        curve = lb.hubbard_curve(args.g_eff)
        v0 = pl.PchipInterpolator(tau, cols["V0"])
        J_of = lambda t: curve.J(v0(t))  # noqa: E731
        U_of = lambda t: curve.U(v0(t))  # noqa: E731
    else:
        raise InvalidParameterError("schedule needs (J, U) or V0 columns")
    span = (float(tau[0]), float(tau[-1]))
    dt = min(float(np.min(np.diff(tau))), args.dtau)
    sched = gz.HubbardSchedule.from_functions(J_of, U_of, span, dt)
    state = gz.ground_state(float(sched.J[0]), float(sched.U[0]), args.filling, args.n_max)
    p = _params(args)
    trace, _ = gz.propagate(state, sched, span, p.hbar_scaling, args.dtau,
                            interaction=args.interaction)
    cols = np.column_stack([trace.tau, trace.ratio, trace.a.real, trace.a.imag, trace.abs_a,
                            trace.mean_n, trace.norm])
    _emit(args, ["tau", "ratio_2J_U", "re_a", "im_a", "abs_a", "n", "norm"], cols)


def build_parser():
    ap = argparse.ArgumentParser(prog="simulate", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    def out(p):
        p.add_argument("-o", "--output", help="output file (default stdout)")

    def params(p):
        p.add_argument("--params", help="parameter JSON (default: nominal values)")

    p = sub.add_parser("run", help="full pipeline for one or more scenario files")
    p.add_argument("scenarios", nargs="+")
    p.add_argument("-o", "--output", help="output directory (default ./results)")
    p.add_argument("-j", "--jobs", type=int, default=None)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("fig2", help="steady-state S-curve")
    p.add_argument("--y2-min", type=float, default=0.0)
    p.add_argument("--y2-max", type=float, default=0.08)
    p.add_argument("--n", type=int, default=801)
    p.add_argument("--v0-crit", type=float, default=pl.CRITICAL_DEPTH)
    params(p)
    out(p)
    p.set_defaults(func=cmd_fig2)

    p = sub.add_parser("fig3", help="effective potentials")
    p.add_argument("--y2", type=float, nargs="+", default=[0.03, 0.044, 0.06])
    params(p)
    out(p)
    p.set_defaults(func=cmd_fig3)

    for name, fn, text in (("fig4", cmd_fig4, "intracavity intensity under the drive loop"),
                           ("fig5", cmd_fig5, "order parameter along the loop")):
        p = sub.add_parser(name, help=text)
        p.add_argument("--scenario", help="scenario JSON (default: nominal loop)")
        p.add_argument("--fast", action="store_true", help="fast-mirror variant")
        out(p)
        p.set_defaults(func=fn)

    p = sub.add_parser("dynamics", help="mirror trajectory for a scenario")
    p.add_argument("scenario")
    p.add_argument("--mode", choices=["full", "adiabatic"])
    out(p)
    p.set_defaults(func=cmd_dynamics)

    p = sub.add_parser("bands", help="tabulate J, U and 2J/U")
    p.add_argument("--v0-range", type=float, nargs=3, metavar=("MIN", "MAX", "STEP"),
                   default=[2.0, 40.0, 0.1])
    p.add_argument("--g-eff", type=float)
    p.add_argument("--target-ratio", type=float, default=0.17)
    p.add_argument("--v0-crit", type=float, default=pl.CRITICAL_DEPTH)
    out(p)
    p.set_defaults(func=cmd_bands)

    p = sub.add_parser("calibrate-g", help="interaction strength for the critical depth")
    p.add_argument("--target-ratio", type=float, default=0.17)
    p.add_argument("--v0-crit", type=float, default=pl.CRITICAL_DEPTH)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("gutzwiller", help="propagate a (tau, J, U) or (tau, V0) schedule")
    p.add_argument("schedule")
    p.add_argument("--dtau", type=float, default=0.01)
    p.add_argument("--n-max", type=int, default=gz.N_MAX)
    p.add_argument("--filling", type=float, default=1.0)
    p.add_argument("--g-eff", type=float)
    p.add_argument("--interaction", choices=["bose_hubbard", "n_plus_one"],
                   default="bose_hubbard")
    params(p)
    out(p)
    p.set_defaults(func=cmd_gutzwiller)
    return ap


def _exit_code(exc):
    if isinstance(exc, StageError):
        exc = exc.error
    if isinstance(exc, NumericalError):
        return EXIT_NUMERIC
    return EXIT_INVALID


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (StageError, NumericalError, InvalidParameterError, ValueError, KeyError,
            OSError, json.JSONDecodeError) as exc:
        print(f"simulate: error: {exc}", file=sys.stderr)
        return _exit_code(exc)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
