"""End-to-end driver: drive -> mirror -> lattice depth -> (J, U) -> Gutzwiller."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import PchipInterpolator

from . import cavity_steady as cs
from . import gutzwiller as gz
from . import lattice_bands as lb
from . import optomech_dynamics as od
from .errors import InvalidParameterError, OptolatticeError, RangeError, StageError
from .params_units import SystemParams, nominal_params, params_from_dict, fast_mirror, slow_mirror

NOMINAL_CYCLE = 2.5 * 2 * math.pi * 10.0  # 2.5 s of the 2 pi x 10 Hz mirror
CRITICAL_DEPTH = 10.8
RECORD_COLUMNS = ["tau", "Y2", "xi", "X2", "V0", "J", "U", "ratio_2J_U", "abs_a", "n", "norm"]

_HUBBARD_KEYS = {"g_eff", "target_ratio", "v0_crit", "v0_min", "v0_max", "step"}
_GUTZWILLER_KEYS = {"n_max", "filling", "interaction"}
_DRIVE_KEYS = {"y2_lo", "y2_hi", "tau_rise", "tau_fall", "width", "order", "y2_tail", "tau_return"}
_PRESET_KEYS = {"preset", "v0_initial", "plateau_factor", "tail_factor", "width", "order",
                "rise_frac", "fall_frac", "return_frac", "cycle"}
_SCENARIO_KEYS = {"name", "params", "drive", "tau_end", "dtau", "mode", "initial", "hubbard",
                  "gutzwiller", "refine"}


@dataclass
class Scenario:
    params: SystemParams
    drive: od.DriveSchedule
    tau_end: float = NOMINAL_CYCLE
    dtau: float = 0.005
    mode: str = "adiabatic"
    initial: tuple | None = None
    hubbard: dict = field(default_factory=dict)
    n_max: int = gz.N_MAX
    filling: float = 1.0
    interaction: str = "bose_hubbard"
    refine: int = 4
    name: str = "scenario"

    def __post_init__(self):
        if self.mode not in ("adiabatic", "full"):
            raise InvalidParameterError(f"mode must be 'adiabatic' or 'full', got {self.mode!r}")
        if not self.tau_end > 0 or not self.dtau > 0:
            raise InvalidParameterError("tau_end and dtau must be positive")
        unknown = set(self.hubbard) - _HUBBARD_KEYS
        if unknown:
            raise InvalidParameterError(f"unknown hubbard keys: {sorted(unknown)}")
        if self.interaction not in ("bose_hubbard", "n_plus_one"):
            raise InvalidParameterError(f"unknown interaction {self.interaction!r}")

    @classmethod
    def nominal(cls, fast=False, **drive_options):
        """Default loop for the slow mirror, or the fast mirror under the same dimensionless drive."""
        p = nominal_params(fast_mirror() if fast else slow_mirror())
        drive = od.nominal_drive(p, cycle=NOMINAL_CYCLE, **drive_options)
        return cls(p, drive, name="fast_mirror" if fast else "slow_mirror")

    @classmethod
    def from_dict(cls, doc):
        doc = dict(doc)
        unknown = set(doc) - _SCENARIO_KEYS
        if unknown:
            raise InvalidParameterError(f"unknown scenario keys: {sorted(unknown)}")
        p = params_from_dict(doc.get("params", {}))
        drive_doc = dict(doc.get("drive", {"preset": "nominal"}))
        if "preset" in drive_doc:
            bad = set(drive_doc) - _PRESET_KEYS
            if bad:
                raise InvalidParameterError(f"unknown drive preset keys: {sorted(bad)}")
            if drive_doc.pop("preset") != "nominal":
                raise InvalidParameterError("only the 'nominal' drive preset exists")
            drive_doc.setdefault("cycle", NOMINAL_CYCLE)
            drive = od.nominal_drive(p, **drive_doc)
        else:
            bad = set(drive_doc) - _DRIVE_KEYS
            if bad:
                raise InvalidParameterError(f"unknown drive keys: {sorted(bad)}")
            try:
                drive = od.DriveSchedule(**drive_doc)
            except TypeError as exc:
                raise InvalidParameterError(str(exc)) from exc
        gw = dict(doc.get("gutzwiller", {}))
        bad = set(gw) - _GUTZWILLER_KEYS
        if bad:
            raise InvalidParameterError(f"unknown gutzwiller keys: {sorted(bad)}")
        initial = doc.get("initial")
        if initial is not None:
            bad = set(initial) - {"xi", "xidot"}
            if bad:
                raise InvalidParameterError(f"unknown initial keys: {sorted(bad)}")
            initial = (float(initial["xi"]), float(initial.get("xidot", 0.0)))
        return cls(p, drive,
                   tau_end=float(doc.get("tau_end", NOMINAL_CYCLE)),
                   dtau=float(doc.get("dtau", 0.005)),
                   mode=doc.get("mode", "adiabatic"),
                   initial=initial,
                   hubbard=dict(doc.get("hubbard", {})),
                   n_max=int(gw.get("n_max", gz.N_MAX)),
                   filling=float(gw.get("filling", 1.0)),
                   interaction=gw.get("interaction", "bose_hubbard"),
                   refine=int(doc.get("refine", 4)),
                   name=doc.get("name", "scenario"))

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def initial_state(self):
        if self.initial is not None:
            return self.initial
        return od.lower_branch_rest(od.drive_at(self.drive, 0.0), self.params)

    def curve(self):
        return lb.hubbard_curve(**self.hubbard)


@dataclass
class ExperimentRecord:
    scenario: Scenario
    trajectory: od.Trajectory
    trace: gz.OrderParameterTrace
    v0: np.ndarray
    J: np.ndarray
    U: np.ndarray
    adiabaticity: gz.AdiabaticityReport
    crossings: list
    curve: lb.HubbardCurve

    @property
    def tau(self):
        return self.trajectory.tau

    def columns(self):
        t = self.trajectory
        return {
            "tau": t.tau, "Y2": t.y2, "xi": t.xi, "X2": t.x2, "V0": self.v0,
            "J": self.J, "U": self.U, "ratio_2J_U": 2 * self.J / self.U,
            "abs_a": self.trace.abs_a, "n": self.trace.mean_n, "norm": self.trace.norm,
        }

    def rows(self):
        cols = self.columns()
        return np.column_stack([cols[c] for c in RECORD_COLUMNS])

    def summary(self):
        a = self.adiabaticity
        return {
            "name": self.scenario.name,
            "max_rate_per_s": a.max_rate,
            "max_rate_over_omega": a.max_rate_over_omega,
            "interband_limit_per_s": a.limit,
            "adiabaticity_ratio": a.ratio,
            "adiabatic": a.passed,
            "critical_crossings_tau": self.crossings,
            "initial_order_parameter": float(self.trace.abs_a[0]),
            "norm_drift": float(np.max(np.abs(self.trace.norm - 1))),
            "filling_drift": float(np.max(np.abs(self.trace.mean_n - self.trace.mean_n[0]))),
        }


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except OptolatticeError as exc:
        raise StageError(name, exc) from exc


def integrate_mirror(scenario: Scenario):
    p, s = scenario.params, scenario.drive
    xi0, v0 = scenario.initial_state()
    span = (0.0, scenario.tau_end)
    if scenario.mode == "full":
        x0 = od.steady_field(xi0, od.drive_at(s, 0.0), p)
        return od.integrate_full(x0, xi0, v0, s, p, span, scenario.dtau)
    return od.integrate_adiabatic(xi0, v0, s, p, span, scenario.dtau)


def _lookup(curve, tau, v0):
    outside = (v0 < curve.v0_min) | (v0 > curve.v0_max)
    if np.any(outside):
        i = int(np.argmax(outside))
        raise RangeError(f"lattice depth V0={v0[i]:.6g} E_r left the Hubbard table "
                         f"[{curve.v0_min}, {curve.v0_max}]", float(tau[i]))
    return curve.J(v0), curve.U(v0)


def critical_crossings(tau, ratio, critical=gz.CRITICAL_RATIO):
    """Times where 2J/U crosses ``critical`` (linear interpolation)."""
    s = np.sign(np.asarray(ratio) - critical)
    idx = np.nonzero(s[1:] * s[:-1] < 0)[0]
    out = []
    for i in idx:
        r0, r1 = ratio[i] - critical, ratio[i + 1] - critical
        out.append(float(tau[i] + (tau[i + 1] - tau[i]) * r0 / (r0 - r1)))
    return out


def run(scenario: Scenario, curve: lb.HubbardCurve | None = None) -> ExperimentRecord:
    """Mirror integration, depth mapping, Hubbard lookup, ground state and propagation."""
    p = scenario.params
    if curve is None:
        curve = _stage("hubbard", scenario.curve)
    traj = _stage("mirror", integrate_mirror, scenario)
    v0 = traj.x2  # V0/E_r = |X|^2
    J, U = _stage("hubbard", _lookup, curve, traj.tau, v0)
    # finer schedule for the Gutzwiller integrator: monotone cubic resampling of V0(tau)
    fine_dt = scenario.dtau / scenario.refine
    n_fine = int(round(scenario.tau_end / fine_dt))
    fine_tau = fine_dt * np.arange(n_fine + 1)
    fine_v0 = np.clip(PchipInterpolator(traj.tau, v0)(fine_tau), v0.min(), v0.max())
    fJ, fU = _stage("hubbard", _lookup, curve, fine_tau, fine_v0)
    schedule = gz.HubbardSchedule(0.0, fine_dt, np.asarray(fJ), np.asarray(fU))
    gs = _stage("ground_state", gz.ground_state, float(J[0]), float(U[0]),
                scenario.filling, scenario.n_max)
    trace, _ = _stage("gutzwiller", gz.propagate, gs, schedule, (0.0, scenario.tau_end),
                      p.hbar_scaling, scenario.dtau, interaction=scenario.interaction)
    ratio = 2 * np.asarray(J) / np.asarray(U)
    report = gz.adiabaticity_monitor(traj.tau, v0, p.omega_r, p.mirror_freq)
    return ExperimentRecord(scenario, traj, trace, v0, np.asarray(J), np.asarray(U), report,
                            critical_crossings(traj.tau, ratio), curve)


def ground_state_order(curve: lb.HubbardCurve, v0_nodes, filling=1.0, n_max=gz.N_MAX):
    """|<a>| of the static ground state at each depth."""
    return np.array([abs(gz.ground_state(float(curve.J(v)), float(curve.U(v)), filling,
                                         n_max).order_parameter) for v in v0_nodes])


def mott_segment(record: ExperimentRecord, critical=gz.CRITICAL_RATIO):
    """Mask of samples inside the Mott region (2J/U below the critical ratio)."""
    return 2 * record.J / record.U < critical


def residual_oscillation(record: ExperimentRecord, settle=2 * math.pi, n_nodes=200):
    """Largest deviation of |<a>| from the instantaneous ground state after the return.

    The window starts one mirror period (``settle``) after the last upward
    crossing of the critical ratio and runs to the end of the record. The
    result is normalised by the initial order parameter.
    """
    crossings = record.crossings
    tau = record.tau
    start = crossings[-1] + settle if crossings else tau[0]
    window = tau >= start
    if not np.any(window):
        return 0.0
    v = record.v0[window]
    nodes = np.linspace(v.min(), v.max(), n_nodes) if np.ptp(v) > 0 else np.array([v[0]])
    ref_nodes = ground_state_order(record.curve, nodes, record.scenario.filling,
                                   record.scenario.n_max)
    ref = np.interp(v, nodes, ref_nodes) if len(nodes) > 1 else np.full_like(v, ref_nodes[0])
    dev = np.abs(record.trace.abs_a[window] - ref)
    return float(dev.max() / record.trace.abs_a[0])


# ---------------------------------------------------------------- figures

def figure2(p: SystemParams, y2_grid, v0_crit=CRITICAL_DEPTH):
    """S-curve rows plus the critical-depth marker as comment metadata."""
    rows = cs.s_curve(y2_grid, p)
    region = cs.bistable_region(p)
    meta = {"y2_lower": region.y2_lower, "y2_upper": region.y2_upper,
            "bistable": region.exists}
    for c in cs.critical_depth_marker(p, v0_crit):
        meta.update(critical_depth=v0_crit, critical_depth_y2=c.y2,
                    critical_depth_branch=c.branch)
    return ["Y2", "root_index", "X2", "xi", "stability"], rows, meta


def figure3(p: SystemParams, y2_values=(0.03, 0.044, 0.06), xi_grid=None):
    if xi_grid is None:
        top = max(b.displacement for y2 in y2_values for b in cs.steady_states(y2, p))
        xi_grid = np.linspace(-0.25 * top, 1.3 * top, 2001)
    xi_grid = np.asarray(xi_grid, float)
    cols = [xi_grid] + [cs.effective_potential(xi_grid, y2, p) for y2 in y2_values]
    header = ["xi"] + [f"V_Y2={y2:g}" for y2 in y2_values]
    return header, np.column_stack(cols), {}


def figure4(scenario: Scenario):
    traj = integrate_mirror(scenario)
    region = cs.bistable_region(scenario.params)
    meta = {"y2_lower": region.y2_lower, "y2_upper": region.y2_upper,
            "critical_depth": CRITICAL_DEPTH}
    return ["tau", "Y2", "X2"], np.column_stack([traj.tau, traj.y2, traj.x2]), meta


def figure5(scenario: Scenario, curve=None):
    rec = run(scenario, curve)
    meta = {"critical_ratio": gz.CRITICAL_RATIO,
            "crossings_tau": " ".join(f"{t:.17g}" for t in rec.crossings)}
    rows = np.column_stack([rec.tau, 2 * rec.J / rec.U, rec.trace.abs_a])
    return ["tau", "ratio_2J_U", "abs_a"], rows, meta


def _fmt(v):
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.17g}"


def write_csv(path_or_file, header, rows, meta=None):
    """Comma-separated output, one ``# key=value`` line per metadata entry, 17 significant digits."""
    own = isinstance(path_or_file, (str, Path))
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        for k, v in (meta or {}).items():
            fh.write(f"# {k}={_fmt(v)}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    finally:
        if own:
            fh.close()


def write_record(record: ExperimentRecord, outdir):
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "record.csv", RECORD_COLUMNS, record.rows())
    with open(out / "summary.json", "w") as fh:
        json.dump(record.summary(), fh, indent=2, sort_keys=True)
    return out
