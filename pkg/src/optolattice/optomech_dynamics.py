"""Time-domain mirror and cavity-field dynamics under a pulsed drive."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from . import cavity_steady as cs
from .errors import IntegrationError, InvalidParameterError
from .params_units import SystemParams

RTOL = 1e-9
ATOL = 1e-12


def _rise(tau, center, width, order):
    x = np.minimum(np.asarray(tau, dtype=float) - center, 0.0) / width
    return np.exp(-(x ** (2 * order)))


def _fall(tau, center, width, order):
    x = np.maximum(np.asarray(tau, dtype=float) - center, 0.0) / width
    return np.exp(-(x ** (2 * order)))


@dataclass(frozen=True)
class DriveSchedule:
    """Flat-top input intensity with super-Gaussian edges.

    The drive sits at ``y2_lo``, rises to ``y2_hi`` around ``tau_rise`` and
    falls back around ``tau_fall``. When ``y2_tail`` is set the fall goes to
    ``y2_tail`` instead and the drive returns to ``y2_lo`` around
    ``tau_return``, closing a loop through the bistable region.
    """

    y2_lo: float
    y2_hi: float
    tau_rise: float
    tau_fall: float
    width: float
    order: int = 3
    y2_tail: float | None = None
    tau_return: float | None = None

    def __post_init__(self):
        if self.y2_lo < 0 or self.y2_hi < 0 or (self.y2_tail is not None and self.y2_tail < 0):
            raise InvalidParameterError("drive levels must be nonnegative")
        if not self.tau_rise < self.tau_fall:
            raise InvalidParameterError("tau_rise must precede tau_fall")
        if not self.width > 0:
            raise InvalidParameterError("edge width must be positive")
        if int(self.order) != self.order or self.order < 1:
            raise InvalidParameterError("super-Gaussian order must be a positive integer")
        if (self.y2_tail is None) != (self.tau_return is None):
            raise InvalidParameterError("y2_tail and tau_return must be given together")
        if self.tau_return is not None and not self.tau_return > self.tau_fall:
            raise InvalidParameterError("tau_return must follow tau_fall")

    def window(self, tau):
        """Flat-top window g(tau) in [0, 1]."""
        return (_rise(tau, self.tau_rise, self.width, self.order)
                * _fall(tau, self.tau_fall, self.width, self.order))

    def __call__(self, tau):
        return drive_at(self, tau)

    @property
    def levels(self):
        return [v for v in (self.y2_lo, self.y2_hi, self.y2_tail) if v is not None]


def drive_at(s: DriveSchedule, tau):
    """Input intensity |Y(tau)|^2 (scalar or array)."""
    y2 = s.y2_lo + (s.y2_hi - s.y2_lo) * s.window(tau)
    if s.y2_tail is not None:
        dip = (1 - _fall(tau, s.tau_fall, s.width, s.order)) * _fall(
            tau, s.tau_return, s.width, s.order)
        y2 = y2 + (s.y2_tail - s.y2_lo) * dip
    return y2 if np.ndim(y2) else float(y2)


def constant_drive(y2):
    """A drive held at ``y2`` forever."""
    return DriveSchedule(y2, y2, 0.0, 1.0, 1.0)


@dataclass
class Trajectory:
    tau: np.ndarray
    xi: np.ndarray
    xidot: np.ndarray
    x2: np.ndarray
    y2: np.ndarray
    field: np.ndarray | None = None

    def rows(self):
        return np.column_stack([self.tau, self.y2, self.xi, self.xidot, self.x2])


def _output_grid(tau_span, dtau_out):
    t0, t1 = map(float, tau_span)
    if not t1 > t0:
        raise InvalidParameterError("tau_span must be nonempty")
    n = int(round((t1 - t0) / dtau_out))
    return t0 + dtau_out * np.arange(n + 1)


def _max_step(s: DriveSchedule):
    # keep the controller from stepping over a drive edge while at rest
    return s.width / 4


def _solve(rhs, y0, grid, s, method, rtol, atol):
    sol = solve_ivp(rhs, (grid[0], grid[-1]), y0, method=method, t_eval=grid,
                    rtol=rtol, atol=atol, max_step=_max_step(s))
    if sol.status != 0:
        tau = float(sol.t[-1]) if len(sol.t) else float(grid[0])
        raise IntegrationError(f"integration failed: {sol.message}", tau)
    return sol.y


def adiabatic_rhs(s: DriveSchedule, p: SystemParams):
    def rhs(tau, y):
        xi, v = y
        return [v, -p.gamma * v - xi + p.beta * cs.lorentzian(xi, drive_at(s, tau), p)]
    return rhs


def integrate_adiabatic(xi0, xidot0, s: DriveSchedule, p: SystemParams, tau_span,
                        dtau_out=0.01, *, rtol=RTOL, atol=ATOL, method="RK45"):
    """Mirror equation with the cavity field adiabatically eliminated.

    |X|^2 is evaluated from the mirror position at every output sample.
    """
    if p.gamma < 0:
        raise InvalidParameterError("gamma must be nonnegative")
    grid = _output_grid(tau_span, dtau_out)
    y = _solve(adiabatic_rhs(s, p), [xi0, xidot0], grid, s, method, rtol, atol)
    y2 = drive_at(s, grid)
    return Trajectory(grid, y[0], y[1], cs.lorentzian(y[0], y2, p), y2)


def integrate_full(x0, xi0, xidot0, s: DriveSchedule, p: SystemParams, tau_span,
                   dtau_out=0.01, *, rtol=RTOL, atol=ATOL, method="RK45"):
    """Co-integrate the complex cavity field and the mirror.

    dX/dtau = -[1 - i (2 pi/T)(delta + xi)] kappa X + (2 kappa/sqrt T) Y
    xi'' + gamma xi' + xi = beta |X|^2
    The input amplitude Y is taken real and nonnegative.
    """
    if not p.kappa > 0:
        raise InvalidParameterError("kappa must be positive")
    grid = _output_grid(tau_span, dtau_out)
    k, w, drive_gain = p.kappa, 2 * math.pi / p.T, 2 * p.kappa / math.sqrt(p.T)

    def rhs(tau, y):
        xr, xim, xi, v = y
        det = w * (p.delta + xi)
        amp = drive_gain * math.sqrt(drive_at(s, tau))
        return [-k * xr - k * det * xim + amp,
                -k * xim + k * det * xr,
                v,
                -p.gamma * v - xi + p.beta * (xr * xr + xim * xim)]

    x0 = complex(x0)
    y = _solve(rhs, [x0.real, x0.imag, xi0, xidot0], grid, s, method, rtol, atol)
    field = y[0] + 1j * y[1]
    return Trajectory(grid, y[2], y[3], np.abs(field) ** 2, drive_at(s, grid), field)


def rk4_fixed(rhs, y0, tau_span, h=1e-4, dtau_out=0.01):
    """Classical fixed-step RK4, kept as a cross-check for the adaptive integrator."""
    grid = _output_grid(tau_span, dtau_out)
    per_out = int(round(dtau_out / h))
    h = dtau_out / per_out
    y = np.asarray(y0, dtype=float)
    out = np.empty((len(grid), len(y)))
    out[0] = y
    t = grid[0]
    for i in range(1, len(grid)):
        for _ in range(per_out):
            k1 = np.asarray(rhs(t, y))
            k2 = np.asarray(rhs(t + h / 2, y + h / 2 * k1))
            k3 = np.asarray(rhs(t + h / 2, y + h / 2 * k2))
            k4 = np.asarray(rhs(t + h, y + h * k3))
            y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            t += h
        t = grid[i]
        out[i] = y
    return grid, out.T


def lower_branch_rest(y2, p: SystemParams):
    """Mirror at rest on the lowest steady state for drive ``y2``."""
    return steady_rest(y2, p, "lowest")


def steady_rest(y2, p: SystemParams, which="lowest"):
    roots = [b for b in cs.steady_states(y2, p) if b.stable]
    b = roots[0] if which == "lowest" else roots[-1]
    return b.displacement, 0.0


def steady_field(xi, y2, p: SystemParams):
    """Steady complex field for a mirror frozen at ``xi``."""
    return (2 * math.sqrt(y2) / math.sqrt(p.T)) / (1 - 2j * math.pi * (p.delta + xi) / p.T)


def default_threshold(s: DriveSchedule, p: SystemParams):
    """Geometric mean of the lower-branch end intensity and the plateau's upper-branch intensity."""
    region = cs.bistable_region(p)
    upper = cs.steady_states(s.y2_hi, p, region)[-1].intensity
    lower = region.x2_at_upper if region.exists else cs.steady_states(s.y2_lo, p)[0].intensity
    return math.sqrt(lower * upper)


def switching_time(s: DriveSchedule, p: SystemParams, threshold=None, tau_span=None,
                   dtau_out=0.001):
    """Time from plateau onset until |X|^2 first exceeds ``threshold``.

    Plateau onset is the centre of the rising edge, ``s.tau_rise``. The
    mirror starts at rest on the lower branch of the baseline drive. A
    negative value means the switch completed while the edge was still
    rising. Returns ``None`` when the intensity never crosses the threshold.
    """
    if threshold is None:
        threshold = default_threshold(s, p)
    if tau_span is None:
        tau_span = (0.0, s.tau_fall)
    xi0, v0 = lower_branch_rest(s.y2_lo, p)
    traj = integrate_adiabatic(xi0, v0, s, p, tau_span, dtau_out)
    above = np.nonzero(traj.x2 >= threshold)[0]
    if len(above) == 0:
        return None
    i = above[0]
    if i == 0:
        return traj.tau[0] - s.tau_rise
    # linear interpolation of the crossing
    t0, t1 = traj.tau[i - 1], traj.tau[i]
    f0, f1 = traj.x2[i - 1], traj.x2[i]
    t_cross = t0 + (threshold - f0) * (t1 - t0) / (f1 - f0)
    return float(t_cross - s.tau_rise)


def nominal_drive(p: SystemParams, *, cycle=None, v0_initial=5.0, plateau_factor=1.02,
                tail_factor=0.8, width=8.0, order=3, rise_frac=0.1, fall_frac=0.5,
                return_frac=0.75):
    """Drive loop through the bistable window.

    Starts on the lower branch at ``|X|^2 = v0_initial``, jumps to
    ``plateau_factor`` times the upper turning point, falls to
    ``tail_factor`` times the lower turning point, and returns to the start.
    ``cycle`` is the loop duration in dimensionless time (default 2.5 s of the
    slow mirror, i.e. 2.5 s x 2 pi x 10 Hz).
    """
    region = cs.bistable_region(p)
    if not region.exists:
        raise InvalidParameterError("parameters have no bistable region")
    if cycle is None:
        cycle = 2.5 * 2 * math.pi * 10.0
    base = float(cs.drive_for_intensity(v0_initial, p))
    sched = DriveSchedule(
        y2_lo=base,
        y2_hi=plateau_factor * region.y2_upper,
        tau_rise=rise_frac * cycle,
        tau_fall=fall_frac * cycle,
        width=width,
        order=order,
        y2_tail=tail_factor * region.y2_lower,
        tau_return=return_frac * cycle,
    )
    if sched.window(0.0) > 1e-6:
        raise InvalidParameterError("edge width too large for the cycle: the drive would not "
                                    "start at its baseline")
    return sched
