"""Steady states of the driven cavity with a movable mirror.

With ``I = |X_s|^2`` the steady-state condition is the cubic

    4 pi^2 beta^2 I^3 + 8 pi^2 delta beta I^2 + (T^2 + 4 pi^2 delta^2) I - 4 Y^2 T = 0

and the mirror sits at ``xi_s = beta I``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params_units import SystemParams

STABLE = "stable"
UNSTABLE = "unstable"


@dataclass(frozen=True)
class SteadyBranch:
    intensity: float
    displacement: float
    stability: str
    branch: str

    @property
    def stable(self):
        return self.stability == STABLE


@dataclass(frozen=True)
class BistableRegion:
    """Turning points of the S-curve.

    ``y2_lower`` is where the upper branch ends (|Y_b|^2), ``y2_upper`` where
    the lower branch ends (|Y_a|^2). ``x2_at_lower``/``x2_at_upper`` are the
    intracavity intensities at those points.
    """

    y2_lower: float
    y2_upper: float
    exists: bool
    x2_at_lower: float = math.nan
    x2_at_upper: float = math.nan


def cubic_coefficients(p: SystemParams):
    """Coefficients (a3, a2, a1) of the cubic; the constant term is ``-4 Y^2 T``."""
    pi2 = math.pi**2
    return (4 * pi2 * p.beta**2, 8 * pi2 * p.delta * p.beta, p.T**2 + 4 * pi2 * p.delta**2)


def lorentzian(xi, y2, p: SystemParams):
    """Intracavity intensity slaved to the mirror position."""
    return 4 * y2 / p.T / (1 + 4 * math.pi**2 * (p.delta + xi) ** 2 / p.T**2)


def drive_for_intensity(intensity, p: SystemParams):
    """Inverse S-curve: the drive |Y|^2 whose steady state has |X_s|^2 = intensity."""
    a3, a2, a1 = cubic_coefficients(p)
    I = np.asarray(intensity, dtype=float)
    return (((a3 * I + a2) * I + a1) * I) / (4 * p.T)


def steady_state_residual(intensity, y2, p: SystemParams):
    """Relative residual of the steady-state equation at ``intensity``."""
    rhs = 4 * y2 / p.T
    lhs = intensity * (1 + 4 * math.pi**2 * (p.delta + p.beta * intensity) ** 2 / p.T**2)
    return abs(lhs - rhs) / rhs if rhs else abs(lhs)


def _cubic_real_roots(a3, a2, a1, a0):
    """All real roots of a3 x^3 + a2 x^2 + a1 x + a0 (a3 > 0), ascending."""
    b, c, d = a2 / a3, a1 / a3, a0 / a3
    shift = b / 3
    pp = c - b * b / 3
    qq = 2 * b**3 / 27 - b * c / 3 + d
    disc = -(4 * pp**3 + 27 * qq**2)
    if disc > 0:
        m = 2 * math.sqrt(-pp / 3)
        arg = 3 * qq / (pp * m)
        theta = math.acos(max(-1.0, min(1.0, arg))) / 3
        roots = [m * math.cos(theta - 2 * math.pi * k / 3) - shift for k in range(3)]
    else:
        s = math.sqrt(max(qq * qq / 4 + pp**3 / 27, 0.0))
        roots = [np.cbrt(-qq / 2 + s) + np.cbrt(-qq / 2 - s) - shift]
    polished = []
    for r in roots:
        for _ in range(2):
            f = ((a3 * r + a2) * r + a1) * r + a0
            df = (3 * a3 * r + 2 * a2) * r + a1
            if df == 0:
                break
            step = f / df
            # skip polishing steps that would jump to a neighbouring root
            if abs(step) > 1e-3 * (abs(r) + 1e-12) and disc > 0:
                break
            r -= step
        polished.append(float(r))
    return sorted(polished)


def potential_curvature(xi, y2, p: SystemParams):
    """V''(xi) = 1 - beta dF/dxi for the radiation-pressure force F."""
    u = 2 * math.pi * (p.delta + xi) / p.T
    dF = -(4 * y2 / p.T) * 2 * u * (2 * math.pi / p.T) / (1 + u * u) ** 2
    return 1 - p.beta * dF


def bistable_region(p: SystemParams) -> BistableRegion:
    a3, a2, a1 = cubic_coefficients(p)
    # dY^2/dI = 0  <=>  3 a3 I^2 + 2 a2 I + a1 = 0
    disc = a2 * a2 - 3 * a3 * a1
    if a3 == 0 or disc <= 0:
        return BistableRegion(math.nan, math.nan, False)
    s = math.sqrt(disc)
    i_lo, i_hi = sorted(((-a2 - s) / (3 * a3), (-a2 + s) / (3 * a3)))
    if i_lo <= 0:
        return BistableRegion(math.nan, math.nan, False)
    y2_upper = float(drive_for_intensity(i_lo, p))
    y2_lower = float(drive_for_intensity(i_hi, p))
    return BistableRegion(y2_lower, y2_upper, True, i_hi, i_lo)


def steady_states(y2, p: SystemParams, region: BistableRegion | None = None):
    """All steady states at drive ``y2``, ascending in intensity (1 or 3 entries)."""
    if y2 < 0:
        raise ValueError("drive intensity must be nonnegative")
    if y2 == 0:
        return [SteadyBranch(0.0, 0.0, STABLE, "lower")]
    a3, a2, a1 = cubic_coefficients(p)
    roots = [r for r in _cubic_real_roots(a3, a2, a1, -4 * y2 * p.T) if r >= 0]
    if region is None:
        region = bistable_region(p)
    if len(roots) == 3:
        labels = ["lower", "middle", "upper"]
    elif region.exists and y2 > region.y2_upper:
        labels = ["upper"] * len(roots)
    else:
        labels = ["lower"] * len(roots)
    out = []
    for I, label in zip(roots, labels):
        xi = p.beta * I
        stability = STABLE if potential_curvature(xi, y2, p) > 0 else UNSTABLE
        out.append(SteadyBranch(I, xi, stability, label))
    return out


def effective_potential(xi, y2, p: SystemParams):
    """Effective mirror potential, referenced so that V(0) = 0.

    V(xi) = xi^2/2 - (2 beta Y^2/pi) [arctan(2 pi (delta+xi)/T) - arctan(2 pi delta/T)]
    """
    xi = np.asarray(xi, dtype=float)
    k = 2 * p.beta * y2 / math.pi
    ref = math.atan(2 * math.pi * p.delta / p.T)
    return 0.5 * xi**2 - k * (np.arctan(2 * math.pi * (p.delta + xi) / p.T) - ref)


def potential_force(xi, y2, p: SystemParams):
    """-V'(xi): restoring plus radiation-pressure force."""
    return -np.asarray(xi, dtype=float) + p.beta * lorentzian(np.asarray(xi, dtype=float), y2, p)


@dataclass(frozen=True)
class Crossing:
    y2: float
    branch: str
    stability: str


def critical_depth_marker(p: SystemParams, v0_crit, y2_max=None, stable_only=False):
    """Drives at which the S-curve reaches ``|X_s|^2 = v0_crit``.

    The S-curve is single valued in intensity, so there is exactly one
    crossing; it is reported with the branch it lies on. ``stable_only``
    drops crossings on the unstable middle branch, ``y2_max`` drops crossings
    beyond the scanned drive range.
    """
    if v0_crit < 0:
        raise ValueError("v0_crit must be nonnegative")
    y2 = float(drive_for_intensity(v0_crit, p))
    if y2_max is not None and y2 > y2_max:
        return []
    region = bistable_region(p)
    if v0_crit == 0:
        branch, stability = "lower", STABLE
    else:
        stable = potential_curvature(p.beta * v0_crit, y2, p) > 0
        stability = STABLE if stable else UNSTABLE
        if not stable:
            branch = "middle"
        elif region.exists and v0_crit >= region.x2_at_lower:
            branch = "upper"
        else:
            branch = "lower"
    if stable_only and stability != STABLE:
        return []
    return [Crossing(y2, branch, stability)]


def s_curve(y2_grid, p: SystemParams):
    """Rows ``(y2, root_index, x2, xi, stability)`` over a drive grid."""
    region = bistable_region(p)
    rows = []
    for y2 in np.asarray(y2_grid, dtype=float):
        for i, b in enumerate(steady_states(float(y2), p, region)):
            rows.append((float(y2), i, b.intensity, b.displacement, b.stability))
    return rows
