"""Bloch bands, Wannier functions and Bose-Hubbard parameters of V0 sin^2(k_p x).

Energies are in recoil units E_r, quasimomenta in units of k_p (first zone
q in [-1, 1]) and positions in lattice spacings d = lambda_p / 2.
"""
from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.linalg import eigh_tridiagonal

from .errors import NumericalError, RangeError

CUTOFF = 15
N_Q = 101
POINTS_PER_SITE = 512
N_SITES = 5
CACHE_ENV = "OPTOLATTICE_CACHE_DIR"


@dataclass(frozen=True)
class BandStructure:
    v0: float
    q: np.ndarray
    energies: np.ndarray  # shape (len(q), n_bands)
    cutoff: int

    def bandwidth(self, band=0):
        e = self.energies[:, band]
        return e.max() - e.min()


def _bloch_solve(q, v0, cutoff, n_bands, vectors=False):
    m = np.arange(-cutoff, cutoff + 1)
    diag = (q + 2 * m) ** 2 + v0 / 2
    off = np.full(2 * cutoff, -v0 / 4)
    select = (0, n_bands - 1)
    try:
        if vectors:
            return eigh_tridiagonal(diag, off, select="i", select_range=select)
        return eigh_tridiagonal(diag, off, eigvals_only=True, select="i", select_range=select)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"band solve failed at q={q}, V0={v0}: {exc}") from exc


def bloch_hamiltonian(q, v0, cutoff=CUTOFF):
    """Dense plane-wave Hamiltonian H(q) in units of E_r."""
    m = np.arange(-cutoff, cutoff + 1)
    h = np.diag((q + 2 * m) ** 2 + v0 / 2.0)
    h += np.diag(np.full(2 * cutoff, -v0 / 4), 1) + np.diag(np.full(2 * cutoff, -v0 / 4), -1)
    return h


def quasimomenta(n_q=N_Q):
    """Symmetric grid over the first zone that avoids double-counting the edge."""
    return -1.0 + (2 * np.arange(n_q) + 1) / n_q


def band_structure(v0, n_bands=3, n_q=N_Q, cutoff=CUTOFF, q=None) -> BandStructure:
    if v0 < 0:
        raise ValueError("V0 must be nonnegative")
    if cutoff < 8:
        raise ValueError("cutoff must keep at least 8 plane waves on each side")
    q = np.linspace(-1.0, 1.0, n_q) if q is None else np.asarray(q, dtype=float)
    energies = np.array([_bloch_solve(qq, v0, cutoff, n_bands) for qq in q])
    return BandStructure(float(v0), q, energies, cutoff)


def tunneling_J(v0, cutoff=CUTOFF):
    """Quarter bandwidth of the lowest band, J = (E0(1) - E0(0)) / 4."""
    if not v0 > 0:
        raise ValueError("V0 must be positive")
    e_center = _bloch_solve(0.0, v0, cutoff, 1)[0]
    e_edge = _bloch_solve(1.0, v0, cutoff, 1)[0]
    return abs(e_edge - e_center) / 4


def _lowest_band_states(v0, n_q, cutoff):
    q = quasimomenta(n_q)
    coeffs = np.empty((n_q, 2 * cutoff + 1))
    energies = np.empty(n_q)
    for j, qq in enumerate(q):
        w, v = _bloch_solve(qq, v0, cutoff, 1, vectors=True)
        c = v[:, 0]
        # gauge: Bloch function real and positive at the well centre x = 0
        if c.sum() < 0:
            c = -c
        coeffs[j] = c
        energies[j] = w[0]
    return q, coeffs, energies


def default_grid(points_per_site=POINTS_PER_SITE, n_sites=N_SITES):
    n = 2 * n_sites * points_per_site
    return (np.arange(n) - n // 2) / points_per_site


def wannier_lowest(v0, n_q=N_Q, x=None, cutoff=CUTOFF):
    """Real, even Wannier function of the lowest band centred on x = 0.

    Built as (1/N_q) sum_q psi_q(x) with each Bloch function fixed real and
    positive at x = 0. Normalised to one over the whole lattice.
    Returns ``(x, w)``.
    """
    if not v0 > 0:
        raise ValueError("V0 must be positive")
    x = default_grid() if x is None else np.asarray(x, dtype=float)
    q, coeffs, _ = _lowest_band_states(v0, n_q, cutoff)
    m = np.arange(-cutoff, cutoff + 1)
    k = q[:, None] + 2 * m[None, :]  # (n_q, n_m)
    # sum over plane waves with the q <-> -q pairs folded into cosines
    k, c = k.reshape(-1), coeffs.reshape(-1)
    w = np.empty_like(x)
    for lo in range(0, len(x), 512):
        chunk = x[lo:lo + 512]
        w[lo:lo + 512] = c @ np.cos(np.pi * k[:, None] * chunk[None, :])
    return x, w / n_q


def _onsite_integral_fast(v0, n_q, cutoff, points_per_site=POINTS_PER_SITE, n_sites=N_SITES):
    """∫ w^4 dx using the lattice-translation factorisation of the Bloch sum."""
    q, coeffs, _ = _lowest_band_states(v0, n_q, cutoff)
    y = np.arange(points_per_site) / points_per_site
    m = np.arange(-cutoff, cutoff + 1)
    periodic = coeffs @ np.exp(2j * np.pi * m[:, None] * y[None, :])  # (n_q, n_y)
    cell = np.exp(1j * np.pi * q[:, None] * y[None, :]) * periodic
    sites = np.arange(-n_sites, n_sites)
    shift = np.exp(1j * np.pi * q[None, :] * sites[:, None])  # (n_s, n_q)
    w = (shift @ cell).real / n_q
    return float(np.sum(w**4) / points_per_site)


def onsite_integral(v0, n_q=N_Q, cutoff=CUTOFF):
    """∫ |w(x)|^4 dx in units of 1/d."""
    return _onsite_integral_fast(v0, n_q, cutoff)


def onsite_U(v0, g_eff, n_q=N_Q, cutoff=CUTOFF):
    """U = g_eff ∫ |w|^4 dx in units of E_r (g_eff in E_r d)."""
    if not g_eff > 0:
        raise ValueError("g_eff must be positive")
    return g_eff * onsite_integral(v0, n_q, cutoff)


def calibrate_g(v0_crit=10.8, target_ratio=0.17, n_q=N_Q, cutoff=CUTOFF):
    """Interaction strength placing the 2J/U = ``target_ratio`` crossing at ``v0_crit``."""
    if not target_ratio > 0:
        raise ValueError("target_ratio must be positive")
    return 2 * tunneling_J(v0_crit, cutoff) / (target_ratio * onsite_integral(v0_crit, n_q, cutoff))


def hopping_integral(v0, n_q=N_Q, cutoff=CUTOFF, points_per_site=POINTS_PER_SITE, n_sites=N_SITES):
    """-∫ w(x - 1) H w(x) dx evaluated in real space.

    The kinetic term uses a fourth-order finite-difference Laplacian on the
    sampled Wannier function, so this is independent of the band energies.
    """
    x = default_grid(points_per_site, n_sites)
    _, w = wannier_lowest(v0, n_q, x, cutoff)
    h = 1.0 / points_per_site
    lap = np.zeros_like(w)
    lap[2:-2] = (-w[4:] + 16 * w[3:-1] - 30 * w[2:-2] + 16 * w[1:-3] - w[:-4]) / (12 * h * h)
    # E_r = hbar^2 k^2 / 2m and x in units of pi / k
    hw = -lap / np.pi**2 + v0 * np.sin(np.pi * x) ** 2 * w
    shifted = np.roll(w, points_per_site)  # w(x - 1)
    valid = slice(points_per_site + 2, len(x) - 2)
    return float(-np.sum(shifted[valid] * hw[valid]) * h)


@dataclass(frozen=True)
class HubbardCurve:
    """Tabulated J(V0), U(V0) with monotone cubic interpolation."""

    v0: np.ndarray
    J_table: np.ndarray
    U_table: np.ndarray
    g_eff: float

    def __post_init__(self):
        object.__setattr__(self, "_J", PchipInterpolator(self.v0, self.J_table))
        object.__setattr__(self, "_U", PchipInterpolator(self.v0, self.U_table))

    @property
    def v0_min(self):
        return float(self.v0[0])

    @property
    def v0_max(self):
        return float(self.v0[-1])

    def _lookup(self, interp, table, v0):
        v = np.asarray(v0, dtype=float)
        if np.any(v < self.v0[0]) or np.any(v > self.v0[-1]):
            bad = v[(v < self.v0[0]) | (v > self.v0[-1])]
            raise RangeError(f"V0={bad.flat[0]!r} outside the Hubbard table "
                             f"[{self.v0_min}, {self.v0_max}]")
        out = np.asarray(interp(v), dtype=float)
        # exact node hits return the tabulated values bit-for-bit
        idx = np.clip(np.searchsorted(self.v0, v), 0, len(self.v0) - 1)
        hit = self.v0[idx] == v
        out = np.where(hit, table[idx], out)
        return out if out.ndim else float(out)

    def J(self, v0):
        return self._lookup(self._J, self.J_table, v0)

    def U(self, v0):
        return self._lookup(self._U, self.U_table, v0)

    def ratio(self, v0):
        """2J/U."""
        return 2 * np.asarray(self.J(v0)) / np.asarray(self.U(v0))

    def rows(self):
        return np.column_stack([self.v0, self.J_table, self.U_table,
                                2 * self.J_table / self.U_table])


def _cache_key(fields):
    return hashlib.sha256(json.dumps(fields, sort_keys=True).encode()).hexdigest()[:20]


def hubbard_curve(g_eff=None, *, target_ratio=0.17, v0_crit=10.8, v0_min=2.0, v0_max=40.0,
                  step=0.1, cutoff=CUTOFF, n_q=N_Q, cache_dir=None) -> HubbardCurve:
    """Tabulate J and U over a depth grid.

    When ``g_eff`` is None it is calibrated so 2J/U = ``target_ratio`` at
    ``v0_crit``. Results are cached as ``.npz`` under ``cache_dir`` (or the
    directory named by ``$OPTOLATTICE_CACHE_DIR``) when one is given.
    """
    if g_eff is None:
        g_eff = calibrate_g(v0_crit, target_ratio, n_q, cutoff)
    n = int(round((v0_max - v0_min) / step))
    grid = np.round(v0_min + step * np.arange(n + 1), 10)
    cache_dir = cache_dir or os.environ.get(CACHE_ENV)
    path = None
    if cache_dir:
        fields = dict(cutoff=cutoff, n_q=n_q, g_eff=float(g_eff).hex(), v0_min=v0_min,
                    v0_max=v0_max, step=step)
        path = Path(cache_dir) / f"hubbard_{_cache_key(fields)}.npz"
        if path.exists():
            data = np.load(path)
            return HubbardCurve(data["v0"], data["J"], data["U"], float(data["g_eff"]))
    J = np.array([tunneling_J(v, cutoff) for v in grid])
    U = np.array([g_eff * onsite_integral(v, n_q, cutoff) for v in grid])
    curve = HubbardCurve(grid, J, U, float(g_eff))
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        np.savez(path, v0=grid, J=J, U=U, g_eff=g_eff)
    return curve
