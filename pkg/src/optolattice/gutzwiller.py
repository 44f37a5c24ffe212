"""Uniform-lattice Gutzwiller mean-field theory of the Bose-Hubbard model.

One representative site carries Fock amplitudes f_0..f_nmax. The energy per
site for a chain (two neighbours) is

    E[f] = -2 J |<a>|^2 + (U/2) sum_n n (n - 1) |f_n|^2,

and the real-time equations are i df_n/dtau = s dE/df_n^* with s the ratio
between the recoil frequency and the mirror frequency (energies in E_r).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import brentq

from . import _dop853
from .errors import CutoffError, IntegrationError, InvalidParameterError

N_MAX = 12
CRITICAL_RATIO = 1.0 / (3.0 + 2.0 * math.sqrt(2.0))
MOTT_THRESHOLD = 1e-3
RTOL = 1e-10
ATOL = 1e-12


@dataclass
class GutzwillerState:
    f: np.ndarray
    filling: float = 1.0
    mu: float = math.nan

    @property
    def n_max(self):
        return len(self.f) - 1

    @property
    def norm(self):
        return float(np.sum(np.abs(self.f) ** 2))

    @property
    def mean_n(self):
        return mean_occupation(self.f)

    @property
    def order_parameter(self):
        return order_parameter(self.f)


def order_parameter(f):
    """<a> = sum_n sqrt(n+1) f_n^* f_{n+1}."""
    f = np.asarray(f)
    n = np.arange(1, len(f))
    return complex(np.sum(np.sqrt(n) * np.conj(f[:-1]) * f[1:]))


def mean_occupation(f):
    p = np.abs(np.asarray(f)) ** 2
    return float(np.sum(np.arange(len(p)) * p))


def energy(f, J, U):
    """Gutzwiller energy per site in the same units as J and U."""
    f = np.asarray(f)
    n = np.arange(len(f))
    a = order_parameter(f)
    return float(-2 * J * abs(a) ** 2 + 0.5 * U * np.sum(n * (n - 1) * np.abs(f) ** 2))


def mean_field_hamiltonian(psi, J, U, mu, n_max=N_MAX):
    """Single-site h = -2J(psi^* a + psi a^dag) + (U/2) n(n-1) - mu n for real psi."""
    n = np.arange(n_max + 1)
    h = np.diag(0.5 * U * n * (n - 1) - mu * n).astype(float)
    off = -2 * J * psi * np.sqrt(n[1:])
    return h + np.diag(off, 1) + np.diag(off, -1)


def _site_ground(psi, J, U, mu, n_max):
    n = np.arange(n_max + 1)
    diag = 0.5 * U * n * (n - 1) - mu * n
    off = -2 * J * psi * np.sqrt(n[1:])
    if psi == 0 or J == 0:
        # degenerate diagonal: pick the lowest Fock level explicitly
        v = np.zeros(n_max + 1)
        v[int(np.argmin(diag))] = 1.0
        return v
    _, vec = eigh_tridiagonal(diag, off, select="i", select_range=(0, 0))
    v = vec[:, 0]
    return -v if v.sum() < 0 else v


def _chemical_potential(psi, J, U, filling, n_max):
    """Bisect mu so the site ground state holds ``filling`` atoms."""
    def excess(mu):
        return mean_occupation(_site_ground(psi, J, U, mu, n_max)) - filling

    lo = -10.0 * (U + J) - 1.0
    hi = U * n_max + 10.0 * (U + J) + 1.0
    if excess(hi) < 0:
        raise CutoffError(f"filling {filling} unreachable with n_max={n_max}")
    if excess(lo) > 0:
        raise CutoffError(f"filling {filling} below the reachable range")
    if psi == 0 or J == 0:
        # <n>(mu) is a staircase: plain bisection onto the step
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if excess(mid) < 0:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 4e-16 * max(1.0, abs(mid)):
                break
        return 0.5 * (lo + hi)
    return brentq(excess, lo, hi, xtol=1e-15, rtol=1e-15)


def _response(psi, J, U, filling, n_max):
    mu = _chemical_potential(psi, J, U, filling, n_max)
    f = _site_ground(psi, J, U, mu, n_max)
    return order_parameter(f).real, mu, f


def ground_state(J, U, filling=1.0, n_max=N_MAX, *, method="brent", seed=0.1,
                 tol=1e-12, max_iter=100_000) -> GutzwillerState:
    """Self-consistent mean-field ground state at fixed filling.

    ``method="brent"`` solves psi = <a>(psi) by root bracketing of the
    self-consistency gain; ``method="iterate"`` runs damped fixed-point
    iteration from ``seed``. Both fix mu by bisection at every psi and return
    a real, nonnegative <a>.
    """
    if J < 0 or not U > 0:
        raise InvalidParameterError("need J >= 0 and U > 0")
    if n_max < 6:
        raise InvalidParameterError("n_max must be at least 6")
    if J == 0:
        if filling != int(filling):
            raise InvalidParameterError("J = 0 ground state needs integer filling")
        if not 0 <= filling <= n_max:
            raise CutoffError(f"filling {filling} unreachable with n_max={n_max}")
        f = np.zeros(n_max + 1, dtype=complex)
        f[int(filling)] = 1.0
        return GutzwillerState(f, filling)
    if method == "iterate":
        psi = seed
        for _ in range(max_iter):
            new, mu, f = _response(psi, J, U, filling, n_max)
            if abs(new - psi) < tol:
                psi = new
                break
            psi = 0.5 * psi + 0.5 * new
        else:
            raise IntegrationError("self-consistency did not converge")
    elif method == "brent":
        eps = 1e-5
        gain = _response(eps, J, U, filling, n_max)[0] / eps
        if gain <= 1.0 and filling == int(filling):
            mu = _chemical_potential(eps, J, U, filling, n_max)
            f = np.zeros(n_max + 1)
            f[int(filling)] = 1.0
            return GutzwillerState(f.astype(complex), filling, mu)
        hi = math.sqrt(filling) + 0.5
        psi = brentq(lambda s: _response(s, J, U, filling, n_max)[0] - s, eps, hi,
                     xtol=1e-15, rtol=1e-15)
        _, mu, f = _response(psi, J, U, filling, n_max)
    else:
        raise ValueError(f"unknown method {method!r}")
    return GutzwillerState(f.astype(complex), filling, mu)


def critical_ratio(filling=1.0, n_max=N_MAX, lo=0.1, hi=0.3, tol=1e-6, U=1.0):
    """Locate the superfluid onset in 2J/U by bisection on ground-state sweeps."""
    def superfluid(ratio):
        gs = ground_state(ratio * U / 2, U, filling, n_max)
        return abs(gs.order_parameter) > 0

    if superfluid(lo) or not superfluid(hi):
        raise ValueError("critical ratio not bracketed")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if superfluid(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


@dataclass
class HubbardSchedule:
    """J(tau), U(tau) tabulated on a uniform grid (linear interpolation between nodes)."""

    tau0: float
    dtau: float
    J: np.ndarray
    U: np.ndarray

    @classmethod
    def constant(cls, J, U):
        return cls(0.0, 1.0, np.array([J, J], float), np.array([U, U], float))

    @classmethod
    def from_functions(cls, J_of, U_of, tau_span, dtau):
        n = int(round((tau_span[1] - tau_span[0]) / dtau))
        tau = tau_span[0] + dtau * np.arange(n + 1)
        return cls(tau_span[0], dtau, np.asarray(J_of(tau), float), np.asarray(U_of(tau), float))

    def at(self, tau):
        grid = self.tau0 + self.dtau * np.arange(len(self.J))
        return np.interp(tau, grid, self.J), np.interp(tau, grid, self.U)


@dataclass
class OrderParameterTrace:
    tau: np.ndarray
    a: np.ndarray
    ratio: np.ndarray
    mean_n: np.ndarray
    norm: np.ndarray
    energy: np.ndarray

    @property
    def abs_a(self):
        return np.abs(self.a)

    def phase(self, critical=CRITICAL_RATIO):
        """'superfluid' or 'mott' per sample, from the order parameter magnitude."""
        return np.where(self.abs_a < MOTT_THRESHOLD, "mott", "superfluid")

    def rows(self):
        return np.column_stack([self.tau, self.ratio, self.a.real, self.a.imag,
                                self.abs_a, self.mean_n, self.norm])


def propagate(state0: GutzwillerState, schedule: HubbardSchedule, tau_span, hbar_scaling,
              dtau_out=0.01, *, rtol=RTOL, atol=ATOL, interaction="bose_hubbard",
              max_steps=500_000_000):
    """Real-time Gutzwiller evolution.

    ``interaction="bose_hubbard"`` uses (U/2) n (n-1); ``"n_plus_one"`` uses
    (U/2) n (n+1), which differs by a number-dependent phase.
    Returns ``(trace, final_state)``.
    """
    inter = {"bose_hubbard": -1.0, "n_plus_one": 1.0}[interaction]
    t0, t1 = map(float, tau_span)
    n = int(round((t1 - t0) / dtau_out))
    t_out = t0 + dtau_out * np.arange(n + 1)
    f0 = np.ascontiguousarray(state0.f, dtype=np.complex128)
    out, status, t_fail = _dop853.integrate(
        f0, t_out, np.ascontiguousarray(schedule.J, float), np.ascontiguousarray(schedule.U, float),
        float(schedule.tau0), float(schedule.dtau), float(hbar_scaling), inter, rtol, atol,
        _dop853.A, _dop853.B, _dop853.C, _dop853.E3, _dop853.E5, max_steps)
    if status != 0:
        raise IntegrationError("Gutzwiller integration failed", t_fail)
    nvec = np.arange(f0.shape[0])
    sq = np.sqrt(nvec[1:])
    a = np.sum(sq * np.conj(out[:, :-1]) * out[:, 1:], axis=1)
    prob = np.abs(out) ** 2
    J, U = schedule.at(t_out)
    e = -2 * J * np.abs(a) ** 2 + 0.5 * U * (prob @ (nvec * (nvec - 1)))
    trace = OrderParameterTrace(t_out, a, 2 * J / U, prob @ nvec, prob.sum(axis=1), e)
    return trace, GutzwillerState(out[-1].copy(), state0.filling)


@dataclass(frozen=True)
class AdiabaticityReport:
    max_rate: float  # max |d(V0/E_r)/dt| in 1/s
    max_rate_over_omega: float
    limit: float  # 16 omega_r
    ratio: float
    passed: bool


def adiabaticity_monitor(tau, v0, omega_r, mirror_freq):
    """Compare max |d(V0/E_r)/dt| with the interband limit 16 omega_r (pass iff ratio < 0.1)."""
    tau = np.asarray(tau, float)
    v0 = np.asarray(v0, float)
    rate = np.abs(np.gradient(v0) / np.gradient(tau)) if len(tau) > 1 else np.zeros(1)
    max_tau = float(rate.max())
    max_rate = max_tau * mirror_freq
    limit = 16 * omega_r
    ratio = max_rate / limit
    return AdiabaticityReport(max_rate, max_tau, limit, ratio, ratio < 0.1)
