"""Compiled adaptive DOP853 stepper for the single-site Gutzwiller equations.

The Butcher tableau is taken from SciPy; the loop itself is jitted because
the right-hand side is tiny and a Python-level integrator spends all its
time in call overhead. J and U are linearly interpolated from tables on a
uniform time grid.
"""
import numpy as np
from numba import njit
from scipy.integrate._ivp import dop853_coefficients as _dop

N_STAGES = _dop.N_STAGES
A = np.ascontiguousarray(_dop.A[:N_STAGES, :N_STAGES])
B = np.ascontiguousarray(_dop.B)
C = np.ascontiguousarray(_dop.C[:N_STAGES])
E3 = np.ascontiguousarray(_dop.E3)
E5 = np.ascontiguousarray(_dop.E5)


@njit(cache=True)
def _interp(table, t0, dt, t):
    x = (t - t0) / dt
    n = table.shape[0]
    if x <= 0.0:
        return table[0]
    if x >= n - 1:
        return table[n - 1]
    i = int(x)
    frac = x - i
    return table[i] * (1.0 - frac) + table[i + 1] * frac


@njit(cache=True)
def _rhs(t, f, out, J_tab, U_tab, t0, dt, scale, inter):
    """out = -i * scale * dE/df* for the uniform Gutzwiller energy functional."""
    n = f.shape[0]
    J = _interp(J_tab, t0, dt, t)
    U = _interp(U_tab, t0, dt, t)
    a = 0j
    for k in range(n - 1):
        a += np.sqrt(k + 1.0) * np.conj(f[k]) * f[k + 1]
    ac = np.conj(a)
    for k in range(n):
        h = 0.5 * U * k * (k + inter) * f[k]
        if k > 0:
            h -= 2.0 * J * np.sqrt(k * 1.0) * f[k - 1] * a
        if k < n - 1:
            h -= 2.0 * J * ac * np.sqrt(k + 1.0) * f[k + 1]
        out[k] = -1j * scale * h


@njit(cache=True)
def _rms(err, y, y_new, rtol, atol):
    s = 0.0
    for k in range(err.shape[0]):
        sc = atol + rtol * max(abs(y[k]), abs(y_new[k]))
        s += (abs(err[k]) / sc) ** 2
    return s


@njit(cache=True)
def integrate(f0, t_out, J_tab, U_tab, t0_tab, dt_tab, scale, inter, rtol, atol,
              A, B, C, E3, E5, max_steps):
    """Integrate from t_out[0] through every t_out; returns (samples, status, t_fail)."""
    n = f0.shape[0]
    ns = B.shape[0]
    out = np.empty((t_out.shape[0], n), dtype=np.complex128)
    out[0] = f0
    y = f0.copy()
    K = np.empty((ns + 1, n), dtype=np.complex128)
    ytmp = np.empty(n, dtype=np.complex128)
    y_new = np.empty(n, dtype=np.complex128)
    err5 = np.empty(n, dtype=np.complex128)
    err3 = np.empty(n, dtype=np.complex128)
    t = t_out[0]
    h = 1e-4
    steps = 0
    _rhs(t, y, K[0], J_tab, U_tab, t0_tab, dt_tab, scale, inter)
    for j in range(1, t_out.shape[0]):
        target = t_out[j]
        while t < target:
            if steps >= max_steps:
                return out, 1, t
            last = False
            if t + h >= target:
                h_use = target - t
                last = True
            else:
                h_use = h
            # stages
            for s in range(1, ns):
                for k in range(n):
                    acc = 0j
                    for r in range(s):
                        acc += A[s, r] * K[r, k]
                    ytmp[k] = y[k] + h_use * acc
                _rhs(t + C[s] * h_use, ytmp, K[s], J_tab, U_tab, t0_tab, dt_tab, scale, inter)
            for k in range(n):
                acc = 0j
                for r in range(ns):
                    acc += B[r] * K[r, k]
                y_new[k] = y[k] + h_use * acc
            _rhs(t + h_use, y_new, K[ns], J_tab, U_tab, t0_tab, dt_tab, scale, inter)
            for k in range(n):
                a5 = 0j
                a3 = 0j
                for r in range(ns + 1):
                    a5 += E5[r] * K[r, k]
                    a3 += E3[r] * K[r, k]
                err5[k] = a5
                err3[k] = a3
            e5 = _rms(err5, y, y_new, rtol, atol)
            e3 = _rms(err3, y, y_new, rtol, atol)
            if e5 == 0.0 and e3 == 0.0:
                err = 0.0
            else:
                denom = e5 + 0.01 * e3
                err = abs(h_use) * e5 / np.sqrt(denom * n)
            steps += 1
            if err <= 1.0:
                t = target if last else t + h_use
                for k in range(n):
                    y[k] = y_new[k]
                    K[0, k] = K[ns, k]
                if err == 0.0:
                    factor = 10.0
                else:
                    factor = min(10.0, 0.9 * err ** (-1.0 / 8.0))
                if not last or factor < 1.0:
                    h = h_use * factor
            else:
                h = h_use * max(0.2, 0.9 * err ** (-1.0 / 8.0))
                if h < 1e-14 * max(1.0, abs(t)):
                    return out, 2, t
        out[j] = y
    return out, 0, t
