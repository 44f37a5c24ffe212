"""Physical constants, parameter containers and unit conversions.

Times are scaled to the inverse mirror frequency, lengths to half the pump
wavelength and field intensities so that the lattice depth is ``|X|^2 E_r``.
Every other module works with :class:`SystemParams` only.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

from scipy import constants as sc

from .errors import InvalidParameterError, UnavailableParameterError

HBAR = sc.hbar
C_LIGHT = sc.c
EPS0 = sc.epsilon_0
AMU = sc.physical_constants["atomic mass constant"][0]

SODIUM_MASS = 22.98976928 * AMU
SODIUM_D2_WAVELENGTH = 589.158e-9
SODIUM_D2_LINEWIDTH = 2 * math.pi * 9.795e6

# much-less-than convention shared by the weak-coupling and adiabaticity checks
MUCH_LESS_FACTOR = 0.1
DEFAULT_KAPPA = 100.0


@dataclass(frozen=True)
class PhysicalParams:
    """Dimensional description of atoms, pump, cavity and mirror (SI units, angular frequencies)."""

    atom_mass: float = SODIUM_MASS
    pump_wavelength: float = 985e-9
    mirror_mass: float = 0.078e-3
    mirror_freq: float = 2 * math.pi * 10.0
    mirror_damping: float = 0.5 * 2 * math.pi * 10.0
    mirror_reflectivity: float = 0.99
    atomic_linewidth: float = SODIUM_D2_LINEWIDTH
    atomic_freq: float = 2 * math.pi * C_LIGHT / SODIUM_D2_WAVELENGTH
    atom_detuning: float | None = None
    beam_area: float | None = None
    cavity_decay: float | None = None

    def __post_init__(self):
        for name in ("atom_mass", "pump_wavelength", "mirror_mass", "mirror_freq",
                     "atomic_linewidth", "atomic_freq"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise InvalidParameterError(f"{name} must be positive and finite, got {value!r}")
        if not 0.0 <= self.mirror_reflectivity < 1.0:
            raise InvalidParameterError("mirror_reflectivity must lie in [0, 1)")
        if self.mirror_damping < 0:
            raise InvalidParameterError("mirror_damping must be nonnegative")
        if self.beam_area is not None and not self.beam_area > 0:
            raise InvalidParameterError("beam_area must be positive")
        if self.cavity_decay is not None and not self.cavity_decay > 0:
            raise InvalidParameterError("cavity_decay must be positive")
        if self.atom_detuning is not None and not math.isfinite(self.atom_detuning):
            raise InvalidParameterError("atom_detuning must be finite")

    @property
    def transmittivity(self):
        return 1.0 - self.mirror_reflectivity

    @property
    def polarizability(self):
        """alpha = 3 pi c^2 gamma_a / (2 omega_a^3 Delta_a)."""
        if self.atom_detuning is None or self.atom_detuning == 0:
            raise UnavailableParameterError("atom_detuning is required for the polarizability")
        return (3 * math.pi * C_LIGHT**2 * self.atomic_linewidth
                / (2 * self.atomic_freq**3 * self.atom_detuning))


@dataclass(frozen=True)
class SystemParams:
    """Dimensionless optomechanical constants plus the recoil scale.

    ``mirror_freq`` (rad/s) is carried along to convert dimensionless time
    back to seconds.
    """

    T: float = 0.01
    delta: float = -0.0035
    beta: float = 0.0002
    gamma: float = 0.5
    kappa: float = DEFAULT_KAPPA
    E_r: float = field(default=None)
    omega_r: float = field(default=None)
    mirror_freq: float = 2 * math.pi * 10.0

    def __post_init__(self):
        if not 0.0 < self.T <= 1.0:
            raise InvalidParameterError(f"T must lie in (0, 1], got {self.T!r}")
        if not self.beta > 0:
            raise InvalidParameterError(f"beta must be positive, got {self.beta!r}")
        if not self.gamma >= 0:
            raise InvalidParameterError(f"gamma must be nonnegative, got {self.gamma!r}")
        if not self.kappa > 0:
            raise InvalidParameterError(f"kappa must be positive, got {self.kappa!r}")
        if not math.isfinite(self.delta):
            raise InvalidParameterError("delta must be finite")
        if not self.mirror_freq > 0:
            raise InvalidParameterError("mirror_freq must be positive")
        if self.E_r is None or self.omega_r is None:
            E_r, omega_r = recoil_energy(PhysicalParams())
            object.__setattr__(self, "E_r", E_r if self.E_r is None else self.E_r)
            object.__setattr__(self, "omega_r", omega_r if self.omega_r is None else self.omega_r)

    @property
    def bad_cavity(self):
        """False when kappa is too small for the field to follow the mirror (kappa < 10)."""
        return self.kappa >= 10.0

    @property
    def hbar_scaling(self):
        """omega_r / Omega: converts energies in E_r into rates per unit dimensionless time."""
        return self.omega_r / self.mirror_freq

    def with_(self, **changes):
        return replace(self, **changes)


def recoil_energy(phys: PhysicalParams):
    """Return ``(E_r, omega_r)`` in joules and rad/s."""
    if not (phys.pump_wavelength > 0 and phys.atom_mass > 0):
        raise InvalidParameterError("wavelength and atom mass must be positive")
    k_p = 2 * math.pi / phys.pump_wavelength
    E_r = HBAR**2 * k_p**2 / (2 * phys.atom_mass)
    return E_r, E_r / HBAR


def beta_coefficient(phys: PhysicalParams):
    """beta = A E_r / (lambda_p M Omega^2 c alpha); sign follows the atomic detuning."""
    if phys.beam_area is None or phys.atom_detuning is None:
        raise UnavailableParameterError(
            "beta needs beam_area and atom_detuning; supply beta in dimensionless form instead")
    E_r, _ = recoil_energy(phys)
    return (phys.beam_area * E_r
            / (phys.pump_wavelength * phys.mirror_mass * phys.mirror_freq**2
               * C_LIGHT * phys.polarizability))


def weak_coupling_check(n_atoms, g0, atom_detuning, cavity_decay):
    """Check ``N g0^2 / |Delta_a| << kappa_c``.

    Returns ``(ok, margin)`` with ``margin = (N g0^2/|Delta_a|)/kappa_c`` and
    ``ok`` true iff margin < 0.1.
    """
    if atom_detuning == 0:
        raise ZeroDivisionError("atom_detuning must be nonzero")
    for v in (n_atoms, g0, atom_detuning, cavity_decay):
        if not math.isfinite(v):
            raise InvalidParameterError("weak_coupling_check inputs must be finite")
    margin = n_atoms * g0**2 / abs(atom_detuning) / cavity_decay
    return margin < MUCH_LESS_FACTOR, margin


def to_seconds(tau, mirror_freq):
    return tau / mirror_freq


def to_dimensionless_time(t, mirror_freq):
    return t * mirror_freq


def system_params(phys: PhysicalParams, delta, beta=None, gamma=None, kappa=None, T=None):
    """Build :class:`SystemParams` from physical inputs.

    ``beta``, ``gamma``, ``kappa`` and ``T`` override the values derived from ``phys``.
    """
    E_r, omega_r = recoil_energy(phys)
    if beta is None:
        beta = beta_coefficient(phys)
    if gamma is None:
        gamma = phys.mirror_damping / phys.mirror_freq
    if kappa is None:
        kappa = DEFAULT_KAPPA if phys.cavity_decay is None else phys.cavity_decay / phys.mirror_freq
    if T is None:
        T = phys.transmittivity
    return SystemParams(T=T, delta=delta, beta=beta, gamma=gamma,
                        kappa=kappa, E_r=E_r, omega_r=omega_r, mirror_freq=phys.mirror_freq)


def slow_mirror():
    """Mirror of the 2.5 s loop: M = 0.078 g, Omega = 2 pi x 10 Hz."""
    return PhysicalParams(mirror_mass=0.078e-3, mirror_freq=2 * math.pi * 10.0,
                          mirror_damping=0.5 * 2 * math.pi * 10.0)


def fast_mirror():
    """Mirror of the 0.5 s loop: M = 0.031 g, Omega = 2 pi x 50 Hz."""
    return PhysicalParams(mirror_mass=0.031e-3, mirror_freq=2 * math.pi * 50.0,
                          mirror_damping=0.5 * 2 * math.pi * 50.0)


def nominal_params(phys: PhysicalParams | None = None, **overrides):
    """T = 0.01, delta = -0.0035, beta = 0.0002, gamma = 0.5 with the given mirror."""
    phys = slow_mirror() if phys is None else phys
    values = dict(T=0.01, delta=-0.0035, beta=0.0002, gamma=0.5, kappa=None)
    values.update(overrides)
    return system_params(phys, **values)


# JSON keys -> (PhysicalParams field, multiplier to SI / rad/s)
_PHYSICAL_KEYS = {
    "atom_mass_kg": ("atom_mass", 1.0),
    "atom_mass_amu": ("atom_mass", AMU),
    "pump_wavelength_m": ("pump_wavelength", 1.0),
    "pump_wavelength_nm": ("pump_wavelength", 1e-9),
    "mirror_mass_kg": ("mirror_mass", 1.0),
    "mirror_mass_g": ("mirror_mass", 1e-3),
    "mirror_freq_hz": ("mirror_freq", 2 * math.pi),
    "mirror_freq_rad_s": ("mirror_freq", 1.0),
    "mirror_damping_per_s": ("mirror_damping", 1.0),
    "mirror_reflectivity": ("mirror_reflectivity", 1.0),
    "atomic_linewidth_hz": ("atomic_linewidth", 2 * math.pi),
    "atomic_linewidth_rad_s": ("atomic_linewidth", 1.0),
    "atomic_freq_hz": ("atomic_freq", 2 * math.pi),
    "atomic_freq_rad_s": ("atomic_freq", 1.0),
    "atom_detuning_hz": ("atom_detuning", 2 * math.pi),
    "atom_detuning_rad_s": ("atom_detuning", 1.0),
    "beam_area_m2": ("beam_area", 1.0),
    "cavity_decay_per_s": ("cavity_decay", 1.0),
}
_DIMENSIONLESS_KEYS = {"T", "delta", "beta", "gamma", "kappa"}


def params_from_dict(doc):
    """Parse a parameter document into :class:`SystemParams`.

    Physical keys carry their unit in the name; dimensionless overrides live
    under ``"dimensionless"``. Unknown keys raise :class:`InvalidParameterError`.
    """
    doc = dict(doc)
    dimless = doc.pop("dimensionless", {}) or {}
    unknown = set(dimless) - _DIMENSIONLESS_KEYS
    if unknown:
        raise InvalidParameterError(f"unknown dimensionless keys: {sorted(unknown)}")
    kwargs = {}
    for key, value in doc.items():
        if key not in _PHYSICAL_KEYS:
            raise InvalidParameterError(f"unknown parameter key: {key!r}")
        name, scale = _PHYSICAL_KEYS[key]
        if name in kwargs:
            raise InvalidParameterError(f"parameter {name} given twice")
        kwargs[name] = None if value is None else float(value) * scale
    if "mirror_freq" in kwargs and "mirror_damping" not in kwargs:
        kwargs["mirror_damping"] = 0.5 * kwargs["mirror_freq"]
    try:
        phys = PhysicalParams(**kwargs)
    except TypeError as exc:
        raise InvalidParameterError(str(exc)) from exc
    delta = dimless.get("delta", -0.0035)
    beta = dimless.get("beta")
    if beta is None and (phys.beam_area is None or phys.atom_detuning is None):
        beta = 0.0002
    T = dimless.get("T")
    if T is None and "mirror_reflectivity" not in doc:
        T = 0.01
    return system_params(phys, delta=delta, beta=beta, gamma=dimless.get("gamma"),
                         kappa=dimless.get("kappa"), T=T)


def load_params(path):
    with open(Path(path)) as fh:
        return params_from_dict(json.load(fh))
