"""Physical constants and atomic species data.

Everything is SI. Decay rates are inverse lifetimes in s^-1; they are
never multiplied by 2*pi anywhere in the package.
"""

import json
import math
from dataclasses import dataclass, fields
from pathlib import Path

from scipy import constants as sp


@dataclass(frozen=True)
class PhysicalConstants:
    """CODATA values from scipy.constants (SI)."""

    # Boltzmann constant (J/K)
    k_B: float = sp.k
    # reduced Planck constant (J s)
    hbar: float = sp.hbar
    # Planck constant (J s)
    h: float = sp.h
    # Bohr magneton (J/T)
    mu_B: float = sp.physical_constants["Bohr magneton"][0]
    # vacuum permittivity (F/m)
    eps_0: float = sp.epsilon_0
    # speed of light (m/s)
    c: float = sp.c
    # atomic mass unit (kg)
    u: float = sp.atomic_mass


CONSTANTS = PhysicalConstants()


@dataclass(frozen=True)
class AtomicSpecies:
    """Four-level atom: ground sublevels |1>, |2>; |3> (absorption), |4> (cycling).

    Attributes:
        name         : identifier
        mass [kg]
        sigma_col [m^2]: ground-state collisional cross-section
        A_31 [1/s]   : decay rate |3> -> |1> (also used where A_13 appears)
        A_24 [1/s]   : decay rate of the |4> <-> |2> cycling transition (A_42)
        lambda_31 [m]: |1> <-> |3> wavelength
        lambda_24 [m]: |2> <-> |4> wavelength
    """

    name: str
    mass: float
    sigma_col: float
    A_31: float
    A_24: float
    lambda_31: float
    lambda_24: float

    @property
    def A_13(self):
        return self.A_31

    @property
    def A_42(self):
        return self.A_24

    def __post_init__(self):
        for f in fields(self):
            if f.name == "name":
                continue
            value = getattr(self, f.name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{f.name} must be finite and positive, got {value!r}")

    def to_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


def cesium_preset():
    """Cesium-133 with D1 as the |1>-|3> line and D2 as the |2>-|4> line.

    Lifetimes 34.894 ns (6P1/2) and 30.473 ns (6P3/2); wavelengths are the
    vacuum D1/D2 values. The collisional cross-section is the generic alkali
    figure of 1e-14 cm^2.
    """
    return AtomicSpecies(
        name="Cs133",
        mass=132.905451933 * CONSTANTS.u,
        sigma_col=1e-18,
        A_31=1.0 / 34.894e-9,
        A_24=1.0 / 30.473e-9,
        lambda_31=894.593e-9,
        lambda_24=852.347e-9,
    )


PRESETS = {"cesium": cesium_preset, "Cs133": cesium_preset}


def load_species(source):
    """Build an AtomicSpecies from a JSON file path, a JSON string, a dict, or a preset name."""
    if isinstance(source, AtomicSpecies):
        return source
    if isinstance(source, str) and source in PRESETS:
        return PRESETS[source]()
    if isinstance(source, (str, Path)):
        path = Path(source)
        text = path.read_text() if path.exists() else str(source)
        source = json.loads(text)
    if not isinstance(source, dict):
        raise TypeError(f"cannot build a species from {type(source).__name__}")
    names = {f.name for f in fields(AtomicSpecies)}
    unknown = set(source) - names
    if unknown:
        raise ValueError(f"unknown species fields: {sorted(unknown)}")
    missing = names - set(source)
    if missing:
        raise ValueError(f"missing species fields: {sorted(missing)}")
    return AtomicSpecies(**source)


# (lower, upper) sanity ranges in SI
SANITY_RANGES = {
    "n_density": (1e6, 1e26),
    "temperature": (1e-9, 1e4),
    "cell_length": (1e-6, 10.0),
    "beam_area": (1e-14, 1.0),
    "passes": (1, 1e6),
    "B_field": (0.0, 100.0),
    "pulse_duration": (1e-15, 1.0),
    "omega_e": (0.0, 1e15),
    "detuning": (1.0, 1e16),
    "photon_wavelength": (1e-8, 1e-3),
    "omega_r": (0.0, 1e15),
    "eta_det": (0.0, 1.0),
    "eta_up": (0.0, 1.0),
}

# fields where zero is a legitimate value
_ZERO_OK = {"B_field"}
# fields on (0, 1]
_FRACTIONS = {"eta_det", "eta_up"}


def validate_units(design):
    """Check every numeric design field; returns a list of violation strings (empty if valid)."""
    violations = []
    for name, (lo, hi) in SANITY_RANGES.items():
        value = getattr(design, name)
        try:
            value = float(value)
        except (TypeError, ValueError):
            violations.append(f"{name}: not a number ({value!r})")
            continue
        if not math.isfinite(value):
            violations.append(f"{name}: not finite ({value!r})")
        elif name in _FRACTIONS:
            if not 0.0 < value <= 1.0:
                violations.append(f"{name}: must lie in (0, 1], got {value!r}")
        elif value < 0 or (value == 0 and name not in _ZERO_OK):
            kind = "non-negative" if name in _ZERO_OK else "positive"
            violations.append(f"{name}: must be {kind}, got {value!r}")
        elif not lo <= value <= hi:
            violations.append(f"{name}: {value!r} outside sanity range [{lo:g}, {hi:g}]")
    if not isinstance(design.species, AtomicSpecies):
        violations.append("species: not an AtomicSpecies")
    return violations
