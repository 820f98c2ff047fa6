"""Closed-form detector model: collision time, absorption length, readout,
Zeeman-shifted dark counts and the three-term efficiency budget.

Frequencies in a DetectorDesign (detuning, omega_e, omega_r) are stored as
plain s^-1 numbers. ``convention="ordinary"`` uses them as stored;
``convention="angular"`` multiplies the detunings (detuning and the Zeeman
shift) by 2*pi before they enter a formula. Rabi frequencies and decay rates
are never rescaled.
"""

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .species import CONSTANTS, AtomicSpecies, cesium_preset, load_species, validate_units

CONVENTIONS = ("ordinary", "angular")


@dataclass(frozen=True)
class DetectorDesign:
    """One detector instance, SI units throughout.

    Attributes:
        species                : AtomicSpecies
        n_density [1/m^3]      : atom number density
        temperature [K]
        cell_length [m]
        beam_area [m^2]
        passes                 : number of passes q through the cell
        B_field [T]
        pulse_duration [s]     : photon/escort pulse length T_p
        omega_e [1/s]          : escort Rabi frequency
        detuning [1/s]         : Raman one-photon detuning
        photon_wavelength [m]
        omega_r [1/s]          : readout Rabi frequency
        eta_det                : imaging detection efficiency in (0, 1]
        eta_up                 : upconversion pre-efficiency in (0, 1]
    """

    species: AtomicSpecies
    n_density: float
    temperature: float
    cell_length: float
    beam_area: float
    passes: float
    B_field: float
    pulse_duration: float
    omega_e: float
    detuning: float
    photon_wavelength: float
    omega_r: float
    eta_det: float
    eta_up: float = 1.0

    def replace(self, **changes):
        return replace(self, **changes)

    def to_dict(self):
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["species"] = self.species.to_dict()
        return d


DESIGN_FIELDS = tuple(f.name for f in fields(DetectorDesign) if f.name != "species")

# Unit-suffixed input keys accepted by design_from_dict: suffix -> SI factor.
UNIT_SUFFIXES = {
    "n_density": {"m3": 1.0, "cm3": 1e6},
    "temperature": {"K": 1.0, "mK": 1e-3, "uK": 1e-6},
    "cell_length": {"m": 1.0, "cm": 1e-2, "mm": 1e-3},
    "beam_area": {"m2": 1.0, "cm2": 1e-4, "mm2": 1e-6},
    "B_field": {"T": 1.0, "G": 1e-4, "mT": 1e-3},
    "pulse_duration": {"s": 1.0, "us": 1e-6, "ns": 1e-9},
    "detuning": {"Hz": 1.0, "MHz": 1e6, "GHz": 1e9},
    "photon_wavelength": {"m": 1.0, "nm": 1e-9},
    "omega_e": {"Hz": 1.0, "MHz": 1e6},
    "omega_r": {"Hz": 1.0, "MHz": 1e6},
}
# Rabi frequencies may also be given in units of a species decay rate.
RATE_MULTIPLES = {"omega_e": ("A31", "A_31"), "omega_r": ("A24", "A_24")}


def design_from_dict(data):
    """Build a DetectorDesign from plain or unit-suffixed keys.

    ``{"n_density_cm3": 1e9}`` becomes ``n_density = 1e15`` (m^-3);
    ``{"omega_e_A31": 1.0}`` becomes ``omega_e = species.A_31``. A missing
    species defaults to cesium; photon_wavelength defaults to the species
    lambda_31.
    """
    data = dict(data)
    species = load_species(data.pop("species", "cesium"))
    values = {}
    for key, raw in data.items():
        name, factor = resolve_key(key, species)
        if name in values:
            raise ValueError(f"{name} given more than once")
        values[name] = raw * factor if factor != 1.0 else raw
    values.setdefault("photon_wavelength", species.lambda_31)
    missing = [n for n in DESIGN_FIELDS if n not in values and n != "eta_up"]
    if missing:
        raise ValueError(f"missing design fields: {missing}")
    return DetectorDesign(species=species, **values)


def resolve_key(key, species):
    if key in DESIGN_FIELDS:
        return key, 1.0
    for name, suffixes in UNIT_SUFFIXES.items():
        for suffix, factor in suffixes.items():
            if key == f"{name}_{suffix}":
                return name, factor
    for name, (suffix, attr) in RATE_MULTIPLES.items():
        if key == f"{name}_{suffix}":
            return name, getattr(species, attr)
    raise ValueError(f"unknown design field {key!r}")


def load_design(path):
    return design_from_dict(json.loads(Path(path).read_text()))


def paper_design(species=None):
    """The worked example: Cs at 1e9 cm^-3, 1 mK, 10 ns pulses, 0.5 GHz detuning,
    Omega_e = A_13, 2 mm cell, 1e-2 mm^2 beam, 100 passes, eta_det = 1/8,
    B = 1 T and Omega_r = 0.01 A_42."""
    sp = species or cesium_preset()
    return DetectorDesign(
        species=sp,
        n_density=1e15,
        temperature=1e-3,
        cell_length=2e-3,
        beam_area=1e-8,
        passes=100,
        B_field=1.0,
        pulse_duration=10e-9,
        omega_e=sp.A_31,
        detuning=0.5e9,
        photon_wavelength=sp.lambda_31,
        omega_r=0.01 * sp.A_24,
        eta_det=1 / 8,
    )


def _check_convention(convention):
    if convention not in CONVENTIONS:
        raise ValueError(f"convention must be one of {CONVENTIONS}, got {convention!r}")
    return 2 * math.pi if convention == "angular" else 1.0


def effective_detuning(design, convention="ordinary"):
    return design.detuning * _check_convention(convention)


def collision_time(design):
    """tau_col = sqrt(M / 3 k_B T) / (n sigma)."""
    if design.temperature <= 0 or design.n_density <= 0:
        raise ValueError("temperature and n_density must be positive")
    sp = design.species
    return math.sqrt(sp.mass / (3 * CONSTANTS.k_B * design.temperature)) / (design.n_density * sp.sigma_col)


def absorption_length(design, convention="ordinary"):
    """l_abs = Delta^2 / (lambda_ph^2 n Omega_e^2 T_p A_31); infinite when the escort is off."""
    A = design.species.A_31
    if A == 0:
        raise ValueError("A_31 must be non-zero")
    delta = effective_detuning(design, convention)
    rate = design.photon_wavelength**2 * design.n_density * design.omega_e**2 * design.pulse_duration * A
    if rate == 0:
        return math.inf
    return delta**2 / rate


def readout_time(design):
    """t_ro = (2 Omega_r^2 + A_24^2) / (A_24 Omega_r^2 eta_det)."""
    if design.eta_det == 0:
        raise ValueError("eta_det must be non-zero")
    A = design.species.A_24
    w2 = design.omega_r**2
    if w2 == 0:
        return math.inf
    return (2 * w2 + A**2) / (A * w2 * design.eta_det)


def zeeman_detuning(design, convention="ordinary"):
    """Readout-laser detuning from the |1> -> P3/2 m=1/2 line.

    ordinary: 2 mu_B B / (3 h); angular: 2 mu_B B / (3 hbar).
    """
    if design.B_field < 0:
        raise ValueError("B_field must be non-negative")
    return _check_convention(convention) * 2 * CONSTANTS.mu_B * design.B_field / (3 * CONSTANTS.h)


def dark_count_prob(design, convention="ordinary"):
    """Per-atom dark-count probability over one readout time."""
    d = zeeman_detuning(design, convention)
    w2 = design.omega_r**2
    if w2 == 0:
        return 0.0
    return readout_time(design) * design.species.A_42 * w2 / (6 * (d**2 + w2 / 3))


def atom_count(design):
    """Atoms in the interaction volume, n A l_cell, rounded."""
    return int(round(design.n_density * design.beam_area * design.cell_length))


def net_dark_count(design=None, convention="ordinary", *, p_dc=None, n_atoms=None):
    """(linear, exact) net dark-count probability: N P_dc and 1 - (1 - P_dc)^N.

    ``p_dc`` and ``n_atoms`` override the values derived from ``design``.
    """
    if p_dc is None:
        p_dc = dark_count_prob(design, convention)
    if n_atoms is None:
        n_atoms = atom_count(design)
    linear = n_atoms * p_dc
    exact = -math.expm1(n_atoms * math.log1p(-p_dc)) if p_dc < 1 else (1.0 if n_atoms > 0 else 0.0)
    return linear, exact


@dataclass(frozen=True)
class EfficiencyBudget:
    loss_scatter: float
    loss_transmission: float
    loss_collision: float
    eta: float
    clamped: bool = False
    warnings: tuple = field(default=())
    convention: str = "ordinary"

    @property
    def total_loss(self):
        return self.loss_scatter + self.loss_transmission + self.loss_collision

    @property
    def valid(self):
        return not self.clamped and not self.warnings

    def to_dict(self):
        d = asdict(self)
        d["warnings"] = list(self.warnings)
        d["valid"] = self.valid
        return d


def scatter_loss_term(design, convention="ordinary"):
    """(T_p A_31 Omega_e^2 / 16 Delta^2)^2."""
    delta = effective_detuning(design, convention)
    return (design.pulse_duration * design.species.A_31 * design.omega_e**2 / (16 * delta**2)) ** 2


def model_warnings(design, convention="ordinary"):
    warnings = []
    if effective_detuning(design, convention) < 10 * design.omega_e:
        warnings.append("detuning < 10 omega_e: adiabatic elimination not justified")
    return warnings


def efficiency_budget(design, convention="ordinary"):
    """Three-loss efficiency estimate; eta is clamped to [0, 1] with a flag, never raised."""
    loss_scatter = scatter_loss_term(design, convention)
    l_abs = absorption_length(design, convention)
    loss_transmission = math.exp(-design.passes * design.cell_length / l_abs)
    t_ro = readout_time(design)
    loss_collision = t_ro / (2 * collision_time(design))
    raw = design.eta_up * (1 - loss_scatter - loss_transmission - loss_collision)
    eta = min(max(raw, 0.0), 1.0)
    return EfficiencyBudget(
        loss_scatter=loss_scatter,
        loss_transmission=loss_transmission,
        loss_collision=loss_collision,
        eta=eta,
        clamped=eta != raw,
        warnings=tuple(model_warnings(design, convention)),
        convention=convention,
    )


def absorption_probability(design, convention="ordinary"):
    """Probability the photon is absorbed rather than scattered or transmitted."""
    b = efficiency_budget(design, convention)
    return min(max(1 - b.loss_scatter - b.loss_transmission, 0.0), 1.0)


def summary(design, convention="ordinary"):
    """Every scalar the model produces, as a flat dict."""
    budget = efficiency_budget(design, convention)
    linear, exact = net_dark_count(design, convention)
    return {
        "convention": convention,
        "eta": budget.eta,
        "loss_scatter": budget.loss_scatter,
        "loss_transmission": budget.loss_transmission,
        "loss_collision": budget.loss_collision,
        "clamped": budget.clamped,
        "valid": budget.valid,
        "warnings": list(budget.warnings),
        "N": atom_count(design),
        "tau_col": collision_time(design),
        "l_abs": absorption_length(design, convention),
        "t_ro": readout_time(design),
        "delta_zeeman": zeeman_detuning(design, convention),
        "P_dc": dark_count_prob(design, convention),
        "net_dark_linear": linear,
        "net_dark_exact": exact,
    }


__all__ = [
    "DetectorDesign",
    "EfficiencyBudget",
    "design_from_dict",
    "load_design",
    "paper_design",
    "collision_time",
    "absorption_length",
    "readout_time",
    "zeeman_detuning",
    "dark_count_prob",
    "atom_count",
    "net_dark_count",
    "efficiency_budget",
    "scatter_loss_term",
    "absorption_probability",
    "summary",
    "validate_units",
]
