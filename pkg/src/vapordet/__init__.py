"""Model, dynamics, oracle, readout Monte Carlo and design search for an
atomic-vapor photon-number-resolving detector."""

__version__ = "0.1.0"

from .species import CONSTANTS, AtomicSpecies, cesium_preset, load_species, validate_units
from .model import (
    DetectorDesign,
    EfficiencyBudget,
    absorption_length,
    atom_count,
    collision_time,
    dark_count_prob,
    design_from_dict,
    efficiency_budget,
    load_design,
    net_dark_count,
    paper_design,
    readout_time,
    summary,
    zeeman_detuning,
)
