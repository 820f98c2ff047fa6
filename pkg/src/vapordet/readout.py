"""Monte Carlo of cycling-transition readout and photon-number inference.

Each trial follows one pulse of ``n_photons_true`` photons through absorption,
collisional survival, fluorescence registration and dark counts. Atoms are
assumed individually resolvable, so the inferred photon number is the count of
atoms that registered at least one fluorescence photon.

Trials are drawn in fixed-size blocks; block ``b`` uses the generator seeded
by ``(rng_seed, b)``, so results do not depend on how blocks are scheduled.
"""

import csv
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import binom

from .model import absorption_probability, atom_count, collision_time, dark_count_prob, readout_time

BLOCK = 8192


@dataclass(frozen=True)
class ReadoutScenario:
    """One readout configuration.

    ``absorb_prob`` overrides the model's per-photon absorption probability;
    ``dark_counts=False`` switches dark counts off.
    """

    design: object
    n_photons_true: int
    readout_duration: float
    trials: int = 10000
    rng_seed: int = 0
    absorb_prob: float = None
    dark_counts: bool = True
    convention: str = "ordinary"

    def __post_init__(self):
        if not self.readout_duration > 0:
            raise ValueError("readout_duration must be positive")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.n_photons_true < 0:
            raise ValueError("n_photons_true must be >= 0")
        if self.absorb_prob is not None and not 0 <= self.absorb_prob <= 1:
            raise ValueError("absorb_prob must lie in [0, 1]")

    @property
    def warnings(self):
        n = atom_count(self.design)
        if self.n_photons_true > n / 10:
            return [f"n_photons_true={self.n_photons_true} is not << atom count {n}"]
        return []


@dataclass(frozen=True)
class Probabilities:
    absorb: float
    survive: float
    register: float
    dark: float

    @property
    def per_photon(self):
        return self.absorb * self.survive * self.register


def stage_probabilities(scenario):
    """Per-photon and per-atom probabilities for each stage of a trial."""
    d = scenario.design
    absorb = absorption_probability(d, scenario.convention) if scenario.absorb_prob is None else scenario.absorb_prob
    survive = math.exp(-scenario.readout_duration / (2 * collision_time(d)))
    t_ro = readout_time(d)
    register = -math.expm1(-scenario.readout_duration / t_ro)
    dark = min(1.0, dark_count_prob(d, scenario.convention) * scenario.readout_duration / t_ro) if scenario.dark_counts else 0.0
    return Probabilities(absorb, survive, register, dark)


@dataclass
class TrialOutcomes:
    """Columnar trial results; ``outcomes[k]`` gives one TrialOutcome."""

    n_absorbed: np.ndarray
    n_atoms_detected: np.ndarray
    n_dark_atoms: np.ndarray

    @property
    def inferred_n(self):
        return self.n_atoms_detected + self.n_dark_atoms

    def __len__(self):
        return self.n_absorbed.size

    def __getitem__(self, k):
        return TrialOutcome(int(self.n_absorbed[k]), int(self.n_atoms_detected[k]), int(self.n_dark_atoms[k]), int(self.inferred_n[k]))

    def __iter__(self):
        return (self[k] for k in range(len(self)))


@dataclass(frozen=True)
class TrialOutcome:
    n_absorbed: int
    n_atoms_detected: int
    n_dark_atoms: int
    inferred_n: int


def run_trials(scenario):
    """Simulate ``scenario.trials`` independent readouts."""
    p = stage_probabilities(scenario)
    n_atoms = atom_count(scenario.design)
    n = min(scenario.n_photons_true, n_atoms)
    absorbed, detected, dark = [], [], []
    for b, start in enumerate(range(0, scenario.trials, BLOCK)):
        size = min(BLOCK, scenario.trials - start)
        rng = np.random.default_rng([scenario.rng_seed, b])
        a = rng.binomial(n, p.absorb, size)
        s = rng.binomial(a, p.survive)
        det = rng.binomial(s, p.register)
        drk = rng.binomial(n_atoms - a, p.dark)
        absorbed.append(a)
        detected.append(det)
        dark.append(drk)
    return TrialOutcomes(np.concatenate(absorbed), np.concatenate(detected), np.concatenate(dark))


def fluorescence_photon_count(design, readout_duration):
    """(expected registered photons per excited atom, scattered photon rate in 1/s).

    The scattering rate is A_24 Omega_r^2 / (2 Omega_r^2 + A_24^2); registered
    photons arrive at rate eta_det times that, i.e. one per readout time.
    """
    if not readout_duration > 0:
        raise ValueError("readout_duration must be positive")
    A = design.species.A_24
    w2 = design.omega_r**2
    rate = A * w2 / (2 * w2 + A**2)
    return readout_duration / readout_time(design), rate


@dataclass
class DiscriminationReport:
    n_values: np.ndarray
    confusion: np.ndarray  # rows: true n, columns: inferred m = 0..
    counts: np.ndarray
    trials: int
    rng_seed: int
    error_n_vs_n1: dict

    @property
    def stderr(self):
        """Binomial standard error of every confusion-matrix cell."""
        p = self.confusion
        return np.sqrt(p * (1 - p) / self.trials)

    def to_dict(self):
        return {
            "rng_seed": self.rng_seed,
            "trials": self.trials,
            "n_values": [int(n) for n in self.n_values],
            "confusion": self.confusion.tolist(),
            "stderr": self.stderr.tolist(),
            "error_n_vs_n1": {str(k): v for k, v in self.error_n_vs_n1.items()},
        }

    def write_json(self, path, header=None):
        data = dict(header or {})
        data.update(self.to_dict())
        with open(path, "w") as fh:
            json.dump(data, fh, indent=2, sort_keys=True)
            fh.write("\n")

    def write_csv(self, path, header=None):
        with open(path, "w", newline="") as fh:
            for k, v in (header or {}).items():
                fh.write(f"# {k}: {v}\n")
            w = csv.writer(fh)
            w.writerow(["n_true"] + [f"P_m{m}" for m in range(self.confusion.shape[1])])
            for n, row in zip(self.n_values, self.confusion):
                w.writerow([int(n)] + [repr(float(x)) for x in row])


def ml_error(p_n, p_n1):
    """Equal-prior maximum-likelihood error between rows P(m|n) and P(m|n+1).

    Ties go to the smaller n.
    """
    decide_n = p_n >= p_n1
    return 0.5 * (np.sum(p_n[~decide_n]) + np.sum(p_n1[decide_n]))


def discrimination_report(design, n_range, trials, rng_seed, readout_duration=None, **scenario_kw):
    """Empirical confusion matrix over ``n_range`` and the adjacent-n ML errors.

    ``readout_duration`` defaults to ten readout times. Extra keyword
    arguments go to ReadoutScenario (absorb_prob, dark_counts, convention).
    Each n uses seed ``rng_seed + n``.
    """
    n_values = np.array(sorted(set(int(n) for n in n_range)))
    if n_values.size == 0:
        raise ValueError("n_range must not be empty")
    if readout_duration is None:
        readout_duration = 10 * readout_time(design)
    inferred = []
    for n in n_values:
        sc = ReadoutScenario(design, int(n), readout_duration, trials, rng_seed + int(n), **scenario_kw)
        inferred.append(run_trials(sc).inferred_n)
    width = max(int(n_values.max()), max(int(x.max()) for x in inferred)) + 1
    counts = np.array([np.bincount(x, minlength=width) for x in inferred])
    confusion = counts / trials
    errors = {}
    for k in range(n_values.size - 1):
        if n_values[k + 1] == n_values[k] + 1:
            errors[int(n_values[k])] = float(ml_error(confusion[k], confusion[k + 1]))
    return DiscriminationReport(n_values, confusion, counts, trials, rng_seed, errors)


def binomial_ml_error(eta, n):
    """Closed-form ML error between n and n+1 photons for per-photon efficiency eta, no dark counts."""
    m = np.arange(n + 2)
    return float(ml_error(binom.pmf(m, n, eta), binom.pmf(m, n + 1, eta)))
