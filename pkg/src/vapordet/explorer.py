"""Grid sweeps, constrained simplex optimization and Pareto fronts over DetectorDesign."""

import csv
import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from . import model
from .model import DESIGN_FIELDS, efficiency_budget, net_dark_count

# metric name -> (unit, function(design, convention))
METRICS = {
    "eta": ("1", lambda d, c: efficiency_budget(d, c).eta),
    "loss_scatter": ("1", lambda d, c: efficiency_budget(d, c).loss_scatter),
    "loss_transmission": ("1", lambda d, c: efficiency_budget(d, c).loss_transmission),
    "loss_collision": ("1", lambda d, c: efficiency_budget(d, c).loss_collision),
    "P_dc": ("1", model.dark_count_prob),
    "net_dark_linear": ("1", lambda d, c: net_dark_count(d, c)[0]),
    "net_dark_exact": ("1", lambda d, c: net_dark_count(d, c)[1]),
    "N": ("1", lambda d, c: model.atom_count(d)),
    "tau_col": ("s", lambda d, c: model.collision_time(d)),
    "l_abs": ("m", model.absorption_length),
    "t_ro": ("s", lambda d, c: model.readout_time(d)),
    "delta_zeeman": ("1/s", model.zeeman_detuning),
}

FIELD_UNITS = {
    "n_density": "1/m^3",
    "temperature": "K",
    "cell_length": "m",
    "beam_area": "m^2",
    "passes": "1",
    "B_field": "T",
    "pulse_duration": "s",
    "omega_e": "1/s",
    "detuning": "1/s",
    "photon_wavelength": "m",
    "omega_r": "1/s",
    "eta_det": "1",
    "eta_up": "1",
}

# penalty weight for constraint violation and for leaving the model's validity region
PENALTY = 1e3


class InfeasibleProblem(ValueError):
    """No probe point satisfies the dark-count budget with valid model flags."""


@dataclass
class SweepSpec:
    base: model.DetectorDesign
    axes: list
    outputs: list = field(default_factory=lambda: ["eta"])
    convention: str = "ordinary"

    def __post_init__(self):
        self.axes = [(name, np.asarray(values, dtype=float)) for name, values in self.axes]
        for name, values in self.axes:
            if name not in DESIGN_FIELDS:
                raise ValueError(f"unknown design field {name!r}")
            if values.ndim != 1 or values.size == 0:
                raise ValueError(f"axis {name!r} has an empty grid")
            if not np.all(np.isfinite(values)):
                raise ValueError(f"axis {name!r} has non-finite values")
        unknown = [m for m in self.outputs if m not in METRICS]
        if unknown:
            raise ValueError(f"unknown metrics: {unknown}")


def evaluate(design, outputs, convention="ordinary"):
    """Requested metrics plus validity flags for one design; errors land in the row."""
    row = {}
    try:
        budget = efficiency_budget(design, convention)
        row.update({m: METRICS[m][1](design, convention) for m in outputs})
        row["valid"] = budget.valid
        row["clamped"] = budget.clamped
        row["warnings"] = "; ".join(budget.warnings)
        row["error"] = ""
    except (ValueError, ZeroDivisionError, OverflowError) as exc:
        row.update({m: math.nan for m in outputs})
        row.update(valid=False, clamped=False, warnings="", error=str(exc))
    return row


def run_sweep(spec):
    """Evaluate every point of the Cartesian grid; one dict per point."""
    names = [n for n, _ in spec.axes]
    rows = []
    for point in itertools.product(*(v for _, v in spec.axes)):
        coords = dict(zip(names, (float(x) for x in point)))
        row = dict(coords)
        if spec.outputs:
            row.update(evaluate(spec.base.replace(**coords), spec.outputs, spec.convention))
        rows.append(row)
    return rows


def column_label(name):
    if name in METRICS:
        return f"{name}[{METRICS[name][0]}]"
    if name in FIELD_UNITS:
        return f"{name}[{FIELD_UNITS[name]}]"
    return name


def write_sweep_csv(rows, path, header=None):
    """CSV with units in every column name; ``header`` items become leading # lines."""
    columns = list(rows[0]) if rows else []
    with open(path, "w", newline="") as fh:
        for k, v in (header or {}).items():
            fh.write(f"# {k}: {v}\n")
        w = csv.writer(fh)
        w.writerow([column_label(c) for c in columns])
        for row in rows:
            w.writerow([repr(row[c]) if isinstance(row[c], float) else row[c] for c in columns])


@dataclass
class OptimizationProblem:
    """Maximize eta over ``free_fields`` ({name: (low, high)}) subject to
    net_dark_count.exact <= budget and clear validity flags."""

    base: model.DetectorDesign
    free_fields: dict
    budget: float = 1.0
    convention: str = "ordinary"
    probe_points: int = 5

    def __post_init__(self):
        if not 0 < self.budget <= 1:
            raise ValueError("budget must lie in (0, 1]")
        if not self.free_fields:
            raise ValueError("need at least one free field")
        for name, (lo, hi) in self.free_fields.items():
            if name not in DESIGN_FIELDS:
                raise ValueError(f"unknown design field {name!r}")
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise ValueError(f"bad bounds for {name!r}: {(lo, hi)}")

    @property
    def names(self):
        return list(self.free_fields)

    def _log(self, name):
        lo, hi = self.free_fields[name]
        return lo > 0 and hi / lo >= 100

    def to_values(self, u):
        """Map unit-cube coordinates to field values (log-spaced for wide positive bounds)."""
        out = {}
        for name, x in zip(self.names, np.clip(u, 0.0, 1.0)):
            lo, hi = self.free_fields[name]
            if self._log(name):
                out[name] = float(math.exp(math.log(lo) + x * (math.log(hi) - math.log(lo))))
            else:
                out[name] = float(lo + x * (hi - lo))
        return out

    def design(self, u):
        return self.base.replace(**self.to_values(u))

    def assess(self, design):
        """(penalized objective, eta, net dark exact, feasible)."""
        budget = efficiency_budget(design, self.convention)
        ndc = net_dark_count(design, self.convention)[1]
        violation = max(0.0, ndc - self.budget)
        objective = -budget.eta + PENALTY * violation + (0.0 if budget.valid else PENALTY)
        return objective, budget.eta, ndc, violation == 0 and budget.valid


@dataclass
class OptimizationResult:
    design: model.DetectorDesign
    budget: model.EfficiencyBudget
    net_dark_exact: float
    objective: float
    trace: list
    values: dict

    def write_trace(self, path, header=None):
        """JSON lines, one evaluation per line; ``header`` becomes the first line."""
        with open(path, "w") as fh:
            if header:
                fh.write(json.dumps({"header": header}, sort_keys=True) + "\n")
            for rec in self.trace:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")


def optimize(problem, xatol=1e-10, fatol=1e-15, maxiter=4000):
    """Probe a coarse grid, then run a bounded Nelder-Mead search from the best point.

    The returned design is the best feasible evaluation seen; its feasibility
    is re-checked without the penalty. Raises InfeasibleProblem when no probe
    point is feasible.
    """
    names = problem.names
    dim = len(names)
    trace = []

    def evaluate_u(u, stage):
        u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
        design = problem.design(u)
        obj, eta, ndc, feasible = problem.assess(design)
        trace.append(
            {
                "stage": stage,
                "index": len(trace),
                "values": problem.to_values(u),
                "objective": obj,
                "eta": eta,
                "net_dark_exact": ndc,
                "feasible": feasible,
            }
        )
        return obj

    probe = np.linspace(0.0, 1.0, problem.probe_points)
    best_u, best_obj = None, math.inf
    for u in itertools.product(probe, repeat=dim):
        obj = evaluate_u(u, "probe")
        if trace[-1]["feasible"] and obj < best_obj:
            best_u, best_obj = np.array(u), obj
    if best_u is None:
        raise InfeasibleProblem(
            f"no feasible probe point among {len(trace)}: dark-count budget {problem.budget:g} "
            f"cannot be met with valid model flags (smallest net dark count "
            f"{min(r['net_dark_exact'] for r in trace):.4g})"
        )

    # initial simplex steps inward from the probe point
    simplex = [best_u]
    for k in range(dim):
        v = best_u.copy()
        v[k] += -0.1 if v[k] > 0.5 else 0.1
        simplex.append(v)
    minimize(
        lambda u: evaluate_u(u, "simplex"),
        best_u,
        method="Nelder-Mead",
        bounds=[(0.0, 1.0)] * dim,
        options={"initial_simplex": np.array(simplex), "xatol": xatol, "fatol": fatol, "maxiter": maxiter},
    )

    feasible = [r for r in trace if r["feasible"]]
    best = min(feasible, key=lambda r: (r["objective"], r["index"]))
    values = dict(best["values"])
    if "passes" in values:
        values["passes"] = _best_integer_passes(problem, values)
    design = problem.base.replace(**values)
    obj, eta, ndc, ok = problem.assess(design)
    if not ok:
        raise InfeasibleProblem("optimum failed the final feasibility check")
    return OptimizationResult(design, efficiency_budget(design, problem.convention), ndc, obj, trace, values)


def _best_integer_passes(problem, values):
    lo, hi = problem.free_fields["passes"]
    q = values["passes"]
    candidates = [c for c in {math.floor(q), math.ceil(q)} if lo <= c <= hi] or [q]
    return min(candidates, key=lambda c: problem.assess(problem.base.replace(**{**values, "passes": c}))[0])


@dataclass
class ParetoPoint:
    eta: float
    net_dark: float
    design: model.DetectorDesign
    values: dict


def nondominated(points):
    """Indices of the nondominated (max eta, min net dark) rows of an (n, 2) array.

    Exact duplicates keep only their first occurrence.
    """
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    order = np.lexsort((np.arange(len(points)), points[:, 1], -points[:, 0]))
    keep, best_dark = [], math.inf
    for k in order:
        if points[k, 1] < best_dark:
            keep.append(int(k))
            best_dark = points[k, 1]
    return sorted(keep)


def pareto_front(problem, grid_density=9):
    """Nondominated (eta, net dark exact) points of a grid over the free fields.

    Designs outside the model's validity region are left out.
    """
    axis = np.linspace(0.0, 1.0, grid_density)
    candidates = []
    for u in itertools.product(axis, repeat=len(problem.names)):
        design = problem.design(u)
        budget = efficiency_budget(design, problem.convention)
        if not budget.valid:
            continue
        ndc = net_dark_count(design, problem.convention)[1]
        candidates.append(ParetoPoint(budget.eta, ndc, design, problem.to_values(u)))
    if not candidates:
        return []
    idx = nondominated([(p.eta, p.net_dark) for p in candidates])
    return [candidates[k] for k in idx]
