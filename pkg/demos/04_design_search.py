"""
Searching the design space
==========================

A sweep over pass count and field, a constrained optimization, and the
efficiency / dark-count Pareto front.
"""

from vapordet.explorer import OptimizationProblem, SweepSpec, optimize, pareto_front, run_sweep
from vapordet.model import paper_design

design = paper_design()

rows = run_sweep(SweepSpec(design, [("passes", [10, 100, 1000]), ("B_field", [0.5, 1.0])], outputs=["eta", "net_dark_exact"]))
for r in rows:
    print(f"q={r['passes']:>6g} B={r['B_field']:.1f} T  eta={r['eta']:.4f}  dark={r['net_dark_exact']:.3f}")

# Maximize eta with at most a 10% chance of a dark count per pulse.
problem = OptimizationProblem(design, {"detuning": (5e7, 5e10), "passes": (1, 1000), "B_field": (0.1, 3.0)}, budget=0.1)
res = optimize(problem)
print("optimum:", {k: f"{v:.4g}" for k, v in res.values.items()})
print(f"eta = {res.budget.eta:.4f}, net dark = {res.net_dark_exact:.3f}, {len(res.trace)} evaluations")

# Denser vapor absorbs better but puts more atoms in the readout volume.
front = pareto_front(OptimizationProblem(design, {"n_density": (1e14, 1e17), "passes": (1, 1000)}), grid_density=7)
for p in sorted(front, key=lambda p: p.net_dark):
    print(f"n={p.values['n_density']:.2e} m^-3  q={p.values['passes']:.0f}  eta={p.eta:.4f}  dark={p.net_dark:.4f}")
