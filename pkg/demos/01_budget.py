"""
Efficiency budget of the worked design
======================================

Evaluate the three loss terms, the atom number and the dark counts for the
bundled cesium design, once per frequency convention.
"""

from vapordet.model import efficiency_budget, paper_design, summary

design = paper_design()

# Both conventions share N, tau_col and t_ro; they differ in how the
# detunings (Delta and the Zeeman shift) enter the formulas.
for convention in ("ordinary", "angular"):
    s = summary(design, convention)
    print(f"--- {convention}")
    for key in ("N", "tau_col", "l_abs", "t_ro", "delta_zeeman", "P_dc", "net_dark_linear", "net_dark_exact"):
        print(f"{key:>16}: {s[key]:.4g}")
    b = efficiency_budget(design, convention)
    print(f"{'losses':>16}: scatter {b.loss_scatter:.2e}, transmission {b.loss_transmission:.3f}, "
          f"collision {b.loss_collision:.2e}")
    print(f"{'eta':>16}: {b.eta:.4f} (valid={b.valid})")

# Transmission dominates. Raising the pass count q is the cheapest fix:
for q in (100, 1000, 10000):
    print(f"q = {q:>5}: eta = {efficiency_budget(design.replace(passes=q)).eta:.4f}")
