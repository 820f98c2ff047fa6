"""
Photon-number readout by Monte Carlo
====================================

Confusion matrix for 0-3 photons on the worked design, then the 50-photon
counting probability at 0.998 per-photon efficiency.
"""

import numpy as np

from vapordet.model import paper_design, readout_time
from vapordet.readout import ReadoutScenario, binomial_ml_error, discrimination_report, run_trials, stage_probabilities

design = paper_design()
T = 10 * readout_time(design)

# Ten readout times register an excited atom almost surely, but 20000 ground
# atoms then contribute about 3 dark atoms per shot, which smears every row.
report = discrimination_report(design, range(4), trials=20000, rng_seed=2002, readout_duration=T)
np.set_printoptions(precision=4, suppress=True)
print("P(m | n), rows n = 0..3:")
print(report.confusion[:, :8])
print("adjacent-n ML errors:", report.error_n_vs_n1)

# With absorption at its model value most photons pass the cell unabsorbed.
# Override it so the per-photon chain is exactly 0.998 and turn dark counts off.
p = stage_probabilities(ReadoutScenario(design, 50, T))
kw = dict(absorb_prob=0.998 / (p.survive * p.register), dark_counts=False)
out = run_trials(ReadoutScenario(design, 50, T, trials=100_000, rng_seed=7, **kw))
print(f"P(inferred 50 | 50): {np.mean(out.inferred_n == 50):.4f}  (0.998^50 = {0.998**50:.4f})")
print(f"closed-form ML error, 1 vs 2 photons: {binomial_ml_error(0.998, 1):.5f}")
