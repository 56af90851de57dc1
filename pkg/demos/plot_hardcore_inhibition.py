"""
Inhibition in a thinned hard-core pattern
=========================================

A hard-core process (beta = 200, R = 0.05) is thinned with retention
exp(-y). No pair of points is closer than R, so the nearest-neighbour
functional is exactly 1 below R and J rises above 1.
"""

import numpy as np

from ppstat import EstimatorConfig, UNIT_SQUARE, j_inhom_hat
from ppstat.intensity import Constant, thin_intensity
from ppstat.pattern import ThinningSpec
from ppstat.simulate import HardCoreSpec, sim_hardcore, sim_thinned_hardcore

spec = HardCoreSpec(beta=200.0, R=0.05, sweeps=50_000)
thin = ThinningSpec.exponential(1.0)

# the hard-core intensity has no closed form; use the sampler's long-run mean
lam_hc = np.mean([len(sim_hardcore(spec, UNIT_SQUARE, s)) for s in range(10)])
model = thin_intensity(Constant(lam_hc), thin)
print(f"estimated hard-core intensity {lam_hc:.1f}")

pattern = sim_thinned_hardcore(spec, thin, seed=3)
table = j_inhom_hat(pattern, model, EstimatorConfig(grid=64))
for t, _, num, j, _, _, _ in list(table.rows())[:31:3]:
    print(f"t={t:.3f}  num={num:.4f}  J={j:.3f}")
