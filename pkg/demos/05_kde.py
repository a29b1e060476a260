# Kernel density estimates and their bandwidths.
import numpy as np

from tv_euler import (EPANECHNIKOV, GAUSSIAN, BandwidthRule, ClosedFormDensity, DriftSpec,
                      KdeModel, SamplerConfig, SdeProblem, mise_bandwidth, sample_endpoints,
                      silverman_bandwidth, silverman_per_mode)
from tv_euler.kde import curvature_functional

ref = ClosedFormDensity.bang_bang(1.0, 1.0, 0.0)
print("R(p'') = %.4f" % curvature_functional(ref))
print("MISE bandwidth at N = 5e5: %.5f" % mise_bandwidth(EPANECHNIKOV, ref, 500_000))
print("Silverman on {0,1,2,3}: %.6f" % silverman_bandwidth([0, 1, 2, 3]))

prob = SdeProblem(DriftSpec.two_valued(-3.0, 4.0), 0.0, 1.0)
x = sample_endpoints(SamplerConfig(prob, 1 / 256, 100_000, 3)).values
print("per-mode bandwidths:", silverman_per_mode(x, 0.0), "plain:", silverman_bandwidth(x))

model = KdeModel.fit(x, GAUSSIAN, BandwidthRule.per_mode(0.0))
grid = np.linspace(x.min() - 1, x.max() + 1, 20001)
dens = model(grid)
print("mass %.6f" % np.trapezoid(dens, grid))
for z in (-2.0, -0.5, 0.0, 0.5, 2.0):
    print(z, round(model.evaluate(z), 4))
