# Sampling the randomised-time Euler scheme.
import numpy as np

from tv_euler import DriftSpec, SamplerConfig, SdeProblem, coupled_endpoints, sample_endpoints
from tv_euler.euler import read_endpoints, write_endpoints

prob = SdeProblem(DriftSpec.bang_bang(1.0), x0=0.0, horizon=1.0)
cfg = SamplerConfig(prob, h=1 / 64, n_samples=200_000, master_seed=42)

s1 = sample_endpoints(cfg, jobs=1)
s4 = sample_endpoints(cfg, jobs=4)
print("same bits with 1 and 4 threads:", s1.values.tobytes() == s4.values.tobytes())
print("mean %.4f  var %.4f  P(X > 0) %.4f" % (s1.values.mean(), s1.values.var(),
                                               np.mean(s1.values > 0)))

# The scheme is exact for a constant drift: N(x0 + cT, T).
const = SdeProblem(DriftSpec.constant(0.5), 0.0, 2.0)
v = sample_endpoints(SamplerConfig(const, 0.5, 100_000, 1)).values
print("constant drift mean %.4f (1.0)  var %.4f (2.0)" % (v.mean(), v.var()))

# Self-comparison needs samples at h and h/2. With the Brownian coupling
# the coarse path uses the summed fine increments.
outward = SdeProblem(DriftSpec.two_valued(-3.0, 4.0), 0.0, 1.0)
coarse, fine = coupled_endpoints(SamplerConfig(outward, 1 / 32, 100_000, 7), "brownian")
print("P(X>0) at h: %.4f, at h/2: %.4f" % (np.mean(coarse.values > 0),
                                          np.mean(fine.values > 0)))

write_endpoints("/tmp/bang_bang.tve", s1)
values, h, T = read_endpoints("/tmp/bang_bang.tve")
print("dump round trip:", np.array_equal(values, s1.values), h, T)
