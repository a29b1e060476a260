# Solving the mild equation by Picard iteration, an oracle for any bounded drift.
import numpy as np

from tv_euler import (ClosedFormDensity, DriftSpec, PicardConfig, SdeProblem,
                      bang_bang_gaussian_start, contraction_diagnostics, heat_kernel_l1_norms,
                      picard_solve)
from tv_euler.grid import trapezoid_mass

# dx and dxx_off are identities; dxx_diag and dt are upper bounds
for order in ("dx", "dxx_off", "dxx_diag", "dt"):
    closed, quad = heat_kernel_l1_norms(1.0, order)
    kind = "identity" if order in ("dx", "dxx_off") else "bound   "
    print(f"{order:9s} {kind} {closed:.8f}  quadrature {quad:.8f}")

start = ClosedFormDensity.gaussian(0.0, 0.01)
prob = SdeProblem(DriftSpec.bang_bang(1.0), 0.0, 1.0, initial_density=start)
for steps, n in [(64, 2 ** 11), (128, 2 ** 12), (256, 2 ** 13)]:
    g = picard_solve(prob, PicardConfig(n_time_steps=steps, n_points=n))
    exact = bang_bang_gaussian_start(1.0, 1.0, 0.0, 0.1, g.points)
    print(steps, n, "L1 to exact: %.2e" % trapezoid_mass(np.abs(g.values - exact), g.dx))

# No closed form exists for the outward drift; the solver still applies.
out = SdeProblem(DriftSpec.two_valued(-3.0, 4.0), 0.0, 1.0, initial_density=start)
res = contraction_diagnostics(out, PicardConfig(n_time_steps=128, n_points=2 ** 12))
# contraction is factorial, so a strong drift makes residuals grow before they fall
peak = int(np.argmax(res))
print(f"residual peaks at {res[peak]:.1e} (iteration {peak + 1}), "
      f"ends at {res[-1]:.1e} after {len(res)} iterations")
