# The closed-form transition density of the bang-bang process.
import numpy as np

from tv_euler import ClosedFormDensity, bang_bang_density, density_to_grid
from tv_euler import verify_chapman_kolmogorov

z = np.linspace(-3, 3, 7)
print(np.round(bang_bang_density(1.0, 1.0, 0.0, z), 5))

ref = ClosedFormDensity.bang_bang(theta=1.0, t=1.0, x=0.0)
print("mass:", ref.total_mass())

# symmetry p_t(x, z) = p_t(-x, -z)
print(bang_bang_density(2.0, 0.5, 0.7, -0.2), bang_bang_density(2.0, 0.5, -0.7, 0.2))

# Chapman-Kolmogorov: composing two transitions gives the longer one
print("CK residual: %.2e" % verify_chapman_kolmogorov(1.0, 0.25, 0.75, 1.0, -1.0))

# the law settles on the Laplace density theta exp(-2 theta |z|)
lap = ClosedFormDensity.laplace(5.0)
zz = np.linspace(-3, 3, 6001)
for t in (0.1, 0.3, 1.0):
    print(t, np.max(np.abs(bang_bang_density(5.0, t, 0.0, zz) - lap.pdf(zz))))

grid = density_to_grid(ref)
print(f"{grid.n_points} points on [{grid.x_min:g}, {grid.x_max:g}], trapezoid mass {grid.mass():.8f}")
grid.to_csv("/tmp/bang_bang_density.csv")
