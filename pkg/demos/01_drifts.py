# Drift coefficients and the two reductions to unit noise.
import numpy as np

from tv_euler import (DriftSpec, LampertiTransform, evaluate_drift, lamperti_drift,
                      reduce_constant_noise)
from tv_euler.drift import fat_cantor_drift

# A two-valued drift jumps at zero; zero itself belongs to the right piece.
outward = DriftSpec.two_valued(-3.0, 4.0)
print([evaluate_drift(outward, 0.0, x) for x in (-0.5, 0.0, 0.5)])

# bang-bang(theta) is the inward case -theta sgn(x) with sgn(0) = +1
inward = DriftSpec.bang_bang(1.0)
print(evaluate_drift(inward, 0.0, 0.0), inward.bound)

# A rough drift: indicator of a fat Cantor set, six stages deep.
rough = fat_cantor_drift(depth=6, left=-0.5, right=0.5)
x = np.linspace(-0.6, 0.6, 1_200_001)
print("measure of the set:", rough(0.0, x).mean() * 1.2)

# Lamperti: dY = beta(Y) dt + Y dW on (0, inf) becomes unit noise with psi = ln.
lt = LampertiTransform(lambda y: y, anchor=1.0, lower=1e-3, upper=50.0)
print("psi(e) =", lt.psi(np.e), " psi^-1(1) =", lt.psi_inverse(1.0))
print("drift at x = ln 2 with beta(y) = y:", lamperti_drift(lt, lambda t, y: y, 0.0, np.log(2)))

# Constant noise matrix: X = sigma^-1 Y.
prob = reduce_constant_noise([[2.0]], DriftSpec.constant(4.0), [2.0], horizon=1.0)
print("reduced drift", evaluate_drift(prob.drift, 0.0, 0.3), "start", prob.x0)
