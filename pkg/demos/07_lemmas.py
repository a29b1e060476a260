# Numerical checks of the auxiliary inequalities.
import numpy as np

from tv_euler import discrete_gronwall, verify_sum_bound
from tv_euler.convergence import random_gronwall_instance, sum_bound_slacks

slack = sum_bound_slacks(10_000)
print("slack at n = 2, 3:", slack[:2])
print("slack at n = 10, 100, 1000, 10000:", slack[[8, 98, 998, 9998]])
print("smallest slack:", verify_sum_bound(10_000))

rng = np.random.default_rng(1)
y, f, g = random_gronwall_instance(rng, 10)
b = discrete_gronwall(y, f, g)
print(np.round(np.c_[y, b], 3))
