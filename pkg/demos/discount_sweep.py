"""
Which discount factors satisfy beta * zeta < 1 at the baseline technology,
and what that does to the value at (1, 1).
"""
import numpy as np

from lucas_uzawa.fields import GridSpec
from lucas_uzawa.primitives import ModelParams
from lucas_uzawa.solver import SolveOptions, solve_value_iteration
from lucas_uzawa.verify import compute_constants

grid = GridSpec.log_spaced(nk=6, nh=6)
options = SolveOptions(tol=1e-5, inner_points=21)
for beta in np.arange(0.60, 0.90, 0.05):
    params = ModelParams(beta=float(beta))
    bz = compute_constants(params).beta_zeta
    if bz >= 1:
        print(f"beta {beta:.2f}  beta*zeta {bz:.4f}  (not solved)")
        continue
    res = solve_value_iteration(params, grid, options)
    print(f"beta {beta:.2f}  beta*zeta {bz:.4f}  V(1,1) {res.value(1.0, 1.0):8.4f}  "
          f"backups {res.iterations}")
