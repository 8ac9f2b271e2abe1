"""
Solve the baseline model on a small log grid and look at the result.

Run from the repository root::

    python demos/baseline_value_function.py
"""
import numpy as np

from lucas_uzawa.fields import GridSpec
from lucas_uzawa.paths import constant_path_value
from lucas_uzawa.primitives import ModelParams
from lucas_uzawa.solver import SolveOptions, solve_value_iteration

params = ModelParams()          # log utility, beta = 0.8
grid = GridSpec.log_spaced(nk=8, nh=8)

result = solve_value_iteration(params, grid, SolveOptions(tol=1e-6))
print(f"converged after {result.iterations} backups, "
      f"last sup change {result.final_sup_change:.2e}")
print(f"homogeneity residual {result.homogeneity_residual:.2e}")

# value at a few states against the explicit constant path
for k, h in [(0.5, 0.5), (1.0, 1.0), (2.0, 1.0), (1.0, 2.0)]:
    lower, _ = constant_path_value((k, h), params)
    print(f"V({k}, {h}) = {result.value(k, h):8.4f}   constant path {lower:8.4f}")

# the optimal policy puts almost all time into production on this grid
u = result.policy.market_time
print("market time over interior nodes:", np.round(u[1:-1, 1:-1].mean(), 3))
