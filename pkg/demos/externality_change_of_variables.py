"""
With an externality (gamma > 0) technology is not homogeneous of degree one
in (k, h). Writing hhat = h**rho restores it; both routes should give the
same value function.

Takes a few minutes on the 8 x 8 grid.
"""
from lucas_uzawa.cli import transform_comparison
from lucas_uzawa.fields import GridSpec
from lucas_uzawa.primitives import ModelParams
from lucas_uzawa.solver import SolveOptions

params = ModelParams(gamma=0.35)
grid = GridSpec.log_spaced(nk=8, nh=8)
direct, hat, rows, gap = transform_comparison(params, grid, SolveOptions(tol=1e-6))
print(f"rho = {params.rho}")
print(f"direct: {direct.iterations} backups, transformed: {hat.iterations} backups")
print(f"largest interior gap |a - b| / max(1, |a|): {gap:.2e}")
for k, h, hh, a, b, g in rows[27:30]:
    print(f"k={k:.3f} h={h:.3f} hhat={hh:.3f}  {a:9.5f} {b:9.5f}")
