"""
Three forced study-time rules from the same start: human capital grows at
5% a period, stays put, or shrinks at 5% a period.
"""
from lucas_uzawa.paths import ForcedPolicy, growth_diagnostics, simulate
from lucas_uzawa.primitives import ModelParams
from lucas_uzawa.verify import compute_constants

params = ModelParams()
consts = compute_constants(params)
print(f"maintenance study time {consts.v_bar}, h growth cap {consts.D_h}")

rules = {
    "all study": ForcedPolicy(params, 1.0, "save"),
    "maintenance": ForcedPolicy(params, consts.v_bar, "hold"),
    "no study": ForcedPolicy(params, 0.0, "save"),
}
for name, policy in rules.items():
    path = simulate(policy, (1.0, 1.0), 120, params)
    report = growth_diagnostics(path)
    print(f"{name:12s} h_120 = {path.h[-1]:10.4g}  g_h = {report.g_h:.4f}  "
          f"{report.classification}")
