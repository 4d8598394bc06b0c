"""Compare per-auth cost and traffic of both schemes, and check one simulated run against the model.

    python3 demos/overhead_sweep.py
"""

from vfcauth.bench import CostModel, compute_cost_per_auth, measured_vs_model, sweep
from vfcauth.simnet import ScenarioConfig, build_world

print(f"proposed: {compute_cost_per_auth(CostModel()):.3f} ms per auth")
for k in (1, 5, 10, 25, 50):
    print(f"baseline with {k:2d} SMs: {compute_cost_per_auth(CostModel(scheme='baseline', k=k)):.3f} ms")

print()
print(sweep(CostModel(k=3), "vehicles", range(10, 51, 10)).to_csv(), end="")

world = build_world(ScenarioConfig(regions=3, obus=30, seed=3))
world.run_until(4_000)
rep = measured_vs_model(world.trace)
print(f"\nsimulated {len(rep.successes)} auths; measured totals {rep.totals()}; matches model: {rep.ok}")
