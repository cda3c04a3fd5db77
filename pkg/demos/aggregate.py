"""One round of secure aggregation over 130 clients with a few dropouts.

Run: python3 demos/aggregate.py
"""

from fastsecagg.layout import make_params
from fastsecagg.protocol import ProtocolConfig
from fastsecagg.simnet import DropSpec, SimConfig, run_campaign, run_trial

params = make_params(N=130, alpha="1/2", beta="1/4", delta0="1/10", min_q=130 * 255 + 1)
proto = ProtocolConfig(params=params, L=1000, R=256, backend="sim")

# Three clients vanish after sending their shares, two more before the last round.
cfg = SimConfig(proto, (DropSpec(1, 3), DropSpec(2, 2)))
out = run_trial(cfg, seed=11)
print("clients per round:", len(out.C0), len(out.C1), len(out.C2))
print("matches the plain sum over clients whose shares arrived:", out.match)
print("first entries:", out.result[:5])

# Twelve dropouts is the budget, and the grid decoder still loses some patterns.
report = run_campaign(SimConfig(proto, (DropSpec(2, 12),), trials=100, seed=5))
lo, hi = report.wilson95
print(f"12 dropouts: {report.successes}/{report.trials} recovered (95% CI {lo:.2f}-{hi:.2f})")
