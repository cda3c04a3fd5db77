"""Check that small coalitions learn nothing and find where privacy breaks.

Run: python3 demos/privacy_audit.py
"""

import numpy as np

from fastsecagg.audit import audit_exhaustive, empirical_privacy_test, find_breach
from fastsecagg.layout import make_params

params = make_params(5, 6, alpha="1/2", beta="3/10", delta0="1/5", delta1="1/6")

report = audit_exhaustive(params, params.T_count)
print(f"every coalition of size <= {params.T_count}: {report.subsets_checked} checked, "
      f"{len(report.failures)} leak")

breach = find_breach(params, np.random.default_rng(0))
print("smallest leaking coalition found:", breach)

tiny = make_params(3, 4, q=13, alpha="1/2", beta="1/3", delta0="1/3", delta1="1/4")
exact = empirical_privacy_test(tiny, trials=3, rng=np.random.default_rng(2))
print("exact TV distance between share views:", exact.tv_distance)
