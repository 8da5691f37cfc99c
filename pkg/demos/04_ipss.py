"""Importance-pruned stratified sampling on a budget.

IPSS spends its budget on every coalition up to size k*, then on a
client-balanced handful of size k*+1.  A client with no data always gets
exactly zero.

Run: python3 demos/04_ipss.py
"""

import numpy as np

from shapval import Memoized, ScenarioConfig, appearance_counts, exact_mc_sv, fairness_proxies, generate
from shapval import ipss, k_star, regression_oracle, relative_error
from shapval.coalition import parse_mask

n = 10
fed = generate(ScenarioConfig(n=n, t=100, seed=3, null_clients=[0], duplicates=[(1, 2)]))
oracle = Memoized(regression_oracle(fed))
exact = exact_mc_sv(oracle, n)

for gamma in (11, 23, 32, 56, 100, 176):
    budget = k_star(n, gamma)
    v = ipss(oracle, n, gamma, np.random.default_rng(gamma))
    extra = [parse_mask(c, n) for c in v.meta["extra_coalitions"]]
    proxies = fairness_proxies(v, [0], [(1, 2)])
    print(
        f"gamma={gamma:>3}  k*={budget.k_star} extra={budget.extra:>2}  evals={v.evaluations:>3}"
        f"  err={relative_error(v, exact):.4f}  free-rider={proxies['free_rider_error']:.1e}"
        f"  sym={proxies['symmetry_error']:.1e}  counts={appearance_counts(extra, n)}"
    )
