"""Most of a client's value comes from small coalitions.

K-Greedy keeps only coalitions of at most K clients.  On a ten-client
regression federation the error drops quickly with K, in line with the
closed-form bound for truncating at size k.

Run: python3 demos/03_key_combinations.py
"""

import math

import numpy as np

from shapval import Memoized, ScenarioConfig, exact_mc_sv, generate, k_greedy, regression_oracle, relative_error
from shapval.theory import ipss_error_bound

n, t, d = 10, 100, 5
errors = {K: [] for K in range(1, 6)}
for seed in range(10):
    oracle = Memoized(regression_oracle(generate(ScenarioConfig(n=n, t=t, d=d, seed=seed))))
    exact = exact_mc_sv(oracle, n)
    for K in errors:
        errors[K].append(relative_error(k_greedy(oracle, n, K), exact))

print(" K  coalitions  mean rel. error  bound")
for K, errs in errors.items():
    used = sum(math.comb(n, j) for j in range(K + 1))
    print(f"{K:>2}  {used:>10}  {np.mean(errs):>15.5f}  {ipss_error_bound(n, K, t, d):.5f}")
