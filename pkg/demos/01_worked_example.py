"""Three clients, one utility table, three exact formulas.

Run: python3 demos/01_worked_example.py
"""

import numpy as np

from shapval import SamplingPlan, UtilityTable, exact_cc_sv, exact_mc_sv, exact_perm_sv, stratified_estimate, table_oracle
from shapval.coalition import format_mask

# utilities listed by bitmask: index 0b101 is clients {1,3}
table = UtilityTable.from_array([0.10, 0.50, 0.70, 0.80, 0.60, 0.90, 0.90, 0.96])
oracle = table_oracle(table)

for mask, value in sorted(table.entries.items()):
    print(f"U({format_mask(mask):>7}) = {value:.2f}")

# marginal, complementary and permutation forms give the same answer
for solver in (exact_mc_sv, exact_cc_sv, exact_perm_sv):
    v = solver(oracle, 3)
    print(f"{v.method:<11} {np.round(v.values, 6)}  sum={v.values.sum():.2f}  evals={v.evaluations}")

# with every stratum fully sampled, the stratified estimator is the exact value
full = stratified_estimate(oracle, 3, SamplingPlan.full(3), "MC", np.random.default_rng(0))
print("stratified, full plan:", np.round(full.values, 6))
print(full.to_json())
