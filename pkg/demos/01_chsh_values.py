"""CHSH values of the model zoo at the standard directions.

Run:  python demos/01_chsh_values.py
"""

import math

from bellsim import build_model, chsh_statistic, paper_configuration, paper_policy, run_experiment
from bellsim.models import ZOO_IDS

a, ap, b, bp = paper_configuration()

# exact values first, then a Monte Carlo check at 10^5 runs
print(f"{'model':>14} {'exact S':>10} {'MC S':>10} {'stderr':>8}")
for model_id in ZOO_IDS:
    model = build_model(model_id)
    exact = chsh_statistic(model, a, ap, b, bp).statistic
    ens = run_experiment(model, paper_policy(), 100_000, master_seed=1)
    mc = chsh_statistic(ens, a, ap, b, bp)
    print(f"{model_id:>14} {exact:10.6f} {mc.statistic:10.4f} {mc.std_error:8.4f}")

print(f"\nclassical bound 2, quantum value {2 * math.sqrt(2):.6f}")
