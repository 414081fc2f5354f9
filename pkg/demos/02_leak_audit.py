"""Which assumption does the microstate-leak model give up?

The leak model is structurally local and its lambda ignores the settings,
yet it reaches 2 sqrt 2.  The audits show the only broken link is
microstate independence; ablating the leak brings the bound back.

Run:  python demos/02_leak_audit.py
"""

from bellsim import (
    audit_all,
    build_ablated_leak_model,
    build_microstate_leak_model,
    chsh_statistic,
    paper_configuration,
    paper_policy,
    run_experiment,
)

config = paper_configuration()

for model in (build_microstate_leak_model(), build_ablated_leak_model()):
    s = chsh_statistic(model, *config).statistic
    print(f"\n== {model.model_id}: exact S = {s:.10f}")
    for v in audit_all(model):
        print(f"   {v.condition.value:<24} {'pass' if v.passed else 'FAIL'}   divergence {v.divergence:.3f}")

# the same verdicts from a simulated ensemble, as an experimenter who could
# somehow see lambda and the microstates would get them
ens = run_experiment(build_microstate_leak_model(), paper_policy(), 100_000, master_seed=42)
print("\n== leak, empirical (n = 100000)")
for v in audit_all(ens, model=build_microstate_leak_model()):
    p = "-" if v.p_value is None else f"{v.p_value:.2e}"
    print(f"   {v.condition.value:<24} {'pass' if v.passed else 'FAIL'}   p = {p}")
