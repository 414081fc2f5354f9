"""Determinism does not give outcome independence at the (a, lambda) level.

Each apparatus rolls one of two weighted dice (0.9 and 0.2) chosen by lambda
and its setting.  Given the die roll the answer is fixed; given only lambda
it is not.

Run:  python demos/05_dice_lemma.py
"""

from bellsim import audit_determinism, build_weighted_dice_model, outcome_marginals

model = build_weighted_dice_model((0.9, 0.2))
given_lambda, given_lambda_mu = outcome_marginals(model)

print("P(A=+1 | a, lambda):")
print(given_lambda)
print("distinct values of P(A=+1 | a, lambda, mu_a):", sorted(set(given_lambda_mu.ravel()) - {float("nan")}))
print("deterministic given (a, lambda, mu_a):", audit_determinism(model).passed)
