"""The two-friends game with and without the shirt-color leak.

Run:  python demos/03_two_friends.py
"""

from bellsim.errors import StrategyViolation
from bellsim.game import STRATEGIES, GameConfig, Leak, play_game

for leak in Leak:
    print(f"\nleak = {leak.value}")
    for name, strategy in sorted(STRATEGIES.items()):
        try:
            score = play_game(GameConfig(rounds=100_000, leak=leak, seed=7), strategy)
        except StrategyViolation as exc:
            print(f"   {name:<18} cannot play: {exc}")
            continue
        print(f"   {name:<18} S = {score.chsh_empirical:.4f} +- {score.chsh_stderr:.4f}"
              f"   max |E - target| = {score.max_abs_deviation:.3f}")
