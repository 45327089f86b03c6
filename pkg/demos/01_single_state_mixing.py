"""
Mixing best responses in a one-shot game
========================================

In a single-state game the value of an action against a mixed opponent is the
sigma-weighted average of its values against each pure opponent, so mixing
the component Q-vectors gives the exact best response.
"""

import numpy as np

from qmixlab.envs.toy import BanditGame, FixedAction
from qmixlab.mixture import MixedStrategy
from qmixlab.qlearn.dqn import TrainConfig, train_best_response
from qmixlab.qlearn.rollout import evaluate_policy
from qmixlab.qmix import ComponentSet, QMixingPolicy, mix_q_prior

# rows: what the opponent plays; columns: the learner's three arms
payoffs = np.array([[0.9, 0.1, 0.5],
                    [0.0, 0.8, 0.5]])
game = BanditGame(payoffs)
pool = {"left": FixedAction(0, 2), "right": FixedAction(1, 2)}

# one tabular best response per pure opponent
cfg = TrainConfig(timesteps=4000, variant="tabular", lr_mode="visit", seed=0)
comps = ComponentSet(list(pool), [train_best_response(game, pid, cfg, pool)[0] for pid in pool])
obs = game.encode(None, 0)
print("learned Q vs left :", np.round(comps["left"].values(obs), 3))
print("learned Q vs right:", np.round(comps["right"].values(obs), 3))

# sweep the mixture and compare the mixed Q-vector with the exact expectation
for p in (0.0, 0.3, 0.45, 0.6, 1.0):
    sigma = MixedStrategy(list(pool), [p, 1 - p])
    mixed = mix_q_prior(obs, comps, sigma)
    exact = p * payoffs[0] + (1 - p) * payoffs[1]
    policy = QMixingPolicy(comps, sigma)
    ret, _ = evaluate_policy(game, policy, sigma, 2000, seed=1, opponents=pool)
    print(f"P(left)={p:.2f}  mixed {np.round(mixed, 3)}  exact {np.round(exact, 3)}  "
          f"arm {policy.act(obs)}  return {ret:.3f}")
