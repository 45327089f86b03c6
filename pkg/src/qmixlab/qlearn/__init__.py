"""Value-based best-response learning."""
from qmixlab.qlearn.dqn import TrainConfig, double_dqn_targets, epsilon_at, init_q, train_best_response
from qmixlab.qlearn.networks import MLP, MLPQ, Adam, TabularQ, adam_step, mlp_forward, mlp_gradient
from qmixlab.qlearn.policies import GreedyPolicy, greedy_action
from qmixlab.qlearn.replay import ReplayBuffer, Transition, TransitionBatch
from qmixlab.qlearn.rollout import evaluate_policy, play_episode

__all__ = [
    "Adam", "GreedyPolicy", "MLP", "MLPQ", "ReplayBuffer", "TabularQ", "TrainConfig", "Transition",
    "TransitionBatch", "adam_step", "double_dqn_targets", "epsilon_at", "evaluate_policy", "greedy_action",
    "init_q", "mlp_forward", "mlp_gradient", "play_episode", "train_best_response",
]
