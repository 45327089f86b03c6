"""
Recognising the opponent, then compressing the mixture
======================================================

The replay buffers collected while training each best response double as a
labelled dataset: a classifier learns which opponent produced an
observation, and its output reweights the mixture state by state.  Finally a
single network is distilled from the prior mixture.
"""

from qmixlab.distill import DistillConfig, prior_teacher, train_student
from qmixlab.envs import SoccerEnv, scripted_opponent
from qmixlab.mixture import MixedStrategy
from qmixlab.opc import build_dataset, train_classifier, validation_accuracy
from qmixlab.qlearn.dqn import TrainConfig, train_best_response
from qmixlab.qlearn.policies import GreedyPolicy
from qmixlab.qlearn.rollout import evaluate_policy
from qmixlab.qmix import ComponentSet, QMixingPolicy

ids = ["random", "chaser", "camper"]
env = SoccerEnv()
pool = {pid: scripted_opponent(pid) for pid in ids}
cfg = TrainConfig(timesteps=60_000, variant="tabular", lr_mode="visit", exploration_fraction=0.6, seed=1)
runs = {pid: train_best_response(env, pid, cfg, pool) for pid in ids}
comps = ComponentSet(ids, [runs[p][0] for p in ids])
buffers = {p: runs[p][1] for p in ids}

ds = build_dataset(buffers, seed=0)
clf, curves = train_classifier(ds, lr=1e-3, epochs=10)
print(f"classifier: {len(ds)} observations, held-out accuracy {validation_accuracy(clf, ds):.3f}")

sigma = MixedStrategy.uniform(ids)
for name, policy in (("prior", QMixingPolicy(comps, sigma)), ("classifier", QMixingPolicy(comps, sigma, clf))):
    ret, _ = evaluate_policy(env, policy, sigma, 300, seed=2, opponents=pool)
    print(f"Q-Mixing ({name}) vs uniform mixture: {ret:+.3f}")

for tau in (0.1, 1.0, 5.0):
    res = train_student(prior_teacher(comps, sigma), buffers, DistillConfig(tau=tau, epochs=8))
    ret, _ = evaluate_policy(env, GreedyPolicy(res.student), sigma, 300, seed=2, opponents=pool)
    print(f"student tau={tau}: held-out agreement {res.val_agreement[-1]:.3f}, return {ret:+.3f}")
