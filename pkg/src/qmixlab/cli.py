"""``qmixlab`` command line: train best responses, mix them, and benchmark coverage."""
from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from qmixlab.config import ExperimentConfig, help_text, load_config
from qmixlab.distill import DistillConfig, prior_teacher, train_student
from qmixlab.envs import CommonsEnv, SoccerEnv, load_map
from qmixlab.envs.opponents import CommonsTagger, scripted_opponent
from qmixlab.errors import (ArtifactError, ConfigError, ConvergenceError, DimensionError, InvalidMixture,
                            MissingArtifact, QmixlabError, UnknownOpponent)
from qmixlab.evaluation import (PerMixture, confidence_interval, coverage_sweep, emit_report, enumerate_mixtures,
                                t_for)
from qmixlab.mixture import MixedStrategy, parse_mixture
from qmixlab.opc import build_dataset, train_classifier, validation_accuracy
from qmixlab.persist import atomic_write_text, load_model, load_replay, save_model, save_replay
from qmixlab.qlearn.dqn import train_best_response
from qmixlab.qlearn.policies import GreedyPolicy
from qmixlab.qlearn.rollout import evaluate_policy
from qmixlab.qmix import ComponentSet, QMixingPolicy
from qmixlab.qmvi import (StateIndex, belief_from_occupancy, build_opponent_kernel, qmvi_solve, smooth_counts,
                          visit_counts)

log = logging.getLogger("qmixlab")

EXIT_OK, EXIT_CONFIG, EXIT_MISSING, EXIT_NUMERIC = 0, 2, 3, 4


class Workspace:
    """Resolved config plus the environment, opponent pool and artifact paths."""

    def __init__(self, cfg: ExperimentConfig, force: bool = False):
        self.cfg = cfg
        self.force = force
        self.root = Path(cfg.output_dir)
        if cfg.env == "soccer":
            self.env = SoccerEnv()
        else:
            cmap = load_map(cfg.commons_map) if cfg.commons_map else None
            self.env = CommonsEnv(cmap, cfg.commons)
        self.ids = list(cfg.opponents)
        self.pool = {pid: self._opponent(pid) for pid in self.ids}

    def _opponent(self, pid: str):
        if pid in self.cfg.models:
            q = load_model(self.cfg.models[pid], self.env.obs_dim, self.env.n_actions)
            return GreedyPolicy(q)
        if self.cfg.env == "commons" and pid == "tagger":
            return CommonsTagger(self.cfg.commons.beam_length)
        return scripted_opponent(pid, self.cfg.env)

    def path(self, *parts: str) -> Path:
        return self.root.joinpath(*parts)

    def claim(self, path: Path) -> Path:
        """Refuse to clobber an existing artifact unless ``--force`` was given."""
        if path.exists() and not self.force:
            raise FileExistsError(f"{path} exists; pass --force to overwrite")
        return path

    def require(self, paths) -> None:
        missing = [str(p) for p in paths if not Path(p).exists()]
        if missing:
            raise MissingArtifact("missing artifacts: " + ", ".join(missing))

    def opponent_spec(self, text: str):
        """Registry id, ``uniform``, or a mixture literal in registry order."""
        if text == "uniform":
            return MixedStrategy.uniform(self.ids), "uniform"
        if text in self.pool:
            return text, text
        if "," not in text:
            raise UnknownOpponent(f"unknown opponent {text!r}; registry: {self.ids}")
        sigma = parse_mixture(text, self.ids)
        return sigma, "mix_" + sigma.literal().replace(",", "_")

    def mixture(self, text: str | None) -> MixedStrategy:
        if text is None or text == "uniform":
            return MixedStrategy.uniform(self.ids)
        if text in self.pool:
            return MixedStrategy.point(self.ids, text)
        return parse_mixture(text, self.ids)

    def br_model(self, name: str) -> Path:
        return self.path("models", f"br_{name}.json")

    def components(self) -> ComponentSet:
        paths = [self.br_model(pid) for pid in self.ids]
        self.require(paths)
        return ComponentSet(self.ids, [load_model(p, self.env.obs_dim, self.env.n_actions) for p in paths])

    def eval_seed(self, *tag) -> tuple:
        return (self.cfg.seed, *tag)


def write_csv(path: Path, header, rows) -> Path:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return atomic_write_text(path, buf.getvalue())


def _fmt(x) -> str:
    return f"{x:.6g}"


def cmd_train_br(ws: Workspace, opponent: str) -> list[Path]:
    names = ws.ids if opponent == "all" else [opponent]
    out = []
    for name in names:
        out += _train_one(ws, name)
    return out


def _train_one(ws: Workspace, opponent: str) -> list[Path]:
    cfg = ws.cfg
    spec, name = ws.opponent_spec(opponent)
    tcfg = replace(cfg.train, seed=cfg.seed)
    if isinstance(spec, str) and cfg.equal_budget:
        tcfg = replace(tcfg, timesteps=cfg.train.timesteps // len(ws.ids))
    model_p, buf_p, curve_p = (ws.claim(ws.br_model(name)), ws.claim(ws.path("buffers", f"br_{name}.jsonl")),
                               ws.claim(ws.path("curves", f"br_{name}.csv")))
    curve = []

    def record(step, q):
        mean, _ = evaluate_policy(ws.env, GreedyPolicy(q), spec, cfg.eval.episodes, ws.eval_seed(1, step), ws.pool)
        curve.append((step, mean))
        log.info("train-br %s step %d eval %.4f", name, step, mean)

    q, buffer = train_best_response(ws.env, spec, tcfg, ws.pool, callback=record, callback_every=cfg.curve_every)
    _check_finite(q)
    prov = {"command": "train-br", "opponent": opponent, "env": cfg.env, "registry": ws.ids}
    save_model(q, model_p, tcfg.to_dict(), prov)
    save_replay(buffer, buf_p)
    write_csv(curve_p, ["steps", "eval_return"], [(s, _fmt(m)) for s, m in curve])
    return [model_p, buf_p, curve_p]


def _check_finite(model) -> None:
    arrays = getattr(model, "params", None) or list(getattr(model, "table", {}).values())
    if any(not np.all(np.isfinite(a)) for a in arrays):
        raise FloatingPointError("training produced non-finite values")


def _classifier_evidence(ws: Workspace):
    p = ws.path("models", "opc.json")
    ws.require([p])
    clf = load_model(p, ws.env.obs_dim)
    if list(clf.ids) != ws.ids:
        raise ConfigError(f"classifier labels {list(clf.ids)} do not match registry {ws.ids}")
    return clf


def cmd_qmix_eval(ws: Workspace, mode: str, mixture: str | None, coverage: bool) -> list[Path]:
    cfg = ws.cfg
    if mode == "opc":
        evidence = _classifier_evidence(ws)
    comps = ws.components()

    def build(sigma, _seed_index=0):
        return QMixingPolicy(comps, sigma, evidence if mode == "opc" else None)

    if coverage:
        grid = enumerate_mixtures(len(ws.ids), cfg.eval.step, ws.ids)
        methods = {f"qmix_{mode}": PerMixture(build)}
        base = ws.br_model("uniform")
        if base.exists():
            methods["br_uniform"] = GreedyPolicy(load_model(base, ws.env.obs_dim, ws.env.n_actions))
        out_dir = ws.path("reports", f"coverage_{mode}")
        for f in ("coverage_raw.csv", "coverage_sorted.csv"):
            ws.claim(out_dir / f)
        report = coverage_sweep(ws.env, methods, ws.pool, grid, cfg.eval.episodes, cfg.eval.seeds,
                                workers=cfg.eval.workers)
        return list(emit_report(report, out_dir))
    sigma = ws.mixture(mixture)
    path = ws.claim(ws.path("reports", f"qmix_{mode}_{sigma.literal().replace(',', '_')}.csv"))
    pol = build(sigma)
    rows = []
    for seed in cfg.eval.seeds:
        mean, _ = evaluate_policy(ws.env, pol, sigma, cfg.eval.episodes, seed, ws.pool)
        rows.append((seed, _fmt(mean)))
    means = [float(r[1]) for r in rows]
    ci = confidence_interval(means, t_for(len(means))) if len(means) > 1 else None
    rows.append(("mean", _fmt(np.mean(means))))
    rows.append(("ci_halfwidth", _fmt(ci.half_width) if ci else "nan"))
    return [write_csv(path, ["seed", "mean_return"], rows)]


def cmd_qmvi(ws: Workspace, mixture: str | None) -> list[Path]:
    cfg = ws.cfg
    if not getattr(ws.env, "tabular", False):
        raise ConfigError(f"qmvi requires a tabular environment; {cfg.env!r} is not")
    sigma = ws.mixture(mixture)
    out = [ws.claim(ws.path("qmvi", n)) for n in ("qmvi_q.json", "residuals.csv", "eval.csv")]
    index = StateIndex(ws.env)
    gamma = cfg.train.gamma
    kernels = {pid: build_opponent_kernel(ws.env, ws.pool[pid], index) for pid in sigma.ids}
    counts = {}
    for k, pid in enumerate(sigma.ids):
        br = qmvi_solve([kernels[pid]], np.ones(1), gamma, cfg.qmvi.tol, cfg.qmvi.max_iters)
        counts[pid] = visit_counts(ws.env, ws.pool[pid], GreedyPolicy(br.as_tabular_q(index)),
                                   cfg.qmvi.occupancy_episodes, ws.eval_seed(2, k))
    support = set().union(*(set(c) for c in counts.values()))
    occupancy = {pid: smooth_counts(c, support) for pid, c in counts.items()}
    psi = belief_from_occupancy(index, occupancy, sigma)
    result = qmvi_solve([kernels[p] for p in sigma.ids], psi, gamma, cfg.qmvi.tol, cfg.qmvi.max_iters)
    for it, r in enumerate(result.residuals, 1):
        log.info("qmvi iteration %d residual %.3e", it, r)
    policy = GreedyPolicy(result.as_tabular_q(index))
    save_model(policy.q, out[0], {"gamma": gamma, "tol": cfg.qmvi.tol, "mixture": sigma.literal()},
               {"command": "qmvi", "registry": ws.ids, "iterations": result.iterations})
    write_csv(out[1], ["iteration", "residual"], [(i, repr(r)) for i, r in enumerate(result.residuals, 1)])
    rows = []
    for target in [*sigma.ids, sigma]:
        label = target if isinstance(target, str) else "mixture"
        mean, returns = evaluate_policy(ws.env, policy, target, cfg.qmvi.eval_episodes, ws.eval_seed(3), ws.pool)
        rows.append((label, _fmt(mean), _fmt(confidence_interval(returns, t_for(len(returns))).half_width)))
    write_csv(out[2], ["opponent", "mean_return", "ci_halfwidth"], rows)
    return out


def _buffers(ws: Workspace):
    paths = {pid: ws.path("buffers", f"br_{pid}.jsonl") for pid in ws.ids}
    ws.require(paths.values())
    return {pid: load_replay(p) for pid, p in paths.items()}


def cmd_opc(ws: Workspace) -> list[Path]:
    cfg = ws.cfg
    out = [ws.claim(ws.path("models", "opc.json")), ws.claim(ws.path("curves", "opc.csv"))]
    ds = build_dataset(_buffers(ws), cfg.seed, cfg.opc.val_fraction)
    clf, curves = train_classifier(ds, cfg.opc.lr, cfg.opc.batch_size, cfg.opc.epochs, cfg.opc.patience,
                                   cfg.train.hidden, cfg.seed)
    _check_finite(clf.net)
    acc = validation_accuracy(clf, ds)
    log.info("opc validation accuracy %.4f", acc)
    save_model(clf, out[0], vars(cfg.opc), {"command": "opc", "val_accuracy": acc, "registry": ws.ids})
    rows = [(e + 1, _fmt(tl), _fmt(vl), _fmt(va))
            for e, (tl, vl, va) in enumerate(zip(curves.train_loss, curves.val_loss, curves.val_accuracy))]
    write_csv(out[1], ["epoch", "train_loss", "val_loss", "val_accuracy"], rows)
    return out


def cmd_distill(ws: Workspace, taus: list[float] | None, mixture: str | None) -> list[Path]:
    cfg = ws.cfg
    taus = taus or [cfg.distill.tau]
    sigma = ws.mixture(mixture)
    comps = ws.components()
    buffers = _buffers(ws)
    teacher = prior_teacher(comps, sigma)
    out = []
    for tau in taus:
        dcfg = replace(cfg.distill, tau=tau, seed=cfg.seed)
        tag = f"tau{tau:g}"
        model_p, curve_p = ws.claim(ws.path("models", f"student_{tag}.json")), ws.claim(
            ws.path("curves", f"distill_{tag}.csv"))

        def evaluate(student):
            return evaluate_policy(ws.env, GreedyPolicy(student), sigma, cfg.eval.episodes, ws.eval_seed(4),
                                   ws.pool)[0]

        res = train_student(teacher, buffers, dcfg, cfg.train.hidden, evaluate=evaluate)
        _check_finite(res.student)
        save_model(res.student, model_p, vars(dcfg), {"command": "distill", "mixture": sigma.literal()})
        rows = [(e + 1, _fmt(tl), _fmt(ag), _fmt(r))
                for e, (tl, ag, (_, r)) in enumerate(zip(res.train_loss, res.val_agreement, res.returns))]
        write_csv(curve_p, ["epoch", "train_loss", "val_agreement", "eval_return"], rows)
        out += [model_p, curve_p]
    return out


def cmd_bench(ws: Workspace) -> list[Path]:
    """Full pipeline: per-opponent and uniform BRs, OPC, coverage for both mixing modes, distillation."""
    out = cmd_train_br(ws, "all")
    out += _train_one(ws, "uniform")
    out += cmd_opc(ws)
    out += cmd_qmix_eval(ws, "prior", None, True)
    out += cmd_qmix_eval(ws, "opc", None, True)
    out += cmd_distill(ws, None, None)
    if getattr(ws.env, "tabular", False):
        out += cmd_qmvi(ws, None)
    return out


def _parse_set(items) -> dict[str, dict[str, str]]:
    over: dict[str, dict[str, str]] = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        section, dot, name = key.partition(".")
        if not sep or not dot:
            raise ConfigError(f"--set expects section.key=value, got {item!r}")
        over.setdefault(section.strip(), {})[name.strip()] = value
    return over


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI config file")
    common.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE", help="override a config key")
    common.add_argument("--output-dir", help="shorthand for --set experiment.output_dir=...")
    common.add_argument("--force", action="store_true", help="overwrite existing artifacts")
    common.add_argument("-v", "--verbose", action="store_true")
    epilog = "config keys (defaults):\n" + help_text() + (
        "\n\nenvironment: QMIXLAB_SEED overrides experiment.seed; QMIXLAB_THREADS overrides eval.workers"
        "\nexit codes: 0 ok, 2 config error, 3 missing artifact, 4 numerical failure")
    fmt = argparse.RawDescriptionHelpFormatter
    p = argparse.ArgumentParser(prog="qmixlab", description=__doc__, epilog=epilog, formatter_class=fmt)
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("train-br", parents=[common], help="train a best response", epilog=epilog,
                       formatter_class=fmt)
    s.add_argument("--opponent", required=True, help="registry id, 'uniform', 'all', or a mixture literal")
    s = sub.add_parser("qmix-eval", parents=[common], help="evaluate Q-Mixing", epilog=epilog, formatter_class=fmt)
    s.add_argument("--mode", choices=("prior", "opc"), default="prior")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--mixture", help="mixture literal, registry id or 'uniform'")
    g.add_argument("--coverage", action="store_true", help="sweep the whole simplex grid")
    s = sub.add_parser("qmvi", parents=[common], help="Q-Mixing value iteration", epilog=epilog,
                       formatter_class=fmt)
    s.add_argument("--mixture", default=None)
    sub.add_parser("opc", parents=[common], help="train the opponent classifier", epilog=epilog,
                   formatter_class=fmt)
    s = sub.add_parser("distill", parents=[common], help="distil the Q-Mixing teacher", epilog=epilog,
                       formatter_class=fmt)
    s.add_argument("--tau", type=float, action="append", help="temperature; repeat for a sweep")
    s.add_argument("--mixture", default=None)
    sub.add_parser("bench-soccer", parents=[common], help="full soccer pipeline", epilog=epilog,
                   formatter_class=fmt)
    sub.add_parser("bench-commons", parents=[common], help="full commons pipeline", epilog=epilog,
                   formatter_class=fmt)
    return p


def resolve_config(args) -> ExperimentConfig:
    over = _parse_set(args.set)
    if args.output_dir:
        over.setdefault("experiment", {})["output_dir"] = args.output_dir
    if args.command == "bench-soccer":
        over.setdefault("experiment", {})["env"] = "soccer"
    elif args.command == "bench-commons":
        over.setdefault("experiment", {})["env"] = "commons"
    if "QMIXLAB_SEED" in os.environ:
        over.setdefault("experiment", {})["seed"] = os.environ["QMIXLAB_SEED"]
    if "QMIXLAB_THREADS" in os.environ:
        over.setdefault("eval", {})["workers"] = os.environ["QMIXLAB_THREADS"]
    return load_config(args.config, over)


def run(args) -> list[Path]:
    ws = Workspace(resolve_config(args), args.force)
    if args.command == "train-br":
        return cmd_train_br(ws, args.opponent)
    if args.command == "qmix-eval":
        return cmd_qmix_eval(ws, args.mode, args.mixture, args.coverage)
    if args.command == "qmvi":
        return cmd_qmvi(ws, args.mixture)
    if args.command == "opc":
        return cmd_opc(ws)
    if args.command == "distill":
        return cmd_distill(ws, args.tau, args.mixture)
    return cmd_bench(ws)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        for path in run(args):
            print(path)
    except MissingArtifact as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except (ConvergenceError, FloatingPointError) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, InvalidMixture, UnknownOpponent, DimensionError, FileExistsError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ArtifactError, QmixlabError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
