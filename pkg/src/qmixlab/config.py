"""Experiment configuration: INI sections of plain ``key = value`` pairs."""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from qmixlab.distill import DistillConfig
from qmixlab.envs.commons import CommonsParams
from qmixlab.errors import ConfigError, MissingArtifact
from qmixlab.qlearn.dqn import TrainConfig


@dataclass(frozen=True)
class OPCConfig:
    lr: float = 5e-5
    batch_size: int = 64
    epochs: int = 20
    patience: int = 3
    val_fraction: float = 0.1


@dataclass(frozen=True)
class EvalConfig:
    step: float = 0.1
    episodes: int = 30
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    workers: int = 1


@dataclass(frozen=True)
class QMVIConfig:
    tol: float = 1e-6
    max_iters: int = 10_000
    occupancy_episodes: int = 30
    eval_episodes: int = 500


# (section, key, default, help); defaults shown for soccer where the two games differ
KEYS: list[tuple[str, str, object, str]] = [
    ("experiment", "env", "soccer", "game: soccer or commons"),
    ("experiment", "opponents", "random,chaser,camper", "opponent registry order (scripted ids)"),
    ("experiment", "seed", 0, "base seed (QMIXLAB_SEED overrides)"),
    ("experiment", "output_dir", "runs", "artifact directory"),
    ("experiment", "equal_budget", True, "split train.timesteps evenly across per-opponent BRs"),
    ("models", "<opponent id>", "", "path of a saved model to use as that opponent"),
    ("train", "variant", "mlp", "mlp (Double DQN) or tabular"),
    ("train", "timesteps", 300_000, "environment steps (commons: 500000)"),
    ("train", "lr", 3e-4, "learning rate"),
    ("train", "lr_mode", "constant", "tabular step size: constant or visit (1/n)"),
    ("train", "buffer_size", 3000, "replay capacity (commons: 30000)"),
    ("train", "batch_size", 64, "minibatch size"),
    ("train", "gamma", 0.99, "discount"),
    ("train", "exploration_fraction", 0.33, "fraction of training spent decaying epsilon (commons: 0.3)"),
    ("train", "exploration_final", 0.01, "final epsilon (commons: 0.03)"),
    ("train", "train_freq", 1, "environment steps per gradient update"),
    ("train", "learning_starts", 300, "steps before learning (commons: 1000)"),
    ("train", "target_sync", 500, "steps between target-network copies"),
    ("train", "hidden", "50,50", "hidden layer widths"),
    ("train", "curve_every", 5000, "steps between training-curve evaluations"),
    ("opc", "lr", 5e-5, "classifier learning rate"),
    ("opc", "batch_size", 64, "classifier minibatch"),
    ("opc", "epochs", 20, "maximum epochs"),
    ("opc", "patience", 3, "early-stopping patience on validation loss"),
    ("opc", "val_fraction", 0.1, "held-out fraction"),
    ("distill", "tau", 1.0, "softmax temperature"),
    ("distill", "lr", 0.003, "student learning rate"),
    ("distill", "batch_size", 64, "student minibatch"),
    ("distill", "epochs", 10, "passes over the buffers"),
    ("eval", "step", 0.1, "simplex grid resolution"),
    ("eval", "episodes", 30, "episodes per (mixture, seed)"),
    ("eval", "seeds", "0,1,2,3,4", "evaluation seeds"),
    ("eval", "workers", 1, "process pool size (QMIXLAB_THREADS overrides)"),
    ("qmvi", "tol", 1e-6, "sup-norm stopping tolerance"),
    ("qmvi", "max_iters", 10_000, "iteration cap"),
    ("qmvi", "occupancy_episodes", 30, "rollouts per opponent for the occupancy belief"),
    ("qmvi", "eval_episodes", 500, "episodes for the final evaluation"),
    ("commons", "beam_length", 10, "tag beam reach"),
    ("commons", "tag_duration", 25, "steps a tagged player is removed"),
    ("commons", "regrowth", 0.01, "per-neighbour apple regrowth rate"),
    ("commons", "episode_cap", 500, "steps per episode"),
    ("commons", "regrowth_radius", 2, "neighbourhood radius for regrowth"),
    ("commons", "map", "", "path of a text map (default built-in)"),
]


def help_text() -> str:
    lines, section = [], None
    for sec, key, default, desc in KEYS:
        if sec != section:
            lines.append(f"[{sec}]")
            section = sec
        lines.append(f"  {key} = {default}    {desc}")
    return "\n".join(lines)


@dataclass
class ExperimentConfig:
    env: str = "soccer"
    opponents: tuple[str, ...] = ("random", "chaser", "camper")
    models: dict[str, str] = field(default_factory=dict)
    seed: int = 0
    output_dir: Path = Path("runs")
    equal_budget: bool = True
    curve_every: int = 5000
    train: TrainConfig = field(default_factory=TrainConfig)
    opc: OPCConfig = field(default_factory=OPCConfig)
    distill: DistillConfig = field(default_factory=DistillConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    qmvi: QMVIConfig = field(default_factory=QMVIConfig)
    commons: CommonsParams = field(default_factory=CommonsParams)
    commons_map: str = ""

    def validate(self) -> "ExperimentConfig":
        if self.env not in ("soccer", "commons"):
            raise ConfigError(f"env must be soccer or commons, got {self.env!r}")
        if len(self.opponents) < 1 or len(set(self.opponents)) != len(self.opponents):
            raise ConfigError(f"opponents must be distinct ids, got {self.opponents}")
        for pid, path in self.models.items():
            if pid not in self.opponents:
                raise ConfigError(f"model given for {pid!r}, which is not in experiment.opponents")
            if not Path(path).exists():
                raise MissingArtifact(f"missing artifact: {path} (model for opponent {pid!r})")
        if self.eval.episodes < 1 or not self.eval.seeds or self.eval.workers < 1:
            raise ConfigError("eval.episodes, eval.seeds and eval.workers must be positive")
        if not 0 < self.opc.val_fraction < 1 or self.opc.lr <= 0 or self.opc.batch_size < 1:
            raise ConfigError("opc.lr, opc.batch_size and opc.val_fraction out of range")
        if self.distill.lr <= 0 or self.distill.batch_size < 1 or self.distill.epochs < 1:
            raise ConfigError("distill.lr, distill.batch_size and distill.epochs out of range")
        if self.qmvi.tol <= 0 or self.qmvi.max_iters < 1 or self.qmvi.occupancy_episodes < 1:
            raise ConfigError("qmvi.tol, qmvi.max_iters and qmvi.occupancy_episodes out of range")
        if self.curve_every < 0:
            raise ConfigError("train.curve_every must be non-negative")
        return self

    def opponent_spec(self, pid: str) -> str:
        return f"model:{self.models[pid]}" if pid in self.models else pid


def _cast(section: str, key: str, raw: str, like):
    try:
        if isinstance(like, bool):
            low = raw.strip().lower()
            if low not in ("1", "0", "true", "false", "yes", "no", "on", "off"):
                raise ValueError(raw)
            return low in ("1", "true", "yes", "on")
        if isinstance(like, tuple):
            return tuple(int(x) for x in raw.split(",") if x.strip())
        if isinstance(like, int):
            return int(raw)
        if isinstance(like, float):
            return float(raw)
        return raw.strip()
    except ValueError:
        raise ConfigError(f"[{section}] {key}: cannot parse {raw!r}") from None


def _update(section: str, obj, items: dict[str, str]):
    names = {f.name for f in fields(obj)}
    changes = {}
    for key, raw in items.items():
        if key not in names:
            raise ConfigError(f"unknown key [{section}] {key}")
        changes[key] = _cast(section, key, raw, getattr(obj, key))
    try:
        return replace(obj, **changes)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{section}] {exc}") from None


def load_config(path: str | Path | None = None, overrides: dict[str, dict[str, str]] | None = None) -> ExperimentConfig:
    """Read an INI file (optional) and apply ``{section: {key: value}}`` overrides on top."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    if path is not None:
        if not Path(path).exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            parser.read(path)
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from None
    sections = {s: dict(parser[s]) for s in parser.sections()}
    for sec, kv in (overrides or {}).items():
        sections.setdefault(sec, {}).update({k: str(v) for k, v in kv.items()})
    known = {"experiment", "models", "train", "opc", "distill", "eval", "qmvi", "commons"}
    unknown = set(sections) - known
    if unknown:
        raise ConfigError(f"unknown config sections {sorted(unknown)}")

    exp = sections.get("experiment", {})
    env = exp.get("env", "soccer").strip()
    train = dict(sections.get("train", {}))
    curve_every = int(_cast("train", "curve_every", train.pop("curve_every", "5000"), 0))
    hidden = train.pop("hidden", None)
    base = TrainConfig.gathering() if env == "commons" else TrainConfig.soccer()
    try:
        tcfg = _update("train", base, train)
        if hidden is not None:
            tcfg = replace(tcfg, hidden=tuple(int(h) for h in hidden.split(",")))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    cm = dict(sections.get("commons", {}))
    commons_map = cm.pop("map", "").strip()
    default_opps = "random,harvester,tagger" if env == "commons" else "random,chaser,camper"
    cfg = ExperimentConfig(
        env=env,
        opponents=tuple(x.strip() for x in exp.get("opponents", default_opps).split(",") if x.strip()),
        models={k: v.strip() for k, v in sections.get("models", {}).items()},
        seed=int(_cast("experiment", "seed", exp.get("seed", "0"), 0)),
        output_dir=Path(exp.get("output_dir", "runs")),
        equal_budget=_cast("experiment", "equal_budget", exp.get("equal_budget", "true"), True),
        curve_every=curve_every,
        train=tcfg,
        opc=_update("opc", OPCConfig(), sections.get("opc", {})),
        distill=_update("distill", DistillConfig(), sections.get("distill", {})),
        eval=_update("eval", EvalConfig(), sections.get("eval", {})),
        qmvi=_update("qmvi", QMVIConfig(), sections.get("qmvi", {})),
        commons=_update("commons", CommonsParams(), cm),
        commons_map=commons_map,
    )
    extra = set(exp) - {"env", "opponents", "seed", "output_dir", "equal_budget"}
    if extra:
        raise ConfigError(f"unknown key [experiment] {sorted(extra)[0]}")
    return cfg.validate()
