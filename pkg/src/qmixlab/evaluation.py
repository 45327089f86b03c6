"""Coverage sweeps over the opponent mixture simplex and their statistics."""
from __future__ import annotations

import csv
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from qmixlab.envs.base import Policy
from qmixlab.errors import ArtifactError
from qmixlab.mixture import MixedStrategy, format_mixture, parse_mixture
from qmixlab.qlearn.rollout import DEFAULT_EPISODES, evaluate_policy

T_95_DF4 = 2.776
DEFAULT_SEEDS = (0, 1, 2, 3, 4)


def enumerate_mixtures(k: int, step: float = 0.1, ids: Sequence[str] | None = None) -> list[MixedStrategy]:
    """Every point of the simplex whose weights are multiples of ``step``.

    Stars and bars: C(n + k - 1, k - 1) points for n = 1/step, returned in
    lexicographic order of the weight vectors (descending from the first
    opponent's point mass).
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    frac = Fraction(str(step))
    if frac <= 0 or frac.numerator != 1:
        raise ValueError(f"1/step must be a positive integer, got step={step}")
    n = frac.denominator
    ids = [f"opp{i}" for i in range(k)] if ids is None else list(ids)
    if len(ids) != k:
        raise ValueError(f"{len(ids)} ids for k={k}")
    grid = []
    for bars in combinations(range(n + k - 1), k - 1):
        edges = (-1, *bars, n + k - 1)
        counts = [edges[i + 1] - edges[i] - 1 for i in range(k)]
        grid.append(counts)
    grid.sort(reverse=True)
    return [MixedStrategy(ids, [c / n for c in counts]) for counts in grid]


@dataclass(frozen=True)
class ConfidenceInterval:
    mean: float
    half_width: float
    n: int
    t: float

    @property
    def low(self) -> float:
        return self.mean - self.half_width

    @property
    def high(self) -> float:
        return self.mean + self.half_width


def confidence_interval(values, t: float = T_95_DF4) -> ConfidenceInterval:
    """mean +- t * s / sqrt(n) with the n-1 sample standard deviation."""
    x = np.asarray(values, dtype=float)
    if x.size < 2:
        raise ValueError("confidence interval needs at least two values")
    s = x.std(ddof=1)
    return ConfidenceInterval(float(x.mean()), float(t * s / np.sqrt(x.size)), int(x.size), float(t))


def t_multiplier(n: int, level: float = 0.95) -> float:
    """Two-sided Student-t multiplier for ``n`` samples."""
    from scipy import stats

    return float(stats.t.ppf(0.5 + level / 2, n - 1))


def t_for(n: int) -> float:
    """2.776 for the standard five seeds, the exact Student-t value otherwise."""
    return T_95_DF4 if n == len(DEFAULT_SEEDS) else t_multiplier(n)


@dataclass
class CoverageReport:
    methods: list[str]
    grid: list[MixedStrategy]
    seeds: list[int]
    # per_seed[method] has shape (len(grid), len(seeds))
    per_seed: dict[str, np.ndarray]
    t: float = T_95_DF4
    aggregate: dict[str, np.ndarray] = field(init=False)
    half_width: dict[str, np.ndarray] = field(init=False)
    order: dict[str, np.ndarray] = field(init=False)

    def __post_init__(self):
        self.aggregate, self.half_width, self.order = {}, {}, {}
        for m in self.methods:
            x = np.asarray(self.per_seed[m], dtype=float)
            self.per_seed[m] = x
            self.aggregate[m] = x.mean(axis=1)
            if x.shape[1] >= 2:
                self.half_width[m] = self.t * x.std(axis=1, ddof=1) / np.sqrt(x.shape[1])
            else:
                self.half_width[m] = np.zeros(x.shape[0])
            # stable sort, descending by aggregate mean
            self.order[m] = np.argsort(-self.aggregate[m], kind="stable")

    def grid_mean(self, method: str) -> float:
        return float(self.aggregate[method].mean())

    def grid_mean_ci(self, method: str) -> ConfidenceInterval:
        """Seed-level CI of the grid-averaged return."""
        per_seed = self.per_seed[method].mean(axis=0)
        return confidence_interval(per_seed, self.t)

    def sorted_curve(self, method: str):
        o = self.order[method]
        return [(rank + 1, self.grid[i], float(self.aggregate[method][i]), float(self.half_width[method][i]))
                for rank, i in enumerate(o)]


def _method_key(name: str) -> int:
    return zlib.crc32(name.encode())


def _sweep_task(args):
    env, policy, sigma, pool, episodes, seed_key = args
    mean, _ = evaluate_policy(env, policy, sigma, episodes, seed_key, pool)
    return mean


def sweep_seed_key(seed: int, method: str, mixture_index: int) -> tuple[int, int, int]:
    """RNG key for one (seed, method, mixture) cell; episodes extend it with their index."""
    return (int(seed), _method_key(method), int(mixture_index))


class PerMixture:
    """Method whose policy depends on the evaluated mixture.

    ``build(sigma, seed_index)`` returns the policy used for that cell; this is
    how Q-Mixing-Prior gets the grid point's weights.
    """

    def __init__(self, build: Callable[[MixedStrategy, int], Policy]):
        self.build = build


def _policies_for(name, spec, n_seeds):
    if isinstance(spec, PerMixture):
        return spec
    pols = list(spec) if isinstance(spec, (list, tuple)) else [spec] * n_seeds
    if len(pols) != n_seeds:
        raise ValueError(f"method {name!r} has {len(pols)} policies for {n_seeds} seeds")
    return pols


def coverage_sweep(env, methods: Mapping[str, Policy | Sequence[Policy] | PerMixture],
                   opponents: Mapping[str, Policy], grid: Sequence[MixedStrategy],
                   episodes: int = DEFAULT_EPISODES, seeds: Sequence[int] = DEFAULT_SEEDS,
                   t: float | None = None, workers: int = 1) -> CoverageReport:
    """Evaluate every method against every mixture of ``grid`` for every seed.

    ``methods[name]`` is one policy shared by all seeds, a sequence with one
    policy per seed, or a :class:`PerMixture` factory.
    """
    if not seeds:
        raise ValueError("at least one seed is required")
    for sigma in grid:
        missing = [i for i in sigma.ids if i not in opponents]
        if missing:
            raise ValueError(f"grid references unknown opponents {missing}")
    names = list(methods)
    specs = {name: _policies_for(name, methods[name], len(seeds)) for name in names}
    tasks = []
    for name in names:
        spec = specs[name]
        for g, sigma in enumerate(grid):
            for s, seed in enumerate(seeds):
                pol = spec.build(sigma, s) if isinstance(spec, PerMixture) else spec[s]
                if pol.n_actions != env.n_actions:
                    raise ValueError(f"method {name!r} acts over {pol.n_actions} actions, env has {env.n_actions}")
                tasks.append((env, pol, sigma, opponents, episodes, sweep_seed_key(seed, name, g)))
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            results = list(ex.map(_sweep_task, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    else:
        results = [_sweep_task(a) for a in tasks]
    per = np.asarray(results).reshape(len(names), len(grid), len(seeds))
    t = t_for(len(seeds)) if t is None else t
    return CoverageReport(names, list(grid), list(seeds), {n: per[i] for i, n in enumerate(names)}, t)


def _fmt(x: float) -> str:
    return f"{x:.6g}"


RAW_FILE = "coverage_raw.csv"
CURVE_FILE = "coverage_sorted.csv"


def emit_report(report: CoverageReport, path: str | Path) -> tuple[Path, Path]:
    """Write the per-seed table and the per-method sorted curve as CSV files in ``path``."""
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
        raw, curve = out / RAW_FILE, out / CURVE_FILE
        with raw.open("w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["method", "mixture", "seed", "mean_return"])
            for m in report.methods:
                for g, sigma in enumerate(report.grid):
                    for s, seed in enumerate(report.seeds):
                        w.writerow([m, sigma.literal(), seed, _fmt(report.per_seed[m][g, s])])
        with curve.open("w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["method", "rank", "mixture", "aggregate_mean", "ci_halfwidth"])
            for m in report.methods:
                for rank, sigma, mean, hw in report.sorted_curve(m):
                    w.writerow([m, rank, sigma.literal(), _fmt(mean), _fmt(hw)])
    except OSError as exc:
        raise ArtifactError(f"cannot write report to {out}: {exc}") from exc
    return raw, curve


def read_sorted_curve(path: str | Path) -> dict[str, list[tuple[int, str, float, float]]]:
    curve: dict[str, list] = {}
    with Path(path).open(newline="") as f:
        for row in csv.DictReader(f):
            curve.setdefault(row["method"], []).append(
                (int(row["rank"]), row["mixture"], float(row["aggregate_mean"]), float(row["ci_halfwidth"])))
    return curve


def read_report(path: str | Path, ids: Sequence[str], t: float | None = None) -> CoverageReport:
    """Rebuild a report from the per-seed table written by :func:`emit_report`."""
    rows: dict[str, dict[str, dict[int, float]]] = {}
    with (Path(path) / RAW_FILE).open(newline="") as f:
        for row in csv.DictReader(f):
            rows.setdefault(row["method"], {}).setdefault(row["mixture"], {})[int(row["seed"])] = float(
                row["mean_return"])
    methods = list(rows)
    literals = list(rows[methods[0]])
    seeds = sorted(rows[methods[0]][literals[0]])
    grid = [parse_mixture(lit, ids) for lit in literals]
    per = {m: np.array([[rows[m][lit][s] for s in seeds] for lit in literals]) for m in methods}
    return CoverageReport(methods, grid, seeds, per, t_for(len(seeds)) if t is None else t)


__all__ = [
    "ConfidenceInterval", "CoverageReport", "PerMixture", "coverage_sweep", "confidence_interval", "emit_report",
    "enumerate_mixtures", "format_mixture", "read_report", "read_sorted_curve", "t_for", "t_multiplier",
]
