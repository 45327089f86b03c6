"""Model and replay-buffer artifacts as versioned JSON documents.

Floats are written with ``repr`` (shortest round-tripping form), so loading a
saved artifact reproduces every weight bit for bit.
"""
from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np

from qmixlab.envs.base import Observation
from qmixlab.errors import CorruptDocument, DimensionError, MissingArtifact, VersionMismatch
from qmixlab.opc import Classifier, TabularClassifier
from qmixlab.qlearn.networks import MLP, MLPQ, TabularQ
from qmixlab.qlearn.replay import ReplayBuffer

FORMAT_VERSION = 1
VARIANTS = ("mlp", "tabular", "classifier", "tabular_classifier")


def atomic_write_text(path: str | Path, text: str) -> Path:
    """Write to a sibling temp file then rename, so readers never see a partial file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _read_json(path: str | Path) -> dict:
    path = Path(path)
    if not path.exists():
        raise MissingArtifact(f"missing artifact: {path}")
    try:
        doc = json.loads(path.read_text())
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CorruptDocument(f"corrupt document {path}: {exc}") from None
    if not isinstance(doc, dict):
        raise CorruptDocument(f"corrupt document {path}: top level is not an object")
    return doc


def model_document(model, config: dict | None = None, provenance: dict | None = None) -> dict:
    doc = {"format_version": FORMAT_VERSION, "variant": model.variant}
    if isinstance(model, (MLP, Classifier)):
        net = model.net if isinstance(model, Classifier) else model
        doc["layer_dims"] = list(net.dims)
        doc["weights"] = [p.tolist() for p in net.params]
        doc["action_count"] = net.out_dim
    elif isinstance(model, TabularQ):
        doc["layer_dims"] = [model.obs_dim, model.n_actions]
        doc["action_count"] = model.n_actions
        doc["table"] = [[int(k), v.tolist()] for k, v in sorted(model.table.items())]
        doc["init"] = model.init
    elif isinstance(model, TabularClassifier):
        doc["layer_dims"] = [model.obs_dim, len(model.ids)]
        doc["action_count"] = len(model.ids)
        doc["table"] = [[int(k), v.tolist()] for k, v in sorted(model.counts.items())]
    else:
        raise TypeError(f"cannot serialise {type(model).__name__}")
    if isinstance(model, (Classifier, TabularClassifier)):
        doc["labels"] = list(model.ids)
    doc["config"] = config or {}
    doc["provenance"] = provenance or {}
    return doc


def save_model(model, path: str | Path, config: dict | None = None, provenance: dict | None = None) -> Path:
    return atomic_write_text(path, json.dumps(model_document(model, config, provenance)))


def model_from_document(doc: dict, where: str = "<document>"):
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"{where}: format version {version!r}, this build reads {FORMAT_VERSION}")
    try:
        variant = doc["variant"]
        dims = doc["layer_dims"]
        if variant in ("mlp", "classifier"):
            params = [np.asarray(w, dtype=float) for w in doc["weights"]]
            if variant == "mlp":
                return MLPQ(dims, params=params)
            return Classifier(MLP(dims, params=params), doc["labels"])
        if variant == "tabular":
            q = TabularQ(int(doc["action_count"]), dims[0], float(doc.get("init", 0.0)))
            q.table = {int(k): np.asarray(v, dtype=float) for k, v in doc["table"]}
            return q
        if variant == "tabular_classifier":
            c = TabularClassifier(doc["labels"], dims[0])
            c.counts = {int(k): np.asarray(v, dtype=float) for k, v in doc["table"]}
            return c
    except DimensionError:
        raise
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise CorruptDocument(f"corrupt document {where}: {exc!r}") from None
    raise CorruptDocument(f"corrupt document {where}: unknown variant {variant!r}")


def load_model(path: str | Path, expect_obs_dim: int | None = None, expect_actions: int | None = None):
    """Load a saved model, optionally checking it against the current environment's dims."""
    model = model_from_document(_read_json(path), str(path))
    check_dims(model, expect_obs_dim, expect_actions, str(path))
    return model


def check_dims(model, obs_dim: int | None, n_actions: int | None, where: str = "model") -> None:
    have_obs = getattr(model, "obs_dim", None)
    if obs_dim is not None and have_obs is not None and have_obs != obs_dim:
        raise DimensionError(f"{where}: model observation dim {have_obs} != environment observation dim {obs_dim}")
    have_act = getattr(model, "n_actions", None)
    if n_actions is not None and have_act is not None and have_act != n_actions:
        raise DimensionError(f"{where}: model action count {have_act} != environment action count {n_actions}")


def load_config_echo(path: str | Path) -> dict:
    return _read_json(path).get("config", {})


REPLAY_FIELDS = ("obs", "action", "reward", "next_obs", "terminal", "label")


def save_replay(buffer: ReplayBuffer, path: str | Path) -> Path:
    """One JSON record per line, oldest first, preceded by a header line."""
    lines = [json.dumps({"format_version": FORMAT_VERSION, "capacity": buffer.capacity,
                         "obs_dim": buffer.obs_dim, "count": len(buffer)})]
    for t in buffer:
        lines.append(json.dumps({
            "obs": [int(t.obs.key), np.asarray(t.obs.vector).tolist()],
            "action": t.action,
            "reward": t.reward,
            "next_obs": [int(t.next_obs.key), np.asarray(t.next_obs.vector).tolist()],
            "terminal": t.terminal,
            "label": t.label,
        }))
    return atomic_write_text(path, "\n".join(lines) + "\n")


def load_replay(path: str | Path) -> ReplayBuffer:
    path = Path(path)
    if not path.exists():
        raise MissingArtifact(f"missing artifact: {path}")
    text = path.read_text()
    rows = text.splitlines()
    try:
        header = json.loads(rows[0])
        if header.get("format_version") != FORMAT_VERSION:
            raise VersionMismatch(f"{path}: format version {header.get('format_version')!r}, "
                                  f"this build reads {FORMAT_VERSION}")
        buf = ReplayBuffer(int(header["capacity"]), int(header["obs_dim"]))
        records = [json.loads(r) for r in rows[1:] if r.strip()]
        if len(records) != header["count"] or not text.endswith("\n"):
            raise CorruptDocument(f"corrupt document {path}: expected {header['count']} records, "
                                  f"found {len(records)}")
        for rec in records:
            ok, ov = rec["obs"]
            nk, nv = rec["next_obs"]
            buf.add(Observation(np.asarray(ov, dtype=np.uint8), ok), int(rec["action"]), float(rec["reward"]),
                    Observation(np.asarray(nv, dtype=np.uint8), nk), bool(rec["terminal"]), rec["label"])
    except (VersionMismatch, CorruptDocument):
        raise
    except (IndexError, KeyError, TypeError, ValueError) as exc:
        raise CorruptDocument(f"corrupt document {path}: {exc!r}") from None
    return buf
