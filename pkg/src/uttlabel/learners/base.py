"""Shared learner plumbing: input coercion, the uniform predict interface,
and a deterministic model container.

Every trained model exposes ``classes`` (class ids in label-universe order)
and ``decision_scores(X) -> (N, K) ndarray``; :func:`predict` turns scores
into class ids with ties broken toward the lowest class index.  Containers
are zip archives holding a JSON manifest plus .npy arrays, written with
fixed timestamps and sorted entries so identical models produce identical
bytes.
"""

from __future__ import annotations

import io
import json
import zipfile
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np
from scipy import sparse

from uttlabel.features import SparseVector, vectors_to_csr


class TrainedModel(Protocol):
    kind: str
    classes: tuple

    def decision_scores(self, X) -> np.ndarray: ...

    def to_state(self) -> dict: ...


MODEL_REGISTRY: dict[str, type] = {}


def register_model(cls: type) -> type:
    """Class decorator: adds the model to the serialization registry."""
    MODEL_REGISTRY[cls.kind] = cls
    return cls


def as_csr(X, dimension: int | None = None) -> sparse.csr_matrix:
    """Coerce SparseVector sequences or scipy matrices to canonical CSR."""
    if sparse.issparse(X):
        mat = X.tocsr().astype(np.float64)
    elif isinstance(X, np.ndarray):
        mat = sparse.csr_matrix(np.asarray(X, dtype=np.float64))
    else:
        seq = list(X)
        if seq and not isinstance(seq[0], SparseVector):
            raise TypeError(f"cannot interpret {type(seq[0]).__name__} rows as features")
        mat = vectors_to_csr(seq, dimension)
    if not mat.has_sorted_indices:
        mat.sort_indices()
    return mat


def check_dimension(X: sparse.csr_matrix, expected: int) -> None:
    if X.shape[1] != expected:
        raise ValueError(f"feature dimension mismatch: got {X.shape[1]}, model has {expected}")


def encode_labels(y: Sequence, classes: Sequence | None) -> tuple[np.ndarray, tuple]:
    """Map labels to indices over an explicit or sorted-unique class order."""
    if len(y) == 0:
        raise ValueError("empty training set")
    if classes is None:
        classes = sorted(set(y))
    classes = tuple(classes)
    index = {c: i for i, c in enumerate(classes)}
    if len(index) != len(classes):
        raise ValueError("duplicate entries in classes")
    try:
        encoded = np.asarray([index[v] for v in y], dtype=np.int32)
    except KeyError as exc:
        raise ValueError(f"label {exc.args[0]!r} not in classes") from exc
    return encoded, classes


def predict(model: TrainedModel, X) -> tuple[list, np.ndarray]:
    """Uniform prediction: (class ids, per-class score matrix).

    The reported label is always the argmax of the reported scores; ties
    break toward the lowest class index.
    """
    X = as_csr(X, dimension=getattr(model, "dimension", None))
    scores = model.decision_scores(X)
    if scores.shape[0] == 0:
        return [], scores
    picks = np.argmax(scores, axis=1)
    labels = [model.classes[int(i)] for i in picks]
    return labels, scores


# --- model container ---------------------------------------------------------

_ZIP_EPOCH = (1980, 1, 1, 0, 0, 0)


def _flatten_state(node, arrays: dict[str, np.ndarray], path: str):
    if isinstance(node, np.ndarray):
        key = f"a{len(arrays)}"
        arrays[key] = node
        return {"__array__": key}
    if isinstance(node, dict):
        return {k: _flatten_state(v, arrays, f"{path}/{k}") for k, v in node.items()}
    if isinstance(node, (list, tuple)):
        return [_flatten_state(v, arrays, f"{path}[{i}]") for i, v in enumerate(node)]
    if isinstance(node, (np.integer,)):
        return int(node)
    if isinstance(node, (np.floating,)):
        return float(node)
    if node is None or isinstance(node, (str, int, float, bool)):
        return node
    raise TypeError(f"unserializable value at {path}: {type(node).__name__}")


def _restore_state(node, arrays: dict[str, np.ndarray]):
    if isinstance(node, dict):
        if set(node) == {"__array__"}:
            return arrays[node["__array__"]]
        return {k: _restore_state(v, arrays) for k, v in node.items()}
    if isinstance(node, list):
        return [_restore_state(v, arrays) for v in node]
    return node


def save_model(model: TrainedModel, path: str | Path) -> None:
    """Write a model container; identical models yield identical bytes."""
    arrays: dict[str, np.ndarray] = {}
    manifest = {
        "format": "uttlabel-model",
        "version": 1,
        "kind": model.kind,
        "state": _flatten_state(model.to_state(), arrays, "state"),
    }
    with zipfile.ZipFile(Path(path), "w", compression=zipfile.ZIP_STORED) as zf:
        entries: list[tuple[str, bytes]] = [
            ("manifest.json", json.dumps(manifest, sort_keys=True, indent=1).encode("utf-8"))
        ]
        for key in sorted(arrays):
            buf = io.BytesIO()
            np.save(buf, arrays[key], allow_pickle=False)
            entries.append((f"{key}.npy", buf.getvalue()))
        for name, payload in sorted(entries):
            info = zipfile.ZipInfo(name, date_time=_ZIP_EPOCH)
            info.compress_type = zipfile.ZIP_STORED
            zf.writestr(info, payload)


def load_model(path: str | Path):
    """Load any registered model from its container."""
    try:
        zf = zipfile.ZipFile(Path(path), "r")
    except zipfile.BadZipFile as exc:
        raise ValueError(f"{path}: not a model container ({exc})") from exc
    with zf:
        try:
            manifest = json.loads(zf.read("manifest.json").decode("utf-8"))
        except KeyError as exc:
            raise ValueError(f"{path}: not a model container (no manifest)") from exc
        if manifest.get("format") != "uttlabel-model":
            raise ValueError(f"{path}: not a model container")
        arrays = {}
        for name in zf.namelist():
            if name.endswith(".npy"):
                arrays[name[:-4]] = np.load(io.BytesIO(zf.read(name)), allow_pickle=False)
    kind = manifest["kind"]
    if kind not in MODEL_REGISTRY:
        raise ValueError(f"{path}: unknown model kind {kind!r}")
    state = _restore_state(manifest["state"], arrays)
    return MODEL_REGISTRY[kind].from_state(state)
