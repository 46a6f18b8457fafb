"""Named parameter arrays and versioned JSON checkpoints."""
from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

CHECKPOINT_VERSION = 1


class ParamStore:
    """Flat dict of named float64 arrays; the single owner of trainable state.

    Group names are slash-paths ("concept/red", "proj/object/w", ...) so that
    training stages can select update sets by prefix.
    """

    def __init__(self):
        self._arrays: dict[str, np.ndarray] = {}

    def add(self, key: str, values: np.ndarray) -> np.ndarray:
        if key in self._arrays:
            raise KeyError(f"parameter group {key!r} already exists")
        arr = np.asarray(values, dtype=np.float64).copy()
        self._arrays[key] = arr
        return arr

    def __contains__(self, key: str) -> bool:
        return key in self._arrays

    def __getitem__(self, key: str) -> np.ndarray:
        return self._arrays[key]

    def __iter__(self):
        return iter(self._arrays)

    def keys(self):
        return self._arrays.keys()

    def items(self):
        return self._arrays.items()

    def as_dict(self) -> dict:
        return self._arrays

    def keys_with_prefix(self, *prefixes: str) -> list[str]:
        def hit(k, p):
            if p.endswith("/"):
                return k.startswith(p)
            return k == p or k.startswith(p + "/")
        return [k for k in self._arrays if any(hit(k, p) for p in prefixes)]

    def digest(self, *prefixes: str) -> str:
        """Content hash of the selected groups; used to assert freeze contracts."""
        keys = sorted(self.keys_with_prefix(*prefixes)) if prefixes else sorted(self._arrays)
        h = hashlib.sha256()
        for k in keys:
            h.update(k.encode())
            h.update(self._arrays[k].tobytes())
        return h.hexdigest()

    # -- checkpoint io -------------------------------------------------------

    def to_payload(self) -> dict:
        return {k: v.tolist() for k, v in sorted(self._arrays.items())}

    @classmethod
    def from_payload(cls, payload: dict) -> "ParamStore":
        store = cls()
        for k, v in payload.items():
            store.add(k, np.asarray(v, dtype=np.float64))
        return store


def save_checkpoint(path, store: ParamStore, meta: dict) -> None:
    doc = {"version": CHECKPOINT_VERSION, "meta": meta, "params": store.to_payload()}
    Path(path).write_text(json.dumps(doc))


def load_checkpoint(path) -> tuple[ParamStore, dict]:
    doc = json.loads(Path(path).read_text())
    version = doc.get("version")
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {version!r}")
    return ParamStore.from_payload(doc["params"]), doc["meta"]
