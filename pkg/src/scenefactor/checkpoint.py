"""Versioned, bitwise-lossless model checkpoints (npz with a JSON header)."""
from __future__ import annotations

import io
import json

import numpy as np

FORMAT_VERSION = 1


class CheckpointError(ValueError):
    pass


def save_checkpoint(path, meta: dict, arrays: dict[str, np.ndarray]):
    header = {"format_version": FORMAT_VERSION, "meta": meta,
              "array_names": sorted(arrays)}
    payload = {f"a_{i}": arrays[name] for i, name in enumerate(sorted(arrays))}
    payload["header"] = np.frombuffer(json.dumps(header, sort_keys=True).encode(), dtype=np.uint8)
    with open(path, "wb") as f:
        np.savez(f, **payload)


def load_checkpoint(path) -> tuple[dict, dict[str, np.ndarray]]:
    with np.load(path) as z:
        if "header" not in z:
            raise CheckpointError(f"{path}: not a scenefactor checkpoint")
        header = json.loads(bytes(z["header"].tobytes()).decode())
        if header.get("format_version") != FORMAT_VERSION:
            raise CheckpointError(f"unsupported checkpoint version {header.get('format_version')}")
        arrays = {name: z[f"a_{i}"] for i, name in enumerate(header["array_names"])}
    return header["meta"], arrays
