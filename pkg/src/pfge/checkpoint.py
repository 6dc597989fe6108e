"""Weight checkpoints: a raw binary payload plus a JSON header sidecar.

The payload is the flat parameter vector as little-endian float64 bytes, so
two runs can be compared byte-for-byte. The sidecar carries the architecture,
optional feature-standardization statistics, free-form creation metadata, and
a SHA-256 digest of the payload that is verified on load.
"""

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import DataFormatError
from .nn import LayerSpec, ModelWeights

FORMAT_VERSION = 1


@dataclass(frozen=True)
class Checkpoint:
    """A loaded or to-be-saved weight vector with its header metadata."""

    weights: ModelWeights
    standardization: Optional[dict] = None
    meta: dict = field(default_factory=dict)

    @property
    def spec(self) -> LayerSpec:
        return self.weights.spec


def _payload_bytes(w: ModelWeights) -> bytes:
    return w.values.astype("<f8").tobytes()


def _digest(payload: bytes) -> str:
    return "sha256:" + hashlib.sha256(payload).hexdigest()


def header_path(path) -> Path:
    return Path(str(path) + ".json")


def save_checkpoint(path, ckpt: Checkpoint) -> None:
    """Write ``<path>`` (payload) and ``<path>.json`` (header)."""
    path = Path(path)
    payload = _payload_bytes(ckpt.weights)
    header = {
        "format_version": FORMAT_VERSION,
        "layer_sizes": list(ckpt.spec.sizes),
        "activation": ckpt.spec.activation,
        "n_params": ckpt.spec.param_count,
        "digest": _digest(payload),
        "standardization": ckpt.standardization,
        "meta": ckpt.meta,
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(payload)
    header_path(path).write_text(json.dumps(header, indent=2, sort_keys=True) + "\n")


def load_checkpoint(path) -> Checkpoint:
    """Load and validate a checkpoint pair; raises DataFormatError on any
    inconsistency (missing sidecar, digest mismatch, wrong payload length)."""
    path = Path(path)
    sidecar = header_path(path)
    if not path.exists():
        raise FileNotFoundError(f"checkpoint payload not found: {path}")
    if not sidecar.exists():
        raise DataFormatError(f"checkpoint header not found: {sidecar}")
    try:
        header = json.loads(sidecar.read_text())
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{sidecar}: invalid JSON header: {exc}") from None
    if header.get("format_version") != FORMAT_VERSION:
        raise DataFormatError(
            f"{sidecar}: unsupported format version {header.get('format_version')!r}"
        )
    payload = path.read_bytes()
    if _digest(payload) != header.get("digest"):
        raise DataFormatError(f"{path}: payload digest does not match header")
    spec = LayerSpec(tuple(header["layer_sizes"]), header["activation"])
    values = np.frombuffer(payload, dtype="<f8")
    if values.size != spec.param_count:
        raise DataFormatError(
            f"{path}: payload holds {values.size} values, spec needs {spec.param_count}"
        )
    return Checkpoint(
        weights=ModelWeights(spec, values),
        standardization=header.get("standardization"),
        meta=header.get("meta", {}),
    )
