"""LoRA adapter and delta (language-vector) data model.

An adapter stores per-layer low-rank factors ``A`` (rank x d_in) and ``B``
(d_out x rank) together with the rank, the alpha scale, and a label naming
the language or task.  Its delta is the full-rank update each layer applies
to the base weights, ``(alpha / rank) * B @ A``; with the common alpha ==
rank configuration the scale factor is exactly 1.  Deltas, not raw factors,
are what the merging engine consumes.

On disk both live in the container format of :mod:`loramerge.container`,
with tensor names ``<layer>.lora_A`` / ``<layer>.lora_B`` for adapters and
``<layer>.delta`` for deltas.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from . import container
from .errors import (
    DataError,
    FormatError,
    NumericalError,
    PairingError,
    ParameterError,
    ValidationError,
)

_A_SUFFIX = ".lora_A"
_B_SUFFIX = ".lora_B"
_DELTA_SUFFIX = ".delta"


@dataclass(frozen=True, eq=False)
class TensorBlock:
    """A named float32 array; the unit of all merging arithmetic."""

    name: str
    values: np.ndarray

    def __post_init__(self) -> None:
        if not isinstance(self.name, str) or not self.name:
            raise ValidationError("tensor name must be a non-empty string")
        arr = np.asarray(self.values, dtype=np.float32)
        if arr.ndim < 1 or any(d < 1 for d in arr.shape):
            raise ValidationError(
                f"tensor {self.name!r} must have >=1 dimension, all sizes >=1"
            )
        arr = np.ascontiguousarray(arr)
        if not np.isfinite(arr).all():
            raise DataError(f"tensor {self.name!r} contains non-finite values")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    @property
    def size(self) -> int:
        return self.values.size


@dataclass(frozen=True, eq=False)
class LoraAdapter:
    """Per-layer (A, B) factor pairs sharing one rank and alpha."""

    layers: dict[str, tuple[TensorBlock, TensorBlock]]
    rank: int
    alpha: float
    label: str = ""

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        if not self.layers:
            raise ValidationError("adapter has no layers")
        if not isinstance(self.rank, int) or self.rank < 1:
            raise ValidationError(f"rank must be a positive integer, got {self.rank!r}")
        if not (float(self.alpha) > 0 and np.isfinite(self.alpha)):
            raise ValidationError(f"alpha must be positive and finite, got {self.alpha!r}")
        for layer, (a, b) in self.layers.items():
            if a.values.ndim != 2 or b.values.ndim != 2:
                raise ValidationError(f"layer {layer!r}: A and B must be 2-D")
            if a.shape[0] != self.rank or b.shape[1] != self.rank:
                raise ValidationError(
                    f"layer {layer!r}: A is {a.shape}, B is {b.shape}, "
                    f"but rank is {self.rank}"
                )


@dataclass(frozen=True, eq=False)
class DeltaMap:
    """Per-layer full-rank delta tensors for one labelled model."""

    layers: dict[str, TensorBlock]
    label: str = ""

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        if not self.layers:
            raise ValidationError("delta map has no layers")
        for layer, block in self.layers.items():
            if block.values.ndim != 2:
                raise ValidationError(f"layer {layer!r}: delta must be 2-D, got {block.shape}")

    @classmethod
    def from_arrays(cls, layers: Mapping[str, np.ndarray], label: str = "") -> "DeltaMap":
        return cls({name: TensorBlock(name, arr) for name, arr in layers.items()}, label)


def compute_delta(adapter: LoraAdapter) -> DeltaMap:
    """Form each layer's full-rank delta ``(alpha / rank) * B @ A``.

    Products accumulate in float64 and round once to float32 storage.
    """
    adapter.validate()
    scale = float(adapter.alpha) / float(adapter.rank)
    layers: dict[str, TensorBlock] = {}
    for layer, (a, b) in adapter.layers.items():
        product = b.values.astype(np.float64) @ a.values.astype(np.float64)
        layers[layer] = TensorBlock(layer, (scale * product).astype(np.float32))
    return DeltaMap(layers, adapter.label)


def save_adapter(adapter: LoraAdapter, path: str) -> None:
    """Write an adapter; revalidates first so nothing is written on failure."""
    adapter.validate()
    tensors = {}
    for layer, (a, b) in adapter.layers.items():
        tensors[layer + _A_SUFFIX] = a.values
        tensors[layer + _B_SUFFIX] = b.values
    metadata = {
        "rank": str(adapter.rank),
        "alpha": repr(float(adapter.alpha)),
        "label": adapter.label,
    }
    container.write_tensors(path, tensors, metadata)


def _adapter_from_payload(
    tensors: dict[str, np.ndarray], metadata: dict[str, str], path: str
) -> LoraAdapter:
    for key in ("rank", "alpha", "label"):
        if key not in metadata:
            raise FormatError(f"{path}: adapter metadata is missing {key!r}")
    try:
        rank = int(metadata["rank"])
        alpha = float(metadata["alpha"])
    except ValueError as exc:
        raise FormatError(f"{path}: malformed rank/alpha metadata ({exc})") from exc

    a_parts: dict[str, np.ndarray] = {}
    b_parts: dict[str, np.ndarray] = {}
    for name, arr in tensors.items():
        if name.endswith(_A_SUFFIX) and len(name) > len(_A_SUFFIX):
            a_parts[name[: -len(_A_SUFFIX)]] = arr
        elif name.endswith(_B_SUFFIX) and len(name) > len(_B_SUFFIX):
            b_parts[name[: -len(_B_SUFFIX)]] = arr
        else:
            raise FormatError(
                f"{path}: tensor {name!r} does not follow the <layer>.lora_A/.lora_B convention"
            )
    missing_b = sorted(set(a_parts) - set(b_parts))
    missing_a = sorted(set(b_parts) - set(a_parts))
    if missing_b:
        raise PairingError(f"{path}: missing lora_B for layer {missing_b[0]!r}")
    if missing_a:
        raise PairingError(f"{path}: missing lora_A for layer {missing_a[0]!r}")

    layers = {
        layer: (
            TensorBlock(layer + _A_SUFFIX, a_parts[layer]),
            TensorBlock(layer + _B_SUFFIX, b_parts[layer]),
        )
        for layer in sorted(a_parts)
    }
    return LoraAdapter(layers, rank, alpha, metadata["label"])


def load_adapter(path: str) -> LoraAdapter:
    """Read and validate an adapter container file."""
    tensors, metadata = container.read_tensors(path)
    return _adapter_from_payload(tensors, metadata, path)


def save_delta(delta: DeltaMap, path: str) -> None:
    delta.validate()
    tensors = {layer + _DELTA_SUFFIX: block.values for layer, block in delta.layers.items()}
    container.write_tensors(path, tensors, {"label": delta.label})


def _delta_from_payload(
    tensors: dict[str, np.ndarray], metadata: dict[str, str], path: str
) -> DeltaMap:
    if "label" not in metadata:
        raise FormatError(f"{path}: delta metadata is missing 'label'")
    layers: dict[str, TensorBlock] = {}
    for name, arr in tensors.items():
        if not name.endswith(_DELTA_SUFFIX) or len(name) == len(_DELTA_SUFFIX):
            raise FormatError(
                f"{path}: tensor {name!r} does not follow the <layer>.delta convention"
            )
        layers[name[: -len(_DELTA_SUFFIX)]] = TensorBlock(name[: -len(_DELTA_SUFFIX)], arr)
    return DeltaMap(layers, metadata["label"])


def load_delta(path: str) -> DeltaMap:
    """Read and validate a delta container file."""
    tensors, metadata = container.read_tensors(path)
    return _delta_from_payload(tensors, metadata, path)


def load_as_delta(path: str) -> DeltaMap:
    """Load either a delta file or an adapter file (computing its delta)."""
    tensors, metadata = container.read_tensors(path)
    names = list(tensors)
    if all(n.endswith(_DELTA_SUFFIX) for n in names):
        return _delta_from_payload(tensors, metadata, path)
    if all(n.endswith((_A_SUFFIX, _B_SUFFIX)) for n in names):
        return compute_delta(_adapter_from_payload(tensors, metadata, path))
    raise FormatError(f"{path}: mixed or unknown tensor naming, cannot infer file kind")


def refactor_to_adapter(delta: DeltaMap, rank: int) -> LoraAdapter:
    """Approximate a delta by a rank-``rank`` adapter via truncated SVD.

    Per layer, ``delta ~= (U sqrt(S)) @ (sqrt(S) Vt)`` keeping the top
    ``rank`` singular triplets.  The result uses alpha == rank so its
    reconstructed delta is plain ``B @ A``.
    """
    delta.validate()
    if not isinstance(rank, int) or rank < 1:
        raise ParameterError(f"refactor rank must be a positive integer, got {rank!r}")
    for layer, block in delta.layers.items():
        if rank > min(block.shape):
            raise ParameterError(
                f"refactor rank {rank} exceeds min dimension of layer {layer!r} {block.shape}"
            )
    layers: dict[str, tuple[TensorBlock, TensorBlock]] = {}
    for layer, block in delta.layers.items():
        try:
            u, s, vt = np.linalg.svd(block.values.astype(np.float64), full_matrices=False)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"SVD did not converge on layer {layer!r}") from exc
        root = np.sqrt(s[:rank])
        b = (u[:, :rank] * root).astype(np.float32)
        a = (root[:, None] * vt[:rank]).astype(np.float32)
        layers[layer] = (
            TensorBlock(layer + _A_SUFFIX, a),
            TensorBlock(layer + _B_SUFFIX, b),
        )
    return LoraAdapter(layers, rank, float(rank), delta.label)
