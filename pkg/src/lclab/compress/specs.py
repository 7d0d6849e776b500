"""Declarative compression specs, serializable inside experiment configs."""

from __future__ import annotations

from dataclasses import dataclass, asdict
from typing import Optional

from ..errors import ConfigurationError

PRUNE_METHODS = ("magnitude", "wanda", "random")
GRANULARITIES = ("per_row", "per_layer")
WEIGHT_BITS = (3, 4, 8)


@dataclass(frozen=True)
class PruneSpec:
    method: str
    ratio: float
    granularity: Optional[str] = None  # defaults per method, see __post_init__
    seed: Optional[int] = None
    targets: str = "projections"  # or "all" to also touch embeddings/head

    def __post_init__(self):
        if self.method not in PRUNE_METHODS:
            raise ConfigurationError(f"unknown prune method {self.method!r}")
        if not 0.0 <= self.ratio < 1.0:
            raise ConfigurationError("prune ratio must be in [0, 1)")
        if self.granularity is None:
            # Magnitude compares across the whole matrix, Wanda per output row.
            default = "per_row" if self.method == "wanda" else "per_layer"
            object.__setattr__(self, "granularity", default)
        if self.granularity not in GRANULARITIES:
            raise ConfigurationError(f"unknown granularity {self.granularity!r}")
        if self.method == "random" and self.seed is None:
            raise ConfigurationError("random pruning requires a seed")
        if self.targets not in ("projections", "all"):
            raise ConfigurationError(f"unknown targets {self.targets!r}")

    def to_dict(self) -> dict:
        return {"type": "prune", **asdict(self)}


@dataclass(frozen=True)
class QuantSpec:
    weight_bits: int
    group_size: int = 128
    weight_scheme: str = "symmetric"
    activation_bits: Optional[int] = None
    salient_fraction: float = 0.0
    salient_bits: int = 8
    saliency_metric: str = "max_abs"  # or "l2"

    def __post_init__(self):
        if self.weight_bits not in WEIGHT_BITS:
            raise ConfigurationError(f"weight_bits must be one of {WEIGHT_BITS}")
        if self.group_size < 1:
            raise ConfigurationError("group_size must be >= 1")
        if self.weight_scheme != "symmetric":
            raise ConfigurationError("only symmetric weight quantization is supported")
        if self.activation_bits not in (None, 8):
            raise ConfigurationError("activation_bits must be 8 when set")
        if not 0.0 <= self.salient_fraction < 1.0:
            raise ConfigurationError("salient_fraction must be in [0, 1)")
        if self.salient_fraction > 0 and self.salient_bits <= self.weight_bits:
            raise ConfigurationError("salient_bits must exceed weight_bits")
        if self.salient_bits not in WEIGHT_BITS:
            raise ConfigurationError(f"salient_bits must be one of {WEIGHT_BITS}")
        if self.saliency_metric not in ("max_abs", "l2"):
            raise ConfigurationError(f"unknown saliency metric {self.saliency_metric!r}")

    def to_dict(self) -> dict:
        return {"type": "quant", **asdict(self)}


def spec_from_dict(d: dict):
    """Parse a spec dict from an experiment config.

    {"type": "identity"} is allowed and returns None (no compression).
    """
    d = dict(d)
    kind = d.pop("type", None)
    if kind == "identity":
        if d:
            raise ConfigurationError(f"identity spec takes no fields, got {sorted(d)}")
        return None
    try:
        if kind == "prune":
            return PruneSpec(**d)
        if kind == "quant":
            return QuantSpec(**d)
    except TypeError as exc:
        raise ConfigurationError(str(exc)) from None
    raise ConfigurationError(f"unknown spec type {kind!r}")
