"""Model hyperparameters and the expected checkpoint tensor layout."""

from __future__ import annotations

from dataclasses import dataclass, asdict, fields

from ..errors import ConfigurationError

NORM_EPS = 1e-5


@dataclass(frozen=True)
class ModelConfig:
    n_layers: int
    d_model: int
    n_heads: int
    d_head: int
    d_ff: int
    vocab_size: int
    max_context: int
    rope_theta: float = 10000.0

    def __post_init__(self):
        for name in ("n_layers", "d_model", "n_heads", "d_head", "d_ff", "max_context"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be >= 1")
        if self.vocab_size < 2:
            raise ConfigurationError("vocab_size must be >= 2")
        if self.d_model != self.n_heads * self.d_head:
            raise ConfigurationError(
                f"d_model ({self.d_model}) must equal n_heads*d_head "
                f"({self.n_heads}*{self.d_head})"
            )
        if self.d_head % 2 != 0:
            raise ConfigurationError("d_head must be even (rotary embedding pairs)")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigurationError(f"unknown config fields: {sorted(unknown)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigurationError(str(exc)) from None

    @classmethod
    def desk_default(cls) -> "ModelConfig":
        """Default desk-scale model: context sweeps to 4096 finish in minutes."""
        return cls(
            n_layers=4,
            d_model=128,
            n_heads=4,
            d_head=32,
            d_ff=384,
            vocab_size=256,
            max_context=4096,
        )


def expected_tensor_shapes(config: ModelConfig) -> dict[str, tuple[int, ...]]:
    """Name -> shape map every checkpoint for `config` must carry.

    Weight matrices are stored (out_features, in_features); the forward
    pass computes x @ W.T.
    """
    shapes: dict[str, tuple[int, ...]] = {
        "tok_embed": (config.vocab_size, config.d_model),
        "final_norm": (config.d_model,),
        "lm_head": (config.vocab_size, config.d_model),
    }
    for i in range(config.n_layers):
        p = f"layers.{i}"
        shapes[f"{p}.attn_norm"] = (config.d_model,)
        for w in ("wq", "wk", "wv", "wo"):
            shapes[f"{p}.attn.{w}"] = (config.d_model, config.d_model)
        shapes[f"{p}.ffn_norm"] = (config.d_model,)
        shapes[f"{p}.ffn.w_gate"] = (config.d_ff, config.d_model)
        shapes[f"{p}.ffn.w_up"] = (config.d_ff, config.d_model)
        shapes[f"{p}.ffn.w_down"] = (config.d_model, config.d_ff)
    return shapes


def projection_names(config: ModelConfig) -> list[str]:
    """Attention and feed-forward projection matrices, in layer order.

    These are the tensors compression passes touch; embeddings, norm
    gains and the output head stay untouched by default.
    """
    names = []
    for i in range(config.n_layers):
        p = f"layers.{i}"
        names += [f"{p}.attn.{w}" for w in ("wq", "wk", "wv", "wo")]
        names += [f"{p}.ffn.{w}" for w in ("w_gate", "w_up", "w_down")]
    return names
