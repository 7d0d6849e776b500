from .specs import PruneSpec, QuantSpec, spec_from_dict
from .prune import (
    CalibrationNorms,
    apply_prune,
    calibrate,
    prune_magnitude,
    prune_random,
    prune_wanda,
)
from .quant import (
    QuantizedGroup,
    activation_transform_for,
    apply_quant,
    quantize_activations_per_token,
    quantize_group,
    quantize_mixed,
    quantize_weights,
    select_salient_groups,
)
from .estimators import (
    BaseCompressor,
    GroupQuantizer,
    IdentityCompressor,
    MagnitudePruner,
    RandomPruner,
    WandaPruner,
    compressor_from_spec,
)

__all__ = [
    "PruneSpec",
    "QuantSpec",
    "spec_from_dict",
    "CalibrationNorms",
    "apply_prune",
    "calibrate",
    "prune_magnitude",
    "prune_random",
    "prune_wanda",
    "QuantizedGroup",
    "activation_transform_for",
    "apply_quant",
    "quantize_activations_per_token",
    "quantize_group",
    "quantize_mixed",
    "quantize_weights",
    "select_salient_groups",
    "BaseCompressor",
    "GroupQuantizer",
    "IdentityCompressor",
    "MagnitudePruner",
    "RandomPruner",
    "WandaPruner",
    "compressor_from_spec",
]
