"""lclab: a desk-scale laboratory for how zero-shot compression
(pruning and quantization) perturbs transformer outputs as the context
grows, plus a Monte Carlo simulator of the attention-noise picture
behind it."""

from .tensor_ops import as_tensor, matmul, rms_norm, rope_apply, softmax_rows
from .model import (
    Checkpoint,
    ModelConfig,
    forward,
    gen_toy_model,
    load_checkpoint,
    load_token_file,
    save_checkpoint,
    tokenize_bytes,
)
from .harness import (
    EvalSample,
    SweepRecord,
    eval_kl_at_length,
    fit_slope,
    kl_divergence,
    logits_to_probs,
    run_sweep,
)
from .noise import NoiseCurve, NoiseSimConfig, compare_interpretations, fit_linear, simulate

__version__ = "0.1.0"
