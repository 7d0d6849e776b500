from .config import ModelConfig, expected_tensor_shapes, projection_names, NORM_EPS
from .checkpoint import Checkpoint, save_checkpoint, load_checkpoint
from .toy import gen_toy_model
from .tokenizer import tokenize_bytes, load_token_file, save_token_file
from .transformer import forward, BLOCK

__all__ = [
    "ModelConfig",
    "expected_tensor_shapes",
    "projection_names",
    "NORM_EPS",
    "Checkpoint",
    "save_checkpoint",
    "load_checkpoint",
    "gen_toy_model",
    "tokenize_bytes",
    "load_token_file",
    "save_token_file",
    "forward",
    "BLOCK",
]
