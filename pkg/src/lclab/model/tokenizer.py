"""Byte-level tokenizer and token-file ingestion.

Token files are UTF-8 text, one sequence per line, space-separated
decimal ids. Empty lines are skipped rather than becoming empty
sequences.
"""

from __future__ import annotations

from ..errors import ConfigurationError, IngestionError


def tokenize_bytes(text: bytes, vocab_size: int = 256) -> list[int]:
    """Map each byte b to token id b. Needs vocab_size >= 256."""
    if vocab_size < 256:
        raise ConfigurationError("byte tokenizer needs vocab_size >= 256")
    return list(text)


def load_token_file(path, vocab_size: int) -> list[list[int]]:
    sequences = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            try:
                ids = [int(p) for p in parts]
            except ValueError as exc:
                raise IngestionError(f"{path}:{lineno}: {exc}") from None
            for tid in ids:
                if not 0 <= tid < vocab_size:
                    raise IngestionError(
                        f"{path}:{lineno}: token id {tid} outside vocabulary "
                        f"[0, {vocab_size})"
                    )
            sequences.append(ids)
    return sequences


def save_token_file(path, sequences) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for seq in sequences:
            fh.write(" ".join(str(t) for t in seq) + "\n")
