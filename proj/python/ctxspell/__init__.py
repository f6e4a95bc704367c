"""Contextual spelling correction of ASR hypotheses against a bias list."""

from ._ctxspell import (
    Model,
    RankedPhrase,
    build_targets,
    char_edit_distance,
    cli,
    decode,
    normalize,
    preselect,
    relevance_weight,
    tokenize,
)

__all__ = [
    "Model",
    "RankedPhrase",
    "build_targets",
    "char_edit_distance",
    "cli",
    "decode",
    "normalize",
    "preselect",
    "relevance_weight",
    "tokenize",
]
