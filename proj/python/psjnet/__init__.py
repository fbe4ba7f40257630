"""Shared-account cross-domain sequential recommendation.

Thin Python surface over the C++ core. Sequences use the text line format
of the sequence files: tab-separated ``A:<id>`` / ``B:<id>`` tokens.
"""

from ._core import (
    Model,
    PsjnetError,
    make_synthetic_benchmark,
    mrr_at_k,
    paired_t_test,
    parse_sequence_line,
    rank_of,
    recall_at_k,
    serialize_sequence,
    train,
)

__all__ = [
    "Model",
    "PsjnetError",
    "make_synthetic_benchmark",
    "mrr_at_k",
    "paired_t_test",
    "parse_sequence_line",
    "rank_of",
    "recall_at_k",
    "serialize_sequence",
    "train",
]
