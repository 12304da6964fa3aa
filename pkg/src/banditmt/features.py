"""Context vectors for contextual policies.

Blocks are concatenated in the fixed order bias, oov, len, emb.
"""
from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .environment import EvalRecord

BLOCK_ORDER = ("bias", "oov", "len", "emb")


@dataclass(frozen=True)
class FeatureConfig:
    blocks: tuple[str, ...] = ("bias", "len")
    vocab: Optional[frozenset] = None
    oov_threshold: float = 0.1
    len_bin_edges: tuple[int, ...] = (5, 10, 15, 20)
    emb_prefix_len: int = 50

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))
        object.__setattr__(self, "len_bin_edges", tuple(int(e) for e in self.len_bin_edges))
        if self.vocab is not None and not isinstance(self.vocab, frozenset):
            object.__setattr__(self, "vocab", frozenset(self.vocab))
        unknown = set(self.blocks) - set(BLOCK_ORDER)
        if unknown:
            raise ValueError(f"unknown feature block(s) {sorted(unknown)}")
        if not self.blocks:
            raise ValueError("at least one feature block must be enabled")
        if "oov" in self.blocks and self.vocab is None:
            raise ValueError("the oov block requires a vocabulary")
        if not 0.0 <= self.oov_threshold <= 1.0:
            raise ValueError("oov_threshold must lie in [0, 1]")
        edges = self.len_bin_edges
        if not edges or edges[0] < 1 or any(b <= a for a, b in zip(edges, edges[1:])):
            raise ValueError("len_bin_edges must be ascending positive integers")
        if self.emb_prefix_len < 1:
            raise ValueError("emb_prefix_len must be positive")

    def block_widths(self) -> dict[str, int]:
        widths = {"bias": 1, "oov": 1, "len": len(self.len_bin_edges) + 1, "emb": self.emb_prefix_len}
        return {b: widths[b] for b in BLOCK_ORDER if b in self.blocks}

    def layout(self) -> dict[str, tuple[int, int]]:
        out, start = {}, 0
        for name, width in self.block_widths().items():
            out[name] = (start, start + width)
            start += width
        return out

    @property
    def dim(self) -> int:
        return sum(self.block_widths().values())


@dataclass(frozen=True, eq=False)
class FeatureVector:
    values: np.ndarray
    layout: dict[str, tuple[int, int]] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.values)

    def block(self, name: str) -> np.ndarray:
        start, stop = self.layout[name]
        return self.values[start:stop]


def load_vocab(path) -> frozenset:
    with open(path, encoding="utf-8") as f:
        return frozenset(line.strip() for line in f if line.strip())


def oov_rate(tokens, vocab) -> float:
    if not tokens:
        raise ValueError("oov_rate needs at least one token")
    return sum(1 for t in tokens if t not in vocab) / len(tokens)


def length_bin(n_tokens: int, edges) -> int:
    """0-based bin of a sentence length; bin i holds lengths in (edges[i-1], edges[i]]."""
    return bisect_left(edges, n_tokens)


def featurize(record: EvalRecord, config: FeatureConfig) -> FeatureVector:
    parts = []
    for name in config.block_widths():
        if name == "bias":
            parts.append(np.ones(1))
        elif name == "oov":
            rate = oov_rate(record.source_tokens, config.vocab)
            parts.append(np.array([1.0 if rate > config.oov_threshold else 0.0]))
        elif name == "len":
            onehot = np.zeros(len(config.len_bin_edges) + 1)
            onehot[length_bin(len(record.source_tokens), config.len_bin_edges)] = 1.0
            parts.append(onehot)
        else:
            if record.embedding is None:
                raise ValueError(f"record {record.id!r} has no embedding but the emb block is enabled")
            if len(record.embedding) < config.emb_prefix_len:
                raise ValueError(
                    f"record {record.id!r}: embedding has {len(record.embedding)} dims, "
                    f"need at least {config.emb_prefix_len}"
                )
            parts.append(np.array(record.embedding[:config.emb_prefix_len], dtype=float))
    return FeatureVector(np.concatenate(parts), config.layout())
