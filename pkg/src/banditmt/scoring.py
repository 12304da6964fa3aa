"""Sentence- and corpus-level BLEU-4 over pre-tokenized text.

Sentence BLEU smooths orders 2-4 by adding one to both the clipped match
count and the n-gram total (unigrams stay unsmoothed).  Corpus BLEU pools
counts over all pairs first and is unsmoothed.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .environment import ArmCatalog, EvalRecord

MAX_ORDER = 4


def ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


@dataclass(frozen=True)
class BleuBreakdown:
    matches: tuple[int, ...]
    totals: tuple[int, ...]
    hyp_len: int
    ref_len: int
    brevity_penalty: float
    score: float

    @property
    def precisions(self) -> tuple[float, ...]:
        return tuple(m / t if t else 0.0 for m, t in zip(self.matches, self.totals))


def _clipped_stats(hyp: Sequence[str], ref: Sequence[str]) -> tuple[list[int], list[int]]:
    matches, totals = [], []
    for n in range(1, MAX_ORDER + 1):
        h, r = ngram_counts(hyp, n), ngram_counts(ref, n)
        matches.append(sum(min(c, r[g]) for g, c in h.items()))
        totals.append(max(0, len(hyp) - n + 1))
    return matches, totals


def _brevity_penalty(hyp_len: int, ref_len: int) -> float:
    if hyp_len >= ref_len:
        return 1.0
    # an empty hypothesis scores 0 regardless; keep the penalty itself positive
    return math.exp(1.0 - ref_len / max(hyp_len, 1))


def _combine(matches, totals, hyp_len, ref_len, smooth: bool) -> BleuBreakdown:
    bp = _brevity_penalty(hyp_len, ref_len)
    log_p = 0.0
    score = 0.0
    if hyp_len > 0:
        for n, (m, t) in enumerate(zip(matches, totals), start=1):
            if smooth and n >= 2:
                m, t = m + 1, t + 1
            if m == 0 or t == 0:
                break
            log_p += math.log(m / t)
        else:
            score = 100.0 * bp * math.exp(log_p / MAX_ORDER)
    return BleuBreakdown(tuple(matches), tuple(totals), hyp_len, ref_len, bp, score)


def sentence_bleu(hyp: Sequence[str], ref: Sequence[str]) -> BleuBreakdown:
    """Smoothed sentence-level BLEU-4 of one hypothesis against one reference."""
    if not ref:
        raise ValueError("reference must be nonempty")
    matches, totals = _clipped_stats(hyp, ref)
    return _combine(matches, totals, len(hyp), len(ref), smooth=True)


def corpus_bleu(pairs: Iterable[tuple[Sequence[str], Sequence[str]]]) -> BleuBreakdown:
    """Unsmoothed corpus BLEU-4 over (hypothesis, reference) pairs."""
    matches = [0] * MAX_ORDER
    totals = [0] * MAX_ORDER
    hyp_len = ref_len = 0
    count = 0
    for hyp, ref in pairs:
        if not ref:
            raise ValueError(f"pair {count}: reference must be nonempty")
        m, t = _clipped_stats(hyp, ref)
        for i in range(MAX_ORDER):
            matches[i] += m[i]
            totals[i] += t[i]
        hyp_len += len(hyp)
        ref_len += len(ref)
        count += 1
    if count == 0:
        raise ValueError("corpus_bleu needs at least one pair")
    return _combine(matches, totals, hyp_len, ref_len, smooth=False)


def read_lines(path) -> list[str]:
    with open(path, encoding="utf-8") as f:
        return [line.rstrip("\n") for line in f]


def build_reward_matrix(
    ref_file,
    hyp_files: Sequence,
    arm_names: Sequence[str],
    source_file=None,
    domain: str = "default",
    id_prefix: Optional[str] = None,
) -> list[EvalRecord]:
    """Score every arm's hypothesis file against the references, line by line.

    ``arm_names`` may be an :class:`ArmCatalog` or any list of names; a single
    arm is allowed here even though a bandit catalog needs two.  Without
    ``source_file`` the reference tokens stand in as the source sentence so
    that records stay valid.
    """
    if isinstance(arm_names, ArmCatalog):
        arm_names = arm_names.names
    if len(hyp_files) != len(arm_names):
        raise ValueError(f"{len(hyp_files)} hypothesis files for {len(arm_names)} arms")
    refs = read_lines(ref_file)
    hyps = [read_lines(p) for p in hyp_files]
    for p, lines in zip(hyp_files, hyps):
        if len(lines) != len(refs):
            raise ValueError(
                f"line-count mismatch: {ref_file} has {len(refs)} lines, {p} has {len(lines)}"
            )
    sources = refs
    if source_file is not None:
        sources = read_lines(source_file)
        if len(sources) != len(refs):
            raise ValueError(
                f"line-count mismatch: {ref_file} has {len(refs)} lines, "
                f"{source_file} has {len(sources)}"
            )
    prefix = id_prefix if id_prefix is not None else Path(ref_file).stem
    records = []
    for i, ref_line in enumerate(refs):
        ref = tuple(ref_line.split())
        if not ref:
            raise ValueError(f"{ref_file}: line {i + 1} is an empty reference")
        arm_hyps = tuple(tuple(h[i].split()) for h in hyps)
        scores = [sentence_bleu(h, ref).score for h in arm_hyps]
        records.append(EvalRecord(
            id=f"{prefix}-{i}",
            domain=domain,
            source_tokens=tuple(sources[i].split()) or ref,
            arm_scores=scores,
            reference_tokens=ref,
            arm_hypotheses=arm_hyps,
        ))
    return records
