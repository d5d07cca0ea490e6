"""Cumulative BLEU over token-id sequences."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from .errors import InputError

MAX_N = 4


@dataclass(frozen=True)
class BleuScore:
    score: float
    ngram_precisions: tuple[float, ...]
    brevity_penalty: float
    max_n: int


def ngrams(tokens: Sequence, n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def _clipped(reference: Sequence, candidate: Sequence, n: int) -> tuple[int, int]:
    cand = ngrams(candidate, n)
    ref = ngrams(reference, n)
    matches = sum(min(count, ref[g]) for g, count in cand.items())
    return matches, sum(cand.values())


def brevity_penalty(ref_len: int, cand_len: int) -> float:
    if cand_len == 0:
        return 0.0
    if cand_len >= ref_len:
        return 1.0
    return math.exp(1.0 - ref_len / cand_len)


def _combine(matches: Sequence[int], totals: Sequence[int], bp: float, n_used: int, smoothing: bool) -> tuple[float, tuple[float, ...]]:
    precisions = []
    for n, (m, t) in enumerate(zip(matches, totals), start=1):
        if smoothing and n > 1:
            # add-one on higher orders keeps one missing n-gram from zeroing the score
            precisions.append((m + 1) / (t + 1))
        else:
            precisions.append(m / t if t else 0.0)
    used = precisions[:n_used]
    if bp == 0.0 or min(used) == 0.0:
        return 0.0, tuple(precisions)
    log_mean = sum(math.log(p) for p in used) / n_used
    return min(1.0, bp * math.exp(log_mean)), tuple(precisions)


def bleu(reference: Sequence, candidate: Sequence, max_n: int = MAX_N, smoothing: bool = False) -> BleuScore:
    """Sentence BLEU with clipped n-gram counts and a brevity penalty.

    Orders above the reference length are dropped from the geometric mean, so a
    two-token reference is scored on unigrams and bigrams.  Without smoothing
    any zero precision gives a score of 0.
    """
    if len(reference) == 0:
        raise InputError("reference must not be empty")
    if max_n < 1:
        raise InputError(f"max_n must be >= 1, got {max_n}")
    n_used = min(max_n, len(reference))
    counts = [_clipped(reference, candidate, n) for n in range(1, max_n + 1)]
    bp = brevity_penalty(len(reference), len(candidate))
    score, precisions = _combine([c[0] for c in counts], [c[1] for c in counts], bp, n_used, smoothing)
    return BleuScore(score, precisions, bp, n_used)


def corpus_bleu(
    references: Sequence[Sequence],
    candidates: Sequence[Sequence],
    max_n: int = MAX_N,
    smoothing: bool = False,
) -> BleuScore:
    """Corpus BLEU: clipped counts and lengths summed over all pairs before combining.

    The order cap is the length of the shortest reference.
    """
    if len(references) != len(candidates):
        raise InputError("references and candidates differ in length")
    if not references or any(len(r) == 0 for r in references):
        raise InputError("corpus BLEU needs at least one pair and no empty reference")
    if max_n < 1:
        raise InputError(f"max_n must be >= 1, got {max_n}")
    n_used = min(max_n, min(len(r) for r in references))
    matches = [0] * max_n
    totals = [0] * max_n
    for ref, cand in zip(references, candidates):
        for n in range(1, max_n + 1):
            m, t = _clipped(ref, cand, n)
            matches[n - 1] += m
            totals[n - 1] += t
    bp = brevity_penalty(sum(len(r) for r in references), sum(len(c) for c in candidates))
    score, precisions = _combine(matches, totals, bp, n_used, smoothing)
    return BleuScore(score, precisions, bp, n_used)
