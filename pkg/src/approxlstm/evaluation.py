"""Application-level evaluation: BLEU of approximate decodes against the dense
reference, time/accuracy trade-off curves and the approximate-vs-baseline
switching rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .approx import ApproxConfig
from .bleu import bleu, corpus_bleu
from .errors import InputError
from .lstm import LstmModel, LstmState, approximate_model, greedy_decode, step_function
from .perf import (
    REST_OPS_PER_ROW,
    DesignPoint,
    PlatformSpec,
    baseline_estimate,
    initiation_interval,
    latency_seconds,
)
from .synthetic import Decoder, EvalItem


def decode_item(model, item: EvalItem, decoder: Decoder, upto: int | None = None, rows_done: int | None = None) -> list[int]:
    """Feed the item's prefix through the cell, then decode greedily from its start token."""
    step = step_function(model, upto, rows_done)
    s = LstmState.zeros(model.hidden_size)
    for x in item.prefix:
        s = step(x, s)
    return greedy_decode(
        model, decoder.embed, decoder.proj, item.start_token, decoder.max_len, upto=upto, state=s, rows_done=rows_done
    )


def item_bleu(reference: Sequence[int], candidate: Sequence[int], smoothing: bool = False) -> float:
    # an empty reference decode only has one correct answer: an empty candidate
    if len(reference) == 0:
        return 1.0 if len(candidate) == 0 else 0.0
    return bleu(reference, candidate, smoothing=smoothing).score


def aggregate_bleu(references, candidates, smoothing: bool = False) -> tuple[tuple[float, ...], float, float]:
    """Per-item scores, their mean, and corpus BLEU over the non-empty references."""
    scores = tuple(item_bleu(r, c, smoothing) for r, c in zip(references, candidates))
    mean = float(np.mean(scores))
    pairs = [(r, c) for r, c in zip(references, candidates) if len(r)]
    if pairs:
        corpus = corpus_bleu([r for r, _ in pairs], [c for _, c in pairs], smoothing=smoothing).score
    else:
        corpus = mean
    return scores, mean, corpus


@dataclass(frozen=True)
class GridResult:
    nz_list: tuple[int, ...]
    n_steps_max: int
    references: tuple[tuple[int, ...], ...]
    per_item: dict = field(repr=False)
    mean: dict = field(repr=False)
    corpus: dict = field(repr=False)
    n_terms: dict = field(repr=False)


def evaluate_grid(
    ref_model: LstmModel,
    eval_set: Sequence[EvalItem],
    decoder: Decoder,
    nz_list: Sequence[int],
    n_steps_max: int,
    seed: int = 0,
    smoothing: bool = False,
) -> GridResult:
    """Mean and corpus BLEU for every ``(nz, upto)`` with ``upto`` in ``1..n_steps_max``.

    Each ``nz`` is decomposed once at ``n_steps_max`` terms and every ``upto``
    evaluates a prefix of those terms.  If the residual vanishes before
    ``n_steps_max`` the remaining ``upto`` values reuse the full factor set.
    """
    if not eval_set:
        raise InputError("evaluation set is empty")
    if not nz_list:
        raise InputError("nz_list is empty")
    references = tuple(tuple(decode_item(ref_model, item, decoder)) for item in eval_set)
    per_item, mean, corpus, n_terms = {}, {}, {}, {}
    for nz in nz_list:
        approx = approximate_model(ref_model, ApproxConfig(nz=nz, n_steps=n_steps_max, seed=seed))
        n_terms[nz] = approx.n_terms
        for upto in range(1, n_steps_max + 1):
            k = min(upto, approx.n_terms)
            cands = [decode_item(approx, item, decoder, upto=k) for item in eval_set]
            scores, m, c = aggregate_bleu(references, cands, smoothing)
            per_item[(nz, upto)] = scores
            mean[(nz, upto)] = m
            corpus[(nz, upto)] = c
    return GridResult(tuple(nz_list), n_steps_max, references, per_item, mean, corpus, n_terms)


@dataclass(frozen=True)
class BaselineResult:
    tr: int
    n_tiles: int
    per_item: dict = field(repr=False)
    mean: dict = field(repr=False)
    corpus: dict = field(repr=False)


def evaluate_baseline(
    ref_model: LstmModel,
    eval_set: Sequence[EvalItem],
    decoder: Decoder,
    tr: int,
    smoothing: bool = False,
) -> BaselineResult:
    """BLEU of the dense model read out after each row tile of ``tr`` rows."""
    if not eval_set:
        raise InputError("evaluation set is empty")
    R = ref_model.hidden_size
    if not 1 <= tr <= R:
        raise InputError(f"tr={tr} outside [1, {R}]")
    references = [decode_item(ref_model, item, decoder) for item in eval_set]
    n_tiles = -(-R // tr)
    per_item, mean, corpus = {}, {}, {}
    for n in range(1, n_tiles + 1):
        rows = min(n * tr, R)
        cands = [decode_item(ref_model, item, decoder, rows_done=rows) for item in eval_set]
        per_item[n], mean[n], corpus[n] = aggregate_bleu(references, cands, smoothing)
    return BaselineResult(tr, n_tiles, per_item, mean, corpus)


@dataclass(frozen=True)
class CurvePoint:
    latency_s: float
    accuracy: float
    index: int


@dataclass(frozen=True)
class TradeoffCurve:
    label: str
    points: tuple[CurvePoint, ...]

    def __post_init__(self):
        lat = [p.latency_s for p in self.points]
        if any(b <= a for a, b in zip(lat, lat[1:])):
            raise InputError("curve latencies must be strictly increasing")

    def accuracy_at(self, budget_s: float) -> float | None:
        """Accuracy of the last point that fits in ``budget_s``; None if none does."""
        best = None
        for p in self.points:
            if p.latency_s > budget_s:
                break
            best = p.accuracy
        return best


def _monotone_points(raw: list[CurvePoint]) -> tuple[CurvePoint, ...]:
    # equal latency means extra refinement is free: keep the most refined point
    out: list[CurvePoint] = []
    for p in raw:
        if out and p.latency_s == out[-1].latency_s:
            out[-1] = p
        else:
            out.append(p)
    return tuple(out)


def step_latency(ii_cycles: float, seq_len: int, p: PlatformSpec) -> float:
    return latency_seconds(seq_len * ii_cycles, p)


def tradeoff_curve(
    grid: GridResult,
    design: DesignPoint,
    R: int,
    p: PlatformSpec,
    seq_len: int,
    label: str | None = None,
    rest: int = REST_OPS_PER_ROW,
) -> TradeoffCurve:
    """Latency of ``seq_len`` time-steps against mean BLEU for ``upto = 1..n_steps_max``.

    Refinement counts that share a latency (the elementwise stage bounds the
    interval) collapse onto the most refined one.
    """
    if seq_len < 1:
        raise InputError("seq_len must be >= 1")
    raw = []
    for k in range(1, grid.n_steps_max + 1):
        if (design.nz, k) not in grid.mean:
            raise InputError(f"grid has no entry for nz={design.nz}, n_steps={k}")
        ii = initiation_interval(R, design.nz, k, design.tr, design.tc, rest)
        raw.append(CurvePoint(step_latency(ii, seq_len, p), grid.mean[(design.nz, k)], k))
    return TradeoffCurve(label or f"approx nz={design.nz} ({design.tr},{design.tc})", _monotone_points(raw))


def baseline_curve(
    base: BaselineResult,
    design: DesignPoint,
    R: int,
    C: int,
    p: PlatformSpec,
    seq_len: int,
    label: str | None = None,
    rest: int = REST_OPS_PER_ROW,
) -> TradeoffCurve:
    if design.tr != base.tr:
        raise InputError(f"baseline evaluated at tr={base.tr} but design has tr={design.tr}")
    if seq_len < 1:
        raise InputError("seq_len must be >= 1")
    raw = []
    for n in range(1, base.n_tiles + 1):
        ii = baseline_estimate(R, C, design.tr, design.tc, n, rest).ii_cycles
        raw.append(CurvePoint(step_latency(ii, seq_len, p), base.mean[n], n))
    return TradeoffCurve(label or f"baseline ({design.tr},{design.tc})", _monotone_points(raw))


@dataclass(frozen=True)
class SwitchingPolicy:
    bleu_threshold: float
    time_threshold_s: float
    below_design: str
    above_design: str
    no_crossover: bool = False

    def choose(self, budget_s: float) -> str:
        return self.below_design if budget_s < self.time_threshold_s else self.above_design


def select_switching_policy(
    approx: TradeoffCurve,
    baseline: TradeoffCurve,
    approx_id: str = "approx",
    baseline_id: str = "baseline",
) -> SwitchingPolicy:
    """Earliest budget at which the baseline is at least as accurate as the approximate design.

    Budgets are scanned over every curve latency from the moment both designs
    have produced an output.  Below the returned time the approximate design
    wins; from it on the baseline does.  If the baseline never catches up the
    threshold is infinite and ``no_crossover`` is set.
    """
    if not approx.points or not baseline.points:
        raise InputError("both curves need at least one point")
    start = max(approx.points[0].latency_s, baseline.points[0].latency_s)
    budgets = sorted({q.latency_s for q in approx.points + baseline.points if q.latency_s >= start})
    for t in budgets:
        a = approx.accuracy_at(t)
        b = baseline.accuracy_at(t)
        if b >= a:
            return SwitchingPolicy(b, t, approx_id, baseline_id)
    plateau = max(q.accuracy for q in approx.points)
    return SwitchingPolicy(plateau, math.inf, approx_id, baseline_id, no_crossover=True)
