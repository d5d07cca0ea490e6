import math

import numpy as np
import pytest

from approxlstm.approx import ApproxConfig
from approxlstm.errors import InputError
from approxlstm.evaluation import (
    CurvePoint,
    TradeoffCurve,
    aggregate_bleu,
    baseline_curve,
    decode_item,
    evaluate_baseline,
    evaluate_grid,
    item_bleu,
    select_switching_policy,
    tradeoff_curve,
)
from approxlstm.lstm import approximate_model
from approxlstm.perf import dse, dse_baseline, initiation_interval, load_platform, PLATFORM_DIR
from approxlstm.synthetic import GeneratorParams, gen_setup
from oracles import scan_crossover

SMALL = GeneratorParams(input_size=6, hidden_size=6, vocab=12, seed=4, n_items=4, prefix_len=2, max_len=6)


@pytest.fixture(scope="module")
def setup():
    return gen_setup(SMALL)


@pytest.fixture(scope="module")
def platform():
    return load_platform(PLATFORM_DIR / "desk16.txt")


def curve(points, label="c"):
    return TradeoffCurve(label, tuple(CurvePoint(t, a, i) for i, (t, a) in enumerate(points, 1)))


class TestItemScores:
    def test_empty_reference_rules(self):
        assert item_bleu([], []) == 1.0
        assert item_bleu([], [3]) == 0.0

    def test_aggregate(self):
        scores, mean, corpus = aggregate_bleu([[1, 2, 3], []], [[1, 2, 3], []])
        assert scores == (1.0, 1.0) and mean == 1.0 and corpus == 1.0


class TestGrid:
    def test_full_fidelity_scores_one(self, setup):
        model, dec, items = setup
        C = model.cols
        grid = evaluate_grid(model, items, dec, [C], min(model.hidden_size, C))
        assert grid.mean[(C, model.hidden_size)] == 1.0

    def test_prefix_reuse_matches_fresh_decomposition(self, setup):
        model, dec, items = setup
        grid = evaluate_grid(model, items, dec, [4], 4)
        for upto in (1, 3):
            fresh = approximate_model(model, ApproxConfig(nz=4, n_steps=upto))
            cands = [decode_item(fresh, it, dec) for it in items]
            scores, _, _ = aggregate_bleu(grid.references, cands)
            assert scores == grid.per_item[(4, upto)]

    def test_empty_eval_set(self, setup):
        model, dec, _ = setup
        with pytest.raises(InputError):
            evaluate_grid(model, [], dec, [4], 2)

    def test_baseline_full_tiles_exact(self, setup):
        model, dec, items = setup
        base = evaluate_baseline(model, items, dec, tr=4)
        assert base.n_tiles == 2
        assert base.mean[2] == 1.0


class TestCurves:
    def test_latencies_reproduce_interval(self, setup, platform):
        model, dec, items = setup
        R, C = model.hidden_size, model.cols
        grid = evaluate_grid(model, items, dec, [6], 5)
        d = dse(platform, R, C, [6]).best[0]
        c = tradeoff_curve(grid, d, R, platform, seq_len=9)
        for q in c.points:
            ii = initiation_interval(R, 6, q.index, d.tr, d.tc)
            assert q.latency_s == 9 * ii / platform.clock_hz
        assert all(b.latency_s > a.latency_s for a, b in zip(c.points, c.points[1:]))

    def test_equal_latency_points_collapse_to_most_refined(self, setup, platform):
        model, dec, items = setup
        R, C = model.hidden_size, model.cols
        grid = evaluate_grid(model, items, dec, [6], 3)
        d = dse(platform, R, C, [6]).best[0]
        c = tradeoff_curve(grid, d, R, platform, seq_len=1)
        # a single row tile puts every refinement count under the 37-cycle floor
        assert d.tr == R
        assert [q.index for q in c.points] == [3]

    def test_single_point_curve(self, setup, platform):
        model, dec, items = setup
        grid = evaluate_grid(model, items, dec, [3], 1)
        d = dse(platform, model.hidden_size, model.cols, [3]).best[0]
        assert len(tradeoff_curve(grid, d, model.hidden_size, platform, 4).points) == 1

    def test_missing_entry(self, setup, platform):
        model, dec, items = setup
        grid = evaluate_grid(model, items, dec, [3], 2)
        d = dse(platform, model.hidden_size, model.cols, [5]).best[0]
        with pytest.raises(InputError):
            tradeoff_curve(grid, d, model.hidden_size, platform, 4)

    def test_baseline_curve_from_partial_tiles(self, setup, platform):
        model, dec, items = setup
        R, C = model.hidden_size, model.cols
        bd = dse_baseline(platform, R, C).best[0]
        base = evaluate_baseline(model, items, dec, bd.tr)
        c = baseline_curve(base, bd, R, C, platform, seq_len=2)
        assert c.points[-1].accuracy == 1.0
        assert c.points[-1].latency_s == 2 * bd.ii_cycles / platform.clock_hz

    def test_rejects_non_increasing(self):
        with pytest.raises(InputError):
            curve([(1.0, 0.1), (1.0, 0.2)])

    def test_accuracy_at(self):
        c = curve([(1.0, 0.2), (2.0, 0.5)])
        assert c.accuracy_at(0.5) is None
        assert c.accuracy_at(1.5) == 0.2
        assert c.accuracy_at(2.0) == 0.5


class TestSwitchingPolicy:
    def test_baseline_always_worse(self):
        a = curve([(1.0, 0.5), (2.0, 0.8)])
        b = curve([(1.5, 0.1), (3.0, 0.4)])
        pol = select_switching_policy(a, b)
        assert pol.no_crossover and math.isinf(pol.time_threshold_s)
        assert pol.choose(1e9) == "approx"

    def test_identical_curves(self):
        pts = [(1.0, 0.3), (2.0, 0.6), (3.0, 0.9)]
        pol = select_switching_policy(curve(pts), curve(pts))
        assert pol.time_threshold_s == 1.0 and not pol.no_crossover

    def test_crossing(self):
        a = [(1.0, 0.4), (2.0, 0.6), (3.0, 0.7), (4.0, 0.75)]
        b = [(2.5, 0.2), (3.5, 0.72), (5.0, 1.0)]
        pol = select_switching_policy(curve(a), curve(b))
        # at 3.5 the approx curve still sits at 0.7 (its 0.75 arrives at 4.0)
        assert pol.time_threshold_s == scan_crossover(a, b) == 3.5
        assert pol.bleu_threshold == 0.72
        assert pol.choose(3.4) == "approx" and pol.choose(3.5) == "baseline"

    def test_random_against_scan(self):
        r = np.random.default_rng(8)
        for _ in range(200):
            a = sorted(zip(np.cumsum(r.uniform(0.1, 1, 5)), r.uniform(0, 1, 5)))
            b = sorted(zip(np.cumsum(r.uniform(0.1, 2, 4)), r.uniform(0, 1, 4)))
            a = [(float(t), float(v)) for t, v in a]
            b = [(float(t), float(v)) for t, v in b]
            assert select_switching_policy(curve(a), curve(b)).time_threshold_s == scan_crossover(a, b)

    def test_empty_curve(self):
        with pytest.raises(InputError):
            select_switching_policy(curve([]), curve([(1.0, 1.0)]))
