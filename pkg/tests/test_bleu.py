import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from approxlstm.bleu import bleu, brevity_penalty, corpus_bleu, ngrams
from approxlstm.errors import InputError

tokens = st.lists(st.integers(0, 6), min_size=1, max_size=12)


class TestSentenceBleu:
    def test_identical(self):
        assert bleu([3, 1, 4, 1, 5], [3, 1, 4, 1, 5]).score == 1.0

    def test_no_overlap(self):
        assert bleu([1, 2, 3, 4], [5, 6, 7, 8]).score == 0.0

    def test_unigram_hand_count(self):
        # 4 of 6 candidate unigrams appear in the reference; candidate is longer so BP = 1
        s = bleu(list("abcd"), list("abcdef"), max_n=1)
        assert s.score == pytest.approx(4 / 6)
        assert s.brevity_penalty == 1.0

    def test_clipping(self):
        # "the the the the" against one "the": clipped to 1 of 4
        s = bleu(["the", "cat"], ["the"] * 4, max_n=1)
        assert s.ngram_precisions[0] == pytest.approx(1 / 4)

    def test_brevity_penalty_hand(self):
        s = bleu([1, 2, 3, 4, 5, 6], [1, 2, 3], max_n=1)
        assert s.brevity_penalty == pytest.approx(math.exp(1 - 6 / 3))
        assert s.score == pytest.approx(math.exp(-1.0))

    def test_bleu4_hand(self):
        ref = [1, 2, 3, 4, 5, 6]
        cand = [1, 2, 3, 4, 9, 6]
        # p1 = 5/6, p2 = 3/5, p3 = 2/4, p4 = 1/3, BP = 1
        expected = math.exp((math.log(5 / 6) + math.log(3 / 5) + math.log(2 / 4) + math.log(1 / 3)) / 4)
        assert bleu(ref, cand).score == pytest.approx(expected, rel=1e-12)

    def test_short_reference_lowers_order(self):
        s = bleu([1, 2], [1, 2])
        assert s.max_n == 2 and s.score == 1.0

    def test_missing_higher_order_collapses_without_smoothing(self):
        assert bleu([1, 2, 3, 4, 5], [1, 3, 2, 5, 4]).score == 0.0

    def test_smoothing_keeps_partial_credit(self):
        s = bleu([1, 2, 3, 4, 5], [1, 3, 2, 5, 4], smoothing=True)
        assert 0.0 < s.score < 1.0

    def test_empty_candidate(self):
        assert bleu([1, 2, 3], []).score == 0.0

    def test_empty_reference(self):
        with pytest.raises(InputError):
            bleu([], [1])

    def test_bp_function(self):
        assert brevity_penalty(5, 0) == 0.0
        assert brevity_penalty(5, 7) == 1.0

    def test_ngrams(self):
        assert ngrams([1, 2, 1, 2], 2) == {(1, 2): 2, (2, 1): 1}

    @given(tokens, tokens)
    def test_bounded(self, ref, cand):
        s = bleu(ref, cand).score
        assert 0.0 <= s <= 1.0

    @given(tokens, tokens, st.randoms())
    def test_permutation_never_raises_unigram_precision(self, ref, cand, rnd):
        shuffled = list(cand)
        rnd.shuffle(shuffled)
        assert bleu(ref, shuffled).ngram_precisions[0] == bleu(ref, cand).ngram_precisions[0]


class TestCorpusBleu:
    def test_single_pair_equals_sentence(self):
        ref, cand = [1, 2, 3, 4, 5], [1, 2, 3, 9, 5]
        assert corpus_bleu([ref], [cand]).score == pytest.approx(bleu(ref, cand).score)

    def test_sums_counts(self):
        refs = [[1, 2, 3], [4, 5, 6]]
        cands = [[1, 2, 3], [4, 9, 6]]
        s = corpus_bleu(refs, cands, max_n=1)
        assert s.ngram_precisions[0] == pytest.approx(5 / 6)

    def test_length_mismatch(self):
        with pytest.raises(InputError):
            corpus_bleu([[1]], [[1], [2]])

    def test_empty_reference(self):
        with pytest.raises(InputError):
            corpus_bleu([[]], [[1]])
