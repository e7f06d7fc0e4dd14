"""Passage model: span emissions, jump transitions, boundary sampling, decode."""

from __future__ import annotations

import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bookalign.errors import InferenceError
from bookalign.passage import (
    GROW_LEFT,
    GROW_RIGHT,
    SHRINK_LEFT,
    SHRINK_RIGHT,
    EmissionCache,
    PassageModel,
    PassageSpan,
    _mode,
    _weighted_loglik,
    boundary_distribution,
    emission_logprob,
    sentence_word_lists,
)

from conftest import plain_doc, sentences_doc

NEG_INF = float("-inf")


def make_span(words: list[str], start: int = 0) -> PassageSpan:
    return PassageSpan(0, start, start + len(words) - 1, Counter(words))


class TestEmissionLogprob:
    def test_unsmoothed_relative_frequency(self):
        span = make_span(["a", "b", "a"])
        got = emission_logprob(span, ("a", "b"), alpha=0.0, vocab_size=2)
        assert got == pytest.approx(math.log(2 / 9))

    def test_smoothed_value(self):
        span = make_span(["a", "b", "a"])
        got = emission_logprob(span, ("a", "b"), alpha=0.01, vocab_size=2)
        expected = math.log(2.01 / 3.02) + math.log(1.01 / 3.02)
        assert got == pytest.approx(expected)

    def test_missing_word_is_impossible_unsmoothed(self):
        span = make_span(["a", "b"])
        assert emission_logprob(span, ("c",), alpha=0.0, vocab_size=3) == NEG_INF

    def test_missing_word_is_possible_smoothed(self):
        span = make_span(["a", "b"])
        got = emission_logprob(span, ("c",), alpha=0.01, vocab_size=3)
        assert got == pytest.approx(math.log(0.01 / 2.03))

    def test_empty_sentence_scores_zero(self):
        span = make_span(["a"])
        assert emission_logprob(span, (), alpha=0.0, vocab_size=1) == 0.0


def test_sentence_word_lists_drops_punct_and_stopwords():
    doc = sentences_doc([["tom", "ran"], ["he", "hid"]])
    assert sentence_word_lists(doc) == [["tom", "ran"], ["he", "hid"]]
    from bookalign.corpus import tokenize
    assert sentence_word_lists(tokenize("Tom ran. He hid.")) == [["tom", "ran"], ["hid"]]


class TestBoundaryDistribution:
    def test_normalizes(self):
        p = boundary_distribution(np.log([1.0, 3.0]))
        np.testing.assert_allclose(p, [0.25, 0.75])

    def test_all_impossible_rejected(self):
        with pytest.raises(InferenceError, match="zero likelihood"):
            boundary_distribution(np.array([NEG_INF, NEG_INF]))

    @given(
        shift=st.floats(-500, 500),
        seed=st.integers(0, 2**32 - 1),
        size=st.integers(1, 40),
    )
    @settings(max_examples=100)
    def test_sums_to_one_and_shift_invariant(self, shift, seed, size):
        rng = np.random.default_rng(seed)
        logw = rng.uniform(-50, 0, size=size)
        p = boundary_distribution(logw)
        assert p.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.all(p >= 0)
        np.testing.assert_allclose(p, boundary_distribution(logw + shift), atol=1e-12)


def test_mode_ties_break_low():
    assert _mode([3, 1, 1, 3]) == 1
    assert _mode([2, 2, 5]) == 2
    assert _mode([7]) == 7


def test_weighted_loglik_masks_zero_q():
    log_eta = np.array([-1.0, NEG_INF, -3.0])
    assert _weighted_loglik(log_eta, np.array([0.5, 0.0, 0.5])) == pytest.approx(-2.0)
    assert _weighted_loglik(log_eta, np.array([0.0, 1.0, 0.0])) == NEG_INF


# ---------------------------------------------------------------------------
# incremental emission cache


def random_cache_setup(rng, alpha):
    vocab = [f"w{i}" for i in range(8)]
    book_words = [vocab[i] for i in rng.integers(0, len(vocab), size=60)]
    sentences = [
        [vocab[i] for i in rng.integers(0, len(vocab), size=rng.integers(1, 5))]
        for _ in range(5)
    ]
    start = int(rng.integers(10, 25))
    end = int(rng.integers(start + 5, 50))
    cache = EmissionCache(book_words, start, end, sentences, alpha, len(vocab))
    return book_words, sentences, cache


class TestEmissionCache:
    @pytest.mark.parametrize("alpha", [0.0, 0.01])
    @pytest.mark.parametrize(
        "direction", [SHRINK_LEFT, GROW_LEFT, SHRINK_RIGHT, GROW_RIGHT]
    )
    def test_shift_matches_from_scratch(self, alpha, direction, rng):
        for _ in range(20):
            book_words, sentences, cache = random_cache_setup(rng, alpha)
            for _ in range(5):
                cache.shift(direction)
                fresh = EmissionCache(
                    book_words, cache.start, cache.end, sentences, alpha, 8
                )
                np.testing.assert_allclose(
                    cache.log_eta, fresh.log_eta, atol=1e-8, equal_nan=False
                )

    def test_round_trip_is_exact(self, rng):
        book_words, sentences, cache = random_cache_setup(rng, 0.01)
        before = cache.log_eta.copy()
        cache.shift(SHRINK_LEFT)
        cache.shift(GROW_LEFT)
        np.testing.assert_allclose(cache.log_eta, before, atol=1e-10)

    def test_cannot_shrink_single_token_span(self):
        cache = EmissionCache(["a", "b"], 1, 1, [["a"]], 0.01, 2)
        with pytest.raises(ValueError, match="length 1"):
            cache.shift(SHRINK_LEFT)
        with pytest.raises(ValueError, match="length 1"):
            cache.shift(SHRINK_RIGHT)

    def test_cannot_grow_past_document(self):
        cache = EmissionCache(["a", "b"], 0, 1, [["a"]], 0.01, 2)
        with pytest.raises(ValueError, match="head"):
            cache.shift(GROW_LEFT)
        with pytest.raises(ValueError, match="tail"):
            cache.shift(GROW_RIGHT)

    def test_invalid_span_rejected(self):
        with pytest.raises(ValueError, match="invalid span"):
            EmissionCache(["a", "b"], 1, 0, [["a"]], 0.01, 2)
        with pytest.raises(ValueError, match="invalid span"):
            EmissionCache(["a", "b"], 0, 2, [["a"]], 0.01, 2)

    def test_unknown_direction(self):
        cache = EmissionCache(["a", "b", "c"], 1, 1, [["a"]], 0.01, 3)
        with pytest.raises(ValueError, match="unknown shift"):
            cache.shift("sideways")


# ---------------------------------------------------------------------------
# the model


def small_model(k=3, seed=0, alpha=0.01, num_book_sentences=12):
    rng = np.random.default_rng(99)
    vocab = [f"w{i}" for i in range(10)]
    book_sents = [
        [vocab[i] for i in rng.integers(0, 10, size=5)]
        for _ in range(num_book_sentences)
    ]
    summary_sents = [
        [vocab[i] for i in rng.integers(0, 10, size=3)] for _ in range(4)
    ]
    book = sentences_doc(book_sents, doc_id="book")
    summary = sentences_doc(summary_sents, doc_id="summary")
    return PassageModel(book, summary, k=k, alpha=alpha, seed=seed)


class TestModelSetup:
    def test_equal_span_initialization_with_remainder(self):
        words = " ".join(f"w{i}" for i in range(1005)) + "."
        book = plain_doc(words)
        assert len(book.tokens) == 1006  # trailing period is a token
        model = PassageModel(book, plain_doc("w1 w2."), k=100)
        starts = [sp.start for sp in model.spans]
        ends = [sp.end for sp in model.spans]
        assert starts[:3] == [0, 10, 20]
        assert ends[:3] == [9, 19, 29]
        assert starts[-1] == 990
        assert ends[-1] == 1005  # last span absorbs the remainder
        assert all(sp.freq == Counter(model.book_words[sp.start : sp.end + 1])
                   for sp in model.spans)

    def test_uniform_start(self):
        model = small_model(k=3)
        np.testing.assert_allclose(model.log_start, -math.log(3))

    def test_rejects_bad_shapes(self):
        book = plain_doc("a b c.")
        with pytest.raises(ValueError, match="at least one state"):
            PassageModel(book, plain_doc("a."), k=0)
        with pytest.raises(ValueError, match="fewer than K"):
            PassageModel(book, plain_doc("a."), k=10)
        with pytest.raises(ValueError, match="no sentences"):
            PassageModel(book, plain_doc(""), k=2)


class TestTransitions:
    def test_normalizer_matches_brute_force(self, rng):
        model = small_model(k=5)
        counts = rng.uniform(0.1, 3.0, size=2 * 5 - 1)
        z = model._jump_normalizers(counts)
        for s in range(5):
            expected = sum(counts[(t - s) + 4] for t in range(5))
            assert z[s] == pytest.approx(expected)

    def test_rows_are_distributions(self):
        model = small_model(k=4)
        model.jump_counts = np.arange(1.0, 8.0)
        probs = np.exp(model.transition_matrix())
        np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-12)

    def test_hand_computed_jump_probability(self):
        model = small_model(k=3)
        model.jump_counts = np.array([1.0, 2.0, 4.0, 8.0, 16.0])  # d = -2..+2
        # from rank 1 the reachable differences are -1, 0, +1
        assert model.transition_logprob(1, 2) == pytest.approx(
            math.log(8.0 / (2.0 + 4.0 + 8.0))
        )

    def test_matrix_agrees_with_scalar(self):
        model = small_model(k=4)
        model.jump_counts = np.arange(1.0, 8.0)
        matrix = model.transition_matrix()
        for a in range(4):
            for b in range(4):
                assert matrix[a, b] == pytest.approx(model.transition_logprob(a, b))

    def test_out_of_range_rank(self):
        model = small_model(k=3)
        with pytest.raises(ValueError, match="rank out of range"):
            model.transition_logprob(0, 3)


class TestEmStep:
    def test_posteriors_normalized(self):
        model = small_model()
        post = model.e_step()
        np.testing.assert_allclose(post.state_posteriors.sum(axis=1), 1.0, atol=1e-10)
        assert post.pair_posteriors.shape == (2 * model.k - 1,)

    def test_m_step_sets_start_to_first_posterior(self):
        model = small_model()
        post = model.e_step()
        model.m_step(post)
        with np.errstate(divide="ignore"):
            np.testing.assert_allclose(
                model.log_start, np.log(post.state_posteriors[0]), atol=1e-12
            )

    def test_m_step_never_worsens_jump_objective(self):
        model = small_model(k=4)
        for _ in range(5):
            post = model.e_step()
            expected = post.pair_posteriors
            outflow = post.state_posteriors[:-1].sum(axis=0)
            before = model._transition_q(model.jump_counts, expected, outflow)
            model.m_step(post)
            after = model._transition_q(model.jump_counts, expected, outflow)
            assert after >= before - 1e-12

    def test_em_only_training_is_monotone(self):
        model = small_model(k=3)
        history = model.train(iterations=15, s_step=False)
        assert len(history) == 15
        diffs = np.diff(history)
        assert np.all(diffs >= -1e-9)


class TestBoundarySampling:
    def test_candidate_windows_are_respected(self):
        model = small_model(k=3, num_book_sentences=12)
        m = len(model.book_words)
        for trial in range(30):
            model.rng = np.random.default_rng(trial)
            # reset to fixed spans: state 1 sits between its neighbours
            fixed = [(0, 3), (8, 12), (15, m - 1)]
            for sp, (a, b) in zip(model.spans, fixed):
                sp.start, sp.end = a, b
                sp.freq = Counter(model.book_words[a : b + 1])
            q = np.full(len(model.summary_sentences), 0.5)
            span = model.sample_boundaries(1, q)
            # left boundary ranges over [prev_end + 1, old_end - 1] = [4, 11]
            assert 4 <= span.start <= 11
            # right boundary ranges over [new_start, next_start - 1]
            assert span.start <= span.end <= 14
            assert span.freq == Counter(model.book_words[span.start : span.end + 1])

    def test_spans_stay_ordered_through_training(self):
        model = small_model(k=4, seed=7)
        model.train(iterations=8)
        prev_end = -1
        for sp in model.spans:
            assert sp.start > prev_end
            assert sp.end >= sp.start
            prev_end = sp.end
        assert model.sample_log.iterations == 8

    def test_sample_log_records_every_state(self):
        model = small_model(k=3)
        model.train(iterations=5)
        assert all(len(s) == 5 for s in model.sample_log.samples)


class TestDecode:
    def make_model_with_samples(self, samples):
        model = small_model(k=len(samples))
        model.sample_log.samples = [list(s) for s in samples]
        return model

    def test_modal_uses_post_burn_in_samples(self):
        # 10 samples, 20% burn-in: the first two (9, 9) entries are ignored
        state = [(9, 9)] * 2 + [(2, 5)] * 5 + [(3, 6)] * 3
        model = self.make_model_with_samples([state])
        assert model.decoded_spans("modal", 0.2) == [(2, 5)]

    def test_modal_ties_take_smaller_position(self):
        state = [(2, 5), (2, 6), (3, 5), (3, 6)]
        model = self.make_model_with_samples([state])
        assert model.decoded_spans("modal", 0.0) == [(2, 5)]

    def test_last_takes_final_sample(self):
        state = [(2, 5), (4, 8)]
        model = self.make_model_with_samples([state])
        assert model.decoded_spans("last", 0.2) == [(4, 8)]

    def test_overlapping_modes_are_clamped(self):
        s0 = [(5, 9)] * 4
        s1 = [(3, 4)] * 4  # modal bounds sit before state 0's
        model = self.make_model_with_samples([s0, s1])
        assert model.decoded_spans("modal", 0.0) == [(5, 9), (10, 10)]

    def test_without_samples_uses_current_spans(self):
        model = small_model(k=2)
        expected = [(sp.start, sp.end) for sp in model.spans]
        assert model.decoded_spans("modal", 0.2) == expected

    def test_unknown_mode(self):
        model = small_model(k=2)
        with pytest.raises(ValueError, match="unknown decode mode"):
            model.decoded_spans("average")

    def test_decode_assigns_max_posterior_state(self):
        model = small_model(k=3, seed=5)
        model.train(iterations=10)
        result = model.decode("modal", 0.2)
        assert result.mode == "passage"
        assert len(result.sentence_alignments) == len(model.summary_sentences)
        spans = {sp.state_id: sp for sp in model.spans}
        post = model.e_step()
        for rec in result.sentence_alignments:
            assert rec.state_rank == int(np.argmax(post.state_posteriors[rec.sentence_index]))
            assert rec.span_start == spans[rec.state_rank].start
            assert rec.span_end == spans[rec.state_rank].end
            assert 0.0 <= rec.posterior <= 1.0
