"""Token model: jump bins, coverage normalizers, synonym emissions, nulls,
and the fixed-weight baseline aligner."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bookalign.errors import LexiconError
from bookalign.token_align import (
    NO_BIN,
    BinningScheme,
    SynonymLexicon,
    TokenAlignModel,
    _BaselineTransitions,
    _BASELINE_WEIGHTS,
    jing_baseline_align,
    load_thesaurus,
)

from conftest import plain_doc, sentences_doc

NEG_INF = float("-inf")


class TestBinningScheme:
    def test_default_has_nine_bins(self):
        scheme = BinningScheme()
        assert scheme.num_bins == 9

    def test_bin_assignments(self):
        scheme = BinningScheme()
        assert scheme.bin_of(0) == 0
        assert scheme.bin_of(1) == 1
        assert scheme.bin_of(-1) == 2
        assert scheme.bin_of(3) == scheme.bin_of(7) == scheme.bin_of(10) == 3
        assert scheme.bin_of(-3) == scheme.bin_of(-7) == 4
        assert scheme.bin_of(11) == scheme.bin_of(100) == 5
        assert scheme.bin_of(-55) == 6
        assert scheme.bin_of(101) == scheme.bin_of(1000) == 7
        assert scheme.bin_of(-500) == 8

    def test_clamps_beyond_last_bound(self):
        scheme = BinningScheme()
        assert scheme.bin_of(5000) == 7
        assert scheme.bin_of(-99999) == 8

    def test_signed_ranges(self):
        scheme = BinningScheme()
        assert scheme.signed_range(0) == (0, 0)
        assert scheme.signed_range(1) == (1, 1)
        assert scheme.signed_range(2) == (-1, -1)
        assert scheme.signed_range(3) == (2, 10)
        assert scheme.signed_range(4) == (-10, -2)
        assert scheme.signed_range(7) == (101, 1000)
        assert scheme.signed_range(7, clamp=True) == (101, math.inf)
        assert scheme.signed_range(8, clamp=True) == (-math.inf, -101)

    def test_describe(self):
        scheme = BinningScheme()
        assert scheme.describe(0) == "{0}"
        assert scheme.describe(3) == "[+2,+10]"
        assert scheme.describe(4) == "[-10,-2]"

    def test_from_string(self):
        assert BinningScheme.from_string("1,5").bounds == (1, 5)
        with pytest.raises(ValueError, match="bad bin bounds"):
            BinningScheme.from_string("1,x")

    def test_bounds_must_increase(self):
        with pytest.raises(ValueError, match="strictly increasing"):
            BinningScheme((5, 5))
        with pytest.raises(ValueError, match="strictly increasing"):
            BinningScheme((10, 1))
        with pytest.raises(ValueError, match="positive"):
            BinningScheme((0, 3))

    @given(d=st.integers(-10_000, 10_000))
    def test_every_distance_has_a_bin(self, d):
        scheme = BinningScheme()
        b = scheme.bin_of(d)
        assert 0 <= b < scheme.num_bins
        lo, hi = scheme.signed_range(b, clamp=True)
        assert lo <= d <= hi

    @given(d=st.integers(-2000, 2000))
    def test_sign_symmetry(self, d):
        scheme = BinningScheme()
        if d != 0:
            pos, neg = scheme.bin_of(abs(d)), scheme.bin_of(-abs(d))
            assert neg == pos + 1  # negative twin follows its positive bin


class TestSynonymLexicon:
    def test_symmetric_and_exclusive(self):
        lex = SynonymLexicon()
        lex.add("boat", "Ship")
        assert lex.synonyms("ship") == frozenset({"boat"})
        assert lex.synonyms("BOAT") == frozenset({"ship"})
        assert "boat" not in lex.synonyms("boat")
        assert "ship" in lex
        assert len(lex) == 2

    def test_self_pair_is_ignored(self):
        lex = SynonymLexicon()
        lex.add("same", "same")
        assert len(lex) == 0

    def test_mapping_constructor(self):
        lex = SynonymLexicon({"cold": {"chilly", "icy"}})
        assert lex.synonyms("icy") == frozenset({"cold"})

    def test_unknown_word_has_no_synonyms(self):
        assert SynonymLexicon().synonyms("anything") == frozenset()


class TestLoadThesaurus:
    def test_parses_head_and_synonyms(self, tmp_path):
        path = tmp_path / "syn.txt"
        path.write_text(
            "# comment\n\nboat: ship, vessel\nrun: sprint\n", "utf-8"
        )
        lex = load_thesaurus(path)
        assert lex.synonyms("boat") == frozenset({"ship", "vessel"})
        assert lex.synonyms("sprint") == frozenset({"run"})

    def test_missing_colon(self, tmp_path):
        path = tmp_path / "syn.txt"
        path.write_text("boat ship\n", "utf-8")
        with pytest.raises(LexiconError, match=r"syn\.txt:1"):
            load_thesaurus(path)

    def test_multiword_entries_rejected(self, tmp_path):
        path = tmp_path / "syn.txt"
        path.write_text("boat: row boat\n", "utf-8")
        with pytest.raises(LexiconError, match="bad synonym"):
            load_thesaurus(path)
        path.write_text("big boat: ship\n", "utf-8")
        with pytest.raises(LexiconError, match="bad head"):
            load_thesaurus(path)


# ---------------------------------------------------------------------------
# the model


def tiny_model(book_text="alpha beta gamma. Delta alpha.",
               summary_text="Alpha delta.", **kwargs) -> TokenAlignModel:
    return TokenAlignModel(plain_doc(book_text, "b"), plain_doc(summary_text, "s"),
                           **kwargs)


class TestModelStructure:
    def test_states_and_observations(self):
        model = tiny_model()
        assert model.num_real == 7  # five words plus two periods
        assert model.num_null == 9
        assert model.num_states == 16
        assert [w for _, w in model.observations] == ["alpha", "delta"]

    def test_null_anchor_positions(self):
        doc = plain_doc(" ".join(f"w{i}" for i in range(100)) + ".")
        model = TokenAlignModel(doc, plain_doc("w1."), null_states=9)
        anchors = model.state_pos[model.num_real:]
        expected = [int((i + 0.5) * 101 / 9) for i in range(9)]
        assert list(anchors) == expected

    def test_active_states_include_matches_and_all_nulls(self):
        model = tiny_model()
        active = model._active[0]  # "alpha" occurs at positions 0 and 5
        assert list(active[:2]) == [0, 5]
        assert list(active[2:]) == list(range(model.num_real, model.num_states))

    def test_synonyms_extend_active_sets_and_emissions(self):
        lex = SynonymLexicon({"alpha": {"omega"}})
        model = tiny_model(summary_text="Omega delta.", lexicon=lex)
        active = model._active[0]  # "omega" matches "alpha" positions
        assert list(active[:2]) == [0, 5]
        # identity starts at twice the synonym weight
        assert model.emissions["alpha"] == pytest.approx(
            {"alpha": 2 / 3, "omega": 1 / 3}
        )

    def test_emission_vector(self):
        model = tiny_model()
        states = np.array([0, model.num_real])  # a real match and a null
        got = model._emission_vector(states, 0)
        assert got[0] == pytest.approx(0.0)  # no synonyms: identity has it all
        assert got[1] == pytest.approx(-math.log(2))  # two summary word types

    def test_validation(self):
        with pytest.raises(ValueError, match="tau"):
            tiny_model(tau=0)
        with pytest.raises(ValueError, match="negative"):
            tiny_model(null_states=-1)
        with pytest.raises(ValueError, match="no word tokens"):
            tiny_model(summary_text="...")


class TestCoverage:
    def brute_coverage(self, model):
        cov = np.zeros((model.num_states, model.scheme.num_bins))
        for s in range(model.num_states):
            for t in range(model.num_states):
                d = int(model.state_pos[t]) - int(model.state_pos[s])
                real_pair = not model.is_null[s] and not model.is_null[t]
                if real_pair and abs(d) > model.tau:
                    continue
                cov[s, model.scheme.bin_of(d)] += 1
        return cov

    @pytest.mark.parametrize("tau", [2, 5, 1000])
    @pytest.mark.parametrize("null_states", [0, 3])
    def test_matches_enumeration(self, tau, null_states):
        doc = plain_doc(" ".join(f"w{i}" for i in range(30)) + ".")
        model = TokenAlignModel(doc, plain_doc("w3 w7."), tau=tau,
                                null_states=null_states)
        np.testing.assert_array_equal(model._coverage, self.brute_coverage(model))

    def test_rows_normalize_given_weights(self, rng):
        model = tiny_model()
        model.bin_weights = rng.uniform(0.2, 2.0, size=model.scheme.num_bins)
        every = np.arange(model.num_states)
        block = model._transition_block(every, every)
        np.testing.assert_allclose(np.exp(block).sum(axis=1), 1.0, atol=1e-12)


class TestTransitions:
    def test_hand_computed_two_bin_weights(self):
        # stay weight 8, step-forward weight 2, everything else 0-ish is not
        # possible (weights are floored), so use a 3-token book where only
        # {0}, {+1}, {-1}, [+2,..] appear
        doc = plain_doc("a b c")
        model = TokenAlignModel(doc, plain_doc("a b."), null_states=0, tau=1000)
        model.bin_weights = np.array([8.0, 2.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0])
        # from position 0: destinations 0 (stay, 8), 1 (+1, 2), 2 (+2 bin, 1)
        assert model.transition_logprob(0, 0) == pytest.approx(math.log(8 / 11))
        assert model.transition_logprob(0, 1) == pytest.approx(math.log(2 / 11))
        assert model.transition_logprob(0, 2) == pytest.approx(math.log(1 / 11))

    def test_tau_blocks_long_real_jumps_but_not_nulls(self):
        doc = plain_doc(" ".join(f"w{i}" for i in range(30)) + ".")
        model = TokenAlignModel(doc, plain_doc("w1 w2."), tau=3, null_states=2)
        assert model.transition_logprob(0, 10) == NEG_INF
        assert model.transition_logprob(10, 0) == NEG_INF
        assert model.transition_logprob(0, 3) > NEG_INF
        null_state = model.num_real  # anchored far from position 0
        assert model.transition_logprob(0, null_state) > NEG_INF
        assert model.transition_logprob(null_state, 0) > NEG_INF


class TestEmTraining:
    def test_loglik_non_decreasing(self):
        model = tiny_model(
            book_text="alpha beta gamma delta. Epsilon alpha beta zeta.",
            summary_text="Alpha beta. Gamma delta.",
        )
        history = model.em_train(max_iters=25, tol=float("-inf"))
        assert len(history) == 25
        assert np.all(np.diff(history) >= -1e-9)

    def test_early_stop_on_small_gain(self):
        model = tiny_model()
        history = model.em_train(max_iters=50, tol=1e100)
        assert len(history) == 2  # any finite gain is below an absurd tol

    def test_emission_rows_stay_normalized(self):
        lex = SynonymLexicon({"alpha": {"beta"}})
        model = tiny_model(
            book_text="alpha beta gamma. Alpha beta delta.",
            summary_text="Alpha beta gamma.",
            lexicon=lex,
        )
        model.em_train(max_iters=5, tol=float("-inf"))
        for dist in model.emissions.values():
            assert sum(dist.values()) == pytest.approx(1.0)

    def test_m_step_never_worsens_bin_objective(self):
        from bookalign.hmm import forward_backward
        model = tiny_model(
            book_text="alpha beta gamma delta. Alpha beta epsilon.",
            summary_text="Alpha beta. Beta gamma.",
        )
        for _ in range(4):
            post = forward_backward(model._spec())
            expected = post.pair_posteriors
            outflow = post.state_posteriors[:-1].sum(axis=0)
            before = model._bin_q(model.bin_weights, expected, outflow)
            model.m_step(post)
            after = model._bin_q(model.bin_weights, expected, outflow)
            assert after >= before - 1e-12

    def test_unmatched_word_keeps_old_emission_row(self):
        # "gamma" never appears in the summary, so its row has no counts and
        # must survive the M-step unchanged
        model = tiny_model(book_text="alpha gamma.", summary_text="Alpha alpha.")
        before = dict(model.emissions["gamma"])
        model.em_train(max_iters=3, tol=float("-inf"))
        assert model.emissions["gamma"] == before


class TestViterbiAlign:
    def test_identity_book_recovers_positions(self):
        book = sentences_doc([["red", "green", "blue"], ["cyan", "pink", "plum"]])
        summary = sentences_doc([["green", "blue"], ["pink"]])
        model = TokenAlignModel(book, summary, null_states=2)
        model.em_train(max_iters=10)
        result = model.viterbi_align()
        aligned = {r.token_position: r.source_position for r in result.token_alignments}
        # summary word tokens sit at 0, 1, 3; their sources at 1, 2, 5
        assert aligned == {0: 1, 1: 2, 3: 5}

    def test_first_token_has_no_bin(self):
        model = tiny_model()
        result = model.viterbi_align()
        assert result.token_alignments[0].bin_id == NO_BIN
        assert result.mode == "token"
        for rec in result.token_alignments[1:]:
            assert 0 <= rec.bin_id < model.scheme.num_bins

    def test_unmatchable_token_goes_to_null(self):
        model = tiny_model(summary_text="Alpha zzz.")
        result = model.viterbi_align()
        by_pos = {r.token_position: r for r in result.token_alignments}
        assert by_pos[1].is_null
        assert by_pos[1].source_position is None


# ---------------------------------------------------------------------------
# fixed-weight baseline


class TestBaselineTransitions:
    def fixture(self):
        # two sentences of 4 and 3 tokens (single-letter words would be
        # mistaken for initials and suppress the sentence break)
        return _BaselineTransitions(
            sentences_doc([["aa", "bb", "cc"], ["dd", "ee"]])
        )

    def test_categories(self):
        # sentence 0 covers positions 0-3 (period included), sentence 1 is 4-6
        trans = self.fixture()
        assert trans._category(0, 1) == "next"
        assert trans._category(0, 0) == "same"
        assert trans._category(0, 2) == "same"
        assert trans._category(1, 0) == "same"
        assert trans._category(0, 4) == "adjacent"
        assert trans._category(5, 1) == "adjacent"

    def test_far_category_beyond_window(self):
        # one word per sentence: each sentence owns two positions
        words = [[f"w{i}"] for i in range(1500)]
        trans = _BaselineTransitions(sentences_doc(words))
        assert trans._category(0, 3) == "adjacent"
        assert trans._category(0, 800) == "near"
        assert trans._category(0, 2500) == "far"

    def test_normalizer_matches_enumeration(self):
        words = [["aa", "bb", "cc"], ["dd", "ee"], ["ff", "gg", "hh", "ii"]]
        trans = _BaselineTransitions(sentences_doc(words))
        m = trans.num_positions
        for p in range(m):
            expected = sum(
                _BASELINE_WEIGHTS[trans._category(p, q)] for q in range(m)
            )
            assert trans._normalizer(p) == pytest.approx(expected)

    def test_normalizer_matches_enumeration_long_doc(self):
        words = [[f"w{i}" for i in range(40)] for _ in range(60)]
        trans = _BaselineTransitions(sentences_doc(words))
        m = trans.num_positions
        for p in (0, 1, 1200, m - 1):
            expected = sum(
                _BASELINE_WEIGHTS[trans._category(p, q)] for q in range(m)
            )
            assert trans._normalizer(p) == pytest.approx(expected)

    def test_block_rows_normalize(self):
        trans = self.fixture()
        every = np.arange(trans.num_positions)
        block = trans.block(every, every)
        np.testing.assert_allclose(np.exp(block).sum(axis=1), 1.0, atol=1e-12)


class TestJingBaseline:
    def test_exact_matches_only(self):
        book = sentences_doc([["storm", "hit", "coast"], ["people", "fled"]])
        summary = sentences_doc([["storm", "fled", "missing"]])
        result = jing_baseline_align(book, summary)
        assert result.mode == "jing"
        aligned = {r.token_position: r.source_position for r in result.token_alignments}
        # "missing" has no source occurrence and is skipped entirely
        assert set(aligned) == {0, 1}
        assert aligned[0] == 0  # "storm"
        assert aligned[1] == 5  # "fled"

    def test_prefers_sentence_continuation(self):
        # "bb cc" should follow the consecutive pair, not jump across sentences
        book = sentences_doc([["aa", "bb", "cc"], ["xx", "bb", "yy"]])
        summary = sentences_doc([["bb", "cc"]])
        result = jing_baseline_align(book, summary)
        positions = [r.source_position for r in result.token_alignments]
        assert positions == [1, 2]

    def test_empty_when_nothing_matches(self):
        result = jing_baseline_align(
            sentences_doc([["aa", "bb"]]), sentences_doc([["zz"]])
        )
        assert result.token_alignments == []

    def test_posteriors_are_probabilities(self):
        book = sentences_doc([["aa", "bb", "aa"], ["bb", "aa"]])
        summary = sentences_doc([["aa", "bb", "aa"]])
        result = jing_baseline_align(book, summary)
        for rec in result.token_alignments:
            assert 0.0 <= rec.posterior <= 1.0 + 1e-12
            assert rec.bin_id == NO_BIN
