"""Passage aligner: HMM states are contiguous, non-overlapping source spans.

Each state emits whole summary sentences under the span's unigram language
model.  Training interleaves EM (forward-backward posteriors, then start and
jump-count re-estimation) with a boundary-sampling step that stochastically
moves each span's endpoints in proportion to the likelihood the revised span
assigns to the summary, weighted by that state's posterior responsibility
for each sentence.  Emission scores for candidate boundaries are maintained
incrementally, one removed or added word at a time, so scanning all legal
positions for a boundary costs linear time.
"""

from __future__ import annotations

import logging
import math
import time
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .alignment import AlignmentResult, SentenceAlignment
from .corpus import TokenizedDocument
from .errors import InferenceError
from .hmm import HmmSpec, PosteriorTable, forward_backward

log = logging.getLogger(__name__)

NEG_INF = float("-inf")

SHRINK_LEFT = "shrink-left"
GROW_LEFT = "grow-left"
SHRINK_RIGHT = "shrink-right"
GROW_RIGHT = "grow-right"


@dataclass
class PassageSpan:
    """One HMM state: an inclusive token range of the source document."""

    state_id: int
    start: int
    end: int
    freq: Counter

    @property
    def span_length(self) -> int:
        return self.end - self.start + 1


def emission_logprob(span: PassageSpan, sentence, alpha: float, vocab_size: int) -> float:
    """Log probability of a sentence under the span's smoothed unigram model.

    With ``alpha=0`` this is the plain relative-frequency product, and a
    sentence word absent from the span yields ``-inf`` (a legal value).
    """
    denom = math.log(span.span_length + alpha * vocab_size)
    total = 0.0
    for word in sentence:
        f = span.freq.get(word, 0) + alpha
        if f == 0:
            return NEG_INF
        total += math.log(f) - denom
    return total


def sentence_word_lists(doc: TokenizedDocument) -> list[list[str]]:
    """Per-sentence lowercased content tokens (punctuation and stopwords dropped)."""
    return [
        [t.lower for t in doc.sentence_tokens(i) if t.is_content]
        for i in range(doc.num_sentences)
    ]


def boundary_distribution(log_weights: np.ndarray) -> np.ndarray:
    """Normalize log likelihood weights into a sampling distribution.

    Invariant under shifting all weights by a constant; the result sums to 1
    to float precision.
    """
    log_weights = np.asarray(log_weights, dtype=float)
    m = np.max(log_weights)
    if m == NEG_INF:
        raise InferenceError("all boundary candidates have zero likelihood")
    p = np.exp(log_weights - m)
    return p / p.sum()


class SummaryIndex:
    """Precomputed per-sentence counts shared by all emission caches."""

    def __init__(self, sentences):
        self.sentence_counts = [Counter(s) for s in sentences]
        self.lengths = np.array([len(s) for s in sentences], dtype=float)
        # word -> [(sentence index, count in that sentence)]
        self.word_sentences: dict[str, list[tuple[int, int]]] = {}
        for idx, counts in enumerate(self.sentence_counts):
            for word, c in counts.items():
                self.word_sentences.setdefault(word, []).append((idx, c))


class EmissionCache:
    """Per-sentence log emissions for a span, updated as a boundary moves.

    Removing the leftmost word changes each sentence's log emission by a
    frequency term (only for sentences containing that word) plus a length
    term, so a scan over all candidate boundaries is linear in the number of
    candidates.  The mirrored update handles the right boundary, and both
    directions invert exactly; growing a word back from zero frequency
    recomputes the affected sentences from the span counts.
    """

    def __init__(self, book_words, start, end, sentences, alpha, vocab_size,
                 index: SummaryIndex | None = None):
        if start < 0 or end >= len(book_words) or start > end:
            raise ValueError(f"invalid span [{start}, {end}]")
        self.book_words = book_words
        self.start = start
        self.end = end
        self.alpha = alpha
        self.vocab_size = vocab_size
        index = index if index is not None else SummaryIndex(sentences)
        self.sentence_counts = index.sentence_counts
        self.lengths = index.lengths
        self.word_sentences = index.word_sentences
        self.freq = Counter(book_words[start : end + 1])
        self.log_eta = np.array(
            [self._from_scratch(counts) for counts in self.sentence_counts]
        )

    @property
    def span_length(self) -> int:
        return self.end - self.start + 1

    def _from_scratch(self, counts: Counter) -> float:
        denom = math.log(self.span_length + self.alpha * self.vocab_size)
        total = 0.0
        for word, c in counts.items():
            f = self.freq.get(word, 0) + self.alpha
            if f == 0:
                return NEG_INF
            total += c * (math.log(f) - denom)
        return total

    def _length_delta(self, old_len: int, new_len: int) -> float:
        a = self.alpha * self.vocab_size
        return -(math.log(new_len + a) - math.log(old_len + a)) * self.lengths

    def _remove(self, word: str, old_len: int) -> None:
        f = self.freq[word]
        self.log_eta += self._length_delta(old_len, old_len - 1)
        new_f = f - 1 + self.alpha
        for idx, c in self.word_sentences.get(word, ()):
            if self.log_eta[idx] == NEG_INF:
                continue
            if new_f == 0:
                self.log_eta[idx] = NEG_INF
            else:
                self.log_eta[idx] += c * (math.log(new_f) - math.log(f + self.alpha))
        self.freq[word] -= 1
        if self.freq[word] == 0:
            del self.freq[word]

    def _add(self, word: str, old_len: int) -> None:
        f = self.freq.get(word, 0)
        self.log_eta += self._length_delta(old_len, old_len + 1)
        self.freq[word] = f + 1
        refresh = f == 0 and self.alpha == 0
        for idx, c in self.word_sentences.get(word, ()):
            if refresh or self.log_eta[idx] == NEG_INF:
                self.log_eta[idx] = self._from_scratch(self.sentence_counts[idx])
            else:
                self.log_eta[idx] += c * (
                    math.log(f + 1 + self.alpha) - math.log(f + self.alpha)
                )

    def shift(self, direction: str) -> np.ndarray:
        """Move one boundary by one token and return the updated log emissions."""
        old_len = self.span_length
        if direction == SHRINK_LEFT:
            if old_len == 1:
                raise ValueError("cannot shrink a span of length 1")
            self._remove(self.book_words[self.start], old_len)
            self.start += 1
        elif direction == SHRINK_RIGHT:
            if old_len == 1:
                raise ValueError("cannot shrink a span of length 1")
            self._remove(self.book_words[self.end], old_len)
            self.end -= 1
        elif direction == GROW_LEFT:
            if self.start == 0:
                raise ValueError("span already starts at the document head")
            self.start -= 1
            self._add(self.book_words[self.start], old_len)
        elif direction == GROW_RIGHT:
            if self.end == len(self.book_words) - 1:
                raise ValueError("span already ends at the document tail")
            self.end += 1
            self._add(self.book_words[self.end], old_len)
        else:
            raise ValueError(f"unknown shift direction {direction!r}")
        return self.log_eta


@dataclass
class BoundarySampleLog:
    """Accumulated boundary samples: one (start, end) per state per S-step."""

    samples: list[list[tuple[int, int]]]

    @property
    def iterations(self) -> int:
        return len(self.samples[0]) if self.samples else 0

    def append(self, spans) -> None:
        for state, span in enumerate(spans):
            self.samples[state].append((span.start, span.end))


def _mode(values) -> int:
    """Most frequent value; ties break toward the smaller value."""
    counts = Counter(values)
    best = max(counts.values())
    return min(v for v, c in counts.items() if c == best)


def _weighted_loglik(log_eta: np.ndarray, q: np.ndarray) -> float:
    mask = q > 0
    vals = log_eta[mask]
    if vals.size and np.min(vals) == NEG_INF:
        return NEG_INF
    return float(np.dot(q[mask], vals))


class PassageModel:
    """Trainable passage-alignment model for one book/summary pair."""

    def __init__(self, book: TokenizedDocument, summary: TokenizedDocument,
                 k: int = 100, alpha: float = 0.01, seed: int = 0,
                 jump_floor: float = 0.01):
        if k < 1:
            raise ValueError("need at least one state")
        if len(book.tokens) < k:
            raise ValueError(
                f"book has {len(book.tokens)} tokens, fewer than K={k}"
            )
        if summary.num_sentences < 1:
            raise ValueError("summary has no sentences")
        self.book = book
        self.summary = summary
        self.k = k
        self.alpha = alpha
        self.seed = seed
        self.jump_floor = jump_floor
        self.book_words = [t.lower for t in book.tokens]
        self.vocab_size = len(set(self.book_words))
        self.summary_sentences = sentence_word_lists(summary)
        self.summary_index = SummaryIndex(self.summary_sentences)
        self.rng = np.random.default_rng(seed)

        m = len(self.book_words)
        base = m // k
        self.spans: list[PassageSpan] = []
        for s in range(k):
            start = s * base
            end = (s + 1) * base - 1 if s < k - 1 else m - 1
            self.spans.append(
                PassageSpan(s, start, end, Counter(self.book_words[start : end + 1]))
            )
        self.log_start = np.full(k, -math.log(k))
        self.jump_counts = np.ones(2 * k - 1)  # index d + (k - 1), d = to - from
        self.sample_log = BoundarySampleLog([[] for _ in range(k)])
        self.iterations_run = 0

    # -- transitions ------------------------------------------------------

    def _jump_normalizers(self, counts: np.ndarray) -> np.ndarray:
        # valid differences from state s are [-s, k-1-s]: a sliding window
        # of k entries ending at index 2k-2-s
        csum = np.concatenate([[0.0], np.cumsum(counts)])
        s = np.arange(self.k)
        return csum[2 * self.k - 1 - s] - csum[self.k - 1 - s]

    def transition_logprob(self, from_rank: int, to_rank: int) -> float:
        """Log probability of jumping between state ranks (signed distance)."""
        if not (0 <= from_rank < self.k and 0 <= to_rank < self.k):
            raise ValueError("state rank out of range")
        d = to_rank - from_rank
        z = self._jump_normalizers(self.jump_counts)[from_rank]
        return math.log(self.jump_counts[d + self.k - 1]) - math.log(z)

    def transition_matrix(self) -> np.ndarray:
        ranks = np.arange(self.k)
        d = ranks[None, :] - ranks[:, None]
        logc = np.log(self.jump_counts)[d + self.k - 1]
        logz = np.log(self._jump_normalizers(self.jump_counts))
        return logc - logz[:, None]

    # -- EM ---------------------------------------------------------------

    def emission_matrix(self) -> np.ndarray:
        n = len(self.summary_sentences)
        out = np.empty((n, self.k))
        for s, span in enumerate(self.spans):
            for ell, sentence in enumerate(self.summary_sentences):
                out[ell, s] = emission_logprob(span, sentence, self.alpha, self.vocab_size)
        return out

    def e_step(self) -> PosteriorTable:
        k = self.k

        def key(frm: np.ndarray, to: np.ndarray) -> np.ndarray:
            return to[None, :] - frm[:, None] + (k - 1)

        spec = HmmSpec.from_dense(
            self.log_start,
            self.transition_matrix(),
            self.emission_matrix(),
            transition_key=key,
            num_transition_keys=2 * k - 1,
        )
        return forward_backward(spec)

    def _transition_q(self, counts: np.ndarray, expected: np.ndarray,
                      outflow: np.ndarray) -> float:
        # expected complete-data log likelihood of the jump parameters
        mask = expected > 0
        q = float(np.dot(expected[mask], np.log(counts[mask])))
        q -= float(np.dot(outflow, np.log(self._jump_normalizers(counts))))
        return q

    def m_step(self, post: PosteriorTable) -> None:
        with np.errstate(divide="ignore"):
            self.log_start = np.log(post.state_posteriors[0])
        if len(self.summary_sentences) < 2:
            return
        expected = post.pair_posteriors
        outflow = post.state_posteriors[:-1].sum(axis=0)
        proposed = np.maximum(expected, self.jump_floor)
        # re-estimation with tied jump counts is not guaranteed to improve the
        # objective when edge states truncate the jump range, so keep the old
        # counts if the proposal does not
        if self._transition_q(proposed, expected, outflow) >= self._transition_q(
            self.jump_counts, expected, outflow
        ):
            self.jump_counts = proposed

    # -- S-step -----------------------------------------------------------

    def _sample_boundary(self, candidates, cache: EmissionCache, q: np.ndarray,
                         shrink_direction: str, widest_first: bool) -> int:
        """Score candidates by weighted span likelihood and draw one.

        ``cache`` must start at the widest candidate; successive shrinks
        enumerate the rest.  ``widest_first`` says whether the widest span
        corresponds to the first candidate in ``candidates``.
        """
        logl = np.empty(len(candidates))
        order = range(len(candidates)) if widest_first else range(len(candidates) - 1, -1, -1)
        for rank, idx in enumerate(order):
            if rank > 0:
                cache.shift(shrink_direction)
            logl[idx] = _weighted_loglik(cache.log_eta, q)
        if np.max(logl) == NEG_INF:
            # every candidate kills some responsible sentence (only possible
            # with alpha=0); keep the current boundary rather than guessing
            return -1
        probs = boundary_distribution(logl)
        return int(self.rng.choice(len(candidates), p=probs))

    def sample_boundaries(self, state_rank: int, q: np.ndarray) -> PassageSpan:
        """Resample one state's boundaries given its sentence posteriors.

        The left boundary may move from just past the previous span's end up
        to one before the current right boundary; the right boundary then
        moves between the new start and one before the next span's start.
        """
        span = self.spans[state_rank]
        m = len(self.book_words)
        lo = self.spans[state_rank - 1].end + 1 if state_rank > 0 else 0
        hi = self.spans[state_rank + 1].start - 1 if state_rank + 1 < self.k else m - 1

        # left boundary over [lo, span.end - 1], keeping at least one token
        left_candidates = list(range(lo, span.end))
        if left_candidates:
            cache = EmissionCache(
                self.book_words, left_candidates[0], span.end,
                self.summary_sentences, self.alpha, self.vocab_size,
                index=self.summary_index,
            )
            pick = self._sample_boundary(left_candidates, cache, q, SHRINK_LEFT, True)
            new_start = left_candidates[pick] if pick >= 0 else span.start
        else:
            new_start = span.start

        # right boundary over [new_start, hi]
        right_candidates = list(range(new_start, hi + 1))
        cache = EmissionCache(
            self.book_words, new_start, right_candidates[-1],
            self.summary_sentences, self.alpha, self.vocab_size,
            index=self.summary_index,
        )
        pick = self._sample_boundary(right_candidates, cache, q, SHRINK_RIGHT, False)
        new_end = right_candidates[pick] if pick >= 0 else span.end

        span.start = new_start
        span.end = new_end
        span.freq = Counter(self.book_words[new_start : new_end + 1])
        return span

    # -- training loop ----------------------------------------------------

    def run_iteration(self, s_step: bool = True) -> float:
        """One E-step, one M-step, and (optionally) one boundary S-step."""
        post = self.e_step()
        self.m_step(post)
        if s_step:
            for state in range(self.k):
                self.sample_boundaries(state, post.state_posteriors[:, state])
            self.sample_log.append(self.spans)
        self.iterations_run += 1
        return post.log_likelihood

    def train(self, iterations: int = 500, s_step: bool = True) -> list[float]:
        history = []
        for it in range(iterations):
            started = time.perf_counter()
            ll = self.run_iteration(s_step=s_step)
            history.append(ll)
            log.debug("passage iteration=%d loglik=%.6f seconds=%.3f",
                      it, ll, time.perf_counter() - started)
        return history

    # -- decoding ---------------------------------------------------------

    def decoded_spans(self, mode: str = "modal", burn_in_frac: float = 0.2) -> list[tuple[int, int]]:
        """Final boundaries: per-state modal samples (after burn-in) or the
        last sampled boundaries, clamped to preserve span order."""
        if mode not in ("modal", "last"):
            raise ValueError(f"unknown decode mode {mode!r}")
        if self.sample_log.iterations == 0:
            bounds = [(sp.start, sp.end) for sp in self.spans]
        elif mode == "last":
            bounds = [self.sample_log.samples[s][-1] for s in range(self.k)]
        else:
            burn = int(self.sample_log.iterations * burn_in_frac)
            bounds = []
            for s in range(self.k):
                kept = self.sample_log.samples[s][burn:]
                bounds.append((_mode(x[0] for x in kept), _mode(x[1] for x in kept)))
        clamped = []
        prev_end = -1
        for start, end in bounds:
            start = max(start, prev_end + 1)
            end = max(end, start)
            clamped.append((start, end))
            prev_end = end
        return clamped

    def decode(self, mode: str = "modal", burn_in_frac: float = 0.2) -> AlignmentResult:
        """Assign each summary sentence its max-posterior span."""
        for span, (start, end) in zip(self.spans, self.decoded_spans(mode, burn_in_frac)):
            span.start = start
            span.end = end
            span.freq = Counter(self.book_words[start : end + 1])
        post = self.e_step()
        result = AlignmentResult(pair_id=self.book.id, mode="passage")
        for ell in range(len(self.summary_sentences)):
            rank = int(np.argmax(post.state_posteriors[ell]))
            span = self.spans[rank]
            result.sentence_alignments.append(
                SentenceAlignment(
                    sentence_index=ell,
                    state_rank=rank,
                    span_start=span.start,
                    span_end=span.end,
                    posterior=float(post.state_posteriors[ell, rank]),
                )
            )
        return result
