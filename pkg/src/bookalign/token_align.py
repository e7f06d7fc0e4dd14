"""Token aligner: HMM states are individual source-token positions.

Summary tokens (punctuation dropped, stopwords kept) are emitted either by a
source position whose word matches the summary word directly or through a
synonym lexicon, or by one of a small set of null states that mop up summary
tokens with no plausible source.  Jumps between source positions are tied by
signed-distance bins, so the model learns a handful of movement parameters
(stay, step forward, step back, short/medium/long jumps in either direction)
instead of a full transition matrix.  A fixed-weight variant with no training,
no nulls and no synonyms serves as a baseline.

Jumps between real positions farther than a cutoff are disallowed outright;
null states are exempt so a summary token can always be absorbed.
"""

from __future__ import annotations

import logging
import math
import time
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .alignment import AlignmentResult, TokenAlignment
from .corpus import TokenizedDocument
from .errors import InferenceError, LexiconError
from .hmm import HmmSpec, PosteriorTable, forward_backward, viterbi

log = logging.getLogger(__name__)

NEG_INF = float("-inf")
NO_BIN = -1

DEFAULT_TAU = 1000
DEFAULT_NULL_STATES = 9


@dataclass(frozen=True)
class BinningScheme:
    """Signed jump-distance bins: {0}, then +/- ranges between the bounds.

    The default bounds (1, 10, 100, 1000) give nine bins:
    {0}, {+1}, {-1}, [+2,+10], [-10,-2], [+11,+100], [-100,-11],
    [+101,+1000], [-1000,-101].  Distances beyond the last bound clamp into
    the outermost bin on their side.
    """

    bounds: tuple[int, ...] = (1, 10, 100, 1000)

    def __post_init__(self):
        if not self.bounds or list(self.bounds) != sorted(set(self.bounds)):
            raise ValueError("bin bounds must be strictly increasing")
        if self.bounds[0] < 1:
            raise ValueError("bin bounds must be positive")

    @classmethod
    def from_string(cls, text: str) -> "BinningScheme":
        try:
            bounds = tuple(int(x) for x in text.split(","))
        except ValueError as exc:
            raise ValueError(f"bad bin bounds {text!r}") from exc
        return cls(bounds)

    @property
    def num_bins(self) -> int:
        return 2 * len(self.bounds) + 1

    def bin_of(self, d: int) -> int:
        """Bin id for a signed distance (clamped beyond the last bound)."""
        return int(self.bin_ids(np.array([d]))[0])

    def bin_ids(self, d: np.ndarray) -> np.ndarray:
        bounds = np.asarray(self.bounds)
        mag = np.minimum(np.abs(d), bounds[-1])
        r = np.searchsorted(bounds, mag, side="left")
        return np.where(d == 0, 0, np.where(d > 0, 2 * r + 1, 2 * r + 2))

    def signed_range(self, bin_id: int, clamp: bool = False) -> tuple[float, float]:
        """Inclusive signed range of a bin; outermost bins extend to
        +/-infinity when ``clamp`` is set."""
        if bin_id == 0:
            return (0, 0)
        r = (bin_id - 1) // 2
        lo = 1 if r == 0 else self.bounds[r - 1] + 1
        hi = self.bounds[r]
        if clamp and r == len(self.bounds) - 1:
            hi = math.inf
        if bin_id % 2 == 1:
            return (lo, hi)
        return (-hi, -lo)

    def describe(self, bin_id: int) -> str:
        lo, hi = self.signed_range(bin_id)
        if bin_id == 0:
            return "{0}"
        return f"[{lo:+g},{hi:+g}]"


class SynonymLexicon:
    """Symmetric word-to-synonym mapping; a word is never its own synonym."""

    def __init__(self, mapping: dict[str, set[str]] | None = None):
        self._syn: dict[str, set[str]] = {}
        if mapping:
            for word, syns in mapping.items():
                for s in syns:
                    self.add(word, s)

    def add(self, a: str, b: str) -> None:
        a, b = a.lower(), b.lower()
        if a == b:
            return
        self._syn.setdefault(a, set()).add(b)
        self._syn.setdefault(b, set()).add(a)

    def synonyms(self, word: str) -> frozenset:
        return frozenset(self._syn.get(word.lower(), ()))

    def __len__(self) -> int:
        return len(self._syn)

    def __contains__(self, word: str) -> bool:
        return word.lower() in self._syn


def load_thesaurus(path) -> SynonymLexicon:
    """Parse a ``head: syn1, syn2`` file into a symmetric lexicon."""
    lex = SynonymLexicon()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if ":" not in line:
                raise LexiconError(f"{path}:{lineno}: expected 'head: synonyms'")
            head, _, rest = line.partition(":")
            head = head.strip().lower()
            if not head or " " in head:
                raise LexiconError(f"{path}:{lineno}: bad head word {head!r}")
            for entry in rest.split(","):
                entry = entry.strip().lower()
                if not entry:
                    continue
                if " " in entry:
                    raise LexiconError(f"{path}:{lineno}: bad synonym {entry!r}")
                lex.add(head, entry)
    return lex


def _interval_overlap(lo1: float, hi1: float, lo2: float, hi2: float) -> int:
    lo, hi = max(lo1, lo2), min(hi1, hi2)
    return int(hi - lo + 1) if hi >= lo else 0


class TokenAlignModel:
    """Trainable token-alignment model for one book/summary pair.

    States 0..M-1 are source positions; states M..M+B-1 are null states
    anchored at the centers of B equal slices of the source, so jumps into
    and out of a null are binned by a concrete position.  Transition weights
    are tied per bin; every destination in a bin shares the bin's weight, and
    rows normalize over the destinations actually reachable from that state.
    """

    def __init__(self, book: TokenizedDocument, summary: TokenizedDocument,
                 scheme: BinningScheme | None = None, tau: int = DEFAULT_TAU,
                 lexicon: SynonymLexicon | None = None,
                 null_states: int = DEFAULT_NULL_STATES):
        if tau < 1:
            raise ValueError("tau must be positive")
        if null_states < 0:
            raise ValueError("null state count cannot be negative")
        self.book = book
        self.summary = summary
        self.scheme = scheme or BinningScheme()
        self.tau = tau
        self.lexicon = lexicon or SynonymLexicon()
        self.num_real = len(book.tokens)
        self.num_null = null_states
        self.num_states = self.num_real + self.num_null

        self.book_words = [t.lower for t in book.tokens]
        self.word_positions: dict[str, list[int]] = {}
        for p, w in enumerate(self.book_words):
            self.word_positions.setdefault(w, []).append(p)

        # summary observations: (doc position, lowercased word), punctuation dropped
        self.observations = [
            (t.doc_position, t.lower) for t in summary.tokens if not t.is_punct
        ]
        if not self.observations:
            raise ValueError("summary has no word tokens")
        self.summary_vocab = sorted({w for _, w in self.observations})
        self._null_log_emit = -math.log(len(self.summary_vocab))

        m, b = self.num_real, self.num_null
        anchors = [int((i + 0.5) * m / b) for i in range(b)]
        self.state_pos = np.concatenate(
            [np.arange(m), np.array(anchors, dtype=int)]
        ) if b else np.arange(m)
        self.is_null = np.zeros(self.num_states, dtype=bool)
        self.is_null[m:] = True

        self.log_start = np.full(self.num_states, -math.log(self.num_states))
        self.bin_weights = np.ones(self.scheme.num_bins)
        self._coverage = self._build_coverage()

        # per source word: distribution over {itself + its synonyms}, the
        # word itself starting at twice a synonym's weight
        self.emissions: dict[str, dict[str, float]] = {}
        for w in self.word_positions:
            support = {w} | set(self.lexicon.synonyms(w))
            total = len(support) + 1.0
            self.emissions[w] = {
                u: (2.0 if u == w else 1.0) / total for u in support
            }

        self._active = [self._active_states(w) for _, w in self.observations]
        self.loglik_history: list[float] = []

    # -- structure ---------------------------------------------------------

    def _active_states(self, word: str) -> np.ndarray:
        matches: list[int] = []
        for w in {word} | set(self.lexicon.synonyms(word)):
            matches.extend(self.word_positions.get(w, ()))
        matches.sort()
        nulls = range(self.num_real, self.num_states)
        return np.array([*matches, *nulls], dtype=int)

    def _build_coverage(self) -> np.ndarray:
        """coverage[s, b] = number of destination states in bin b from s."""
        nb = self.scheme.num_bins
        ranges = [self.scheme.signed_range(b, clamp=True) for b in range(nb)]
        cov = np.zeros((self.num_states, nb))
        m = self.num_real
        for s in range(self.num_states):
            p = int(self.state_pos[s])
            null_row = bool(self.is_null[s])
            for b, (lo, hi) in enumerate(ranges):
                dlo, dhi = p + lo, p + hi
                if not null_row:
                    dlo, dhi = max(dlo, p - self.tau), min(dhi, p + self.tau)
                cov[s, b] = _interval_overlap(dlo, dhi, 0, m - 1)
            for t in range(m, self.num_states):
                d = int(self.state_pos[t]) - p
                cov[s, self.scheme.bin_of(d)] += 1
        return cov

    def _row_normalizers(self, weights: np.ndarray) -> np.ndarray:
        return self._coverage @ weights

    def transition_logprob(self, from_state: int, to_state: int) -> float:
        """Log transition probability between global state ids."""
        block = self._transition_block(
            np.array([from_state]), np.array([to_state])
        )
        return float(block[0, 0])

    def _pair_bins(self, frm: np.ndarray, to: np.ndarray) -> np.ndarray:
        d = self.state_pos[to][None, :] - self.state_pos[frm][:, None]
        return self.scheme.bin_ids(d)

    def _transition_block(self, frm: np.ndarray, to: np.ndarray) -> np.ndarray:
        d = self.state_pos[to][None, :] - self.state_pos[frm][:, None]
        bins = self.scheme.bin_ids(d)
        with np.errstate(divide="ignore"):
            out = np.log(self.bin_weights)[bins]
        out -= np.log(self._row_normalizers(self.bin_weights))[frm][:, None]
        both_real = ~self.is_null[frm][:, None] & ~self.is_null[to][None, :]
        out[both_real & (np.abs(d) > self.tau)] = NEG_INF
        return out

    def _emission_vector(self, states: np.ndarray, obs_index: int) -> np.ndarray:
        _, word = self.observations[obs_index]
        out = np.full(states.size, NEG_INF)
        for i, s in enumerate(states):
            if self.is_null[s]:
                out[i] = self._null_log_emit
            else:
                prob = self.emissions[self.book_words[s]].get(word, 0.0)
                if prob > 0:
                    out[i] = math.log(prob)
        return out

    def _spec(self) -> HmmSpec:
        return HmmSpec(
            num_states=self.num_states,
            num_obs=len(self.observations),
            log_start=self.log_start,
            log_transition=self._transition_block,
            log_emission=self._emission_vector,
            active_states=self._active,
            transition_key=self._pair_bins,
            num_transition_keys=self.scheme.num_bins,
        )

    # -- EM ----------------------------------------------------------------

    def _bin_q(self, weights: np.ndarray, expected: np.ndarray,
               outflow: np.ndarray) -> float:
        mask = expected > 0
        q = float(np.dot(expected[mask], np.log(weights[mask])))
        rows = outflow > 0
        q -= float(
            np.dot(outflow[rows], np.log(self._row_normalizers(weights)[rows]))
        )
        return q

    def m_step(self, post: PosteriorTable, floor: float = 0.01) -> None:
        with np.errstate(divide="ignore"):
            self.log_start = np.log(post.state_posteriors[0])
        if len(self.observations) >= 2:
            expected = post.pair_posteriors
            outflow = post.state_posteriors[:-1].sum(axis=0)
            proposed = np.maximum(expected, floor)
            # tied bin weights with row supports that vary near the document
            # edges have no closed-form update; keep the old weights unless
            # the proposal improves the expected objective
            if self._bin_q(proposed, expected, outflow) >= self._bin_q(
                self.bin_weights, expected, outflow
            ):
                self.bin_weights = proposed

        # emissions: exact per-word re-estimation over the fixed support
        counts: dict[str, Counter] = {}
        for ell, (_, word) in enumerate(self.observations):
            for s in self._active[ell]:
                if self.is_null[s]:
                    continue
                q = post.state_posteriors[ell, s]
                if q > 0:
                    counts.setdefault(self.book_words[s], Counter())[word] += q
        for w, obs_counts in counts.items():
            total = sum(obs_counts.values())
            if total > 0:
                dist = self.emissions[w]
                for u in dist:
                    dist[u] = obs_counts.get(u, 0.0) / total

    def em_train(self, max_iters: int = 50, tol: float = 1e-6) -> list[float]:
        """Run EM until the log likelihood gain drops below ``tol``."""
        history = []
        for it in range(max_iters):
            started = time.perf_counter()
            post = forward_backward(self._spec())
            self.m_step(post)
            history.append(post.log_likelihood)
            log.debug("token iteration=%d loglik=%.6f seconds=%.3f",
                      it, post.log_likelihood, time.perf_counter() - started)
            if len(history) >= 2 and history[-1] - history[-2] < tol:
                break
        self.loglik_history.extend(history)
        return history

    # -- decoding ------------------------------------------------------------

    def viterbi_align(self) -> AlignmentResult:
        """Best state path plus per-token posterior confidence."""
        spec = self._spec()
        path, _ = viterbi(spec)
        post = forward_backward(spec)
        result = AlignmentResult(pair_id=self.book.id, mode="token")
        prev = None
        for ell, (doc_pos, _) in enumerate(self.observations):
            state = path[ell]
            bin_id = NO_BIN
            if prev is not None:
                bin_id = self.scheme.bin_of(
                    int(self.state_pos[state]) - int(self.state_pos[prev])
                )
            result.token_alignments.append(
                TokenAlignment(
                    token_position=doc_pos,
                    source_position=None if self.is_null[state] else int(state),
                    bin_id=bin_id,
                    posterior=float(post.state_posteriors[ell, state]),
                )
            )
            prev = state
        return result


# -- fixed-weight baseline --------------------------------------------------

_BASELINE_WEIGHTS = {
    "next": 0.4,      # the very next word in the same sentence
    "same": 0.3,      # elsewhere in the same sentence
    "adjacent": 0.15,  # a neighbouring sentence
    "near": 0.1,      # within 1000 positions
    "far": 0.05,      # anywhere else
}
_BASELINE_WINDOW = 1000


class _BaselineTransitions:
    """Per-state normalized fixed category weights over source positions."""

    def __init__(self, book: TokenizedDocument):
        self.sent_index = np.array([t.sentence_index for t in book.tokens])
        self.sent_start = {}
        self.sent_end = {}
        for i, (start, end) in enumerate(book.sentences):
            self.sent_start[i] = start
            self.sent_end[i] = end - 1  # inclusive
        self.num_positions = len(book.tokens)
        self.num_sentences = len(book.sentences)

    def _category(self, p: int, q: int) -> str:
        sp, sq = self.sent_index[p], self.sent_index[q]
        if sp == sq:
            return "next" if q == p + 1 else "same"
        if abs(int(sp) - int(sq)) == 1:
            return "adjacent"
        if abs(p - q) <= _BASELINE_WINDOW:
            return "near"
        return "far"

    def _normalizer(self, p: int) -> float:
        m = self.num_positions
        s = int(self.sent_index[p])
        lo_s, hi_s = self.sent_start[s], self.sent_end[s]
        n_next = 1 if p + 1 <= hi_s else 0
        n_same = hi_s - lo_s + 1 - n_next
        n_adj = 0
        adj_in_window = 0
        win_lo, win_hi = max(0, p - _BASELINE_WINDOW), min(m - 1, p + _BASELINE_WINDOW)
        for s2 in (s - 1, s + 1):
            if 0 <= s2 < self.num_sentences:
                lo2, hi2 = self.sent_start[s2], self.sent_end[s2]
                n_adj += hi2 - lo2 + 1
                adj_in_window += _interval_overlap(lo2, hi2, win_lo, win_hi)
        same_in_window = _interval_overlap(lo_s, hi_s, win_lo, win_hi)
        n_near = (win_hi - win_lo + 1) - same_in_window - adj_in_window
        n_far = m - n_next - n_same - n_adj - n_near
        w = _BASELINE_WEIGHTS
        return (w["next"] * n_next + w["same"] * n_same + w["adjacent"] * n_adj
                + w["near"] * n_near + w["far"] * n_far)

    def block(self, frm: np.ndarray, to: np.ndarray) -> np.ndarray:
        out = np.empty((frm.size, to.size))
        for i, p in enumerate(frm):
            z = self._normalizer(int(p))
            for j, q in enumerate(to):
                cat = self._category(int(p), int(q))
                out[i, j] = math.log(_BASELINE_WEIGHTS[cat]) - math.log(z)
        return out


def jing_baseline_align(book: TokenizedDocument,
                        summary: TokenizedDocument) -> AlignmentResult:
    """Decode with fixed movement weights, exact word matches, no training.

    Summary tokens with no exact source match (and punctuation) are skipped.
    """
    word_positions: dict[str, list[int]] = {}
    for p, t in enumerate(book.tokens):
        word_positions.setdefault(t.lower, []).append(p)

    observations = [
        (t.doc_position, t.lower)
        for t in summary.tokens
        if not t.is_punct and t.lower in word_positions
    ]
    result = AlignmentResult(pair_id=book.id, mode="jing")
    if not observations:
        return result

    m = len(book.tokens)
    trans = _BaselineTransitions(book)
    active = [np.array(word_positions[w], dtype=int) for _, w in observations]

    def emission(states: np.ndarray, obs_index: int) -> np.ndarray:
        # each position emits its own word with probability one
        return np.zeros(states.size)

    spec = HmmSpec(
        num_states=m,
        num_obs=len(observations),
        log_start=np.full(m, -math.log(m)),
        log_transition=trans.block,
        log_emission=emission,
        active_states=active,
    )
    path, _ = viterbi(spec)
    post = forward_backward(spec)
    for ell, (doc_pos, _) in enumerate(observations):
        state = path[ell]
        result.token_alignments.append(
            TokenAlignment(
                token_position=doc_pos,
                source_position=int(state),
                bin_id=NO_BIN,
                posterior=float(post.state_posteriors[ell, state]),
            )
        )
    return result
