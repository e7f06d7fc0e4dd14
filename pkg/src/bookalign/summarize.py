"""Sentence supervision from alignments, extraction, and reporting.

An alignment marks which source sentences carry summary content; those marks
become binary training labels for the extractor.  Extraction ranks sentences
by predicted probability and greedily packs them into a word budget, then
restores document order.
"""

from __future__ import annotations

import math
from collections import Counter

import numpy as np

from .alignment import AlignmentResult
from .corpus import TokenizedDocument
from .extractor import ExtractorModel

WORD_BUDGET = 1000

LABEL_AUTO = "auto"
LABEL_SPAN_BEST = "span-best"
LABEL_TOKEN_THRESHOLD = "token-threshold"


def _sentence_of_position(book: TokenizedDocument, position: int) -> int:
    return book.tokens[position].sentence_index


def _sentence_unigram_logprob(book: TokenizedDocument, sentence_index: int,
                              words, alpha: float, vocab_size: int) -> float:
    tokens = book.sentence_tokens(sentence_index)
    freq = Counter(t.lower for t in tokens)
    denom = math.log(len(tokens) + alpha * vocab_size)
    total = 0.0
    for w in words:
        f = freq.get(w, 0) + alpha
        if f == 0:
            return float("-inf")
        total += math.log(f) - denom
    return total


def label_from_alignment(book: TokenizedDocument, summary: TokenizedDocument,
                         alignment: AlignmentResult, rule: str = LABEL_AUTO,
                         alpha: float = 0.01) -> np.ndarray:
    """Binary per-sentence labels for one book given its alignment.

    Span alignments label, for each summary sentence, the source sentence
    inside the decoded span under which that summary sentence is most
    probable.  Token alignments label any source sentence receiving at least
    max(2, 20% of the summary sentence's words) aligned tokens from a single
    summary sentence.
    """
    labels = np.zeros(book.num_sentences, dtype=int)
    if rule == LABEL_AUTO:
        rule = LABEL_SPAN_BEST if alignment.mode == "passage" else LABEL_TOKEN_THRESHOLD
    if rule == LABEL_SPAN_BEST:
        _label_span_best(book, summary, alignment, alpha, labels)
    elif rule == LABEL_TOKEN_THRESHOLD:
        _label_token_threshold(book, summary, alignment, labels)
    else:
        raise ValueError(f"unknown label rule {rule!r}")
    return labels


def _label_span_best(book, summary, alignment, alpha, labels) -> None:
    vocab_size = len({t.lower for t in book.tokens})
    for rec in alignment.sentence_alignments:
        words = [t.lower for t in summary.sentence_tokens(rec.sentence_index)
                 if t.is_content]
        first = _sentence_of_position(book, rec.span_start)
        last = _sentence_of_position(book, rec.span_end)
        best, best_score = first, float("-inf")
        for s in range(first, last + 1):
            score = _sentence_unigram_logprob(book, s, words, alpha, vocab_size)
            if score > best_score:
                best, best_score = s, score
        labels[best] = 1


def _label_token_threshold(book, summary, alignment, labels) -> None:
    summary_sentence = {t.doc_position: t.sentence_index for t in summary.tokens}
    words_per_sentence = Counter(
        t.sentence_index for t in summary.tokens if not t.is_punct
    )
    hits: dict[int, Counter] = {}
    for rec in alignment.token_alignments:
        if rec.source_position is None:
            continue
        ell = summary_sentence[rec.token_position]
        target = _sentence_of_position(book, rec.source_position)
        hits.setdefault(ell, Counter())[target] += 1
    for ell, counts in hits.items():
        threshold = max(2.0, 0.2 * words_per_sentence[ell])
        for target, count in counts.items():
            if count >= threshold:
                labels[target] = 1


def sentence_word_count(book: TokenizedDocument, sentence_index: int) -> int:
    return sum(1 for t in book.sentence_tokens(sentence_index) if not t.is_punct)


def extract_summary(book: TokenizedDocument, probabilities,
                    budget: int = WORD_BUDGET) -> list[int]:
    """Pick sentences by descending score into the word budget, skipping any
    sentence too long for the remaining room; return them in document order."""
    probabilities = np.asarray(probabilities, dtype=float)
    if probabilities.shape[0] != book.num_sentences:
        raise ValueError("one probability per sentence required")
    order = sorted(range(book.num_sentences), key=lambda s: (-probabilities[s], s))
    remaining = budget
    chosen = []
    for s in order:
        wc = sentence_word_count(book, s)
        if wc <= remaining:
            chosen.append(s)
            remaining -= wc
            if remaining == 0:
                break
    return sorted(chosen)


def first_n_baseline(book: TokenizedDocument, n_words: int = WORD_BUDGET) -> list[int]:
    """Leading sentences whose cumulative word count stays within the budget."""
    total = 0
    chosen = []
    for s in range(book.num_sentences):
        wc = sentence_word_count(book, s)
        if total + wc > n_words:
            break
        chosen.append(s)
        total += wc
    return chosen


def sentence_text(book: TokenizedDocument, sentence_index: int) -> str:
    parts: list[str] = []
    for t in book.sentence_tokens(sentence_index):
        if t.is_punct and parts:
            parts[-1] += t.surface
        else:
            parts.append(t.surface)
    return " ".join(parts)


def selection_tokens(book: TokenizedDocument, indices) -> list[str]:
    """Lowercased word tokens of the selected sentences, for scoring."""
    out = []
    for s in indices:
        out.extend(t.lower for t in book.sentence_tokens(s) if not t.is_punct)
    return out


def write_summary(path, book: TokenizedDocument, indices) -> None:
    words = sum(sentence_word_count(book, s) for s in indices)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"#summary\t{book.id}\t{words}\n")
        for s in indices:
            fh.write(sentence_text(book, s) + "\n")


def report_top_features(models: list[ExtractorModel],
                        top_k: int = 25) -> list[tuple[str, float]]:
    """Features by mean rank of weight across fold models; ties alphabetical."""
    if not models:
        raise ValueError("no models to report on")
    names = models[0].feature_names
    for m in models[1:]:
        if m.feature_names != names:
            raise ValueError("fold models disagree on feature space")
    total_rank = np.zeros(len(names))
    for m in models:
        order = sorted(range(len(names)), key=lambda i: (-m.weights[i], names[i]))
        for rank, idx in enumerate(order, start=1):
            total_rank[idx] += rank
    mean_rank = total_rank / len(models)
    ranked = sorted(range(len(names)), key=lambda i: (mean_rank[i], names[i]))
    return [(names[i], float(mean_rank[i])) for i in ranked[:top_k]]
