"""N-gram recall scoring of a hypothesis summary against one reference.

Scores are clipped-count recall: each reference n-gram can be credited at
most as many times as it appears in the reference.  Tokenization lowercases
and strips punctuation but keeps stopwords; no stemming is applied.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

_WORD_RE = re.compile(r"\w+(?:['’-]\w+)*")


def rouge_tokenize(text: str) -> list[str]:
    return _WORD_RE.findall(text.lower())


def _ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def clipped_counts(reference: Sequence[str], hypothesis: Sequence[str],
                   n: int) -> tuple[int, int]:
    """(clipped matches, total reference n-grams)."""
    if len(reference) < n:
        raise ValueError(f"reference has fewer than {n} tokens")
    ref = _ngram_counts(reference, n)
    hyp = _ngram_counts(hypothesis, n)
    matched = sum(min(c, hyp.get(g, 0)) for g, c in ref.items())
    return matched, sum(ref.values())


def rouge_n(reference: Sequence[str], hypothesis: Sequence[str], n: int) -> float:
    matched, total = clipped_counts(reference, hypothesis, n)
    return matched / total


@dataclass(frozen=True)
class RougeScore:
    """Unigram and bigram recall with the counts behind each ratio."""

    rouge1: float
    rouge2: float
    clipped_matches: tuple[int, int]
    reference_totals: tuple[int, int]

    def formatted(self) -> tuple[str, str]:
        return format_percent(self.rouge1), format_percent(self.rouge2)


def score_tokens(reference: Sequence[str], hypothesis: Sequence[str]) -> RougeScore:
    m1, t1 = clipped_counts(reference, hypothesis, 1)
    m2, t2 = clipped_counts(reference, hypothesis, 2)
    return RougeScore(m1 / t1, m2 / t2, (m1, m2), (t1, t2))


def score_texts(reference: str, hypothesis: str) -> RougeScore:
    return score_tokens(rouge_tokenize(reference), rouge_tokenize(hypothesis))


def mean_rouge(scores: Iterable[RougeScore]) -> tuple[float, float]:
    scores = list(scores)
    if not scores:
        raise ValueError("no scores to average")
    r1 = sum(s.rouge1 for s in scores) / len(scores)
    r2 = sum(s.rouge2 for s in scores) / len(scores)
    return r1, r2


def format_percent(x: float) -> str:
    """Render a ratio as a percentage with one decimal, e.g. 0.414 -> '41.4'."""
    return f"{100.0 * x:.1f}"
