"""Binary sentence features for the extractive summarizer.

Five blocks, fixed widths: sentence-position decile (10), salient-name
membership (100), lexical vocabulary presence (10,000), first-mention of a
vocabulary word (10,000), and document TF-IDF rank thresholds (3) — 20,113
columns in total at the default vocabulary size.

Vocabulary and document frequencies come from training-fold books only; a
featurized test book reuses the training statistics unchanged.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .corpus import TokenizedDocument

NUM_DECILES = 10
NUM_NAMES = 100
DEFAULT_VOCAB_SIZE = 10_000
NUM_RANK_FEATURES = 3
RANK_THRESHOLDS = (10, 100, 1000)

LABEL_COLUMN = "__LABEL__"


@dataclass
class CorpusStats:
    """Vocabulary and document frequencies of the training-fold books."""

    num_docs: int
    vocab: list[str]
    vocab_index: dict[str, int]
    df: dict[str, int]
    vocab_size: int = DEFAULT_VOCAB_SIZE

    @classmethod
    def from_documents(cls, books: list[TokenizedDocument],
                       vocab_size: int = DEFAULT_VOCAB_SIZE) -> "CorpusStats":
        if not books:
            raise ValueError("no training documents")
        freq: Counter = Counter()
        df: Counter = Counter()
        for book in books:
            words = [t.lower for t in book.tokens if not t.is_punct]
            freq.update(words)
            df.update(set(words))
        ranked = sorted(freq.items(), key=lambda kv: (-kv[1], kv[0]))
        vocab = [w for w, _ in ranked[:vocab_size]]
        return cls(
            num_docs=len(books),
            vocab=vocab,
            vocab_index={w: i for i, w in enumerate(vocab)},
            df=dict(df),
            vocab_size=vocab_size,
        )

    def idf(self, word: str) -> float:
        # unseen words fall back to a half-count so the ratio stays finite
        df = self.df.get(word, 0)
        return math.log(self.num_docs / (df if df > 0 else 0.5))

    @property
    def width(self) -> int:
        return NUM_DECILES + NUM_NAMES + 2 * self.vocab_size + NUM_RANK_FEATURES


def feature_names(stats: CorpusStats) -> list[str]:
    names = [f"DECILE_{i}" for i in range(NUM_DECILES)]
    names += [f"IS_NAME_{i:02d}" for i in range(NUM_NAMES)]
    lex = [f"LEX_{w}" for w in stats.vocab]
    lex += [f"LEX_UNUSED_{i}" for i in range(stats.vocab_size - len(stats.vocab))]
    first = [f"FIRST_{w}" for w in stats.vocab]
    first += [f"FIRST_UNUSED_{i}" for i in range(stats.vocab_size - len(stats.vocab))]
    names += lex + first
    names += [f"TFIDF_TOP{t}" for t in RANK_THRESHOLDS]
    return names


def salient_names(book: TokenizedDocument, stats: CorpusStats,
                  limit: int = NUM_NAMES) -> list[str]:
    """Top capitalized types by TF-IDF, counting non-sentence-initial
    occurrences only; ties break alphabetically."""
    counts: Counter = Counter()
    for t in book.tokens:
        if t.is_capitalized and not t.is_sentence_initial and not t.is_punct:
            counts[t.lower] += 1
    scored = sorted(
        ((-(c * stats.idf(w)), w) for w, c in counts.items())
    )
    return [w for _, w in scored[:limit]]


def tfidf_rank_sets(book: TokenizedDocument, stats: CorpusStats) -> list[set]:
    """Nested sets of the document's top 10 / 100 / 1000 types by TF-IDF."""
    counts = Counter(t.lower for t in book.tokens if not t.is_punct)
    ranked = sorted(((-(c * stats.idf(w)), w) for w, c in counts.items()))
    words = [w for _, w in ranked]
    return [set(words[:t]) for t in RANK_THRESHOLDS]


def featurize(book: TokenizedDocument, stats: CorpusStats) -> sparse.csr_matrix:
    """Sparse binary feature matrix, one row per book sentence."""
    n = book.num_sentences
    names = salient_names(book, stats)
    name_col = {w: NUM_DECILES + i for i, w in enumerate(names)}
    lex_base = NUM_DECILES + NUM_NAMES
    first_base = lex_base + stats.vocab_size
    rank_base = first_base + stats.vocab_size
    rank_sets = tfidf_rank_sets(book, stats)

    first_occurrence: dict[str, int] = {}
    for t in book.tokens:
        if not t.is_punct and t.lower not in first_occurrence:
            first_occurrence[t.lower] = t.doc_position

    rows: list[int] = []
    cols: list[int] = []
    for s in range(n):
        tokens = [t for t in book.sentence_tokens(s) if not t.is_punct]
        active = {min(NUM_DECILES - 1, (NUM_DECILES * s) // n)}
        for t in tokens:
            w = t.lower
            if w in name_col:
                active.add(name_col[w])
            col = stats.vocab_index.get(w)
            if col is not None:
                active.add(lex_base + col)
                if first_occurrence[w] == t.doc_position:
                    active.add(first_base + col)
            for r, members in enumerate(rank_sets):
                if w in members:
                    active.add(rank_base + r)
        rows.extend([s] * len(active))
        cols.extend(sorted(active))
    data = np.ones(len(rows))
    return sparse.csr_matrix(
        (data, (rows, cols)), shape=(n, stats.width)
    )


def write_feature_matrix(path, matrix: sparse.csr_matrix, names: list[str],
                         labels, book_id: str) -> None:
    """Sparse triplet export: row, feature name, 1 — plus a label triplet."""
    coo = matrix.tocoo()
    by_row: dict[int, list[int]] = {}
    for r, c in zip(coo.row, coo.col):
        by_row.setdefault(int(r), []).append(int(c))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"#features\t{book_id}\t{matrix.shape[0]}\t{matrix.shape[1]}\n")
        for r in range(matrix.shape[0]):
            fh.write(f"{r}\t{LABEL_COLUMN}\t{int(labels[r])}\n")
            for c in sorted(by_row.get(r, ())):
                fh.write(f"{r}\t{names[c]}\t1\n")
