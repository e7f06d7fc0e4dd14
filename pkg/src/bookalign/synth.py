"""Synthetic book/summary corpora with known gold alignments.

Books are built from topically distinct blocks: each block draws on its own
word pool (shared across all pairs so lexical features generalize), and each
summary sentence samples words from exactly one block.  With ``repeats=1``
every pool word occurs exactly once in its block, so the gold source
position of every summary content word is unique.

Two layouts: ``spread`` lays the blocks back to back; ``middle`` surrounds
them with filler text that never appears in summaries, which makes a
lead-sentences baseline weak by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import tokenize

MODES = ("spread", "middle")
SUMMARY_MODES = ("sample", "cover")


@dataclass(frozen=True)
class SyntheticCorpus:
    root: Path
    manifest: Path
    pair_ids: tuple[str, ...]


def _pool(block: int, size: int) -> list[str]:
    return [f"blk{block}w{i:03d}" for i in range(size)]


def _fill_pool(size: int = 100) -> list[str]:
    return [f"fill{i:03d}" for i in range(size)]


class _DocBuilder:
    """Assembles 'The w1 w2 ... .' sentences and tracks token positions."""

    def __init__(self):
        self.sentences: list[str] = []
        self.position = 0

    def add(self, words: list[str]) -> list[int]:
        """Append one sentence; return the doc positions of its words."""
        self.sentences.append("The " + " ".join(words) + " .")
        start = self.position + 1  # skip the leading 'The'
        positions = list(range(start, start + len(words)))
        self.position += len(words) + 2
        return positions

    def text(self) -> str:
        return " ".join(self.sentences)


def _chunk(words: list[str], size: int) -> list[list[str]]:
    return [words[i : i + size] for i in range(0, len(words), size)]


def make_synthetic_corpus(
    out_dir,
    num_pairs: int = 10,
    num_passages: int = 5,
    vocab_per_passage: int = 60,
    seed: int = 0,
    mode: str = "spread",
    repeats: int = 1,
    overlap_fraction: float = 0.0,
    sentences_per_passage: int = 2,
    summary_sentence_words: int = 6,
    words_per_sentence: int = 8,
    background_prefix: int = 1200,
    background_suffix: int = 200,
    summary_mode: str = "sample",
) -> SyntheticCorpus:
    if min(num_pairs, num_passages, vocab_per_passage, repeats) < 1:
        raise ValueError("corpus dimensions must be positive")
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    if summary_mode not in SUMMARY_MODES:
        raise ValueError(f"unknown summary mode {summary_mode!r}")
    if summary_sentence_words > vocab_per_passage:
        raise ValueError("summary sentences cannot exceed the pool size")

    root = Path(out_dir)
    for sub in ("books", "summaries", "gold"):
        (root / sub).mkdir(parents=True, exist_ok=True)

    rng = np.random.default_rng(seed)
    pools = [_pool(b, vocab_per_passage) for b in range(num_passages)]
    fill = _fill_pool()
    pair_ids = [f"pair{i:03d}" for i in range(num_pairs)]

    manifest_lines = []
    for pair_id in pair_ids:
        book = _DocBuilder()
        if mode == "middle":
            _add_background(book, fill, background_prefix, words_per_sentence)

        word_position: dict[str, int] = {}
        block_ranges: list[tuple[int, int]] = []
        for b, pool in enumerate(pools):
            words = pool * repeats
            if overlap_fraction > 0:
                foreign_pool = [w for bb, p in enumerate(pools) if bb != b for w in p]
                count = int(round(overlap_fraction * len(words)))
                picks = rng.choice(len(foreign_pool), size=count, replace=False)
                words = words + [foreign_pool[i] for i in picks]
            order = rng.permutation(len(words))
            words = [words[i] for i in order]
            block_start = book.position
            for chunk in _chunk(words, words_per_sentence):
                for w, pos in zip(chunk, book.add(chunk)):
                    # first in-block occurrence wins when repeats > 1
                    if w in pool and w not in word_position:
                        word_position[w] = pos
            block_ranges.append((block_start, book.position - 1))

        if mode == "middle":
            _add_background(book, fill, background_suffix, words_per_sentence)

        summary = _DocBuilder()
        gold_sentences: list[tuple[int, int, int, int, int, int]] = []
        gold_tokens: list[tuple[int, int]] = []
        ell = 0
        for b, pool in enumerate(pools):
            if summary_mode == "cover":
                # every pool word appears in the summary, so the tight span
                # is the block's full content range
                order = rng.permutation(len(pool))
                word_groups = _chunk([pool[i] for i in order], summary_sentence_words)
            else:
                word_groups = []
                for _ in range(sentences_per_passage):
                    picks = rng.choice(len(pool), size=summary_sentence_words,
                                       replace=False)
                    word_groups.append([pool[i] for i in picks])
            sentences: list[tuple[int, list[int]]] = []
            used_positions: list[int] = []
            for words in word_groups:
                positions = summary.add(words)
                gold_tokens.extend(
                    (spos, word_position[w]) for w, spos in zip(words, positions)
                )
                used_positions.extend(word_position[w] for w in words)
                sentences.append((ell, positions))
                ell += 1
            # the recoverable span is the tight cover of the words the summary
            # actually used; the block range bounds it loosely
            start, end = block_ranges[b]
            tight = (min(used_positions), max(used_positions))
            for sent_ell, _ in sentences:
                gold_sentences.append((sent_ell, b, start, end, *tight))

        book_text, summary_text = book.text(), summary.text()
        _verify_pair(pair_id, book_text, summary_text, gold_tokens)

        (root / "books" / f"{pair_id}.txt").write_text(book_text, encoding="utf-8")
        (root / "summaries" / f"{pair_id}.txt").write_text(summary_text, encoding="utf-8")
        _write_gold_sentences(root / "gold" / f"{pair_id}.sentences.tsv", pair_id, gold_sentences)
        _write_gold_tokens(root / "gold" / f"{pair_id}.tokens.tsv", pair_id, gold_tokens)
        manifest_lines.append(
            f"{pair_id}\tbooks/{pair_id}.txt\tsummaries/{pair_id}.txt\n"
        )

    manifest = root / "manifest.tsv"
    manifest.write_text("".join(manifest_lines), encoding="utf-8")
    return SyntheticCorpus(root=root, manifest=manifest, pair_ids=tuple(pair_ids))


def _add_background(builder: _DocBuilder, fill: list[str], num_words: int,
                    words_per_sentence: int) -> None:
    offset = builder.position  # stagger filler cycles between prefix and suffix
    words = [fill[(offset + i) % len(fill)] for i in range(num_words)]
    for chunk in _chunk(words, words_per_sentence):
        builder.add(chunk)


def _verify_pair(pair_id, book_text, summary_text, gold_tokens) -> None:
    """Re-tokenize the generated texts and check the gold map against them."""
    book = tokenize(book_text, doc_id=pair_id)
    summary = tokenize(summary_text, doc_id=pair_id)
    book_words = [t.lower for t in book.tokens]
    summary_words = [t.lower for t in summary.tokens]
    for spos, bpos in gold_tokens:
        if summary_words[spos] != book_words[bpos]:
            raise RuntimeError(
                f"{pair_id}: gold map mismatch at summary position {spos}"
            )


def _write_gold_sentences(path, pair_id, rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"#gold-sentences\t{pair_id}\n")
        for ell, block, start, end, tight_start, tight_end in rows:
            fh.write(f"{ell}\t{block}\t{start}\t{end}\t{tight_start}\t{tight_end}\n")


def _write_gold_tokens(path, pair_id, rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"#gold-tokens\t{pair_id}\n")
        for spos, bpos in rows:
            fh.write(f"{spos}\t{bpos}\n")


def load_gold_sentences(path) -> list[tuple[int, int, int, int, int, int]]:
    """Rows of (summary sentence, block, block start/end, tight start/end)."""
    rows = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        if not header.startswith("#gold-sentences"):
            raise ValueError(f"{path}: not a gold sentence file")
        for line in fh:
            rows.append(tuple(int(x) for x in line.split()))
    return rows


def load_gold_tokens(path) -> dict[int, int]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        if not header.startswith("#gold-tokens"):
            raise ValueError(f"{path}: not a gold token file")
        for line in fh:
            spos, bpos = line.split()
            out[int(spos)] = int(bpos)
    return out
