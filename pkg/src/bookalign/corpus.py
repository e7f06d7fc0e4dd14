"""Corpus ingestion: tokenization, sentence segmentation, pair admission, stats.

Everything here is deterministic and purely functional so documents can be
re-tokenized at any stage of the pipeline and compared byte for byte.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import CorpusError, PairRejected

# A token is either a word run (letters/digits, possibly joined by internal
# apostrophes or hyphens) or a single non-space symbol.  Every non-whitespace
# character of the input lands in exactly one token.
_TOKEN_RE = re.compile(r"\w+(?:['’-]\w+)*|[^\w\s]")

_TERMINALS = {".", "!", "?"}
_QUOTES = set("\"'“”‘’«»")


def _load_packaged_list(name: str) -> frozenset[str]:
    text = resources.files("bookalign.data").joinpath(name).read_text("utf-8")
    return frozenset(line.strip() for line in text.splitlines() if line.strip())


def default_stopwords() -> frozenset[str]:
    """The stopword list shipped with the package (lowercase, ~300 entries)."""
    return _load_packaged_list("stopwords.txt")


def default_abbreviations() -> frozenset[str]:
    """Abbreviations (without the trailing dot) that block a sentence split."""
    return _load_packaged_list("abbreviations.txt")


def load_wordlist(path) -> frozenset[str]:
    """Load a plain-text word list, one entry per line, lowercased."""
    try:
        text = Path(path).read_text("utf-8")
    except UnicodeDecodeError as exc:
        raise CorpusError(f"undecodable word list {path}: {exc}") from exc
    return frozenset(line.strip().lower() for line in text.splitlines() if line.strip())


@dataclass(frozen=True)
class Token:
    surface: str
    lower: str
    is_punct: bool
    is_stopword: bool
    sentence_index: int
    doc_position: int
    is_sentence_initial: bool
    is_capitalized: bool
    offset: int  # character offset of the surface in the raw text

    @property
    def is_content(self) -> bool:
        return not self.is_punct and not self.is_stopword


@dataclass(frozen=True)
class TokenizedDocument:
    id: str
    tokens: tuple[Token, ...]
    sentences: tuple[tuple[int, int], ...]  # (start, end) token ranges, end exclusive
    content_word_count: int

    @property
    def num_sentences(self) -> int:
        return len(self.sentences)

    def sentence_tokens(self, index: int) -> tuple[Token, ...]:
        start, end = self.sentences[index]
        return self.tokens[start:end]


@dataclass(frozen=True)
class BookSummaryPair:
    pair_id: str
    book: TokenizedDocument
    summary: TokenizedDocument
    ratio: float  # summary content words / book content words


def _is_punct(surface: str) -> bool:
    return not any(ch.isalnum() for ch in surface)


def tokenize(
    raw_text: str,
    stopword_list: frozenset[str] | None = None,
    abbreviations: frozenset[str] | None = None,
    doc_id: str = "",
) -> TokenizedDocument:
    """Tokenize and sentence-segment ``raw_text``.

    Sentences end at ``. ! ?`` followed by whitespace and a capitalized or
    quote token; closing quotes attached to the terminal stay with the
    sentence.  A ``.`` preceded by a listed abbreviation or a single letter
    (an initial) does not end a sentence.  Empty input yields an empty
    document.
    """
    if stopword_list is None:
        stopword_list = default_stopwords()
    if abbreviations is None:
        abbreviations = default_abbreviations()

    raw = [(m.group(), m.start()) for m in _TOKEN_RE.finditer(raw_text)]
    n = len(raw)

    # break_after[k] is True when a new sentence starts at token k + 1
    break_after = [False] * n
    k = 0
    while k < n:
        surface, offset = raw[k]
        if surface not in _TERMINALS:
            k += 1
            continue
        # absorb a run of adjacent terminals ("...", "?!")
        end = k
        while (
            end + 1 < n
            and raw[end + 1][0] in _TERMINALS
            and raw[end + 1][1] == raw[end][1] + len(raw[end][0])
        ):
            end += 1
        # closing quotes glued to the terminal belong to this sentence
        while (
            end + 1 < n
            and raw[end + 1][0] in _QUOTES
            and raw[end + 1][1] == raw[end][1] + len(raw[end][0])
        ):
            end += 1
        k_last_terminal = end
        while raw[k_last_terminal][0] in _QUOTES:
            k_last_terminal -= 1

        guard = False
        if raw[k_last_terminal][0] == "." and k_last_terminal > 0:
            prev, _ = raw[k_last_terminal - 1]
            if not _is_punct(prev):
                low = prev.lower()
                if low in abbreviations or (len(prev) == 1 and prev.isalpha()):
                    guard = True

        if not guard and end + 1 < n:
            nxt_surface, nxt_offset = raw[end + 1]
            gap = nxt_offset > raw[end][1] + len(raw[end][0])
            starts_upper = nxt_surface[0].isupper()
            if gap and (starts_upper or nxt_surface in _QUOTES):
                break_after[end] = True
        k = end + 1

    tokens: list[Token] = []
    sentences: list[tuple[int, int]] = []
    sent_index = 0
    sent_start = 0
    for pos, (surface, offset) in enumerate(raw):
        lower = surface.lower()
        punct = _is_punct(surface)
        tokens.append(
            Token(
                surface=surface,
                lower=lower,
                is_punct=punct,
                is_stopword=(not punct and lower in stopword_list),
                sentence_index=sent_index,
                doc_position=pos,
                is_sentence_initial=(pos == sent_start),
                is_capitalized=surface[0].isupper(),
                offset=offset,
            )
        )
        if break_after[pos]:
            sentences.append((sent_start, pos + 1))
            sent_index += 1
            sent_start = pos + 1
    if sent_start < n:
        sentences.append((sent_start, n))

    content = sum(1 for t in tokens if t.is_content)
    return TokenizedDocument(
        id=doc_id,
        tokens=tuple(tokens),
        sentences=tuple(sentences),
        content_word_count=content,
    )


def admit_pair(
    book: TokenizedDocument,
    summary: TokenizedDocument,
    min_book_words: int = 10_000,
    min_summary_words: int = 100,
    pair_id: str | None = None,
) -> BookSummaryPair:
    """Admit a pair when both content-word thresholds are met, else raise.

    Thresholds count tokens that are neither punctuation nor stopwords.
    """
    if book.content_word_count < min_book_words:
        raise PairRejected(
            "book_too_short",
            f"book has {book.content_word_count} content words, "
            f"needs at least {min_book_words}",
        )
    if summary.content_word_count < min_summary_words:
        raise PairRejected(
            "summary_too_short",
            f"summary has {summary.content_word_count} content words, "
            f"needs at least {min_summary_words}",
        )
    return BookSummaryPair(
        pair_id=pair_id if pair_id is not None else book.id,
        book=book,
        summary=summary,
        ratio=summary.content_word_count / book.content_word_count,
    )


def corpus_ratio_stats(pairs) -> tuple[float, float, float]:
    """Mean and nearest-rank [5, 95] percentiles of summary/book ratios."""
    ratios = sorted(p.ratio for p in pairs)
    if not ratios:
        raise CorpusError("corpus_ratio_stats requires at least one pair")

    def nearest_rank(p: float) -> float:
        idx = max(math.ceil(p * len(ratios)), 1) - 1
        return ratios[idx]

    mean = sum(ratios) / len(ratios)
    return mean, nearest_rank(0.05), nearest_rank(0.95)


# ---------------------------------------------------------------------------
# File formats


def read_text_file(path) -> str:
    try:
        return Path(path).read_text("utf-8")
    except UnicodeDecodeError as exc:
        raise CorpusError(f"undecodable input {path}: {exc}") from exc
    except OSError as exc:
        raise CorpusError(f"cannot read {path}: {exc}") from exc


def parse_manifest(path) -> list[tuple[str, Path, Path]]:
    """Parse a manifest: one pair per line, ``id<TAB>book_path<TAB>summary_path``.

    Relative paths are resolved against the manifest's directory.
    """
    base = Path(path).parent
    records = []
    for lineno, line in enumerate(read_text_file(path).splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise CorpusError(f"{path}:{lineno}: expected 3 tab-separated fields")
        pair_id, book_rel, summary_rel = parts
        records.append((pair_id, base / book_rel, base / summary_rel))
    if len({r[0] for r in records}) != len(records):
        raise CorpusError(f"{path}: duplicate pair ids")
    return records


def _flags(token: Token) -> str:
    flags = ""
    if token.is_punct:
        flags += "P"
    if token.is_stopword:
        flags += "S"
    if token.is_sentence_initial:
        flags += "I"
    if token.is_capitalized:
        flags += "C"
    return flags or "-"


def write_document(doc: TokenizedDocument, path) -> None:
    """Write one token per line: position, surface, sentence index, offset, flags."""
    lines = [f"#document\t{doc.id}"]
    for t in doc.tokens:
        lines.append(
            f"{t.doc_position}\t{t.surface}\t{t.sentence_index}\t{t.offset}\t{_flags(t)}"
        )
    Path(path).write_text("\n".join(lines) + "\n", "utf-8")


def read_document(path) -> TokenizedDocument:
    lines = read_text_file(path).splitlines()
    if not lines or not lines[0].startswith("#document\t"):
        raise CorpusError(f"{path}: missing #document header")
    doc_id = lines[0].split("\t", 1)[1]
    tokens: list[Token] = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != 5:
            raise CorpusError(f"{path}:{lineno}: expected 5 tab-separated fields")
        pos, surface, sent, offset, flags = parts
        tokens.append(
            Token(
                surface=surface,
                lower=surface.lower(),
                is_punct="P" in flags,
                is_stopword="S" in flags,
                sentence_index=int(sent),
                doc_position=int(pos),
                is_sentence_initial="I" in flags,
                is_capitalized="C" in flags,
                offset=int(offset),
            )
        )
    sentences: list[tuple[int, int]] = []
    start = 0
    for i, t in enumerate(tokens):
        if t.doc_position != i:
            raise CorpusError(f"{path}: token positions are not consecutive")
        if i + 1 == len(tokens) or tokens[i + 1].sentence_index != t.sentence_index:
            sentences.append((start, i + 1))
            start = i + 1
    content = sum(1 for t in tokens if t.is_content)
    return TokenizedDocument(
        id=doc_id,
        tokens=tuple(tokens),
        sentences=tuple(sentences),
        content_word_count=content,
    )
