"""Shared fixtures and small document builders used across the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from bookalign.corpus import TokenizedDocument, tokenize

# A document built with these lists keeps every word as a content word,
# which makes span emission arithmetic easy to check by hand.
NO_STOPWORDS: frozenset[str] = frozenset()
NO_ABBREVIATIONS: frozenset[str] = frozenset()


def plain_doc(text: str, doc_id: str = "doc") -> TokenizedDocument:
    """Tokenize with empty stopword/abbreviation lists."""
    return tokenize(text, stopword_list=NO_STOPWORDS,
                    abbreviations=NO_ABBREVIATIONS, doc_id=doc_id)


def sentences_doc(sentences: list[list[str]], doc_id: str = "doc") -> TokenizedDocument:
    """Build a document with one sentence per word list, all words content."""
    text = " ".join(" ".join(words).capitalize() + "." for words in sentences)
    return plain_doc(text, doc_id=doc_id)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)
