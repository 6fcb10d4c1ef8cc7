"""Per-message text analysis: term vectors, TF-IDF, keywords, summaries.

Every function here is a deterministic pure function; the only mutable
piece of state is CorpusStats, which the caller updates once per new
document via record_document.
"""
from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable

from .errors import EmptyCorpusError
from .message import ParsedMessage

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)
_SENTENCE_END = ".!?"


@dataclass
class CorpusStats:
    """Document count and per-term document frequencies."""

    doc_count: int = 0
    df: dict[str, int] = field(default_factory=dict)


@dataclass
class MessageDigest:
    """What the system keeps of a message: keywords, summary, term stats."""

    message_id: str
    keywords: list[str]
    summary: str
    vector: dict[str, int]
    weighted: dict[str, float]


def tokenize(text: str) -> list[str]:
    """Lowercased runs of letters/digits, in order; 1-char tokens dropped."""
    return [t for t in (m.group(0).lower() for m in _TOKEN_RE.finditer(text)) if len(t) > 1]


def term_vector(tokens: Iterable[str], stopwords: set[str]) -> dict[str, int]:
    return {t: c for t, c in Counter(tokens).items() if t not in stopwords}


def record_document(stats: CorpusStats, vector: dict[str, int]) -> CorpusStats:
    """Count one finished document into the corpus statistics."""
    stats.doc_count += 1
    for term in vector:
        stats.df[term] = stats.df.get(term, 0) + 1
    return stats


def tfidf_weights(vector: dict[str, int], stats: CorpusStats) -> dict[str, float]:
    """weight(t) = count(t) * (ln((1+N)/(1+df(t))) + 1), df=0 when unseen."""
    if stats.doc_count < 1:
        raise EmptyCorpusError("empty corpus")
    n = stats.doc_count
    return {
        t: c * (math.log((1 + n) / (1 + stats.df.get(t, 0))) + 1.0)
        for t, c in vector.items()
    }


def top_keywords(weighted: dict[str, float], k: int) -> list[str]:
    """k highest-weight terms; ties break lexicographically."""
    return sorted(weighted, key=lambda t: (-weighted[t], t))[:k]


def split_sentences(text: str) -> list[str]:
    """Sentences end at '.', '!' or '?' followed by whitespace or EOF."""
    out = []
    start = 0
    for i, ch in enumerate(text):
        if ch in _SENTENCE_END and (i + 1 == len(text) or text[i + 1].isspace()):
            sentence = text[start : i + 1].strip()
            if sentence:
                out.append(sentence)
            start = i + 1
    tail = text[start:].strip()
    if tail:
        out.append(tail)
    return out


def summarize(text: str, weighted: dict[str, float], n: int) -> str:
    """Top-n sentences by normalized token weight, in document order."""
    sentences = split_sentences(text)
    if not sentences:
        return ""

    def score(sentence: str) -> float:
        tokens = tokenize(sentence)
        return sum(weighted.get(t, 0.0) for t in tokens) / (1 + len(tokens))

    ranked = sorted(range(len(sentences)), key=lambda i: -score(sentences[i]))[:n]
    return " ".join(sentences[i] for i in sorted(ranked))


def cosine_similarity(a: dict[str, float], b: dict[str, float]) -> float:
    """Cosine of two sparse non-negative vectors; 0 if either is zero."""
    if not a or not b:
        return 0.0
    if len(b) < len(a):
        a, b = b, a
    dot = sum(w * b[t] for t, w in a.items() if t in b)
    na = math.sqrt(sum(w * w for w in a.values()))
    nb = math.sqrt(sum(w * w for w in b.values()))
    if na == 0.0 or nb == 0.0:
        return 0.0
    # float rounding can push mathematically-1.0 a hair past 1
    return min(1.0, max(0.0, dot / (na * nb)))


def l2_normalize(weights: dict[str, float]) -> dict[str, float]:
    norm = math.sqrt(sum(w * w for w in weights.values()))
    if norm == 0.0:
        return {}
    return {t: w / norm for t, w in weights.items()}


def sum_vectors(vectors: Iterable[dict[str, float]]) -> dict[str, float]:
    total: dict[str, float] = {}
    for vec in vectors:
        for t, w in vec.items():
            total[t] = total.get(t, 0.0) + w
    return total


def digest_text(parsed: ParsedMessage) -> str:
    """Classifier input text: subject once, then the body."""
    if parsed.subject and parsed.body_text:
        return parsed.subject + "\n" + parsed.body_text
    return parsed.subject or parsed.body_text


def build_digest(
    parsed: ParsedMessage,
    stats: CorpusStats,
    stopwords: set[str],
    keyword_count: int = 10,
    summary_sentences: int = 3,
) -> MessageDigest:
    """Digest one new message, updating corpus statistics in place."""
    text = digest_text(parsed)
    vector = term_vector(tokenize(text), stopwords)
    record_document(stats, vector)
    weighted = tfidf_weights(vector, stats)
    return MessageDigest(
        message_id=parsed.message_id,
        keywords=top_keywords(weighted, keyword_count),
        summary=summarize(text, weighted, summary_sentences),
        vector=vector,
        weighted=weighted,
    )


def load_stopwords(paths: Iterable[str | Path] | None = None) -> set[str]:
    """Stopword files: one lowercase term per line, '#' comments ignored.

    With no paths given, the bundled English + Romanian lists are used.
    """
    words: set[str] = set()
    if paths is None:
        data = resources.files("mailgraph") / "data"
        texts = [
            (data / "stopwords_en.txt").read_text(encoding="utf-8"),
            (data / "stopwords_ro.txt").read_text(encoding="utf-8"),
        ]
    else:
        texts = [Path(p).read_text(encoding="utf-8") for p in paths]
    for text in texts:
        for line in text.splitlines():
            line = line.strip()
            if line and not line.startswith("#"):
                words.add(line)
    return words
