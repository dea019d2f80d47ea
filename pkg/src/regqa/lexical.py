"""Inverted index with TF-IDF and BM25 scoring.

Scores follow the usual definitions:

* TF-IDF: sum over distinct query terms of (n(w,c) / n(c)) * ln(|C| / (1 + df(w))).
  The smoothed idf can go negative for very common terms; that is kept as-is.
* BM25 (Okapi): sum over query term occurrences of
  idf(w) * f * (k + 1) / (f + k * (1 - b + b * len(c) / avg_len)) with the
  non-negative Robertson idf ln(1 + (N - df + 0.5) / (df + 0.5)).

The on-disk index format is JSON lines:

    {"type": "header", "version": 1, "doc_count": N, "avg_len": <float>}
    {"type": "doc", "id": "...", "len": <int>}            # one per article
    {"type": "postings", "term": "...", "entries": [["article_id", count], ...]}

``avg_len`` is persisted and reused verbatim on load so that reloaded indexes
reproduce scores bit for bit.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from regqa.corpus import Corpus, CorpusFormatError, Segmenter

TFIDF = "tfidf"
BM25 = "bm25"
LEXICAL_METHODS = (TFIDF, BM25)


class UnknownArticleError(KeyError):
    pass


@dataclass(frozen=True)
class Bm25Params:
    k: float = 1.2
    b: float = 0.75

    def __post_init__(self) -> None:
        if self.k <= 0:
            raise ValueError(f"k must be positive, got {self.k}")
        if not 0.0 <= self.b <= 1.0:
            raise ValueError(f"b must be in [0, 1], got {self.b}")


@dataclass
class InvertedIndex:
    postings: dict[str, list[tuple[str, int]]]
    doc_len: dict[str, int]
    doc_count: int
    avg_len: float
    df: dict[str, int] = field(default_factory=dict)
    # per-article term counts, derived from postings; speeds up scoring
    _term_counts: dict[str, Counter] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        if not self.df:
            self.df = {term: len(entries) for term, entries in self.postings.items()}
        if not self._term_counts:
            self._term_counts = {aid: Counter() for aid in self.doc_len}
            for term, entries in self.postings.items():
                for article_id, count in entries:
                    self._term_counts[article_id][term] = count

    def term_count(self, term: str, article_id: str) -> int:
        if article_id not in self.doc_len:
            raise UnknownArticleError(article_id)
        return self._term_counts[article_id].get(term, 0)

    def article_ids(self) -> list[str]:
        return list(self.doc_len)


def build_index(corpus: Corpus, seg: Segmenter) -> InvertedIndex:
    if not corpus.articles:
        raise ValueError("cannot index an empty corpus")
    postings: dict[str, list[tuple[str, int]]] = {}
    doc_len: dict[str, int] = {}
    for article in corpus.articles.values():
        terms = seg.surfaces(article.text)
        doc_len[article.article_id] = len(terms)
        for term, count in Counter(terms).items():
            postings.setdefault(term, []).append((article.article_id, count))
    avg_len = sum(doc_len.values()) / len(doc_len)
    return InvertedIndex(postings=postings, doc_len=doc_len, doc_count=len(doc_len), avg_len=avg_len)


def _distinct(terms: list[str]) -> list[str]:
    return list(dict.fromkeys(terms))


def tfidf_score(question_terms: list[str], article_id: str, index: InvertedIndex) -> float:
    """Summed smoothed TF-IDF of the distinct query terms for one article."""
    if article_id not in index.doc_len:
        raise UnknownArticleError(article_id)
    n_c = index.doc_len[article_id]
    if n_c == 0:
        return 0.0
    score = 0.0
    for term in _distinct(question_terms):
        n_wc = index.term_count(term, article_id)
        if n_wc == 0:
            continue
        idf = math.log(index.doc_count / (1 + index.df.get(term, 0)))
        score += (n_wc / n_c) * idf
    return score


def bm25_score(
    question_terms: list[str],
    article_id: str,
    index: InvertedIndex,
    params: Bm25Params = Bm25Params(),
) -> float:
    """Okapi BM25 score; duplicate query terms contribute once per occurrence."""
    if article_id not in index.doc_len:
        raise UnknownArticleError(article_id)
    length_norm = params.k * (1.0 - params.b + params.b * index.doc_len[article_id] / index.avg_len)
    score = 0.0
    for term in question_terms:
        f = index.term_count(term, article_id)
        if f == 0:
            continue
        df = index.df[term]
        idf = math.log(1.0 + (index.doc_count - df + 0.5) / (df + 0.5))
        score += idf * f * (params.k + 1.0) / (f + length_norm)
    return score


def score_all(
    question_terms: list[str],
    index: InvertedIndex,
    method: str,
    params: Bm25Params = Bm25Params(),
) -> dict[str, float]:
    """Score every indexed article; returns {article_id: score} in index order."""
    if method == TFIDF:
        return {aid: tfidf_score(question_terms, aid, index) for aid in index.doc_len}
    if method == BM25:
        return {aid: bm25_score(question_terms, aid, index, params) for aid in index.doc_len}
    raise ValueError(f"unknown lexical method {method!r}, expected one of {LEXICAL_METHODS}")


def rank_lexical(
    question_terms: list[str],
    index: InvertedIndex,
    method: str = BM25,
    top_k: int = 10,
    params: Bm25Params = Bm25Params(),
) -> list[tuple[str, float]]:
    """Top-k articles by lexical score, ties broken by ascending article id."""
    if top_k < 1:
        raise ValueError(f"top_k must be >= 1, got {top_k}")
    scores = score_all(question_terms, index, method, params)
    ranked = sorted(scores.items(), key=lambda item: (-item[1], item[0]))
    return ranked[:top_k]


def save_index(index: InvertedIndex, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        header = {
            "type": "header",
            "version": 1,
            "doc_count": index.doc_count,
            "avg_len": index.avg_len,
        }
        fh.write(json.dumps(header, ensure_ascii=False) + "\n")
        for article_id, length in index.doc_len.items():
            fh.write(json.dumps({"type": "doc", "id": article_id, "len": length}, ensure_ascii=False) + "\n")
        for term, entries in index.postings.items():
            record = {"type": "postings", "term": term, "entries": [[aid, c] for aid, c in entries]}
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def load_index(path: str | Path) -> InvertedIndex:
    header: dict | None = None
    doc_len: dict[str, int] = {}
    postings: dict[str, list[tuple[str, int]]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from exc
            kind = record.get("type")
            if kind == "header":
                header = record
            elif kind == "doc":
                doc_len[record["id"]] = int(record["len"])
            elif kind == "postings":
                postings[record["term"]] = [(aid, int(c)) for aid, c in record["entries"]]
            else:
                raise CorpusFormatError(f"{path}:{lineno}: unknown record type {kind!r}")
    if header is None:
        raise CorpusFormatError(f"{path}: missing header record")
    if len(doc_len) != header["doc_count"]:
        raise CorpusFormatError(
            f"{path}: header claims {header['doc_count']} docs, found {len(doc_len)}"
        )
    return InvertedIndex(
        postings=postings,
        doc_len=doc_len,
        doc_count=int(header["doc_count"]),
        avg_len=float(header["avg_len"]),
    )
