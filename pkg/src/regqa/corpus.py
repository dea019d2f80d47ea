"""Corpus and QA dataset loading.

A corpus is a flat JSON-lines file mixing two record types:

    {"type": "document", "id": "...", "title": "..."}
    {"type": "article", "id": "...", "doc_id": "...", "title": "...", "text": "..."}

QA datasets use one JSON object per line:

    {"qa_id": "...", "question": "...", "article_id": "...",
     "extractive_answer": "span1#span2", "abstractive_answer": "..."}

Extractive answers may contain several spans joined by "#"; every span must
occur verbatim in the text of the referenced article.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path


class CorpusFormatError(ValueError):
    """A corpus or QA file line could not be parsed."""


class CorpusIntegrityError(ValueError):
    """Corpus records violate identifier or linkage constraints."""


class QAValidationError(ValueError):
    """QA records reference missing articles or non-verbatim spans."""


SPAN_SEPARATOR = "#"


@dataclass(frozen=True)
class Token:
    surface: str
    char_start: int
    char_end: int

    def __post_init__(self) -> None:
        if self.char_start >= self.char_end:
            raise ValueError(f"empty token at offset {self.char_start}")


@dataclass
class Document:
    doc_id: str
    title: str
    article_ids: list[str] = field(default_factory=list)


@dataclass
class Article:
    article_id: str
    doc_id: str
    title: str
    text: str
    tokens: list[Token] = field(default_factory=list)


@dataclass
class QAPair:
    qa_id: str
    question: str
    article_id: str
    extractive_answer: str
    abstractive_answer: str

    @property
    def extractive_spans(self) -> list[str]:
        return self.extractive_answer.split(SPAN_SEPARATOR)


@dataclass
class Corpus:
    documents: dict[str, Document] = field(default_factory=dict)
    articles: dict[str, Article] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.articles)

    def article(self, article_id: str) -> Article:
        try:
            return self.articles[article_id]
        except KeyError:
            raise KeyError(f"unknown article: {article_id!r}") from None

    def document_for(self, article_id: str) -> Document:
        return self.documents[self.article(article_id).doc_id]


class Segmenter:
    """Deterministic tokenizer with offset bookkeeping.

    ``whitespace`` mode emits one token per non-whitespace run.  ``dictionary``
    mode additionally merges adjacent whitespace tokens into multi-word
    compounds by greedy longest match, left to right; merged surfaces join the
    parts with "_" while the recorded offsets span the original characters.
    """

    WHITESPACE = "whitespace"
    DICTIONARY = "dictionary"

    def __init__(self, mode: str = WHITESPACE, dictionary: set[str] | None = None):
        if mode not in (self.WHITESPACE, self.DICTIONARY):
            raise ValueError(f"unknown segmenter mode: {mode!r}")
        self.mode = mode
        self.dictionary = set(dictionary or ())
        # compounds keyed by word count so longest-match lookups are cheap
        self._by_length: dict[int, set[str]] = {}
        for compound in self.dictionary:
            n = len(compound.split())
            if n >= 2:
                self._by_length.setdefault(n, set()).add(compound)
        self._max_words = max(self._by_length, default=1)

    def segment(self, text: str) -> list[Token]:
        tokens = _whitespace_tokens(text)
        if self.mode == self.WHITESPACE or not self._by_length:
            return tokens
        merged: list[Token] = []
        i = 0
        while i < len(tokens):
            match_len = 0
            for n in range(min(self._max_words, len(tokens) - i), 1, -1):
                candidate = " ".join(t.surface for t in tokens[i : i + n])
                if candidate in self._by_length.get(n, ()):
                    match_len = n
                    break
            if match_len:
                parts = tokens[i : i + match_len]
                merged.append(
                    Token(
                        surface="_".join(t.surface for t in parts),
                        char_start=parts[0].char_start,
                        char_end=parts[-1].char_end,
                    )
                )
                i += match_len
            else:
                merged.append(tokens[i])
                i += 1
        return merged

    def surfaces(self, text: str) -> list[str]:
        return [t.surface for t in self.segment(text)]


def _whitespace_tokens(text: str) -> list[Token]:
    tokens: list[Token] = []
    start = None
    for i, ch in enumerate(text):
        if ch.isspace():
            if start is not None:
                tokens.append(Token(text[start:i], start, i))
                start = None
        elif start is None:
            start = i
    if start is not None:
        tokens.append(Token(text[start:], start, len(text)))
    return tokens


def _parse_jsonl(path: str | Path):
    """Yield (line_number, record) for every non-blank line of a JSONL file."""
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from exc
            if not isinstance(record, dict):
                raise CorpusFormatError(f"{path}:{lineno}: expected an object")
            yield lineno, record


def _require(record: dict, keys: tuple[str, ...], path, lineno: int) -> None:
    for key in keys:
        if not isinstance(record.get(key), str) or (key != "text" and not record[key]):
            raise CorpusFormatError(f"{path}:{lineno}: missing or invalid field {key!r}")


def load_corpus(path: str | Path) -> Corpus:
    """Load a corpus file, validating identifiers and document linkage.

    Raises CorpusFormatError for malformed lines (with line number) and
    CorpusIntegrityError for duplicate ids, dangling doc references, or
    documents that end up with no articles.
    """
    corpus = Corpus()
    pending: list[tuple[int, dict]] = []
    for lineno, record in _parse_jsonl(path):
        kind = record.get("type")
        if kind == "document":
            _require(record, ("id", "title"), path, lineno)
            if record["id"] in corpus.documents:
                raise CorpusIntegrityError(f"duplicate document id {record['id']!r} (line {lineno})")
            corpus.documents[record["id"]] = Document(doc_id=record["id"], title=record["title"])
        elif kind == "article":
            _require(record, ("id", "doc_id", "title", "text"), path, lineno)
            pending.append((lineno, record))
        else:
            raise CorpusFormatError(f"{path}:{lineno}: unknown record type {kind!r}")

    seg = Segmenter()
    for lineno, record in pending:
        article_id = record["id"]
        if article_id in corpus.articles or article_id in corpus.documents:
            raise CorpusIntegrityError(f"duplicate article id {article_id!r} (line {lineno})")
        doc = corpus.documents.get(record["doc_id"])
        if doc is None:
            raise CorpusIntegrityError(
                f"article {article_id!r} references unknown document {record['doc_id']!r} (line {lineno})"
            )
        corpus.articles[article_id] = Article(
            article_id=article_id,
            doc_id=record["doc_id"],
            title=record["title"],
            text=record["text"],
            tokens=seg.segment(record["text"]),
        )
        doc.article_ids.append(article_id)

    empty = [d.doc_id for d in corpus.documents.values() if not d.article_ids]
    if empty:
        raise CorpusIntegrityError(f"documents without articles: {', '.join(sorted(empty))}")
    return corpus


def load_qa_dataset(path: str | Path, corpus: Corpus) -> list[QAPair]:
    """Load QA pairs and validate each one against the corpus."""
    pairs: list[QAPair] = []
    problems: list[str] = []
    seen: set[str] = set()
    for lineno, record in _parse_jsonl(path):
        _require(
            record,
            ("qa_id", "question", "article_id", "extractive_answer", "abstractive_answer"),
            path,
            lineno,
        )
        pair = QAPair(
            qa_id=record["qa_id"],
            question=record["question"],
            article_id=record["article_id"],
            extractive_answer=record["extractive_answer"],
            abstractive_answer=record["abstractive_answer"],
        )
        if pair.qa_id in seen:
            problems.append(f"{pair.qa_id}: duplicate qa_id (line {lineno})")
            continue
        seen.add(pair.qa_id)
        article = corpus.articles.get(pair.article_id)
        if article is None:
            problems.append(f"{pair.qa_id}: unknown article {pair.article_id!r}")
            continue
        for span in pair.extractive_spans:
            if not span:
                problems.append(f"{pair.qa_id}: empty extractive span")
            elif span not in article.text:
                problems.append(f"{pair.qa_id}: span not found in article: {span!r}")
        pairs.append(pair)
    if problems:
        raise QAValidationError("invalid QA records: " + "; ".join(problems))
    return pairs


@dataclass
class DatasetSplit:
    train: list[QAPair]
    dev: list[QAPair]
    test: list[QAPair]


def split_dataset(pairs: list[QAPair], seed: int) -> DatasetSplit:
    """Shuffle deterministically and split 8:1:1 (floor/floor/remainder)."""
    if len(pairs) < 10:
        raise ValueError(f"need at least 10 pairs to split, got {len(pairs)}")
    shuffled = list(pairs)
    random.Random(seed).shuffle(shuffled)
    n = len(shuffled)
    n_train = n * 8 // 10
    n_dev = n // 10
    return DatasetSplit(
        train=shuffled[:n_train],
        dev=shuffled[n_train : n_train + n_dev],
        test=shuffled[n_train + n_dev :],
    )
