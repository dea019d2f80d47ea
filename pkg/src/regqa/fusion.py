"""Hybrid retrieval: combine lexical and dense scores and rank top_k.

Two ensembles are supported, plus single-signal passthroughs:

* weight:          fused = lexical * alpha + (1 - alpha) * dense
* multiplication:  fused = lexical * dense
* lexical-only / dense-only

Only the dense side is min-max normalized by default; lexical scores enter the
ensemble raw.  ``normalize_lexical`` turns on lexical normalization too.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from regqa.corpus import Segmenter
from regqa.dense import EmbeddingStore, dense_scores, min_max_normalize
from regqa.lexical import BM25, LEXICAL_METHODS, Bm25Params, InvertedIndex, score_all

WEIGHT = "weight"
MULTIPLICATION = "multiplication"
LEXICAL_ONLY = "lexical-only"
DENSE_ONLY = "dense-only"
FUSION_MODES = (WEIGHT, MULTIPLICATION, LEXICAL_ONLY, DENSE_ONLY)


@dataclass(frozen=True)
class FusionConfig:
    mode: str = WEIGHT
    alpha: float = 0.1
    lexical_method: str = BM25
    top_k: int = 10
    bm25: Bm25Params = field(default_factory=Bm25Params)
    normalize_lexical: bool = False

    def __post_init__(self) -> None:
        if self.mode not in FUSION_MODES:
            raise ValueError(f"unknown fusion mode {self.mode!r}, expected one of {FUSION_MODES}")
        if self.lexical_method not in LEXICAL_METHODS:
            raise ValueError(f"unknown lexical method {self.lexical_method!r}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.top_k < 1:
            raise ValueError(f"top_k must be >= 1, got {self.top_k}")

    def with_overrides(self, **kwargs) -> "FusionConfig":
        kwargs = {k: v for k, v in kwargs.items() if v is not None}
        return replace(self, **kwargs) if kwargs else self


@dataclass(frozen=True)
class RankedContext:
    article_id: str
    fused: float
    lexical: float
    dense: float


@dataclass
class RetrievalResult:
    ranked: list[RankedContext]

    def article_ids(self) -> list[str]:
        return [entry.article_id for entry in self.ranked]


def fuse_scores(lex: float, dense_norm: float, cfg: FusionConfig) -> float:
    if cfg.mode == WEIGHT:
        return lex * cfg.alpha + (1.0 - cfg.alpha) * dense_norm
    if cfg.mode == MULTIPLICATION:
        return lex * dense_norm
    if cfg.mode == LEXICAL_ONLY:
        return lex
    return dense_norm


def query_context(
    question: str,
    index: InvertedIndex,
    store: EmbeddingStore,
    embedder,
    seg: Segmenter,
    cfg: FusionConfig,
) -> RetrievalResult:
    """Score every article lexically and densely, fuse, sort, truncate to top_k.

    The index and the store must cover the same articles.
    """
    index_ids = set(index.doc_len)
    store_ids = set(store.vectors)
    if index_ids != store_ids:
        diff = sorted(index_ids.symmetric_difference(store_ids))[:5]
        raise ValueError(f"index and embedding store cover different articles (e.g. {diff})")

    question_terms = seg.surfaces(question)
    lex = score_all(question_terms, index, cfg.lexical_method, cfg.bm25)
    if cfg.normalize_lexical:
        lex = dict(min_max_normalize(list(lex.items())))
    dense = dense_scores(question, store, embedder)

    entries = [
        RankedContext(
            article_id=aid,
            fused=fuse_scores(lex[aid], dense[aid], cfg),
            lexical=lex[aid],
            dense=dense[aid],
        )
        for aid in index.doc_len
    ]
    entries.sort(key=lambda e: (-e.fused, e.article_id))
    return RetrievalResult(ranked=entries[: cfg.top_k])
