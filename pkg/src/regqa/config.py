"""Pipeline configuration: INI-style file with environment overrides.

Example::

    [corpus]
    path = data/sample/corpus.jsonl
    qa_path = data/sample/qa.jsonl
    split_seed = 13

    [segmenter]
    mode = whitespace            ; or dictionary
    dictionary_path =            ; one compound per line, used by dictionary mode

    [embeddings]
    store = hashing-stub         ; or file:<path> with per-article vectors
    query = hashing-stub         ; or file:<path> or http://host:port
    dim = 64

    [reader]
    labeler = overlap-stub       ; or all-outside or http://host:port
    max_seq_length = 512
    stride = 128
    special_overhead = 3
    final_lambda = 0.3

    [generator]
    endpoint =                   ; empty -> offline extractive fallback
    template = standard          ; or sentinel

    [fusion]
    mode = weight                ; weight | multiplication | lexical-only | dense-only
    alpha = 0.1
    lexical_method = bm25        ; bm25 | tfidf
    top_k = 10
    bm25_k = 1.2
    bm25_b = 0.75
    normalize_lexical = false

    [service]
    bind = 127.0.0.1:8000

Any value can be overridden through the environment as REGQA_<SECTION>_<KEY>
(e.g. ``REGQA_FUSION_ALPHA=0.3``).
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field
from pathlib import Path

from regqa.fusion import FusionConfig
from regqa.lexical import Bm25Params
from regqa.reader import ReaderSettings

ENV_PREFIX = "REGQA"

HASHING_STUB = "hashing-stub"
OVERLAP_STUB = "overlap-stub"
ALL_OUTSIDE = "all-outside"


@dataclass
class PipelineConfig:
    corpus_path: Path
    qa_path: Path | None = None
    split_seed: int = 13
    segmenter_mode: str = "whitespace"
    dictionary_path: Path | None = None
    embedding_store: str = HASHING_STUB
    embedding_query: str = HASHING_STUB
    embedding_dim: int = 64
    labeler: str = OVERLAP_STUB
    reader: ReaderSettings = field(default_factory=ReaderSettings)
    generator_endpoint: str | None = None
    generator_template: str = "standard"
    fusion: FusionConfig = field(default_factory=FusionConfig)
    bind: str = "127.0.0.1:8000"

    def __post_init__(self) -> None:
        self.corpus_path = Path(self.corpus_path)
        if self.qa_path is not None:
            self.qa_path = Path(self.qa_path)
        if self.dictionary_path is not None:
            self.dictionary_path = Path(self.dictionary_path)

    def validate_paths(self) -> None:
        missing = [
            str(p)
            for p in (self.corpus_path, self.qa_path, self.dictionary_path)
            if p is not None and not p.exists()
        ]
        for source in (self.embedding_store, self.embedding_query):
            if source.startswith("file:") and not Path(source[5:]).exists():
                missing.append(source[5:])
        if missing:
            raise FileNotFoundError(f"configured paths do not exist: {', '.join(missing)}")

    @property
    def host_port(self) -> tuple[str, int]:
        host, _, port = self.bind.rpartition(":")
        return host or "127.0.0.1", int(port)


def _get(parser: configparser.ConfigParser, section: str, key: str, default: str = "") -> str:
    env = os.environ.get(f"{ENV_PREFIX}_{section.upper()}_{key.upper()}")
    if env is not None:
        return env
    return parser.get(section, key, fallback=default).strip()


def _bool(raw: str, default: bool = False) -> bool:
    if not raw:
        return default
    return raw.lower() in ("1", "true", "yes", "on")


def _resolve(base: Path, raw: str) -> Path:
    p = Path(raw)
    return p if p.is_absolute() else base / p


def _resolve_source(base: Path, source: str) -> str:
    # relative file: sources are taken relative to the config file
    if source.startswith("file:"):
        return "file:" + str(_resolve(base, source[5:]))
    return source


def load_config(path: str | Path) -> PipelineConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    read = parser.read(path, encoding="utf-8")
    if not read:
        raise FileNotFoundError(f"config file not found: {path}")
    base = Path(path).resolve().parent

    corpus_path = _get(parser, "corpus", "path")
    if not corpus_path:
        raise ValueError(f"{path}: [corpus] path is required")
    qa_path = _get(parser, "corpus", "qa_path") or None
    dictionary_path = _get(parser, "segmenter", "dictionary_path") or None

    reader = ReaderSettings(
        max_seq_length=int(_get(parser, "reader", "max_seq_length", "512")),
        stride=int(_get(parser, "reader", "stride", "128")),
        special_overhead=int(_get(parser, "reader", "special_overhead", "3")),
        final_lambda=float(_get(parser, "reader", "final_lambda", "0.3")),
    )
    fusion = FusionConfig(
        mode=_get(parser, "fusion", "mode", "weight"),
        alpha=float(_get(parser, "fusion", "alpha", "0.1")),
        lexical_method=_get(parser, "fusion", "lexical_method", "bm25"),
        top_k=int(_get(parser, "fusion", "top_k", "10")),
        bm25=Bm25Params(
            k=float(_get(parser, "fusion", "bm25_k", "1.2")),
            b=float(_get(parser, "fusion", "bm25_b", "0.75")),
        ),
        normalize_lexical=_bool(_get(parser, "fusion", "normalize_lexical")),
    )
    cfg = PipelineConfig(
        corpus_path=_resolve(base, corpus_path),
        qa_path=_resolve(base, qa_path) if qa_path else None,
        split_seed=int(_get(parser, "corpus", "split_seed", "13")),
        segmenter_mode=_get(parser, "segmenter", "mode", "whitespace"),
        dictionary_path=_resolve(base, dictionary_path) if dictionary_path else None,
        embedding_store=_resolve_source(base, _get(parser, "embeddings", "store", HASHING_STUB)),
        embedding_query=_resolve_source(base, _get(parser, "embeddings", "query", HASHING_STUB)),
        embedding_dim=int(_get(parser, "embeddings", "dim", "64")),
        labeler=_get(parser, "reader", "labeler", OVERLAP_STUB),
        reader=reader,
        generator_endpoint=_get(parser, "generator", "endpoint") or None,
        generator_template=_get(parser, "generator", "template", "standard"),
        fusion=fusion,
        bind=_get(parser, "service", "bind", "127.0.0.1:8000"),
    )
    cfg.validate_paths()
    return cfg
