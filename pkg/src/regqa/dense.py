"""Embedding store, query embedders, and cosine-similarity ranking.

Embedding files are JSON lines, one object per article:

    {"id": "article-1", "vector": [0.12, -0.4, ...]}

All vectors in a store share one dimension.  Dense scores are min-max
normalized onto [0, 1] over the whole corpus before any truncation, so fused
scores stay comparable across different top_k settings.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import requests

from regqa.corpus import Corpus, CorpusFormatError, Segmenter


class EmbedderError(RuntimeError):
    """Query embedding could not be obtained."""


@dataclass
class EmbeddingStore:
    dim: int
    vectors: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError(f"dim must be positive, got {self.dim}")
        for article_id, vec in self.vectors.items():
            if vec.shape != (self.dim,):
                raise ValueError(f"vector for {article_id!r} has dim {vec.shape}, expected ({self.dim},)")

    def missing_articles(self, corpus: Corpus) -> list[str]:
        return [aid for aid in corpus.articles if aid not in self.vectors]


def load_embeddings(path: str | Path, expected_dim: int | None = None) -> EmbeddingStore:
    """Load an embedding file; every record must match the expected dimension.

    With ``expected_dim=None`` the first record fixes the dimension.
    """
    vectors: dict[str, np.ndarray] = {}
    dim = expected_dim
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from exc
            article_id = record.get("id")
            vector = record.get("vector")
            if not isinstance(article_id, str) or not isinstance(vector, list):
                raise CorpusFormatError(f"{path}:{lineno}: expected fields 'id' and 'vector'")
            if dim is None:
                dim = len(vector)
            if len(vector) != dim:
                raise ValueError(
                    f"embedding for {article_id!r} has dim {len(vector)}, expected {dim}"
                )
            vectors[article_id] = np.asarray(vector, dtype=np.float64)
    if not vectors:
        raise ValueError(f"{path}: no embedding records")
    return EmbeddingStore(dim=dim, vectors=vectors)


def save_embeddings(store: EmbeddingStore, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for article_id, vec in store.vectors.items():
            fh.write(json.dumps({"id": article_id, "vector": vec.tolist()}, ensure_ascii=False) + "\n")


class HashingStubEmbedder:
    """Deterministic bag-of-token-hashes vector; for tests and offline demos.

    Each token is hashed (md5, stable across processes) into one of ``dim``
    buckets and counted.  Not semantically meaningful; it only guarantees that
    identical texts map to identical vectors and token overlap raises cosine.
    """

    mode = "hashing-stub"

    def __init__(self, dim: int = 64, seg: Segmenter | None = None):
        if dim < 1:
            raise ValueError(f"dim must be positive, got {dim}")
        self.dim = dim
        self.seg = seg or Segmenter()

    def embed(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dim, dtype=np.float64)
        for surface in self.seg.surfaces(text):
            digest = hashlib.md5(surface.encode("utf-8")).digest()
            bucket = int.from_bytes(digest[:8], "big") % self.dim
            vec[bucket] += 1.0
        if not vec.any():
            # keep cosine defined for all-whitespace or empty queries
            vec[0] = 1.0
        return vec


class FileLookupEmbedder:
    """Serves query vectors from a JSON-lines file: {"text": ..., "vector": [...]}."""

    mode = "file-lookup"

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.vectors: dict[str, np.ndarray] = {}
        dim = None
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                record = json.loads(line)
                vector = np.asarray(record["vector"], dtype=np.float64)
                if dim is None:
                    dim = vector.shape[0]
                elif vector.shape[0] != dim:
                    raise ValueError(f"{path}:{lineno}: inconsistent vector dimension")
                self.vectors[record["text"]] = vector
        if dim is None:
            raise ValueError(f"{path}: no query vectors")
        self.dim = dim

    def embed(self, text: str) -> np.ndarray:
        try:
            return self.vectors[text]
        except KeyError:
            raise EmbedderError(f"no stored vector for query {text!r}") from None


class HttpEmbedder:
    """Remote embedding service speaking POST /embed {"text"} -> {"vector"}."""

    mode = "remote-service"

    def __init__(self, endpoint: str, dim: int, timeout: float = 10.0):
        self.endpoint = endpoint.rstrip("/")
        self.dim = dim
        self.timeout = timeout

    def embed(self, text: str) -> np.ndarray:
        try:
            response = requests.post(
                f"{self.endpoint}/embed", json={"text": text}, timeout=self.timeout
            )
            response.raise_for_status()
            vector = response.json()["vector"]
        except requests.Timeout as exc:
            raise EmbedderError(f"embedding service timed out: {exc}") from exc
        except (requests.RequestException, ValueError, KeyError, TypeError) as exc:
            raise EmbedderError(f"embedding service failed: {exc}") from exc
        arr = np.asarray(vector, dtype=np.float64)
        if arr.shape != (self.dim,):
            raise EmbedderError(f"embedding service returned dim {arr.shape}, expected ({self.dim},)")
        return arr


def build_store(corpus: Corpus, embedder) -> EmbeddingStore:
    """Embed every article with the given embedder."""
    vectors = {aid: embedder.embed(article.text) for aid, article in corpus.articles.items()}
    if not vectors:
        raise ValueError("cannot build a store over an empty corpus")
    return EmbeddingStore(dim=embedder.dim, vectors=vectors)


def cosine_similarity(u: np.ndarray, v: np.ndarray) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise ValueError("cosine similarity is undefined for zero vectors")
    return float(np.dot(u, v)) / (nu * nv)


def min_max_normalize(scores: list[tuple[str, float]]) -> list[tuple[str, float]]:
    """Affine rescale onto [0, 1]; a constant score list maps everything to 1.0."""
    if not scores:
        raise ValueError("cannot normalize an empty score list")
    values = [s for _, s in scores]
    lo, hi = min(values), max(values)
    if hi == lo:
        return [(aid, 1.0) for aid, _ in scores]
    span = hi - lo
    return [(aid, (s - lo) / span) for aid, s in scores]


def dense_scores(
    question: str, store: EmbeddingStore, embedder
) -> dict[str, float]:
    """Normalized cosine score of the query against every stored article."""
    if getattr(embedder, "dim", store.dim) != store.dim:
        raise ValueError(f"embedder dim {embedder.dim} does not match store dim {store.dim}")
    query = embedder.embed(question)
    raw = [(aid, cosine_similarity(query, vec)) for aid, vec in store.vectors.items()]
    return dict(min_max_normalize(raw))


def rank_dense(
    question: str, store: EmbeddingStore, embedder, top_k: int = 10
) -> list[tuple[str, float]]:
    """Top-k articles by normalized cosine score, ties broken by article id."""
    if top_k < 1:
        raise ValueError(f"top_k must be >= 1, got {top_k}")
    scores = dense_scores(question, store, embedder)
    ranked = sorted(scores.items(), key=lambda item: (-item[1], item[0]))
    return ranked[:top_k]
