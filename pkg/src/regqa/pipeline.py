"""End-to-end question answering pipeline.

Wires corpus, lexical index, embedding store, reader, and generator together
behind three operations: ``answer_question`` (full retrieve-read-generate
round trip), ``retrieve`` (contexts only), and ``run_eval`` (batch scoring of
a QA split).  Component failures degrade rather than abort where a useful
partial answer remains possible; every degradation is recorded on the
response.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from regqa.config import ALL_OUTSIDE, HASHING_STUB, OVERLAP_STUB, PipelineConfig
from regqa.corpus import (
    Corpus,
    QAPair,
    SPAN_SEPARATOR,
    Segmenter,
    load_corpus,
    load_qa_dataset,
    split_dataset,
)
from regqa.dense import (
    EmbeddingStore,
    FileLookupEmbedder,
    HashingStubEmbedder,
    HttpEmbedder,
    build_store,
    load_embeddings,
    save_embeddings,
)
from regqa.fusion import WEIGHT, FusionConfig, RankedContext, query_context
from regqa.generator import (
    FALLBACK,
    GeneratorOutput,
    HttpGeneratorClient,
    find_separator,
    format_generator_input,
    generate_abstractive,
)
from regqa.lexical import InvertedIndex, build_index, save_index
from regqa.metrics import EvalRecord, EvalReport, build_eval_report, precision_at_k
from regqa.reader import (
    AllOutsideLabeler,
    ExtractiveAnswer,
    HttpLabeler,
    LabelerError,
    OverlapStubLabeler,
    read_article,
    select_best,
)

DEFAULT_K_LIST = [1, 5, 10, 15, 20, 25, 30]


@dataclass
class PipelineResponse:
    question: str
    no_answer: bool
    abstractive: str
    extractive: str
    article_id: str | None
    article_title: str | None
    document_title: str | None
    article_text: str | None
    spans: list[tuple[int, int]]
    scores: dict[str, float]
    generator_source: str | None
    retrieved: list[dict]
    degradation: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "question": self.question,
            "no_answer": self.no_answer,
            "abstractive": self.abstractive,
            "extractive": self.extractive,
            "article_id": self.article_id,
            "article_title": self.article_title,
            "document_title": self.document_title,
            "article_text": self.article_text,
            "spans": [list(span) for span in self.spans],
            "scores": self.scores,
            "generator_source": self.generator_source,
            "retrieved": self.retrieved,
            "degradation": self.degradation,
        }


def make_segmenter(cfg: PipelineConfig) -> Segmenter:
    if cfg.segmenter_mode == Segmenter.DICTIONARY:
        compounds: set[str] = set()
        if cfg.dictionary_path is not None:
            with open(cfg.dictionary_path, encoding="utf-8") as fh:
                compounds = {line.strip() for line in fh if line.strip()}
        return Segmenter(Segmenter.DICTIONARY, compounds)
    return Segmenter(cfg.segmenter_mode)


def _make_query_embedder(cfg: PipelineConfig, seg: Segmenter):
    source = cfg.embedding_query
    if source == HASHING_STUB:
        return HashingStubEmbedder(cfg.embedding_dim, seg)
    if source.startswith("file:"):
        return FileLookupEmbedder(source[5:])
    if source.startswith(("http://", "https://")):
        return HttpEmbedder(source, cfg.embedding_dim)
    raise ValueError(f"unknown query embedder source {source!r}")


def _make_store(cfg: PipelineConfig, corpus: Corpus, seg: Segmenter) -> EmbeddingStore:
    source = cfg.embedding_store
    if source == HASHING_STUB:
        return build_store(corpus, HashingStubEmbedder(cfg.embedding_dim, seg))
    if source.startswith("file:"):
        store = load_embeddings(source[5:])
        missing = store.missing_articles(corpus)
        if missing:
            raise ValueError(
                f"embedding store misses {len(missing)} article(s): {', '.join(sorted(missing))}"
            )
        # drop vectors for articles outside the corpus so normalization
        # only ever sees in-corpus scores
        vectors = {aid: store.vectors[aid] for aid in corpus.articles}
        return EmbeddingStore(dim=store.dim, vectors=vectors)
    raise ValueError(f"unknown embedding store source {source!r}")


def _make_labeler(cfg: PipelineConfig, index: InvertedIndex):
    if cfg.labeler == OVERLAP_STUB:
        return OverlapStubLabeler(df=index.df, doc_count=index.doc_count)
    if cfg.labeler == ALL_OUTSIDE:
        return AllOutsideLabeler()
    if cfg.labeler.startswith(("http://", "https://")):
        return HttpLabeler(cfg.labeler)
    raise ValueError(f"unknown labeler {cfg.labeler!r}")


class Pipeline:
    def __init__(
        self,
        cfg: PipelineConfig,
        corpus: Corpus,
        seg: Segmenter,
        index: InvertedIndex,
        store: EmbeddingStore,
        query_embedder,
        labeler,
        generator_client=None,
    ):
        self.cfg = cfg
        self.corpus = corpus
        self.seg = seg
        self.index = index
        self.store = store
        self.query_embedder = query_embedder
        self.labeler = labeler
        self.generator_client = generator_client
        self._qa_pairs: list[QAPair] | None = None

    @classmethod
    def from_config(
        cls,
        cfg: PipelineConfig,
        labeler=None,
        generator_client=None,
        query_embedder=None,
    ) -> "Pipeline":
        """Assemble a pipeline; keyword arguments override configured components."""
        corpus = load_corpus(cfg.corpus_path)
        seg = make_segmenter(cfg)
        index = build_index(corpus, seg)
        store = _make_store(cfg, corpus, seg)
        if query_embedder is None:
            query_embedder = _make_query_embedder(cfg, seg)
        if labeler is None:
            labeler = _make_labeler(cfg, index)
        if generator_client is None and cfg.generator_endpoint:
            generator_client = HttpGeneratorClient(cfg.generator_endpoint)
        return cls(cfg, corpus, seg, index, store, query_embedder, labeler, generator_client)

    def qa_pairs(self) -> list[QAPair]:
        if self._qa_pairs is None:
            if self.cfg.qa_path is None:
                raise ValueError("no QA dataset configured ([corpus] qa_path)")
            self._qa_pairs = load_qa_dataset(self.cfg.qa_path, self.corpus)
        return self._qa_pairs

    def eval_split(self, name: str) -> list[QAPair]:
        pairs = self.qa_pairs()
        if name == "all":
            return pairs
        split = split_dataset(pairs, self.cfg.split_seed)
        if name not in ("train", "dev", "test"):
            raise ValueError(f"unknown split {name!r}, expected train, dev, test, or all")
        return getattr(split, name)

    def _fusion_config(self, top_k=None, alpha=None, fusion_mode=None) -> FusionConfig:
        return self.cfg.fusion.with_overrides(top_k=top_k, alpha=alpha, mode=fusion_mode)

    def _retrieve(self, question: str, fcfg: FusionConfig):
        return query_context(question, self.index, self.store, self.query_embedder, self.seg, fcfg)

    def _read_candidates(
        self, question_terms: list[str], ranked: list[RankedContext]
    ) -> tuple[list[tuple[RankedContext, ExtractiveAnswer | None]], list[str]]:
        candidates: list[tuple[RankedContext, ExtractiveAnswer | None]] = []
        degradation: list[str] = []
        for ctx in ranked:
            article = self.corpus.article(ctx.article_id)
            try:
                answer = read_article(question_terms, article, self.labeler, self.cfg.reader)
            except LabelerError as exc:
                degradation.append(f"labeler failed on {ctx.article_id}: {exc}")
                answer = None
            candidates.append((ctx, answer))
        return candidates, degradation

    def _generate(self, question: str, extractive: str) -> GeneratorOutput:
        try:
            gen_input = format_generator_input(question, extractive, self.cfg.generator_template)
        except ValueError as exc:
            # keep the answer even when the extracted text cannot be templated
            fallback = extractive.replace(SPAN_SEPARATOR, "; ")
            return GeneratorOutput(text=fallback, source=FALLBACK, error=f"cannot format input: {exc}")
        return generate_abstractive(gen_input, self.generator_client)

    def answer_question(
        self,
        question: str,
        top_k: int | None = None,
        alpha: float | None = None,
        fusion_mode: str | None = None,
    ) -> PipelineResponse:
        if not question or not question.strip():
            raise ValueError("question must be non-empty")
        sep = find_separator(question)
        if sep is not None:
            raise ValueError(f"question may not contain the separator token {sep!r}")
        fcfg = self._fusion_config(top_k, alpha, fusion_mode)
        retrieval = self._retrieve(question, fcfg)
        retrieved = [
            {
                "article_id": ctx.article_id,
                "title": self.corpus.article(ctx.article_id).title,
                "fused": ctx.fused,
                "lexical": ctx.lexical,
                "dense": ctx.dense,
            }
            for ctx in retrieval.ranked
        ]
        question_terms = self.seg.surfaces(question)
        candidates, degradation = self._read_candidates(question_terms, retrieval.ranked)
        best = select_best(candidates, self.cfg.reader.final_lambda)
        if best is None:
            return PipelineResponse(
                question=question,
                no_answer=True,
                abstractive="",
                extractive="",
                article_id=None,
                article_title=None,
                document_title=None,
                article_text=None,
                spans=[],
                scores={},
                generator_source=None,
                retrieved=retrieved,
                degradation=degradation,
            )
        ctx, answer, final = best
        article = self.corpus.article(ctx.article_id)
        document = self.corpus.document_for(ctx.article_id)
        output = self._generate(question, answer.text)
        if output.error:
            degradation.append(f"generator fell back: {output.error}")
        return PipelineResponse(
            question=question,
            no_answer=False,
            abstractive=output.text,
            extractive=answer.text,
            article_id=article.article_id,
            article_title=article.title,
            document_title=document.title,
            article_text=article.text,
            spans=[(s.char_start, s.char_end) for s in answer.spans],
            scores={
                "fused": ctx.fused,
                "lexical": ctx.lexical,
                "dense": ctx.dense,
                "reader": answer.reader_score,
                "final": final,
            },
            generator_source=output.source,
            retrieved=retrieved,
            degradation=degradation,
        )

    def retrieve(
        self,
        question: str,
        top_k: int | None = None,
        alpha: float | None = None,
        fusion_mode: str | None = None,
    ) -> list[dict]:
        if not question or not question.strip():
            raise ValueError("question must be non-empty")
        fcfg = self._fusion_config(top_k, alpha, fusion_mode)
        contexts = []
        for ctx in self._retrieve(question, fcfg).ranked:
            article = self.corpus.article(ctx.article_id)
            contexts.append(
                {
                    "article_id": ctx.article_id,
                    "title": article.title,
                    "document_title": self.corpus.document_for(ctx.article_id).title,
                    "text": article.text,
                    "fused": ctx.fused,
                    "lexical": ctx.lexical,
                    "dense": ctx.dense,
                }
            )
        return contexts

    def run_eval(
        self,
        split: str = "dev",
        k_list: list[int] | None = None,
        smooth_bleu: bool = False,
    ) -> EvalReport:
        """Answer every question in a split and score the results.

        Retrieval runs once per question at the largest depth needed; the
        reader only sees the configured top_k candidates.
        """
        k_list = sorted(k_list or DEFAULT_K_LIST)
        pairs = self.eval_split(split)
        if not pairs:
            raise ValueError(f"split {split!r} has no QA pairs")
        depth = max(k_list[-1], self.cfg.fusion.top_k)
        fcfg = self._fusion_config(top_k=depth)
        records = []
        for pair in pairs:
            retrieval = self._retrieve(pair.question, fcfg)
            question_terms = self.seg.surfaces(pair.question)
            candidates, _ = self._read_candidates(
                question_terms, retrieval.ranked[: self.cfg.fusion.top_k]
            )
            best = select_best(candidates, self.cfg.reader.final_lambda)
            extractive = best[1].text if best else ""
            abstractive = self._generate(pair.question, extractive).text if best else ""
            records.append(
                EvalRecord(
                    qa_id=pair.qa_id,
                    gold_article_id=pair.article_id,
                    retrieved_ids=retrieval.article_ids(),
                    predicted_extractive=extractive,
                    predicted_abstractive=abstractive,
                )
            )
        gold = {pair.qa_id: pair for pair in pairs}
        return build_eval_report(records, gold, k_list, self.seg, smooth_bleu)

    def grid_alpha(
        self,
        split: str = "dev",
        k_list: list[int] | None = None,
        alphas: list[float] | None = None,
    ) -> list[dict]:
        """Precision-at-k sweep over the fusion weight, retrieval only."""
        alphas = list(alphas) if alphas else [round(0.1 * i, 1) for i in range(1, 10)]
        k_list = sorted(k_list or DEFAULT_K_LIST)
        pairs = self.eval_split(split)
        if not pairs:
            raise ValueError(f"split {split!r} has no QA pairs")
        rows = []
        for alpha in alphas:
            fcfg = self.cfg.fusion.with_overrides(alpha=alpha, top_k=k_list[-1], mode=WEIGHT)
            records = [
                EvalRecord(
                    qa_id=pair.qa_id,
                    gold_article_id=pair.article_id,
                    retrieved_ids=self._retrieve(pair.question, fcfg).article_ids(),
                    predicted_extractive="",
                    predicted_abstractive="",
                )
                for pair in pairs
            ]
            rows.append(
                {"alpha": alpha, **{f"p_at_{k}": precision_at_k(records, k) for k in k_list}}
            )
        return rows

    def build_artifacts(self, out_dir: str | Path) -> dict:
        """Persist the index and embedding store with a digest manifest.

        Rebuilding from the same corpus and configuration writes byte-identical
        files, so manifests can be compared to detect drift.
        """
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        save_index(self.index, out / "index.jsonl")
        save_embeddings(self.store, out / "embeddings.jsonl")
        files = {}
        for name in ("index.jsonl", "embeddings.jsonl"):
            data = (out / name).read_bytes()
            files[name] = {"sha256": hashlib.sha256(data).hexdigest(), "bytes": len(data)}
        manifest = {
            "version": 1,
            "articles": len(self.corpus.articles),
            "documents": len(self.corpus.documents),
            "embedding_dim": self.store.dim,
            "segmenter_mode": self.seg.mode,
            "files": files,
        }
        with open(out / "manifest.json", "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return manifest
