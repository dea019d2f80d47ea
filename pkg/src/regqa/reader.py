"""Extractive answer decoding from per-token begin/inside/outside labels.

The labeler (remote model or local stub) assigns each context token a
probability triple (pB, pI, pO).  This module windows long contexts, decodes
label sequences into character spans, merges spans across overlapping windows,
and picks the best answer across retrieved candidates.

Decoding rules: the argmax label per token (ties resolved B > I > O) drives a
small state machine.  B opens a span, I extends the open span, O closes it.
An I with no open span also opens one; dropping such tokens would lose answers
whenever a model misses the initial B.

Labeler wire protocol: POST /label with
``{"question_tokens": [...], "context_tokens": [...]}`` returning
``{"probs": [[pB, pI, pO], ...]}`` with one triple per context token.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field

import requests

from regqa.corpus import Article, QAPair, Segmenter, Token
from regqa.fusion import RankedContext

LABEL_B, LABEL_I, LABEL_O = 0, 1, 2


class LabelerError(RuntimeError):
    pass


class LabelerTimeoutError(LabelerError):
    """The labeling service did not answer in time."""


class LabelerProtocolError(LabelerError):
    """The labeling service answered with something unusable."""


@dataclass(frozen=True)
class ReaderSettings:
    max_seq_length: int = 512
    stride: int = 128
    special_overhead: int = 3
    final_lambda: float = 0.3

    def __post_init__(self) -> None:
        if self.max_seq_length < 1:
            raise ValueError("max_seq_length must be positive")
        if self.stride < 0:
            raise ValueError("stride must be non-negative")
        if not 0.0 <= self.final_lambda <= 1.0:
            raise ValueError(f"final_lambda must be in [0, 1], got {self.final_lambda}")


@dataclass
class WindowPlan:
    max_seq_length: int
    stride: int
    windows: list[tuple[int, int]]


@dataclass
class TokenLabelDistribution:
    probs: list[tuple[float, float, float]]

    def __post_init__(self) -> None:
        for i, triple in enumerate(self.probs):
            if len(triple) != 3 or any(p < 0 for p in triple):
                raise ValueError(f"token {i}: probabilities must be three non-negative values")
            if abs(sum(triple) - 1.0) > 1e-6:
                raise ValueError(f"token {i}: probabilities sum to {sum(triple)}, expected 1")

    def __len__(self) -> int:
        return len(self.probs)


@dataclass
class Span:
    char_start: int
    char_end: int
    score: float

    def __post_init__(self) -> None:
        if self.char_start >= self.char_end:
            raise ValueError(f"empty span [{self.char_start}, {self.char_end})")


@dataclass
class ExtractiveAnswer:
    article_id: str
    spans: list[Span]
    text: str
    reader_score: float


def make_windows(
    question_len: int,
    context_len: int,
    max_seq_length: int = 512,
    stride: int = 128,
    special_overhead: int = 3,
) -> WindowPlan:
    """Plan overlapping token windows over a context.

    The per-window context budget is ``max_seq_length - question_len -
    special_overhead``; consecutive windows overlap by exactly ``stride``
    tokens and the last window ends at ``context_len``.
    """
    budget = max_seq_length - question_len - special_overhead
    if budget < 1:
        raise ValueError(
            f"no token budget left for context (max_seq_length={max_seq_length}, "
            f"question_len={question_len}, special_overhead={special_overhead})"
        )
    if stride >= budget:
        raise ValueError(f"stride ({stride}) must be smaller than the context budget ({budget})")
    windows: list[tuple[int, int]] = []
    start = 0
    while True:
        end = min(start + budget, context_len)
        windows.append((start, end))
        if end >= context_len:
            break
        start += budget - stride
    return WindowPlan(max_seq_length=max_seq_length, stride=stride, windows=windows)


def decode_bio(tokens: list[Token], labels: TokenLabelDistribution) -> list[Span]:
    """Decode label probabilities over one token window into character spans.

    The span score is the mean probability of the chosen label over the
    span's tokens.
    """
    if len(labels) != len(tokens):
        raise ValueError(f"got {len(labels)} label triples for {len(tokens)} tokens")
    spans: list[Span] = []
    current: list[int] | None = None  # token indexes of the open span
    probs_of: list[float] = []

    def close() -> None:
        nonlocal current, probs_of
        if current:
            spans.append(
                Span(
                    char_start=tokens[current[0]].char_start,
                    char_end=tokens[current[-1]].char_end,
                    score=statistics.fmean(probs_of),
                )
            )
        current, probs_of = None, []

    for i, triple in enumerate(labels.probs):
        # max() keeps the first maximum, so exact ties resolve B > I > O
        label = max((LABEL_B, LABEL_I, LABEL_O), key=lambda lab: triple[lab])
        if label == LABEL_B:
            close()
            current = [i]
            probs_of = [triple[LABEL_B]]
        elif label == LABEL_I:
            if current is None:
                current, probs_of = [i], [triple[LABEL_I]]
            else:
                current.append(i)
                probs_of.append(triple[LABEL_I])
        else:
            close()
    close()
    return spans


def merge_window_spans(spans: list[Span]) -> list[Span]:
    """Union spans with overlapping character ranges; keep the max score.

    All spans must come from the same article.  Touching-but-disjoint spans
    stay separate.
    """
    if not spans:
        return []
    ordered = sorted(spans, key=lambda s: (s.char_start, s.char_end))
    merged = [Span(ordered[0].char_start, ordered[0].char_end, ordered[0].score)]
    for span in ordered[1:]:
        last = merged[-1]
        if span.char_start < last.char_end:
            last.char_end = max(last.char_end, span.char_end)
            last.score = max(last.score, span.score)
        else:
            merged.append(Span(span.char_start, span.char_end, span.score))
    return merged


def encode_span_labels(num_tokens: int, token_ranges: list[tuple[int, int]]) -> TokenLabelDistribution:
    """One-hot label triples for token index ranges (start inclusive, end exclusive)."""
    labels = [LABEL_O] * num_tokens
    for start, end in token_ranges:
        for i in range(start, end):
            labels[i] = LABEL_B if i == start else LABEL_I
    one_hot = {LABEL_B: (1.0, 0.0, 0.0), LABEL_I: (0.0, 1.0, 0.0), LABEL_O: (0.0, 0.0, 1.0)}
    return TokenLabelDistribution(probs=[one_hot[lab] for lab in labels])


def read_article(
    question_terms: list[str],
    article: Article,
    labeler,
    settings: ReaderSettings = ReaderSettings(),
) -> ExtractiveAnswer | None:
    """Window the article, label each window, decode and merge spans.

    Returns None when no span is decoded anywhere in the article.
    """
    tokens = article.tokens
    if not tokens:
        return None
    plan = make_windows(
        question_len=len(question_terms),
        context_len=len(tokens),
        max_seq_length=settings.max_seq_length,
        stride=settings.stride,
        special_overhead=settings.special_overhead,
    )
    decoded: list[Span] = []
    for start, end in plan.windows:
        window = tokens[start:end]
        dist = labeler.label(question_terms, [t.surface for t in window])
        decoded.extend(decode_bio(window, dist))
    merged = merge_window_spans(decoded)
    if not merged:
        return None
    return ExtractiveAnswer(
        article_id=article.article_id,
        spans=merged,
        text="#".join(article.text[s.char_start : s.char_end] for s in merged),
        reader_score=statistics.fmean(s.score for s in merged),
    )


def select_best(
    candidates: list[tuple[RankedContext, ExtractiveAnswer | None]],
    final_lambda: float = 0.3,
) -> tuple[RankedContext, ExtractiveAnswer, float] | None:
    """Blend normalized retrieval scores with reader confidence and pick the argmax.

    final = lambda * fused_norm + (1 - lambda) * reader_score, with fused
    scores min-max normalized across all candidates first.  Ties go to the
    better-retrieved candidate.  Returns None when no candidate has an answer.
    """
    if not candidates:
        return None
    if not 0.0 <= final_lambda <= 1.0:
        raise ValueError(f"final_lambda must be in [0, 1], got {final_lambda}")
    fused = [ctx.fused for ctx, _ in candidates]
    lo, hi = min(fused), max(fused)
    span = hi - lo
    best: tuple[RankedContext, ExtractiveAnswer, float] | None = None
    for (ctx, answer), value in zip(candidates, fused):
        if answer is None:
            continue
        norm = 1.0 if span == 0.0 else (value - lo) / span
        final = final_lambda * norm + (1.0 - final_lambda) * answer.reader_score
        if best is None or final > best[2]:
            best = (ctx, answer, final)
    return best


class HttpLabeler:
    """Client for a remote token-labeling service."""

    def __init__(self, endpoint: str, timeout: float = 10.0):
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout

    def label(self, question_tokens: list[str], context_tokens: list[str]) -> TokenLabelDistribution:
        payload = {"question_tokens": question_tokens, "context_tokens": context_tokens}
        try:
            response = requests.post(f"{self.endpoint}/label", json=payload, timeout=self.timeout)
        except requests.Timeout as exc:
            raise LabelerTimeoutError(f"labeler timed out after {self.timeout}s") from exc
        except requests.RequestException as exc:
            raise LabelerError(f"labeler request failed: {exc}") from exc
        try:
            probs = response.json()["probs"]
            dist = TokenLabelDistribution(probs=[tuple(map(float, triple)) for triple in probs])
        except (ValueError, KeyError, TypeError) as exc:
            raise LabelerProtocolError(f"malformed labeler response: {exc}") from exc
        if len(dist) != len(context_tokens):
            raise LabelerProtocolError(
                f"labeler returned {len(dist)} triples for {len(context_tokens)} tokens"
            )
        return dist


class OverlapStubLabeler:
    """Deterministic offline labeler: marks context tokens matching rare query terms.

    A question term counts as rare when its document frequency is at most
    ``max_df_fraction`` of the corpus (every term is rare when no stats are
    given).  Compound query terms also match their underscore-separated parts,
    so dictionary-segmented questions still hit whitespace context tokens.
    """

    def __init__(
        self,
        df: dict[str, int] | None = None,
        doc_count: int = 0,
        max_df_fraction: float = 0.5,
    ):
        self.df = df
        self.doc_count = doc_count
        self.max_df_fraction = max_df_fraction

    def _rare_terms(self, question_tokens: list[str]) -> set[str]:
        rare: set[str] = set()
        for term in question_tokens:
            if self.df is not None:
                if self.df.get(term, 0) > self.max_df_fraction * self.doc_count:
                    continue
            rare.add(term)
            rare.update(part for part in term.split("_") if part)
        return rare

    def label(self, question_tokens: list[str], context_tokens: list[str]) -> TokenLabelDistribution:
        rare = self._rare_terms(question_tokens)
        probs: list[tuple[float, float, float]] = []
        in_run = False
        for surface in context_tokens:
            if surface in rare:
                probs.append((0.1, 0.8, 0.1) if in_run else (0.7, 0.2, 0.1))
                in_run = True
            else:
                probs.append((0.05, 0.05, 0.9))
                in_run = False
        return TokenLabelDistribution(probs=probs)


class AllOutsideLabeler:
    """Labels every token O; useful for exercising the no-answer path."""

    def label(self, question_tokens: list[str], context_tokens: list[str]) -> TokenLabelDistribution:
        return TokenLabelDistribution(probs=[(0.0, 0.0, 1.0)] * len(context_tokens))


class GoldOracleLabeler:
    """Test-only labeler that replays gold spans as one-hot labels.

    Keyed by the joined question tokens; each gold span is matched as a
    whitespace-token subsequence inside the presented context window, so it
    works unchanged across window slices.
    """

    def __init__(self, spans_by_question: dict[str, list[tuple[str, ...]]]):
        self.spans_by_question = spans_by_question

    @classmethod
    def from_qa_pairs(cls, pairs: list[QAPair], question_seg: Segmenter | None = None) -> "GoldOracleLabeler":
        question_seg = question_seg or Segmenter()
        span_seg = Segmenter()  # context tokens are whitespace tokens
        mapping: dict[str, list[tuple[str, ...]]] = {}
        for pair in pairs:
            key = " ".join(question_seg.surfaces(pair.question))
            mapping[key] = [tuple(span_seg.surfaces(span)) for span in pair.extractive_spans]
        return cls(mapping)

    def label(self, question_tokens: list[str], context_tokens: list[str]) -> TokenLabelDistribution:
        gold = self.spans_by_question.get(" ".join(question_tokens), [])
        taken = [False] * len(context_tokens)
        ranges: list[tuple[int, int]] = []
        for span_tokens in gold:
            width = len(span_tokens)
            if width == 0:
                continue
            for start in range(len(context_tokens) - width + 1):
                if any(taken[start : start + width]):
                    continue
                if tuple(context_tokens[start : start + width]) == span_tokens:
                    ranges.append((start, start + width))
                    for i in range(start, start + width):
                        taken[i] = True
        return encode_span_labels(len(context_tokens), ranges)
