"""Retrieval and answer-quality metrics.

All text metrics tokenize through the same segmenter as retrieval so that
token counts agree everywhere.  BLEU is sentence-level without smoothing by
default: any zero n-gram precision zeroes the score.  A smoothing switch
exists for corpus-level reporting where zero 4-gram overlap is routine.

Eval reports are JSON lines, one object per question::

    {"qa_id": ..., "p_at_k": {"1": true, ...}, "f1": ..., "bleu1": ...,
     "bleu4": ..., "rouge_l": ...}

followed by one trailing aggregate object with macro-averages.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

from regqa.corpus import QAPair, Segmenter


@dataclass
class EvalRecord:
    qa_id: str
    gold_article_id: str
    retrieved_ids: list[str]
    predicted_extractive: str
    predicted_abstractive: str


@dataclass(frozen=True)
class BleuConfig:
    max_n: int = 4
    weights: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.max_n < 1:
            raise ValueError(f"max_n must be >= 1, got {self.max_n}")
        if not self.weights:
            object.__setattr__(self, "weights", tuple(1.0 / self.max_n for _ in range(self.max_n)))
        if len(self.weights) != self.max_n:
            raise ValueError(f"need {self.max_n} weights, got {len(self.weights)}")
        if abs(sum(self.weights) - 1.0) > 1e-9:
            raise ValueError(f"weights must sum to 1, got {sum(self.weights)}")


BLEU1 = BleuConfig(max_n=1)
BLEU4 = BleuConfig(max_n=4)


def precision_at_k(records: list[EvalRecord], k: int) -> float:
    """Fraction of questions whose gold article is among the first k retrieved."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if not records:
        raise ValueError("no records to evaluate")
    hits = 0
    for record in records:
        if not record.retrieved_ids:
            raise ValueError(f"{record.qa_id}: no retrieved ids")
        if record.gold_article_id in record.retrieved_ids[:k]:
            hits += 1
    return hits / len(records)


def _harmonic(precision: float, recall: float) -> float:
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def token_f1(predicted: str, gold: str, seg: Segmenter | None = None) -> tuple[float, float, float]:
    """Multiset token overlap between prediction and gold answer."""
    seg = seg or Segmenter()
    pred = seg.surfaces(predicted)
    ref = seg.surfaces(gold)
    if not pred and not ref:
        return 1.0, 1.0, 1.0
    if not pred or not ref:
        return 0.0, 0.0, 0.0
    overlap = sum((Counter(pred) & Counter(ref)).values())
    precision = overlap / len(pred)
    recall = overlap / len(ref)
    return precision, recall, _harmonic(precision, recall)


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu(
    predicted: str,
    references: list[str],
    cfg: BleuConfig = BLEU4,
    seg: Segmenter | None = None,
    smooth: bool = False,
) -> float:
    """Sentence BLEU with brevity penalty and per-reference clipping.

    Without smoothing any zero n-gram precision makes the whole score 0.
    """
    if not references:
        raise ValueError("need at least one reference")
    seg = seg or Segmenter()
    pred = seg.surfaces(predicted)
    refs = [seg.surfaces(r) for r in references]
    c = len(pred)
    if c == 0:
        return 0.0

    # closest reference length; ties go to the shorter reference
    r = min((len(ref) for ref in refs), key=lambda length: (abs(length - c), length))
    bp = 1.0 if c > r else math.exp(1.0 - r / c)

    log_sum = 0.0
    for n, weight in enumerate(cfg.weights, start=1):
        pred_ngrams = _ngrams(pred, n)
        ref_ngrams = [_ngrams(ref, n) for ref in refs]
        total = sum(pred_ngrams.values())
        clipped = 0
        for ngram, count in pred_ngrams.items():
            clipped += min(count, max(counts.get(ngram, 0) for counts in ref_ngrams))
        if total == 0 or clipped == 0:
            if not smooth or total == 0:
                return 0.0
            p_n = 1.0 / (2.0 * total)
        else:
            p_n = clipped / total
        log_sum += weight * math.log(p_n)
    return bp * math.exp(log_sum)


def rouge_n(
    predicted: str, gold: str, n: int = 1, seg: Segmenter | None = None
) -> tuple[float, float, float]:
    """Clipped n-gram overlap precision/recall/F1."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    seg = seg or Segmenter()
    pred = seg.surfaces(predicted)
    ref = seg.surfaces(gold)
    if not pred and not ref:
        return 1.0, 1.0, 1.0
    pred_ngrams = _ngrams(pred, n)
    ref_ngrams = _ngrams(ref, n)
    if not pred_ngrams or not ref_ngrams:
        return 0.0, 0.0, 0.0
    overlap = sum((pred_ngrams & ref_ngrams).values())
    precision = overlap / sum(pred_ngrams.values())
    recall = overlap / sum(ref_ngrams.values())
    return precision, recall, _harmonic(precision, recall)


def _lcs_length(a: list[str], b: list[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        row = [0]
        for j, y in enumerate(b, start=1):
            row.append(prev[j - 1] + 1 if x == y else max(prev[j], row[j - 1]))
        prev = row
    return prev[-1]


def rouge_l(predicted: str, gold: str, seg: Segmenter | None = None) -> tuple[float, float, float]:
    """Longest-common-subsequence precision/recall/F1 over token sequences."""
    seg = seg or Segmenter()
    pred = seg.surfaces(predicted)
    ref = seg.surfaces(gold)
    if not pred and not ref:
        return 1.0, 1.0, 1.0
    if not pred or not ref:
        return 0.0, 0.0, 0.0
    lcs = _lcs_length(pred, ref)
    precision = lcs / len(pred)
    recall = lcs / len(ref)
    return precision, recall, _harmonic(precision, recall)


@dataclass
class EvalReport:
    rows: list[dict] = field(default_factory=list)
    aggregate: dict = field(default_factory=dict)

    def lines(self) -> list[dict]:
        return [*self.rows, self.aggregate]


def build_eval_report(
    records: list[EvalRecord],
    gold_by_qa_id: dict[str, QAPair],
    k_list: list[int],
    seg: Segmenter | None = None,
    smooth_bleu: bool = False,
) -> EvalReport:
    """Score every record against its gold pair and macro-average the results."""
    if not records:
        raise ValueError("no records to evaluate")
    seg = seg or Segmenter()
    report = EvalReport()
    sums = {"f1": 0.0, "bleu1": 0.0, "bleu4": 0.0, "rouge_l": 0.0, "extractive_exact_match": 0.0}
    hit_counts = {k: 0 for k in k_list}
    for record in records:
        gold = gold_by_qa_id[record.qa_id]
        flags = {str(k): gold.article_id in record.retrieved_ids[:k] for k in k_list}
        for k in k_list:
            hit_counts[k] += flags[str(k)]
        row = {
            "qa_id": record.qa_id,
            "p_at_k": flags,
            "f1": token_f1(record.predicted_extractive, gold.extractive_answer, seg)[2],
            "bleu1": bleu(record.predicted_abstractive, [gold.abstractive_answer], BLEU1, seg, smooth_bleu),
            "bleu4": bleu(record.predicted_abstractive, [gold.abstractive_answer], BLEU4, seg, smooth_bleu),
            "rouge_l": rouge_l(record.predicted_abstractive, gold.abstractive_answer, seg)[2],
        }
        sums["f1"] += row["f1"]
        sums["bleu1"] += row["bleu1"]
        sums["bleu4"] += row["bleu4"]
        sums["rouge_l"] += row["rouge_l"]
        sums["extractive_exact_match"] += record.predicted_extractive == gold.extractive_answer
        report.rows.append(row)
    n = len(records)
    report.aggregate = {
        "aggregate": True,
        "questions": n,
        "p_at_k": {str(k): hit_counts[k] / n for k in k_list},
        **{name: total / n for name, total in sums.items()},
    }
    return report
