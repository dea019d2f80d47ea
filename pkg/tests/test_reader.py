import random
import statistics

import pytest

from conftest import corpus_from_texts
from regqa.corpus import QAPair, Segmenter, Token
from regqa.fusion import RankedContext
from regqa.reader import (
    AllOutsideLabeler,
    GoldOracleLabeler,
    HttpLabeler,
    LabelerProtocolError,
    LabelerTimeoutError,
    OverlapStubLabeler,
    ReaderSettings,
    Span,
    TokenLabelDistribution,
    decode_bio,
    encode_span_labels,
    make_windows,
    merge_window_spans,
    read_article,
    select_best,
)

B, I, O = (1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0)


def tokens_for(n):
    """n synthetic tokens 'w000 w001 ...' with real character offsets."""
    text = " ".join(f"w{i:03d}" for i in range(n))
    return Segmenter().segment(text), text


class TestMakeWindows:
    def test_two_window_arithmetic(self):
        # budget 512 - 9 - 3 = 500 over a 600-token context
        plan = make_windows(question_len=9, context_len=600, max_seq_length=512, stride=128)
        assert plan.windows == [(0, 500), (372, 600)]

    def test_single_window_when_short(self):
        plan = make_windows(question_len=10, context_len=50, max_seq_length=512, stride=128)
        assert plan.windows == [(0, 50)]

    def test_three_window_arithmetic(self):
        # budget 403 - 0 - 3 = 400, stride 100 over 1000 tokens
        plan = make_windows(question_len=0, context_len=1000, max_seq_length=403, stride=100)
        assert plan.windows == [(0, 400), (300, 700), (600, 1000)]

    def test_last_window_ends_at_context(self):
        plan = make_windows(question_len=0, context_len=777, max_seq_length=103, stride=25)
        assert plan.windows[-1][1] == 777

    def test_coverage_and_overlap_invariants(self):
        rng = random.Random(61)
        for _ in range(50):
            context_len = rng.randint(1, 2000)
            budget = rng.randint(2, 600)
            stride = rng.randint(0, budget - 1)
            plan = make_windows(
                question_len=0,
                context_len=context_len,
                max_seq_length=budget + 3,
                stride=stride,
            )
            covered = set()
            for start, end in plan.windows:
                assert end - start <= budget
                covered.update(range(start, end))
            assert covered == set(range(context_len))
            for (s1, e1), (s2, e2) in zip(plan.windows, plan.windows[1:-1] or []):
                assert e1 - s2 == stride  # all but the final window overlap exactly stride

    def test_budget_exhausted(self):
        with pytest.raises(ValueError, match="budget"):
            make_windows(question_len=510, context_len=100, max_seq_length=512)

    def test_stride_must_be_below_budget(self):
        with pytest.raises(ValueError, match="stride"):
            make_windows(question_len=0, context_len=100, max_seq_length=53, stride=50)


class TestDecodeBio:
    def test_two_spans(self):
        tokens, text = tokens_for(5)
        labels = TokenLabelDistribution(probs=[O, B, I, O, B])
        spans = decode_bio(tokens, labels)
        assert [(s.char_start, s.char_end) for s in spans] == [
            (tokens[1].char_start, tokens[2].char_end),
            (tokens[4].char_start, tokens[4].char_end),
        ]

    def test_all_outside(self):
        tokens, _ = tokens_for(4)
        assert decode_bio(tokens, TokenLabelDistribution(probs=[O, O, O, O])) == []

    def test_orphan_inside_opens_span(self):
        tokens, _ = tokens_for(3)
        spans = decode_bio(tokens, TokenLabelDistribution(probs=[O, I, I]))
        assert len(spans) == 1
        assert (spans[0].char_start, spans[0].char_end) == (
            tokens[1].char_start,
            tokens[2].char_end,
        )

    def test_b_after_b_starts_new_span(self):
        tokens, _ = tokens_for(2)
        spans = decode_bio(tokens, TokenLabelDistribution(probs=[B, B]))
        assert len(spans) == 2

    def test_tie_prefers_b_then_i(self):
        tokens, _ = tokens_for(2)
        # exact B/I tie -> B opens; exact I/O tie -> I continues the open span
        labels = TokenLabelDistribution(probs=[(0.4, 0.4, 0.2), (0.0, 0.5, 0.5)])
        spans = decode_bio(tokens, labels)
        assert len(spans) == 1
        assert spans[0].score == pytest.approx(0.45)

    def test_tie_break_detail(self):
        tokens, _ = tokens_for(2)
        spans = decode_bio(tokens, TokenLabelDistribution(probs=[(0.4, 0.4, 0.2), (0.3, 0.3, 0.4)]))
        # token0 ties B/I -> B opens; token1 argmax O -> close
        assert len(spans) == 1
        assert spans[0].score == pytest.approx(0.4)

    def test_span_score_is_mean_of_chosen_probs(self):
        tokens, _ = tokens_for(3)
        labels = TokenLabelDistribution(probs=[(0.9, 0.05, 0.05), (0.1, 0.6, 0.3), O])
        spans = decode_bio(tokens, labels)
        assert spans[0].score == pytest.approx(statistics.fmean([0.9, 0.6]))

    def test_length_mismatch(self):
        tokens, _ = tokens_for(3)
        with pytest.raises(ValueError, match="3 tokens"):
            decode_bio(tokens, TokenLabelDistribution(probs=[O, O]))

    def test_distribution_must_sum_to_one(self):
        with pytest.raises(ValueError, match="sum"):
            TokenLabelDistribution(probs=[(0.5, 0.1, 0.1)])

    def test_distribution_must_be_non_negative(self):
        with pytest.raises(ValueError):
            TokenLabelDistribution(probs=[(1.2, -0.1, -0.1)])


def random_layout(rng, num_tokens):
    """1-4 non-overlapping token ranges inside [0, num_tokens)."""
    n_spans = rng.randint(1, min(4, num_tokens))
    cuts = rng.sample(range(num_tokens + 1), min(2 * n_spans, num_tokens + 1))
    cuts.sort()
    ranges = []
    for start, end in zip(cuts[::2], cuts[1::2]):
        if start < end:
            ranges.append((start, end))
    return ranges


class TestBioRoundTrip:
    def test_encode_decode_identity(self):
        rng = random.Random(71)
        for _ in range(100):
            n = rng.randint(1, 40)
            ranges = random_layout(rng, n)
            if not ranges:
                continue
            tokens, _ = tokens_for(n)
            decoded = decode_bio(tokens, encode_span_labels(n, ranges))
            got = [(s.char_start, s.char_end) for s in decoded]
            expected = [
                (tokens[start].char_start, tokens[end - 1].char_end) for start, end in ranges
            ]
            assert got == expected

    def test_adjacent_spans_stay_separate(self):
        tokens, _ = tokens_for(4)
        decoded = decode_bio(tokens, encode_span_labels(4, [(0, 2), (2, 4)]))
        assert len(decoded) == 2


class TestMergeWindowSpans:
    def test_identical_spans_dedupe(self):
        merged = merge_window_spans([Span(10, 20, 0.9), Span(10, 20, 0.7)])
        assert len(merged) == 1
        assert merged[0].score == 0.9

    def test_overlap_unions_with_max_score(self):
        merged = merge_window_spans([Span(10, 20, 0.9), Span(15, 25, 0.7)])
        assert [(merged[0].char_start, merged[0].char_end)] == [(10, 25)]
        assert merged[0].score == 0.9

    def test_touching_spans_stay_separate(self):
        merged = merge_window_spans([Span(10, 20, 0.5), Span(20, 30, 0.6)])
        assert len(merged) == 2

    def test_disjoint_sorted(self):
        merged = merge_window_spans([Span(30, 40, 0.1), Span(5, 10, 0.2)])
        assert [(s.char_start, s.char_end) for s in merged] == [(5, 10), (30, 40)]

    def test_chain_of_overlaps(self):
        merged = merge_window_spans([Span(0, 5, 0.2), Span(3, 8, 0.9), Span(7, 12, 0.4)])
        assert len(merged) == 1
        assert (merged[0].char_start, merged[0].char_end, merged[0].score) == (0, 12, 0.9)

    def test_empty(self):
        assert merge_window_spans([]) == []

    def test_span_validation(self):
        with pytest.raises(ValueError):
            Span(5, 5, 0.1)


def article_from_text(text, article_id="art"):
    corpus = corpus_from_texts({article_id: text})
    return corpus.article(article_id)


class TestReadArticle:
    def test_gold_oracle_reproduces_answer(self):
        text = "students may request a leave of absence for two semesters"
        article = article_from_text(text)
        pair = QAPair(
            qa_id="q",
            question="how long is a leave of absence",
            article_id="art",
            extractive_answer="a leave of absence for two semesters",
            abstractive_answer="",
        )
        labeler = GoldOracleLabeler.from_qa_pairs([pair])
        terms = Segmenter().surfaces(pair.question)
        answer = read_article(terms, article, labeler)
        assert answer is not None
        assert answer.text == pair.extractive_answer
        assert answer.reader_score == 1.0

    def test_multi_span_join(self):
        text = "grades up to four pass while grade five fails the examination"
        article = article_from_text(text)
        pair = QAPair(
            qa_id="q",
            question="which grades pass",
            article_id="art",
            extractive_answer="grades up to four pass#grade five fails",
            abstractive_answer="",
        )
        labeler = GoldOracleLabeler.from_qa_pairs([pair])
        answer = read_article(Segmenter().surfaces(pair.question), article, labeler)
        assert answer.text == pair.extractive_answer
        assert len(answer.spans) == 2

    def test_all_outside_returns_none(self):
        article = article_from_text("some regulation text here")
        assert read_article(["q"], article, AllOutsideLabeler()) is None

    def test_empty_article_returns_none(self):
        corpus = corpus_from_texts({"a": "x"})
        article = corpus.article("a")
        article.tokens = []
        assert read_article(["q"], article, AllOutsideLabeler()) is None

    def test_windowing_invariance(self):
        # unique tokens, spans placed away from window boundaries
        rng = random.Random(83)
        for _ in range(10):
            n = rng.randint(60, 120)
            tokens, text = tokens_for(n)
            article = article_from_text(text)
            budget = rng.randint(20, 40)
            stride = rng.randint(5, budget // 2)
            step = budget - stride
            # one span per window interior
            ranges = []
            start = 0
            while start + budget <= n and len(ranges) < 3:
                lo = start + 2
                hi = min(start + budget - 2, n)
                if hi - lo >= 3:
                    s = rng.randint(lo, hi - 3)
                    ranges.append((s, s + rng.randint(1, 3)))
                start += step
            if not ranges:
                continue
            surfaces = [t.surface for t in tokens]
            spans_tokens = [tuple(surfaces[s:e]) for s, e in ranges]
            labeler = GoldOracleLabeler({"q": spans_tokens})
            wide = ReaderSettings(max_seq_length=n + 10, stride=0)
            narrow = ReaderSettings(max_seq_length=budget + 1 + 3, stride=stride)
            one = read_article(["q"], article, labeler, wide)
            many = read_article(["q"], article, labeler, narrow)
            assert one is not None and many is not None
            assert [(s.char_start, s.char_end) for s in one.spans] == [
                (s.char_start, s.char_end) for s in many.spans
            ]
            assert one.text == many.text

    def test_reader_score_is_mean_span_score(self):
        text = "alpha beta gamma delta epsilon"
        article = article_from_text(text)
        labeler = GoldOracleLabeler({"q": [("alpha",), ("gamma", "delta")]})
        answer = read_article(["q"], article, labeler)
        assert len(answer.spans) == 2
        assert answer.reader_score == pytest.approx(
            statistics.fmean(s.score for s in answer.spans)
        )


def ctx(article_id, fused):
    return RankedContext(article_id=article_id, fused=fused, lexical=fused, dense=0.0)


def ans(article_id, score):
    from regqa.reader import ExtractiveAnswer

    return ExtractiveAnswer(article_id=article_id, spans=[Span(0, 1, score)], text="x", reader_score=score)


class TestSelectBest:
    def test_hand_blend(self):
        # normalized fused 1.0 vs 0.0; lambda 0.5 -> 0.6 beats 0.45
        candidates = [(ctx("a", 1.0), ans("a", 0.2)), (ctx("b", 0.0), ans("b", 0.9))]
        best = select_best(candidates, final_lambda=0.5)
        assert best[0].article_id == "a"
        assert best[2] == pytest.approx(0.6)

    def test_lambda_zero_uses_reader_only(self):
        candidates = [(ctx("a", 5.0), ans("a", 0.2)), (ctx("b", 0.1), ans("b", 0.9))]
        best = select_best(candidates, final_lambda=0.0)
        assert best[0].article_id == "b"

    def test_lambda_one_takes_top_answered(self):
        candidates = [
            (ctx("a", 5.0), None),
            (ctx("b", 3.0), ans("b", 0.1)),
            (ctx("c", 1.0), ans("c", 0.99)),
        ]
        best = select_best(candidates, final_lambda=1.0)
        assert best[0].article_id == "b"

    def test_tie_goes_to_better_retrieved(self):
        candidates = [(ctx("a", 2.0), ans("a", 0.5)), (ctx("b", 2.0), ans("b", 0.5))]
        best = select_best(candidates, final_lambda=0.3)
        assert best[0].article_id == "a"

    def test_unanswered_candidates_skipped(self):
        candidates = [(ctx("a", 9.0), None), (ctx("b", 0.5), ans("b", 0.4))]
        best = select_best(candidates, final_lambda=0.9)
        assert best[0].article_id == "b"

    def test_all_none_returns_none(self):
        assert select_best([(ctx("a", 1.0), None)], 0.3) is None
        assert select_best([], 0.3) is None

    def test_equal_fused_scores_normalize_to_one(self):
        candidates = [(ctx("a", 2.0), ans("a", 0.1)), (ctx("b", 2.0), ans("b", 0.8))]
        best = select_best(candidates, final_lambda=0.5)
        # both normalize to 1.0, so the reader score decides
        assert best[0].article_id == "b"
        assert best[2] == pytest.approx(0.5 * 1.0 + 0.5 * 0.8)

    def test_invalid_lambda(self):
        with pytest.raises(ValueError):
            select_best([(ctx("a", 1.0), ans("a", 0.5))], final_lambda=1.5)


class TestOverlapStubLabeler:
    def test_marks_matching_rare_terms(self):
        labeler = OverlapStubLabeler()
        dist = labeler.label(["deposit"], ["the", "tuition", "deposit", "is", "due"])
        argmax = [max(range(3), key=lambda i: t[i]) for t in dist.probs]
        assert argmax == [2, 2, 0, 2, 2]  # single B at "deposit"

    def test_run_of_matches_continues_span(self):
        labeler = OverlapStubLabeler()
        dist = labeler.label(["tuition", "deposit"], ["pay", "tuition", "deposit", "now"])
        argmax = [max(range(3), key=lambda i: t[i]) for t in dist.probs]
        assert argmax == [2, 0, 1, 2]  # B then I across the run

    def test_common_terms_skipped_with_stats(self):
        df = {"the": 9, "deposit": 1}
        labeler = OverlapStubLabeler(df=df, doc_count=10, max_df_fraction=0.5)
        dist = labeler.label(["the", "deposit"], ["the", "deposit"])
        argmax = [max(range(3), key=lambda i: t[i]) for t in dist.probs]
        assert argmax == [2, 0]  # "the" is too common to count

    def test_compound_terms_match_parts(self):
        labeler = OverlapStubLabeler()
        dist = labeler.label(["học_kỳ"], ["học", "kỳ", "chính"])
        argmax = [max(range(3), key=lambda i: t[i]) for t in dist.probs]
        assert argmax == [0, 1, 2]


class TestGoldOracleLabeler:
    def test_matches_only_listed_question(self):
        labeler = GoldOracleLabeler({"q one": [("a",)]})
        dist = labeler.label(["q", "two"], ["a", "b"])
        assert all(t == (0.0, 0.0, 1.0) for t in dist.probs)

    def test_repeated_span_occurrences_all_marked(self):
        labeler = GoldOracleLabeler({"q": [("a", "b")]})
        dist = labeler.label(["q"], ["a", "b", "x", "a", "b"])
        argmax = [max(range(3), key=lambda i: t[i]) for t in dist.probs]
        assert argmax == [0, 1, 2, 0, 1]

    def test_from_qa_pairs_uses_question_segmentation(self):
        pair = QAPair(
            qa_id="q",
            question="học kỳ chính",
            article_id="a",
            extractive_answer="kỳ chính",
            abstractive_answer="",
        )
        seg = Segmenter(Segmenter.DICTIONARY, {"học kỳ"})
        labeler = GoldOracleLabeler.from_qa_pairs([pair], question_seg=seg)
        assert "học_kỳ chính" in labeler.spans_by_question


class TestHttpLabeler:
    def test_success(self, monkeypatch):
        class FakeResponse:
            def json(self):
                return {"probs": [[0.7, 0.2, 0.1], [0.1, 0.8, 0.1]]}

        monkeypatch.setattr("regqa.reader.requests.post", lambda *a, **kw: FakeResponse())
        dist = HttpLabeler("http://labeler.test").label(["q"], ["t1", "t2"])
        assert len(dist) == 2

    def test_timeout_distinguished(self, monkeypatch):
        import requests

        def fake_post(*a, **kw):
            raise requests.Timeout("slow")

        monkeypatch.setattr("regqa.reader.requests.post", fake_post)
        with pytest.raises(LabelerTimeoutError):
            HttpLabeler("http://labeler.test").label(["q"], ["t"])

    def test_malformed_response(self, monkeypatch):
        class FakeResponse:
            def json(self):
                return {"wrong_key": []}

        monkeypatch.setattr("regqa.reader.requests.post", lambda *a, **kw: FakeResponse())
        with pytest.raises(LabelerProtocolError):
            HttpLabeler("http://labeler.test").label(["q"], ["t"])

    def test_wrong_length_response(self, monkeypatch):
        class FakeResponse:
            def json(self):
                return {"probs": [[0.7, 0.2, 0.1]]}

        monkeypatch.setattr("regqa.reader.requests.post", lambda *a, **kw: FakeResponse())
        with pytest.raises(LabelerProtocolError, match="1 triples for 2"):
            HttpLabeler("http://labeler.test").label(["q"], ["t1", "t2"])
