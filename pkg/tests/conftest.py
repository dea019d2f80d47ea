import random
from pathlib import Path

import pytest

from regqa.corpus import Article, Corpus, Document, Segmenter, load_corpus, load_qa_dataset

SAMPLE_DIR = Path(__file__).resolve().parent.parent / "data" / "sample"

# small vocabulary so random corpora have meaningful term overlap
VOCAB = [
    "credit", "exam", "grade", "semester", "student", "board", "module",
    "thesis", "tuition", "deadline", "appeal", "campus", "diploma", "leave",
    "retake", "enroll", "regulation", "article", "permit", "library",
]


def corpus_from_texts(texts: dict[str, str]) -> Corpus:
    """Build an in-memory corpus with one document holding every article."""
    corpus = Corpus()
    corpus.documents["doc-1"] = Document(doc_id="doc-1", title="Synthetic regulation")
    seg = Segmenter()
    for article_id, text in texts.items():
        corpus.articles[article_id] = Article(
            article_id=article_id,
            doc_id="doc-1",
            title=f"Article {article_id}",
            text=text,
            tokens=seg.segment(text),
        )
        corpus.documents["doc-1"].article_ids.append(article_id)
    return corpus


def random_texts(rng: random.Random, max_articles: int = 20, max_tokens: int = 30) -> dict[str, str]:
    """Random article texts over the shared vocabulary; every article non-empty."""
    n = rng.randint(2, max_articles)
    return {
        f"a{idx:02d}": " ".join(rng.choices(VOCAB, k=rng.randint(1, max_tokens)))
        for idx in range(n)
    }


def random_query(rng: random.Random, max_len: int = 6) -> list[str]:
    return rng.choices(VOCAB, k=rng.randint(1, max_len))


@pytest.fixture(scope="session")
def sample_corpus() -> Corpus:
    return load_corpus(SAMPLE_DIR / "corpus.jsonl")


@pytest.fixture(scope="session")
def sample_qa(sample_corpus):
    return load_qa_dataset(SAMPLE_DIR / "qa.jsonl", sample_corpus)
