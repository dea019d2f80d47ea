"""Hybrid retrieval question answering over regulation corpora."""

from regqa.config import PipelineConfig, load_config
from regqa.corpus import Corpus, Segmenter, load_corpus, load_qa_dataset, split_dataset
from regqa.fusion import FusionConfig, query_context
from regqa.pipeline import Pipeline, PipelineResponse

__version__ = "0.1.0"

__all__ = [
    "Corpus",
    "FusionConfig",
    "Pipeline",
    "PipelineConfig",
    "PipelineResponse",
    "Segmenter",
    "__version__",
    "load_config",
    "load_corpus",
    "load_qa_dataset",
    "query_context",
    "split_dataset",
]
