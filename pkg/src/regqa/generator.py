"""Abstractive answer generation behind a remote seq2seq endpoint.

The generator receives the question and the extractive answer joined into a
single separator-delimited string:

    standard:  "<question> </s> <extractive> </s>"
    sentinel:  "<s> <question> </s></s> <extractive> </s>"

(the sentinel variant exists for models that expect a leading start token).
When no endpoint is configured, or the endpoint fails, a deterministic
fallback returns the extractive answer with "#" separators rewritten to "; ",
flagged as such.

Wire protocol: POST /generate with {"input": formatted} -> {"text": result}.
"""

from __future__ import annotations

from dataclasses import dataclass

import requests

STANDARD = "standard"
SENTINEL = "sentinel"
TEMPLATES = (STANDARD, SENTINEL)

REMOTE = "remote"
FALLBACK = "fallback"

_SEPARATORS = ("</s>", "<s>")


@dataclass(frozen=True)
class GeneratorInput:
    question: str
    extractive: str
    formatted: str


@dataclass(frozen=True)
class GeneratorOutput:
    text: str
    source: str  # REMOTE or FALLBACK
    error: str | None = None


def find_separator(text: str) -> str | None:
    """Return the first template separator token occurring in ``text``, if any."""
    for sep in _SEPARATORS:
        if sep in text:
            return sep
    return None


def format_generator_input(question: str, extractive: str, template: str = STANDARD) -> GeneratorInput:
    """Instantiate the generator input template.

    Inputs containing literal separator tokens are rejected rather than
    escaped, which keeps the formatting injective.
    """
    if not question:
        raise ValueError("question must be non-empty")
    if not extractive:
        raise ValueError("extractive answer must be non-empty")
    for text in (question, extractive):
        sep = find_separator(text)
        if sep is not None:
            raise ValueError(f"input may not contain the separator token {sep!r}")
    if template == STANDARD:
        formatted = f"{question} </s> {extractive} </s>"
    elif template == SENTINEL:
        formatted = f"<s> {question} </s></s> {extractive} </s>"
    else:
        raise ValueError(f"unknown template {template!r}, expected one of {TEMPLATES}")
    return GeneratorInput(question=question, extractive=extractive, formatted=formatted)


def _fallback_text(gen_input: GeneratorInput) -> str:
    return gen_input.extractive.replace("#", "; ")


class HttpGeneratorClient:
    def __init__(self, endpoint: str, timeout: float = 30.0):
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout

    def generate(self, formatted: str) -> str:
        response = requests.post(
            f"{self.endpoint}/generate", json={"input": formatted}, timeout=self.timeout
        )
        response.raise_for_status()
        text = response.json()["text"]
        if not isinstance(text, str):
            raise ValueError(f"generator returned {type(text).__name__}, expected str")
        return text


def generate_abstractive(gen_input: GeneratorInput, client=None) -> GeneratorOutput:
    """Call the remote generator, or fall back to the extractive text.

    Remote failures (timeout, transport, malformed payload, empty text)
    degrade to the fallback and record why.
    """
    if client is None:
        return GeneratorOutput(text=_fallback_text(gen_input), source=FALLBACK)
    try:
        text = client.generate(gen_input.formatted)
    except requests.Timeout as exc:
        return GeneratorOutput(
            text=_fallback_text(gen_input), source=FALLBACK, error=f"generator timeout: {exc}"
        )
    except (requests.RequestException, ValueError, KeyError, TypeError) as exc:
        return GeneratorOutput(
            text=_fallback_text(gen_input), source=FALLBACK, error=f"generator failed: {exc}"
        )
    if not text:
        return GeneratorOutput(
            text=_fallback_text(gen_input), source=FALLBACK, error="generator returned empty text"
        )
    return GeneratorOutput(text=text, source=REMOTE)
