"""Semantic proposal selection.

Confidence-gates instance masks, builds the per-scene object profile table,
extracts the target category from the query, and picks the proposal set whose
category is most cosine-similar to the target in a text embedding space.
"""

from __future__ import annotations

import hashlib
import os
import re
import time
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Protocol, Sequence

import numpy as np
import requests

from .errors import (
    DegenerateEmbeddingError,
    EmbeddingProviderError,
    NoProposalsError,
    ParserError,
)
from .lexicon import INDOOR_CLASSES, STOPWORDS
from .scene import Box3D, InstanceMask, PointCloud, mask_to_box3d

EMBED_TOKEN_ENV = "MVGROUND_EMBED_TOKEN"
PARSER_TOKEN_ENV = "MVGROUND_PARSER_TOKEN"

# Below this similarity gap between the best and second-best category the
# winner is reported with a near-tie flag instead of silently trusted.
NEAR_TIE_GAP = 1e-6

_WORD_RE = re.compile(r"[a-z0-9]+")


@dataclass(frozen=True)
class ProfileRow:
    """One profile table row: fresh row id, source mask, category, and 3D box."""

    row_id: int
    instance_id: int
    category: str
    box: Box3D
    mask: InstanceMask

    @property
    def confidence(self) -> float:
        return self.mask.confidence


@dataclass(frozen=True)
class ObjectProfileTable:
    rows: tuple[ProfileRow, ...]

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def categories(self) -> tuple[str, ...]:
        """Distinct categories in lexicographic order."""
        return tuple(sorted({row.category for row in self.rows}))

    def by_instance_id(self, instance_id: int) -> ProfileRow:
        for row in self.rows:
            if row.instance_id == instance_id:
                return row
        raise KeyError(f"no profile row with instance_id {instance_id}")


@dataclass(frozen=True)
class GroundingQuery:
    """A referring expression, optionally with a dataset-annotated target category."""

    text: str
    annotated_category: str | None = None

    def __post_init__(self) -> None:
        if not self.text or not self.text.strip():
            raise ValueError("query text must be non-empty")


@dataclass(frozen=True)
class ParsedTarget:
    category: str
    source: str  # "annotated" | "parser" | "fallback"


@dataclass(frozen=True)
class ProposalSet:
    """All profile rows sharing the category most similar to the target."""

    target_category: str
    proposals: tuple[ProfileRow, ...]
    similarity: Mapping[str, float] = field(default_factory=dict)
    near_tie: bool = False


def filter_instances(
    masks: Sequence[InstanceMask], confidence_threshold: float
) -> list[InstanceMask]:
    """Keep masks with confidence >= threshold, preserving input order."""
    return [m for m in masks if m.confidence >= confidence_threshold]


def build_opt(masks: Sequence[InstanceMask], cloud: PointCloud) -> ObjectProfileTable:
    """Build the profile table from already-filtered masks; row ids run 0..m-1."""
    rows = tuple(
        ProfileRow(
            row_id=i,
            instance_id=mask.instance_id,
            category=mask.category,
            box=mask_to_box3d(mask, cloud),
            mask=mask,
        )
        for i, mask in enumerate(masks)
    )
    return ObjectProfileTable(rows=rows)


class QueryParser(Protocol):
    def parse(self, text: str) -> str: ...


class HeuristicQueryParser:
    """Deterministic offline parser.

    Lowercases the query, takes the first sentence, and returns the last token
    of the earliest lexicon phrase found in it; with no lexicon hit, returns
    the first non-stopword token.
    """

    def __init__(
        self,
        lexicon: Iterable[str] = INDOOR_CLASSES,
        stopwords: frozenset[str] = STOPWORDS,
    ) -> None:
        self._phrases = {tuple(p.lower().split()) for p in lexicon}
        self._max_len = max((len(p) for p in self._phrases), default=1)
        self._stopwords = stopwords

    def parse(self, text: str) -> str:
        sentence = ""
        for part in re.split(r"[.!?]", text.lower()):
            if part.strip():
                sentence = part
                break
        tokens = _WORD_RE.findall(sentence)
        if not tokens:
            tokens = _WORD_RE.findall(text.lower())
        if not tokens:
            raise ParserError(f"query has no words: {text!r}")
        for i in range(len(tokens)):
            for length in range(min(self._max_len, len(tokens) - i), 0, -1):
                phrase = tuple(tokens[i : i + length])
                if phrase in self._phrases:
                    return phrase[-1]
        for token in tokens:
            if token not in self._stopwords:
                return token
        return tokens[0]


class RemoteQueryParser:
    """LLM-backed category extraction over HTTP.

    Protocol: POST ``{"query": str, "instruction": str}``, response
    ``{"category": str}``. Bearer token from ``MVGROUND_PARSER_TOKEN``.
    """

    INSTRUCTION = (
        "Name the single object category that the following description refers to. "
        "Answer with the category name only."
    )

    def __init__(
        self,
        endpoint: str,
        token: str | None = None,
        timeout: float = 30.0,
        retries: int = 2,
        backoff: Sequence[float] = (0.5, 2.0),
    ) -> None:
        self.endpoint = endpoint
        self.token = token if token is not None else os.environ.get(PARSER_TOKEN_ENV, "")
        self.timeout = timeout
        self.retries = retries
        self.backoff = tuple(backoff)

    def _headers(self) -> dict[str, str]:
        return {"Authorization": f"Bearer {self.token}"} if self.token else {}

    def parse(self, text: str) -> str:
        last_error: Exception | None = None
        for attempt in range(self.retries + 1):
            try:
                resp = requests.post(
                    self.endpoint,
                    json={"query": text, "instruction": self.INSTRUCTION},
                    headers=self._headers(),
                    timeout=self.timeout,
                )
                resp.raise_for_status()
                category = resp.json().get("category")
                if not isinstance(category, str) or not category.strip():
                    raise ParserError(f"parser endpoint {self.endpoint}: empty category")
                return category.strip()
            except (requests.RequestException, ValueError, ParserError) as exc:
                last_error = exc
                if attempt < self.retries and self.backoff:
                    time.sleep(self.backoff[min(attempt, len(self.backoff) - 1)])
        raise ParserError(f"parser endpoint {self.endpoint} failed: {last_error}")


def parse_target_category(query: GroundingQuery, parser: QueryParser) -> ParsedTarget:
    """Extract the target category, falling back to the heuristic on remote failure."""
    if query.annotated_category:
        return ParsedTarget(category=query.annotated_category, source="annotated")
    try:
        return ParsedTarget(category=parser.parse(query.text), source="parser")
    except ParserError:
        if isinstance(parser, HeuristicQueryParser):
            raise
        category = HeuristicQueryParser().parse(query.text)
        return ParsedTarget(category=category, source="fallback")


class EmbeddingProvider(Protocol):
    supports_concurrency: bool

    def embed(self, texts: Sequence[str]) -> np.ndarray: ...

    def describe(self) -> str: ...


class HashEmbeddingProvider:
    """Deterministic offline embeddings: seeded hash expanded to a unit vector.

    Distinct texts land on effectively random directions, so equal text is the
    only reliable way to score similarity 1. No network, no model weights.
    """

    supports_concurrency = True

    def __init__(self, dim: int = 16, seed: int = 0) -> None:
        if dim < 2:
            raise ValueError(f"embedding dim must be >= 2, got {dim}")
        self.dim = dim
        self.seed = seed

    def describe(self) -> str:
        return f"hash-embed(dim={self.dim}, seed={self.seed})"

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        out = np.empty((len(texts), self.dim), dtype=np.float64)
        for i, text in enumerate(texts):
            if not text:
                raise ValueError("cannot embed empty text")
            digest = hashlib.sha256(f"{self.seed}|{text}".encode("utf-8")).digest()
            gen = np.random.Generator(np.random.PCG64(int.from_bytes(digest[:8], "little")))
            vec = gen.standard_normal(self.dim)
            out[i] = vec / np.linalg.norm(vec)
        return out


class RemoteEmbeddingProvider:
    """Text-encoder service over HTTP.

    Protocol: POST ``{"texts": [str, ...]}``, response
    ``{"embeddings": [[float, ...], ...], "dim": d}``. Bearer token from
    ``MVGROUND_EMBED_TOKEN``. No internal retries; callers may retry.
    """

    supports_concurrency = True

    def __init__(self, endpoint: str, token: str | None = None, timeout: float = 30.0) -> None:
        self.endpoint = endpoint
        self.token = token if token is not None else os.environ.get(EMBED_TOKEN_ENV, "")
        self.timeout = timeout

    def describe(self) -> str:
        return f"remote-embed({self.endpoint})"

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        if any(not t for t in texts):
            raise ValueError("cannot embed empty text")
        headers = {"Authorization": f"Bearer {self.token}"} if self.token else {}
        try:
            resp = requests.post(
                self.endpoint, json={"texts": list(texts)}, headers=headers, timeout=self.timeout
            )
            resp.raise_for_status()
            data = resp.json()
            vectors = np.asarray(data["embeddings"], dtype=np.float64)
            dim = int(data["dim"])
        except (requests.RequestException, ValueError, KeyError, TypeError) as exc:
            raise EmbeddingProviderError(f"{self.describe()} failed: {exc}") from exc
        if vectors.ndim != 2 or vectors.shape != (len(texts), dim):
            raise EmbeddingProviderError(
                f"{self.describe()} returned shape {vectors.shape}, expected ({len(texts)}, {dim})"
            )
        return vectors


def embed_text(provider: EmbeddingProvider, text: str) -> np.ndarray:
    """Embed one text. Deterministic per provider: same text, same vector."""
    if not text:
        raise ValueError("cannot embed empty text")
    return provider.embed([text])[0]


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise DegenerateEmbeddingError("degenerate embedding: zero norm")
    return float(np.dot(a, b) / (na * nb))


def select_proposals(
    opt: ObjectProfileTable, target_category: str, provider: EmbeddingProvider
) -> ProposalSet:
    """Pick the profile category with maximum cosine similarity to the target.

    Similarity is computed once per distinct category. Ties resolve to the
    lexicographically smallest category; a sub-1e-6 winning margin sets the
    near-tie flag.
    """
    if not opt.rows:
        raise NoProposalsError("no proposals in scene")
    categories = opt.categories()
    vectors = provider.embed([target_category, *categories])
    target_vec = vectors[0]
    similarity = {
        cat: cosine_similarity(target_vec, vec) for cat, vec in zip(categories, vectors[1:])
    }
    best = max(categories, key=lambda c: similarity[c])
    ranked = sorted(similarity.values(), reverse=True)
    near_tie = len(ranked) > 1 and (ranked[0] - ranked[1]) < NEAR_TIE_GAP
    proposals = tuple(row for row in opt.rows if row.category == best)
    return ProposalSet(
        target_category=best, proposals=proposals, similarity=similarity, near_tie=near_tie
    )
