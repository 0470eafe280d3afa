"""Iterative tournament reasoning over a pluggable vision-language judge.

Candidates queue up, get sliced into batches of at most `batch_limit`, and
each batch is put to the judge with the query text and the candidates'
stitched image strips. Each batch contributes at most one survivor; rounds
repeat while more than one candidate remains. The judge answers with a strict
one-field JSON object ``{"choice": <ordinal or null>}``.
"""

from __future__ import annotations

import base64
import hashlib
import json
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol, Sequence, TypeVar

import numpy as np
import requests

from .errors import ConfigurationError, JudgeParseError, JudgeTransportError
from .selection import GroundingQuery
from .sequence import ImageSequence, encode_png

JUDGE_TOKEN_ENV = "MVGROUND_JUDGE_TOKEN"
DEFAULT_RETRIES = 2
DEFAULT_BACKOFF = (0.5, 2.0)

T = TypeVar("T")


@dataclass(frozen=True)
class Prompt:
    """One judge request: instruction text plus candidate images in label order.

    ``candidate_ids`` is bookkeeping for mock and transcript judges; remote
    clients transmit only text and images.
    """

    text: str
    images: tuple[np.ndarray, ...]
    candidate_ids: tuple[int, ...]


@dataclass(frozen=True)
class JudgeAnswer:
    """Parsed judge response: 1-based choice within the batch, or None to decline."""

    choice: int | None
    raw_text: str
    error: str | None = None


@dataclass(frozen=True)
class JudgeCall:
    round_index: int
    batch_index: int
    candidate_ids: tuple[int, ...]
    answer: JudgeAnswer
    latency_seconds: float


@dataclass
class ReasoningState:
    """Dynamic queue, round counter, and judge-call ledger of one tournament."""

    queue: list[ImageSequence]
    round_index: int = 0
    ledger: list[JudgeCall] = field(default_factory=list)


@dataclass(frozen=True)
class ReasoningResult:
    instance_id: int | None
    rounds: int
    ledger: tuple[JudgeCall, ...]

    @property
    def judge_calls(self) -> int:
        return len(self.ledger)


class JudgeClient(Protocol):
    supports_concurrency: bool

    def complete(self, prompt: Prompt) -> str: ...


def slice_batches(queue: Sequence[T], batch_limit: int) -> list[tuple[T, ...]]:
    """Consecutive chunks of at most batch_limit, order preserved."""
    if batch_limit < 2:
        raise ConfigurationError(
            f"batch limit must be >= 2 for the tournament to shrink, got {batch_limit}"
        )
    return [tuple(queue[i : i + batch_limit]) for i in range(0, len(queue), batch_limit)]


_PROMPT_TEMPLATE = """You are selecting an object in a 3D indoor scene.
You are shown {count} candidate objects. Each candidate is one image: a vertical strip of camera views with the candidate outlined by a red rectangle.
The images are given in order: {labels}.
Target description: "{query}"
Pick the single candidate that best matches the description, or decline if none matches.
Answer with exactly one JSON object and nothing else: {{"choice": <integer or null>}}
"""


def construct_prompt(query: GroundingQuery | str, batch: Sequence[ImageSequence]) -> Prompt:
    """Bundle the query, candidate labels, answer schema, and stitched images."""
    text = query.text if isinstance(query, GroundingQuery) else query
    if not text or not text.strip():
        raise ValueError("query text must be non-empty")
    if not batch:
        raise ValueError("batch must be non-empty")
    labels = ", ".join(f"Candidate {i + 1}" for i in range(len(batch)))
    prompt_text = _PROMPT_TEMPLATE.format(count=len(batch), labels=labels, query=text)
    return Prompt(
        text=prompt_text,
        images=tuple(seq.stitched for seq in batch),
        candidate_ids=tuple(seq.instance_id for seq in batch),
    )


def parse_choice(text: str, batch_size: int) -> int | None:
    """First strict ``{"choice": ...}`` object wins; anything else is unparseable.

    Valid values are null (decline) or an integer in 1..batch_size. Objects
    with extra fields, booleans, or out-of-range ordinals are skipped.
    """
    decoder = json.JSONDecoder()
    for i, ch in enumerate(text):
        if ch != "{":
            continue
        try:
            obj, _ = decoder.raw_decode(text[i:])
        except ValueError:
            continue
        if not isinstance(obj, dict) or set(obj) != {"choice"}:
            continue
        value = obj["choice"]
        if value is None:
            return None
        if isinstance(value, bool):
            continue
        if isinstance(value, int) and 1 <= value <= batch_size:
            return value
    raise JudgeParseError(f"no valid choice object in response: {text[:200]!r}")


def vlm_select(
    client: JudgeClient,
    prompt: Prompt,
    retries: int = DEFAULT_RETRIES,
    backoff: Sequence[float] = DEFAULT_BACKOFF,
) -> JudgeAnswer:
    """Query the judge; transport and parse failures retry, then fold into a decline."""
    last_error: Exception | None = None
    last_text = ""
    for attempt in range(retries + 1):
        try:
            last_text = client.complete(prompt)
            choice = parse_choice(last_text, len(prompt.candidate_ids))
            return JudgeAnswer(choice=choice, raw_text=last_text)
        except (JudgeTransportError, JudgeParseError) as exc:
            last_error = exc
            if attempt < retries and backoff:
                time.sleep(backoff[min(attempt, len(backoff) - 1)])
    return JudgeAnswer(choice=None, raw_text=last_text, error=str(last_error))


def predict(
    sequences: Sequence[ImageSequence],
    query: GroundingQuery | str,
    batch_limit: int,
    client: JudgeClient,
    retries: int = DEFAULT_RETRIES,
    backoff: Sequence[float] = DEFAULT_BACKOFF,
) -> ReasoningResult:
    """Run the tournament until at most one candidate survives.

    Every batch yields at most one survivor per round; declined batches are
    discarded. Returns the survivor's instance id, or None when the queue
    empties.
    """
    if batch_limit < 2:
        raise ConfigurationError(
            f"batch limit must be >= 2 for the tournament to shrink, got {batch_limit}"
        )
    ids = [seq.instance_id for seq in sequences]
    if len(set(ids)) != len(ids):
        raise ValueError(f"candidate instance ids must be unique, got {ids}")

    state = ReasoningState(queue=list(sequences))
    while len(state.queue) > 1:
        batches = slice_batches(state.queue, batch_limit)
        state.queue = []
        answers = _judge_batches(client, query, batches, retries, backoff)
        for batch_index, (batch, answer, latency) in enumerate(answers):
            state.ledger.append(
                JudgeCall(
                    round_index=state.round_index,
                    batch_index=batch_index,
                    candidate_ids=tuple(seq.instance_id for seq in batch),
                    answer=answer,
                    latency_seconds=latency,
                )
            )
            if answer.choice is not None:
                state.queue.append(batch[answer.choice - 1])
        state.round_index += 1

    if not state.queue:
        return ReasoningResult(instance_id=None, rounds=state.round_index, ledger=tuple(state.ledger))
    return ReasoningResult(
        instance_id=state.queue[0].instance_id,
        rounds=state.round_index,
        ledger=tuple(state.ledger),
    )


def _judge_batches(client, query, batches, retries, backoff):
    def run_one(batch):
        start = time.perf_counter()
        answer = vlm_select(client, construct_prompt(query, batch), retries, backoff)
        return batch, answer, time.perf_counter() - start

    if getattr(client, "supports_concurrency", False) and len(batches) > 1:
        with ThreadPoolExecutor(max_workers=len(batches)) as pool:
            return list(pool.map(run_one, batches))  # map preserves batch order
    return [run_one(batch) for batch in batches]


# --------------------------------------------------------------------------
# Judge clients
# --------------------------------------------------------------------------


class OracleJudge:
    """Picks the planted target whenever it appears in the batch, declines otherwise."""

    supports_concurrency = True

    def __init__(self, target_instance_id: int) -> None:
        self.target_instance_id = target_instance_id

    def complete(self, prompt: Prompt) -> str:
        if self.target_instance_id in prompt.candidate_ids:
            ordinal = prompt.candidate_ids.index(self.target_instance_id) + 1
            return json.dumps({"choice": ordinal})
        return '{"choice": null}'


class DecliningJudge:
    """Declines every batch."""

    supports_concurrency = True

    def complete(self, prompt: Prompt) -> str:
        return '{"choice": null}'


class ScriptedJudge:
    """Replays a fixed list of response texts; raises listed exceptions in place."""

    supports_concurrency = False

    def __init__(self, responses: Sequence[str | Exception]) -> None:
        self._responses = list(responses)
        self.calls = 0

    def complete(self, prompt: Prompt) -> str:
        if not self._responses:
            raise JudgeTransportError("scripted judge exhausted")
        self.calls += 1
        item = self._responses.pop(0)
        if isinstance(item, Exception):
            raise item
        return item


class RemoteJudgeClient:
    """Vision-language judge over HTTP.

    Protocol: POST ``{"prompt": str, "images": [base64 PNG, ...],
    "max_answer_tokens": int}``, response ``{"text": str}``. Bearer token from
    ``MVGROUND_JUDGE_TOKEN``.
    """

    supports_concurrency = True

    def __init__(
        self,
        endpoint: str,
        token: str | None = None,
        timeout: float = 120.0,
        max_answer_tokens: int = 64,
    ) -> None:
        self.endpoint = endpoint
        self.token = token if token is not None else os.environ.get(JUDGE_TOKEN_ENV, "")
        self.timeout = timeout
        self.max_answer_tokens = max_answer_tokens

    def complete(self, prompt: Prompt) -> str:
        payload = {
            "prompt": prompt.text,
            "images": [base64.b64encode(encode_png(img)).decode("ascii") for img in prompt.images],
            "max_answer_tokens": self.max_answer_tokens,
        }
        headers = {"Authorization": f"Bearer {self.token}"} if self.token else {}
        try:
            resp = requests.post(self.endpoint, json=payload, headers=headers, timeout=self.timeout)
            resp.raise_for_status()
            text = resp.json().get("text")
        except (requests.RequestException, ValueError) as exc:
            raise JudgeTransportError(f"judge endpoint {self.endpoint}: {exc}") from exc
        if not isinstance(text, str):
            raise JudgeTransportError(f"judge endpoint {self.endpoint}: response missing 'text'")
        return text


def prompt_digest(prompt: Prompt) -> str:
    """Stable digest over prompt text and raw image bytes."""
    h = hashlib.sha256()
    h.update(prompt.text.encode("utf-8"))
    for img in prompt.images:
        arr = np.ascontiguousarray(img)
        h.update(str(arr.shape).encode("ascii"))
        h.update(arr.tobytes())
    return h.hexdigest()


class TranscriptWriter:
    """Append-only judge transcript: one ``<digest>\\t<json response>`` line per call."""

    def __init__(self, path: str | Path) -> None:
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.path.write_text("")
        self._lock = threading.Lock()

    def append(self, digest: str, response: str) -> None:
        line = f"{digest}\t{json.dumps(response)}\n"
        with self._lock:
            with self.path.open("a") as fh:
                fh.write(line)


class RecordingJudge:
    """Wraps a judge and logs every (prompt digest, response) pair to a transcript."""

    supports_concurrency = False  # keeps the transcript in call order

    def __init__(self, inner: JudgeClient, writer: TranscriptWriter) -> None:
        self.inner = inner
        self.writer = writer

    def complete(self, prompt: Prompt) -> str:
        response = self.inner.complete(prompt)
        self.writer.append(prompt_digest(prompt), response)
        return response


class TranscriptJudge:
    """Replays recorded responses keyed by prompt digest; duplicates replay in order."""

    supports_concurrency = True

    def __init__(self, path: str | Path) -> None:
        self.path = Path(path)
        self._records: dict[str, list[str]] = {}
        self._lock = threading.Lock()
        for line_no, line in enumerate(self.path.read_text().splitlines(), start=1):
            if not line.strip():
                continue
            digest, _, encoded = line.partition("\t")
            if not encoded:
                raise JudgeTransportError(f"{self.path}:{line_no}: malformed transcript line")
            self._records.setdefault(digest, []).append(json.loads(encoded))

    def complete(self, prompt: Prompt) -> str:
        digest = prompt_digest(prompt)
        with self._lock:
            bucket = self._records.get(digest)
            if not bucket:
                raise JudgeTransportError(
                    f"{self.path}: no transcript record for prompt digest {digest[:12]}"
                )
            return bucket.pop(0)
