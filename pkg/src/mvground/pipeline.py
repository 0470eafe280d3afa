"""End-to-end orchestration: select, project, stitch, reason, box lookup.

The stage order is fixed. Ablations are expressed through parameter values
(e.g. max_views=1 approximates single-view grounding), never by disabling a
stage.
"""

from __future__ import annotations

import dataclasses
import json
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from .bundle_io import load_scene_bundle
from .errors import BundleFormatError, ConfigurationError, GroundingError, NoProposalsError
from .evaluation import (
    GroundingRecord,
    MetricsReport,
    QueryRecord,
    classify_split,
    evaluate,
    read_queries,
    write_predictions,
    write_report,
)
from .projection import project_mask_to_view, rank_views, sample_frames
from .reasoning import (
    DecliningJudge,
    JudgeCall,
    JudgeClient,
    OracleJudge,
    RecordingJudge,
    RemoteJudgeClient,
    TranscriptJudge,
    TranscriptWriter,
    predict,
)
from .scene import Box3D, SceneBundle
from .selection import (
    EmbeddingProvider,
    GroundingQuery,
    HashEmbeddingProvider,
    HeuristicQueryParser,
    ObjectProfileTable,
    ParsedTarget,
    QueryParser,
    RemoteEmbeddingProvider,
    RemoteQueryParser,
    build_opt,
    filter_instances,
    parse_target_category,
    select_proposals,
)
from .sequence import annotate_view, expand_rect, export_sequence, min_bounding_rect, stitch_sequence

@dataclass
class PipelineConfig:
    """All pipeline knobs. Defaults follow the reference operating point."""

    confidence_threshold: float = 0.2   # instance masks below this are dropped
    visibility_threshold: float = 0.25  # relative depth agreement for a visible point
    expansion_ratio: float = 0.25       # proportional growth of candidate rectangles
    max_views: int = 5                  # views stitched per candidate
    frame_interval: int = 20            # sample every k-th frame of the capture
    batch_limit: int = 4                # max candidates per judge call
    embedding_provider: str = "hash"    # "hash" | "remote:<url>"
    embedding_dim: int = 16
    query_parser: str = "heuristic"     # "heuristic" | "remote:<url>"
    judge: str = "decline"              # "decline" | "oracle[:<id>]" | "transcript:<path>"
                                        # | "record:<path>" | "remote:<url>"
    retries: int = 2
    retry_backoff: tuple[float, float] = (0.5, 2.0)
    max_answer_tokens: int = 64
    export_sequences: str | None = None
    workers: int = 1

    def validate(self) -> None:
        if not (0.0 <= self.confidence_threshold <= 1.0):
            raise ConfigurationError(f"confidence_threshold out of [0,1]: {self.confidence_threshold}")
        if not (0.0 <= self.visibility_threshold <= 1.0):
            raise ConfigurationError(f"visibility_threshold out of [0,1]: {self.visibility_threshold}")
        if self.expansion_ratio < 0:
            raise ConfigurationError(f"expansion_ratio must be >= 0: {self.expansion_ratio}")
        if self.max_views < 1:
            raise ConfigurationError(f"max_views must be >= 1: {self.max_views}")
        if self.frame_interval < 1:
            raise ConfigurationError(f"frame_interval must be >= 1: {self.frame_interval}")
        if self.batch_limit < 2:
            raise ConfigurationError(f"batch_limit must be >= 2: {self.batch_limit}")
        if self.retries < 0:
            raise ConfigurationError(f"retries must be >= 0: {self.retries}")
        if self.workers < 1:
            raise ConfigurationError(f"workers must be >= 1: {self.workers}")

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        """Load a flat JSON key-value document; keys mirror the field names."""
        data = json.loads(Path(path).read_text())
        if not isinstance(data, dict):
            raise ConfigurationError(f"{path}: config must be a flat JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"{path}: unknown config keys {sorted(unknown)}")
        if "retry_backoff" in data:
            data["retry_backoff"] = tuple(data["retry_backoff"])
        config = cls(**data)
        config.validate()
        return config

    def to_dict(self) -> dict:
        data = dataclasses.asdict(self)
        data["retry_backoff"] = list(self.retry_backoff)
        return data


@dataclass(frozen=True)
class GroundingResult:
    """Outcome of one grounding run, including enough bookkeeping to audit it."""

    scene_id: str
    instance_id: int
    box: Box3D
    fallback: bool
    target: ParsedTarget
    near_tie: bool
    candidate_ids: tuple[int, ...]   # proposal set, in profile order
    sequenced_ids: tuple[int, ...]   # candidates that kept at least one view
    rounds: int
    ledger: tuple[JudgeCall, ...]
    timings: dict[str, float] = field(default_factory=dict)

    @property
    def judge_calls(self) -> int:
        return len(self.ledger)


def make_embedding_provider(config: PipelineConfig) -> EmbeddingProvider:
    spec = config.embedding_provider
    if spec == "hash":
        return HashEmbeddingProvider(dim=config.embedding_dim)
    if spec.startswith("remote:"):
        return RemoteEmbeddingProvider(endpoint=spec[len("remote:"):])
    raise ConfigurationError(f"unknown embedding provider spec: {spec!r}")


def make_query_parser(config: PipelineConfig) -> QueryParser:
    spec = config.query_parser
    if spec == "heuristic":
        return HeuristicQueryParser()
    if spec.startswith("remote:"):
        return RemoteQueryParser(
            endpoint=spec[len("remote:"):],
            retries=config.retries,
            backoff=config.retry_backoff,
        )
    raise ConfigurationError(f"unknown query parser spec: {spec!r}")


def make_judge_factory(config: PipelineConfig) -> Callable[[int | None], JudgeClient]:
    """Build a per-query judge factory from the config's judge spec string.

    The factory takes the query's planted target instance id (or None); only
    oracle-style judges use it.
    """
    spec = config.judge
    if spec == "decline":
        shared = DecliningJudge()
        return lambda target=None: shared
    if spec == "oracle":
        def oracle_factory(target=None):
            if target is None:
                raise ConfigurationError("oracle judge needs a target instance id per query")
            return OracleJudge(target)
        return oracle_factory
    if spec.startswith("oracle:"):
        fixed = int(spec[len("oracle:"):])
        shared = OracleJudge(fixed)
        return lambda target=None: shared
    if spec.startswith("transcript:"):
        shared = TranscriptJudge(spec[len("transcript:"):])
        return lambda target=None: shared
    if spec.startswith("record:"):
        writer = TranscriptWriter(spec[len("record:"):])
        def record_factory(target=None):
            inner = OracleJudge(target) if target is not None else DecliningJudge()
            return RecordingJudge(inner, writer)
        return record_factory
    if spec.startswith("remote:"):
        shared = RemoteJudgeClient(
            endpoint=spec[len("remote:"):], max_answer_tokens=config.max_answer_tokens
        )
        return lambda target=None: shared
    raise ConfigurationError(f"unknown judge spec: {spec!r}")


def prepare_profile_table(bundle: SceneBundle, config: PipelineConfig) -> ObjectProfileTable:
    """Confidence-filter the bundle's masks and build the profile table."""
    return build_opt(filter_instances(bundle.masks, config.confidence_threshold), bundle.cloud)


def ground(
    bundle: SceneBundle,
    query: GroundingQuery | str,
    config: PipelineConfig,
    provider: EmbeddingProvider,
    parser: QueryParser,
    judge: JudgeClient,
    opt: ObjectProfileTable | None = None,
) -> GroundingResult:
    """Ground one query in one scene.

    Candidates with no visible view are removed before reasoning; if none
    remain or the judge declines everything, the highest-confidence proposal
    is returned with the fallback flag set.
    """
    config.validate()
    if isinstance(query, str):
        query = GroundingQuery(text=query)
    timings: dict[str, float] = {}
    t_total = time.perf_counter()

    t0 = time.perf_counter()
    if opt is None:
        opt = prepare_profile_table(bundle, config)
    if not opt.rows:
        raise NoProposalsError("no proposals in scene")
    target = parse_target_category(query, parser)
    proposal_set = select_proposals(opt, target.category, provider)
    timings["selection"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    frames = sample_frames(bundle.frames, config.frame_interval)
    ranked_views = {}
    for row in proposal_set.proposals:
        projections = [
            project_mask_to_view(row.mask, bundle.cloud, frame, config.visibility_threshold)
            for frame in frames
        ]
        top = rank_views(projections, config.max_views)
        if top:
            ranked_views[row.instance_id] = top
    timings["projection"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    frame_index = {frame.frame_id: frame for frame in frames}
    sequences = []
    for row in proposal_set.proposals:
        if row.instance_id not in ranked_views:
            continue  # zero visible views: dropped before reasoning
        views = []
        for vp in ranked_views[row.instance_id]:
            frame = frame_index[vp.frame_id]
            rect = min_bounding_rect(vp.valid_pixels)
            rect = expand_rect(rect, config.expansion_ratio, frame.width, frame.height)
            views.append(annotate_view(frame, rect))
        sequences.append(stitch_sequence(views, row.instance_id))
    if config.export_sequences:
        for seq in sequences:
            export_sequence(seq, config.export_sequences, bundle.scene_id)
    timings["stitching"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    if sequences:
        outcome = predict(
            sequences,
            query,
            config.batch_limit,
            judge,
            retries=config.retries,
            backoff=config.retry_backoff,
        )
        winner, rounds, ledger = outcome.instance_id, outcome.rounds, outcome.ledger
    else:
        winner, rounds, ledger = None, 0, ()
    timings["reasoning"] = time.perf_counter() - t0

    fallback = winner is None
    if fallback:
        # highest segmentation confidence wins, ties to the smaller instance id
        best = sorted(proposal_set.proposals, key=lambda r: (-r.confidence, r.instance_id))[0]
        winner = best.instance_id
    box = opt.by_instance_id(winner).box
    timings["total"] = time.perf_counter() - t_total

    return GroundingResult(
        scene_id=bundle.scene_id,
        instance_id=winner,
        box=box,
        fallback=fallback,
        target=target,
        near_tie=proposal_set.near_tie,
        candidate_ids=tuple(row.instance_id for row in proposal_set.proposals),
        sequenced_ids=tuple(seq.instance_id for seq in sequences),
        rounds=rounds,
        ledger=ledger,
        timings=timings,
    )


class _SerializedProvider:
    """Serializes embed calls to a provider that declares no concurrency support."""

    supports_concurrency = True  # safe once wrapped

    def __init__(self, inner: EmbeddingProvider) -> None:
        self._inner = inner
        self._lock = threading.Lock()

    def describe(self) -> str:
        return self._inner.describe()

    def embed(self, texts):
        with self._lock:
            return self._inner.embed(texts)


class _SerializedJudge:
    """Serializes complete calls to a judge that declares no concurrency support."""

    supports_concurrency = True  # safe once wrapped

    def __init__(self, inner: JudgeClient, lock: threading.Lock) -> None:
        self._inner = inner
        self._lock = lock

    def complete(self, prompt):
        with self._lock:
            return self._inner.complete(prompt)


@dataclass(frozen=True)
class BenchmarkResult:
    records: tuple[GroundingRecord, ...]
    errors: tuple[tuple[int, str], ...]  # (line number, message)
    report: MetricsReport | None
    predictions_path: Path | None = None
    report_path: Path | None = None


def run_benchmark(
    bundles_dir: str | Path,
    queries_path: str | Path,
    config: PipelineConfig,
    provider: EmbeddingProvider | None = None,
    parser: QueryParser | None = None,
    judge_factory: Callable[[int | None], JudgeClient] | None = None,
    out_dir: str | Path | None = None,
) -> BenchmarkResult:
    """Ground every query line against its scene bundle and score the results.

    Per-query failures are recorded as error entries and the run continues.
    With deterministic providers and judges the emitted predictions file is
    byte-identical across runs.
    """
    config.validate()
    provider = provider if provider is not None else make_embedding_provider(config)
    parser = parser if parser is not None else make_query_parser(config)
    judge_factory = judge_factory if judge_factory is not None else make_judge_factory(config)

    judge_lock = threading.Lock()
    if config.workers > 1 and not getattr(provider, "supports_concurrency", False):
        provider = _SerializedProvider(provider)

    queries, errors = read_queries(queries_path)
    errors = list(errors)

    bundles: dict[str, SceneBundle] = {}
    tables: dict[str, ObjectProfileTable] = {}
    bundle_errors: dict[str, str] = {}
    for _, record in queries:
        sid = record.scene_id
        if sid in bundles or sid in bundle_errors:
            continue
        try:
            bundles[sid] = load_scene_bundle(Path(bundles_dir) / sid)
            tables[sid] = prepare_profile_table(bundles[sid], config)
        except (BundleFormatError, OSError) as exc:
            bundle_errors[sid] = str(exc)

    def run_one(item: tuple[int, QueryRecord]) -> tuple[int, GroundingRecord | None, str | None]:
        line_no, record = item
        if record.scene_id in bundle_errors:
            return line_no, None, f"scene {record.scene_id}: {bundle_errors[record.scene_id]}"
        bundle = bundles[record.scene_id]
        opt = tables[record.scene_id]
        judge = judge_factory(record.gt_instance_id)
        if config.workers > 1 and not getattr(judge, "supports_concurrency", False):
            judge = _SerializedJudge(judge, judge_lock)
        started = time.perf_counter()
        try:
            result = ground(
                bundle,
                GroundingQuery(text=record.query),
                config,
                provider,
                parser,
                judge,
                opt=opt,
            )
        except GroundingError as exc:
            return line_no, None, f"scene {record.scene_id}: {exc}"
        grounding_record = GroundingRecord(
            scene_id=record.scene_id,
            query=record.query,
            instance_id=result.instance_id,
            predicted_box=result.box,
            gt_box=record.gt_box,
            split=classify_split(opt, record.gt_category),
            fallback=result.fallback,
            judge_calls=result.judge_calls,
            wall_time_seconds=time.perf_counter() - started,
        )
        return line_no, grounding_record, None

    if config.workers > 1 and len(queries) > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            outcomes = list(pool.map(run_one, queries))
    else:
        outcomes = [run_one(item) for item in queries]

    records: list[GroundingRecord] = []
    for line_no, rec, error in outcomes:
        if error is not None:
            errors.append((line_no, error))
        else:
            records.append(rec)
    errors.sort(key=lambda e: e[0])

    report = evaluate(records) if records else None

    predictions_path = report_path = None
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        predictions_path = out / "predictions.jsonl"
        write_predictions(records, predictions_path)
        report_path = out / "report.json"
        payload = {
            "metrics": report.to_dict() if report else None,
            "errors": [{"line": line, "message": msg} for line, msg in errors],
            "num_queries": len(queries),
            "num_records": len(records),
            "config": config.to_dict(),
        }
        write_report(payload, report_path)

    return BenchmarkResult(
        records=tuple(records),
        errors=tuple(errors),
        report=report,
        predictions_path=predictions_path,
        report_path=report_path,
    )


def parse_sweep_spec(spec: str, config: PipelineConfig) -> tuple[str, list]:
    """Parse "key=v1,v2,..." against the config's field types."""
    key, _, raw = spec.partition("=")
    key = key.strip()
    fields = {f.name: f for f in dataclasses.fields(PipelineConfig)}
    if key not in fields:
        raise ConfigurationError(f"unknown sweep key {key!r}")
    if not raw:
        raise ConfigurationError(f"sweep spec {spec!r} has no values")
    current = getattr(config, key)
    caster = int if isinstance(current, int) and not isinstance(current, bool) else float
    try:
        values = [caster(v) for v in raw.split(",")]
    except ValueError as exc:
        raise ConfigurationError(f"sweep spec {spec!r}: {exc}") from exc
    return key, values


def run_sweep(
    bundles_dir: str | Path,
    queries_path: str | Path,
    config: PipelineConfig,
    sweep_spec: str,
    out_root: str | Path,
    **run_kwargs,
) -> dict:
    """Run the benchmark once per swept value; emits per-value dirs plus a summary."""
    key, values = parse_sweep_spec(sweep_spec, config)
    out_root = Path(out_root)
    summary = {"key": key, "runs": []}
    for value in values:
        swept = dataclasses.replace(config, **{key: value})
        out_dir = out_root / f"{key}={value}"
        result = run_benchmark(bundles_dir, queries_path, swept, out_dir=out_dir, **run_kwargs)
        entry = {"value": value, "out_dir": str(out_dir), "num_records": len(result.records)}
        if result.report is not None:
            entry["accuracy"] = {str(t): result.report.overall.accuracy[t] for t in result.report.thresholds}
        summary["runs"].append(entry)
    out_root.mkdir(parents=True, exist_ok=True)
    (out_root / "sweep_summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary
