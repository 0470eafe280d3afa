"""Metrics: axis-aligned 3D IoU, accuracy at IoU thresholds, unique/multiple split.

A query counts as correct at threshold t when the predicted box overlaps the
ground truth with IoU >= t. The split is "unique" when the scene's profile
table holds exactly one instance of the ground-truth category, "multiple"
otherwise.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .scene import Box3D
from .selection import ObjectProfileTable

logger = logging.getLogger(__name__)

DEFAULT_THRESHOLDS = (0.25, 0.5)


def iou3d(a: Box3D, b: Box3D) -> float:
    """Axis-aligned intersection over union; a zero-volume union scores 1 only on equality."""
    a_min, a_max = np.array(a.min_corner), np.array(a.max_corner)
    b_min, b_max = np.array(b.min_corner), np.array(b.max_corner)
    extents = np.minimum(a_max, b_max) - np.maximum(a_min, b_min)
    intersection = float(np.prod(np.clip(extents, 0.0, None)))
    union = a.volume + b.volume - intersection
    if union <= 0.0:
        return 1.0 if a == b else 0.0
    return intersection / union


def classify_split(opt: ObjectProfileTable, gt_category: str) -> str:
    """"unique" iff exactly one profile row carries the ground-truth category."""
    count = sum(1 for row in opt.rows if row.category == gt_category)
    if count == 0:
        logger.warning(
            "ground-truth category %r absent from the profile table; scoring as multiple",
            gt_category,
        )
        return "multiple"
    return "unique" if count == 1 else "multiple"


@dataclass(frozen=True)
class QueryRecord:
    """One line of a queries file."""

    scene_id: str
    query: str
    gt_box: Box3D
    gt_category: str
    gt_instance_id: int | None = None


@dataclass(frozen=True)
class GroundingRecord:
    """One completed grounding run, ready for scoring."""

    scene_id: str
    query: str
    instance_id: int
    predicted_box: Box3D
    gt_box: Box3D
    split: str  # "unique" | "multiple"
    fallback: bool
    judge_calls: int
    wall_time_seconds: float


@dataclass(frozen=True)
class SplitMetrics:
    count: int
    correct: dict[float, int]
    accuracy: dict[float, float]

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "correct": {str(t): c for t, c in self.correct.items()},
            "accuracy": {str(t): a for t, a in self.accuracy.items()},
        }


@dataclass(frozen=True)
class MetricsReport:
    thresholds: tuple[float, ...]
    overall: SplitMetrics
    unique: SplitMetrics
    multiple: SplitMetrics
    mean_judge_calls: float
    fallback_count: int
    exact_match: bool = False

    def to_dict(self) -> dict:
        return {
            "thresholds": list(self.thresholds),
            "overall": self.overall.to_dict(),
            "unique": self.unique.to_dict(),
            "multiple": self.multiple.to_dict(),
            "mean_judge_calls": self.mean_judge_calls,
            "fallback_count": self.fallback_count,
            "exact_match": self.exact_match,
        }


def _split_metrics(
    records: Sequence[GroundingRecord], correct_flags: Sequence[dict[float, bool]],
    thresholds: Sequence[float],
) -> SplitMetrics:
    correct = {t: sum(1 for flags in correct_flags if flags[t]) for t in thresholds}
    count = len(records)
    accuracy = {t: (correct[t] / count if count else 0.0) for t in thresholds}
    return SplitMetrics(count=count, correct=correct, accuracy=accuracy)


def evaluate(
    records: Sequence[GroundingRecord],
    thresholds: Sequence[float] = DEFAULT_THRESHOLDS,
    exact_match: bool = False,
) -> MetricsReport:
    """Score records per split and overall.

    With ``exact_match`` correctness becomes predicted-box equality with the
    ground truth (box-selection protocols that provide all candidate boxes),
    independent of the IoU thresholds.
    """
    if not records:
        raise ValueError("no records to evaluate")
    thresholds = tuple(thresholds)

    flags: list[dict[float, bool]] = []
    for rec in records:
        if exact_match:
            hit = bool(
                np.allclose(rec.predicted_box.as_array(), rec.gt_box.as_array(), atol=1e-9)
            )
            flags.append({t: hit for t in thresholds})
        else:
            overlap = iou3d(rec.predicted_box, rec.gt_box)
            flags.append({t: overlap >= t for t in thresholds})

    by_split = {"unique": ([], []), "multiple": ([], [])}
    for rec, f in zip(records, flags):
        by_split[rec.split][0].append(rec)
        by_split[rec.split][1].append(f)

    return MetricsReport(
        thresholds=thresholds,
        overall=_split_metrics(records, flags, thresholds),
        unique=_split_metrics(*by_split["unique"], thresholds),
        multiple=_split_metrics(*by_split["multiple"], thresholds),
        mean_judge_calls=float(np.mean([r.judge_calls for r in records])),
        fallback_count=sum(1 for r in records if r.fallback),
        exact_match=exact_match,
    )


# --------------------------------------------------------------------------
# Line-delimited record files
# --------------------------------------------------------------------------


def parse_query_line(line: str) -> QueryRecord:
    data = json.loads(line)
    if not isinstance(data, dict):
        raise ValueError("query line must be a JSON object")
    for key in ("scene_id", "query", "gt_box", "gt_category"):
        if key not in data:
            raise ValueError(f"query line missing field '{key}'")
    gt_instance = data.get("gt_instance_id")
    return QueryRecord(
        scene_id=str(data["scene_id"]),
        query=str(data["query"]),
        gt_box=Box3D.from_flat(data["gt_box"]),
        gt_category=str(data["gt_category"]),
        gt_instance_id=int(gt_instance) if gt_instance is not None else None,
    )


def read_queries(path: str | Path) -> tuple[list[tuple[int, QueryRecord]], list[tuple[int, str]]]:
    """Parse a queries.jsonl file; malformed lines become (line_no, error) entries."""
    queries: list[tuple[int, QueryRecord]] = []
    errors: list[tuple[int, str]] = []
    for line_no, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            queries.append((line_no, parse_query_line(line)))
        except (ValueError, KeyError) as exc:
            errors.append((line_no, str(exc)))
    return queries, errors


def prediction_line(record: GroundingRecord) -> str:
    """Serialize one prediction. Keys sorted so identical runs are byte-identical."""
    return json.dumps(
        {
            "scene_id": record.scene_id,
            "query": record.query,
            "pred_box": record.predicted_box.as_array().tolist(),
            "instance_id": record.instance_id,
            "fallback": record.fallback,
            "calls": record.judge_calls,
        },
        sort_keys=True,
    )


def write_predictions(records: Iterable[GroundingRecord], path: str | Path) -> None:
    Path(path).write_text("".join(prediction_line(r) + "\n" for r in records))


def write_report(report_dict: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(report_dict, indent=2, sort_keys=True) + "\n")
