"""Zero-shot 3D visual grounding over scene bundles.

Pipeline: confidence-filter instance proposals, pick the query's category by
text-embedding similarity, project candidates into depth-consistent camera
views, stitch annotated multi-view strips, and resolve the target through an
iterative batched tournament over a pluggable vision-language judge.
"""

from .bundle_io import load_scene_bundle, write_scene_bundle
from .errors import (
    BundleFormatError,
    ConfigurationError,
    DegenerateEmbeddingError,
    EmbeddingProviderError,
    EmptyProjectionError,
    GroundingError,
    JudgeParseError,
    JudgeTransportError,
    NoProposalsError,
    ParserError,
)
from .evaluation import GroundingRecord, MetricsReport, QueryRecord, classify_split, evaluate, iou3d
from .pipeline import (
    BenchmarkResult,
    GroundingResult,
    PipelineConfig,
    ground,
    run_benchmark,
    run_sweep,
)
from .projection import (
    ViewProjection,
    camera_to_pixel,
    depth_consistent,
    project_mask_to_view,
    rank_views,
    sample_frames,
    world_to_camera,
)
from .reasoning import (
    DecliningJudge,
    JudgeAnswer,
    OracleJudge,
    Prompt,
    ReasoningResult,
    RemoteJudgeClient,
    TranscriptJudge,
    construct_prompt,
    predict,
    slice_batches,
    vlm_select,
)
from .scene import Box3D, CameraFrame, InstanceMask, Intrinsics, PointCloud, SceneBundle, mask_to_box3d
from .selection import (
    GroundingQuery,
    HashEmbeddingProvider,
    HeuristicQueryParser,
    ObjectProfileTable,
    ProposalSet,
    RemoteEmbeddingProvider,
    RemoteQueryParser,
    build_opt,
    cosine_similarity,
    embed_text,
    filter_instances,
    parse_target_category,
    select_proposals,
)
from .sequence import (
    AnnotatedImage,
    ImageSequence,
    Rect,
    annotate_view,
    expand_rect,
    min_bounding_rect,
    stitch_sequence,
)

__version__ = "0.1.0"
