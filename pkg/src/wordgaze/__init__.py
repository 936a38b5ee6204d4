"""wordgaze: word-level gaze analytics.

Maps raw eye-tracker sample logs onto the words of rendered pages:
I-DT fixation detection, per-word dwell aggregation, AOI filtering,
multi-participant merging, statistics, export, and a query service.
"""
from .analytics import (
    AoiMetrics,
    ColorAssignment,
    ColorScaleConfig,
    RenderSegment,
    SessionAnnotation,
    aoi_metrics,
    collapse_runs,
    color_for,
    export_wef_csv,
    parse_wef_csv,
    table_rows,
)
from .fixation import (
    Fixation,
    IdtParams,
    SACCADE,
    detect_fixations_arrays,
    detect_fixations_idt,
    dispersion,
    fixation_duration_ms,
)
from .ingest import (
    CoordinateFrame,
    FrameKind,
    GazeSample,
    IngestConfig,
    ParseReport,
    RecordingMeta,
    Session,
    normalize_to_page,
    parse_gaze_csv,
    sessionize,
)
from .mapping import (
    SpatialIndex,
    WordEyeFixation,
    accumulate,
    accumulate_points,
    build_index,
    hit_test,
)
from .merge import MergedWordFixation, align_word, choose_base_snapshot, merge_sets
from .snapshot import (
    PageSnapshot,
    SnapshotValidationError,
    WordBox,
    css_vocabulary,
    load_snapshot,
    save_snapshot,
    text_context,
    words_in_aoi,
)
from .validation import (
    ComparisonReport,
    SeriesStats,
    UndefinedCorrelationError,
    compare_aoi_series,
    generate_reading_trace,
    pearson,
    summary_stats,
)
from .workspace import (
    ProcessingParams,
    QueryFilter,
    Workspace,
    export_csv,
    import_data,
    process_workspace,
    query,
)

__version__ = "0.1.0"
