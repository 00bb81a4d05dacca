"""Ingest: loaders, calendar labeling, buffers, features, frequencies."""

from .features import (  # noqa: F401
    apply_zscore,
    assemble_feature_vector,
    compute_edge_betweenness,
    count_school_neighbors,
    derive_physical_features,
    neighborhood_graph_metrics,
    zscore,
)
from .frequency import congested_road_share, congestion_frequency  # noqa: F401
from .io import (  # noqa: F401
    DEFAULT_SNAP_TOLERANCE_M,
    FeatureLayers,
    LANDUSE_CATEGORIES,
    RoadNetwork,
    load_layers,
    load_observations,
    load_roads,
    load_schools,
)
from .neighborhoods import (  # noqa: F401
    build_neighborhoods,
    point_polyline_distance,
    point_segment_distance,
)
from .timeslots import (  # noqa: F401
    CalendarConfig,
    ExamWindow,
    default_calendar,
    label_timeslot,
)
