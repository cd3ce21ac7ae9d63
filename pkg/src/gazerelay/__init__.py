"""Real-time gaze awareness for small-group video calls.

Clients stream noisy gaze points and audio levels; this package smooths
them, classifies who is looking at whom, relays the resulting edge set
to every member at a fixed tick, renders per-viewer visualization
directives (arrows, glows, poses, mic icons), records sessions to
replayable logs, and measures the whole pipeline under a deterministic
network simulation.
"""

from .classify import (
    CalibrationReport,
    DwellState,
    audio_to_mic_state,
    classify_target,
    classify_with_hysteresis,
    score_calibration,
)
from .filtering import FilterParams, FilterState, filter_step, ramp_lag_ms, smooth_trace
from .frames import (
    LayoutMode,
    RenderConfig,
    RenderFrame,
    ViewEngine,
    frame_to_dict,
    opacity_envelope,
    parse_mode,
    yaw_toward,
)
from .layout import (
    FocusLedger,
    LayoutConfig,
    aggregate_gaze_share,
    compute_tile_layout,
    focus_layout,
    update_focus_layout,
)
from .metrics import AttentionMatrix, attention_matrix, mutual_gaze_episodes
from .recording import EventLogWriter, EventRecord, LogError, read_log, replay, replay_file
from .session import ServerConfig, SessionCore
from .sim import NetProfile, Scenario, SimReport, load_scenario, run_scenario
from .types import (
    ClientId,
    ConfigError,
    GazeEdge,
    GazeSample,
    InsufficientDataError,
    LayoutInfeasibleError,
    OrderingError,
    TileLayout,
    TileRect,
)

__version__ = "0.1.0"

__all__ = [
    "AttentionMatrix",
    "CalibrationReport",
    "ClientId",
    "ConfigError",
    "DwellState",
    "EventLogWriter",
    "EventRecord",
    "FilterParams",
    "FilterState",
    "FocusLedger",
    "GazeEdge",
    "GazeSample",
    "InsufficientDataError",
    "LayoutConfig",
    "LayoutInfeasibleError",
    "LayoutMode",
    "LogError",
    "NetProfile",
    "OrderingError",
    "RenderConfig",
    "RenderFrame",
    "Scenario",
    "ServerConfig",
    "SessionCore",
    "SimReport",
    "TileLayout",
    "TileRect",
    "ViewEngine",
    "aggregate_gaze_share",
    "attention_matrix",
    "audio_to_mic_state",
    "classify_target",
    "classify_with_hysteresis",
    "compute_tile_layout",
    "filter_step",
    "focus_layout",
    "frame_to_dict",
    "load_scenario",
    "mutual_gaze_episodes",
    "opacity_envelope",
    "parse_mode",
    "ramp_lag_ms",
    "read_log",
    "replay",
    "replay_file",
    "run_scenario",
    "score_calibration",
    "smooth_trace",
    "update_focus_layout",
    "yaw_toward",
]
