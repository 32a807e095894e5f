"""Action extraction from app screen recordings: segmentation, tap-location prediction, metrics."""

import json

from . import _core
from ._core import TapModel, UiActionsError, dbscan, levenshtein_score, ssim_rgb, tailored_loss, video_f1

__all__ = [
    "TapModel",
    "UiActionsError",
    "dbscan",
    "default_config",
    "levenshtein_score",
    "render_transitions",
    "render_video",
    "segment",
    "segment_path",
    "ssim_rgb",
    "tailored_loss",
    "validate_trace",
    "video_f1",
]


def segment(frames, fps, video_id="video", config=None):
    """Segment a list of HxWx3 uint8 frames; returns the trace as a dict."""
    return json.loads(_core.segment(list(frames), float(fps), video_id, json.dumps(config) if config else ""))


def segment_path(path, config=None):
    """Segment a video file or a PNG frame directory with meta.json."""
    return json.loads(_core.segment_path(str(path), json.dumps(config) if config else ""))


def render_video(seed, actions=6):
    """Scripted synthetic recording: (frames, fps, ground-truth trace dict)."""
    frames, fps, truth = _core.render_video(seed, actions)
    return frames, fps, json.loads(truth)


def render_transitions(n, seed, toggle_fraction=0.0):
    """Synthetic tap transitions as (ui1, ui2, sample dict) tuples."""
    return [(a, b, json.loads(s)) for a, b, s in _core.render_transitions(n, seed, toggle_fraction)]


def validate_trace(trace):
    """Raise UiActionsError when a trace dict violates the scene or shot invariants."""
    _core.validate_trace(json.dumps(trace))


def default_config():
    return json.loads(_core.default_config())
