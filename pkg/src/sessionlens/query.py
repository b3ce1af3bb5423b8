"""Timeline assembly, brush-window queries and sensor series slicing.

Everything here is read-only over an immutable session snapshot: timelines
run-length encode the 10 Hz workload samples into state runs (gaps stay
holes), brushes clip every track to a window, and sensor slices are
decimated with a min-max scheme that keeps the peaks and valleys analysts
look for.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Optional

import numpy as np

from . import signals
from .ingest import GAP_FACTOR
from .model import (
    Interval,
    IntervalTrack,
    MentalState,
    SensorKind,
    Session,
    WorkloadCategory,
    clip_interval,
)

MAX_SLICE_POINTS = 4000
MAX_CONFIDENCE_POINTS = 2000


@dataclass(frozen=True)
class WorkloadRun:
    start_s: float
    end_s: float
    state: MentalState


@dataclass(frozen=True)
class TimelineBundle:
    session_id: str
    duration_s: float
    category: WorkloadCategory
    procedures: tuple[Interval, ...]
    errors: tuple[Interval, ...]
    phases: tuple[Interval, ...]
    workload_runs: tuple[WorkloadRun, ...]
    confidence: tuple[tuple[float, float], ...]  # (t_s, confidence)


@dataclass(frozen=True)
class BrushResult:
    timeline: TimelineBundle
    labels_touched: tuple[str, ...]
    video_window: Optional[tuple[float, float]]


@dataclass(frozen=True)
class SeriesSlice:
    session_id: str
    stream: SensorKind
    channel: str
    t0: float
    t1: float
    t_s: np.ndarray
    values: np.ndarray
    decimated: bool


@dataclass(frozen=True)
class SessionMeta:
    id: str
    subject: str
    trial: str
    duration_s: float
    streams: dict[str, bool]


def encode_state_runs(session: Session, category: WorkloadCategory) -> tuple[WorkloadRun, ...]:
    """Maximal constant-state runs; a run breaks on a state change or a
    sampling gap, and the final sample of a run extends one nominal period."""
    series = session.workload.get(category)
    if series is None or series.n_samples == 0:
        return ()
    t = series.t_s
    states = series.states
    period = 1.0 / series.nominal_rate_hz
    threshold = GAP_FACTOR * period
    runs: list[WorkloadRun] = []
    run_start = float(t[0])
    for i in range(1, len(t)):
        gap = (t[i] - t[i - 1]) > threshold
        if gap or states[i] != states[i - 1]:
            end = float(t[i - 1] + period) if gap else float(t[i])
            _append_run(runs, run_start, end, states[i - 1], session.duration_s)
            run_start = float(t[i])
    _append_run(runs, run_start, float(t[-1] + period), states[-1], session.duration_s)
    return tuple(runs)


def _append_run(runs: list[WorkloadRun], start: float, end: float, code: int, duration_s: float) -> None:
    end = min(end, duration_s)
    if end > start:
        runs.append(WorkloadRun(start, end, MentalState.from_ordinal(int(code))))


def decimate_uniform(t: np.ndarray, v: np.ndarray, max_points: int) -> tuple[np.ndarray, np.ndarray]:
    """Strided decimation down to at most max_points."""
    n = len(t)
    if n <= max_points:
        return t, v
    stride = int(np.ceil(n / max_points))
    return t[::stride], v[::stride]


def build_timeline(
    session: Session,
    category: WorkloadCategory = WorkloadCategory.ATTENTION,
    max_confidence_points: int = MAX_CONFIDENCE_POINTS,
) -> TimelineBundle:
    """Time-aligned bundle of every track plus the run-length encoded
    workload and a decimated confidence polyline for one category."""
    series = session.workload.get(category)
    confidence: tuple[tuple[float, float], ...] = ()
    if series is not None and series.n_samples:
        t, c = decimate_uniform(series.t_s, series.confidence, max_confidence_points)
        confidence = tuple((float(a), float(b)) for a, b in zip(t, c))
    return TimelineBundle(
        session_id=session.id,
        duration_s=session.duration_s,
        category=category,
        procedures=session.procedures.intervals,
        errors=session.errors.intervals,
        phases=session.phases.intervals,
        workload_runs=encode_state_runs(session, category),
        confidence=confidence,
    )


def brush(
    session: Session,
    t0: float,
    t1: float,
    category: WorkloadCategory = WorkloadCategory.ATTENTION,
) -> BrushResult:
    """Clip every track of the timeline to [t0, t1].

    Also reports which procedure labels the window touches (for matrix-view
    highlighting) and the corresponding video window, clamped to >= 0.
    """
    if not (0.0 <= t0 < t1 <= session.duration_s + 1e-9):
        raise ValueError(
            f"brush window must satisfy 0 <= t0 < t1 <= duration ({session.duration_s}), got ({t0}, {t1})"
        )
    full = build_timeline(session, category)

    def clip_track(intervals: Iterable[Interval]) -> tuple[Interval, ...]:
        clipped = (clip_interval(iv, t0, t1) for iv in intervals)
        return tuple(iv for iv in clipped if iv is not None)

    runs = []
    for run in full.workload_runs:
        a, b = max(run.start_s, t0), min(run.end_s, t1)
        if b > a:
            runs.append(WorkloadRun(a, b, run.state))
    procedures = clip_track(full.procedures)
    timeline = replace(
        full,
        procedures=procedures,
        errors=clip_track(full.errors),
        phases=clip_track(full.phases),
        workload_runs=tuple(runs),
        confidence=tuple(p for p in full.confidence if t0 <= p[0] <= t1),
    )
    labels = tuple(sorted({iv.label for iv in procedures}))
    video_window = None
    if session.video is not None:
        off = session.video.offset_s
        video_window = (max(0.0, t0 - off), max(0.0, t1 - off))
    return BrushResult(timeline=timeline, labels_touched=labels, video_window=video_window)


def min_max_decimate(t: np.ndarray, v: np.ndarray, max_points: int) -> tuple[np.ndarray, np.ndarray]:
    """Reduce to at most max_points while keeping each bucket's min and max,
    so every spike in the window survives downsampling."""
    n = len(t)
    if n <= max_points:
        return t, v
    n_buckets = max(1, max_points // 2)
    edges = (np.arange(n_buckets + 1) * n) // n_buckets
    keep: list[int] = []
    for b in range(n_buckets):
        lo, hi = int(edges[b]), int(edges[b + 1])
        if hi <= lo:
            continue
        chunk = v[lo:hi]
        i_min = lo + int(np.argmin(chunk))
        i_max = lo + int(np.argmax(chunk))
        keep.extend(sorted({i_min, i_max}))
    idx = np.array(keep, dtype=np.intp)
    return t[idx], v[idx]


def slice_series(
    session: Session,
    stream: SensorKind,
    channel: str,
    t0: float,
    t1: float,
    max_points: int = MAX_SLICE_POINTS,
) -> SeriesSlice:
    """Samples of one channel within [t0, t1], min-max decimated when needed.

    `channel` may be a raw channel name or one of the derived kinematic
    channels (accel_mag, gyro_mag, mag_mag, gaze_angular_speed,
    gaze_origin_speed).
    """
    series = session.imu if stream is SensorKind.IMU else session.gaze
    if series is None:
        raise ValueError(f"session {session.id} has no {stream.value} stream")
    valid = signals.channel_names(stream)
    if channel not in valid:
        raise ValueError(f"unknown {stream.value} channel {channel!r}; valid channels: {', '.join(valid)}")
    if not t0 < t1:
        raise ValueError(f"window must satisfy t0 < t1, got ({t0}, {t1})")
    values = signals.derived_channel(series, channel)
    lo = int(np.searchsorted(series.t_s, t0, side="left"))
    hi = int(np.searchsorted(series.t_s, t1, side="right"))
    t_win = series.t_s[lo:hi]
    v_win = values[lo:hi]
    decimated = len(t_win) > max_points
    t_out, v_out = min_max_decimate(t_win, v_win, max_points)
    return SeriesSlice(session.id, stream, channel, t0, t1, t_out, v_out, decimated)


def list_sessions(
    sessions: Iterable[Session],
    subjects: Optional[set[str]] = None,
    trials: Optional[set[str]] = None,
    top_k_trials: Optional[int] = None,
) -> list[SessionMeta]:
    """Session metadata, filtered and sorted by (trial, subject, id).

    top_k_trials keeps only sessions whose trial is among the k most frequent
    by session count; ties resolve in lexicographic trial order.
    """
    pool = list(sessions)
    if subjects is not None:
        pool = [s for s in pool if s.subject in subjects]
    if trials is not None:
        pool = [s for s in pool if s.trial in trials]
    if top_k_trials is not None:
        counts: dict[str, int] = {}
        for s in pool:
            counts[s.trial] = counts.get(s.trial, 0) + 1
        ranked = sorted(counts, key=lambda trial: (-counts[trial], trial))
        keep = set(ranked[: max(0, top_k_trials)])
        pool = [s for s in pool if s.trial in keep]
    pool.sort(key=lambda s: (s.trial, s.subject, s.id))
    return [
        SessionMeta(s.id, s.subject, s.trial, s.duration_s, s.stream_presence()) for s in pool
    ]
