"""Shared domain types for session recordings.

Every stream in a session lives on a common clock measured in seconds from
session start. All types validate their invariants at construction time and
are immutable afterwards, so a constructed Session is always safe to share
across concurrent readers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Optional

import numpy as np

SessionId = str
SubjectId = str
TrialId = str

PHASE_LABELS = ("PF", "FL")

IMU_CHANNELS = ("ax", "ay", "az", "gx", "gy", "gz", "mx", "my", "mz")
GAZE_CHANNELS = ("ox", "oy", "oz", "dx", "dy", "dz")

# Stream keys shared by quality reports and session metadata.
STREAM_KEYS = (
    "procedures",
    "errors",
    "phases",
    "workload.perception",
    "workload.attention",
    "workload.memory",
    "imu",
    "gaze",
    "video",
)

# Point-like error marks are widened to this span so they have visible extent.
MIN_ERROR_SPAN_S = 0.1


class ValidationError(ValueError):
    """Invariant violation carrying a machine-readable reason code."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


class MentalState(str, Enum):
    UNDERLOAD = "underload"
    OPTIMAL = "optimal"
    OVERLOAD = "overload"

    @property
    def ordinal(self) -> int:
        """Position on the load scale: underload=0, optimal=1, overload=2."""
        return STATE_ORDER.index(self)

    @classmethod
    def from_ordinal(cls, code: int) -> "MentalState":
        return STATE_ORDER[code]


STATE_ORDER = (MentalState.UNDERLOAD, MentalState.OPTIMAL, MentalState.OVERLOAD)


class WorkloadCategory(str, Enum):
    PERCEPTION = "perception"
    ATTENTION = "attention"
    MEMORY = "memory"


CATEGORY_ORDER = (
    WorkloadCategory.PERCEPTION,
    WorkloadCategory.ATTENTION,
    WorkloadCategory.MEMORY,
)


class TrackKind(str, Enum):
    PROCEDURE = "procedure"
    ERROR = "error"
    PHASE = "phase"


class SensorKind(str, Enum):
    IMU = "imu"
    GAZE = "gaze"


@dataclass(frozen=True)
class Interval:
    start_s: float
    end_s: float
    label: str

    def __post_init__(self):
        if not (np.isfinite(self.start_s) and np.isfinite(self.end_s)):
            raise ValidationError("interval-not-finite", f"non-finite interval bounds ({self.start_s}, {self.end_s})")
        if self.start_s < 0:
            raise ValidationError("interval-negative-start", f"interval starts before 0 ({self.start_s})")
        if self.end_s <= self.start_s:
            raise ValidationError("interval-empty", f"interval end {self.end_s} not after start {self.start_s}")

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s


@dataclass(frozen=True)
class IntervalTrack:
    kind: TrackKind
    intervals: tuple[Interval, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "intervals", tuple(self.intervals))
        prev_end = None
        for iv in self.intervals:
            if prev_end is not None and iv.start_s < prev_end - 1e-9:
                raise ValidationError(
                    "track-overlap",
                    f"{self.kind.value} track: interval at {iv.start_s} overlaps previous ending {prev_end}",
                )
            prev_end = iv.end_s
            if self.kind is TrackKind.PHASE and iv.label not in PHASE_LABELS:
                raise ValidationError("bad-phase-label", f"phase label {iv.label!r} not in {PHASE_LABELS}")

    def __iter__(self) -> Iterator[Interval]:
        return iter(self.intervals)

    def __len__(self) -> int:
        return len(self.intervals)

    @property
    def labels(self) -> set[str]:
        return {iv.label for iv in self.intervals}


@dataclass(frozen=True)
class WorkloadSeries:
    """Sampled mental-state labels for one workload category.

    `states` holds int8 ordinal codes (see MentalState.ordinal) so that
    aggregation can run on plain numpy arrays.
    """

    category: WorkloadCategory
    t_s: np.ndarray
    states: np.ndarray
    confidence: np.ndarray
    nominal_rate_hz: float = 10.0

    def __post_init__(self):
        t = np.asarray(self.t_s, dtype=np.float64)
        states = np.asarray(self.states, dtype=np.int8)
        conf = np.asarray(self.confidence, dtype=np.float64)
        if not (len(t) == len(states) == len(conf)):
            raise ValidationError("workload-length-mismatch", "t_s, states and confidence must align")
        if len(t) and not np.all(np.diff(t) > 0):
            raise ValidationError("workload-time-not-increasing", f"{self.category.value}: t_s must be strictly increasing")
        if len(t) and not (np.isfinite(t).all() and np.isfinite(conf).all()):
            raise ValidationError("workload-not-finite", f"{self.category.value}: non-finite sample")
        if len(conf) and (conf.min() < 0 or conf.max() > 1):
            raise ValidationError("confidence-out-of-range", f"{self.category.value}: confidence outside [0,1]")
        if len(states) and (states.min() < 0 or states.max() > 2):
            raise ValidationError("bad-state-code", f"{self.category.value}: state codes must be 0..2")
        if self.nominal_rate_hz <= 0:
            raise ValidationError("bad-rate", "nominal_rate_hz must be positive")
        for name, arr in (("t_s", t), ("states", states), ("confidence", conf)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @classmethod
    def from_samples(
        cls,
        category: WorkloadCategory,
        samples: list[tuple[float, MentalState, float]],
        nominal_rate_hz: float = 10.0,
    ) -> "WorkloadSeries":
        t = np.array([s[0] for s in samples], dtype=np.float64)
        codes = np.array([s[1].ordinal for s in samples], dtype=np.int8)
        conf = np.array([s[2] for s in samples], dtype=np.float64)
        return cls(category, t, codes, conf, nominal_rate_hz)

    @property
    def n_samples(self) -> int:
        return len(self.t_s)


_SENSOR_CHANNELS = {SensorKind.IMU: IMU_CHANNELS, SensorKind.GAZE: GAZE_CHANNELS}


@dataclass(frozen=True)
class SensorSeries:
    kind: SensorKind
    t_s: np.ndarray
    values: np.ndarray  # shape (n, arity)
    channel_names: tuple[str, ...] = ()

    def __post_init__(self):
        expected = _SENSOR_CHANNELS[self.kind]
        names = tuple(self.channel_names) or expected
        if names != expected:
            raise ValidationError("bad-channels", f"{self.kind.value} channels must be {expected}, got {names}")
        t = np.asarray(self.t_s, dtype=np.float64)
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape != (len(t), len(names)):
            raise ValidationError(
                "bad-sensor-shape",
                f"{self.kind.value}: expected values of shape ({len(t)}, {len(names)}), got {values.shape}",
            )
        if len(t) and not np.all(np.diff(t) > 0):
            raise ValidationError("sensor-time-not-increasing", f"{self.kind.value}: t_s must be strictly increasing")
        if not (np.isfinite(t).all() and np.isfinite(values).all()):
            raise ValidationError("sensor-not-finite", f"{self.kind.value}: non-finite sample")
        t.flags.writeable = False
        values.flags.writeable = False
        object.__setattr__(self, "t_s", t)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "channel_names", names)

    @property
    def n_samples(self) -> int:
        return len(self.t_s)

    def channel(self, name: str) -> np.ndarray:
        return self.values[:, self.channel_names.index(name)]


@dataclass(frozen=True)
class VideoRef:
    file_path: str
    offset_s: float = 0.0  # video time = session time - offset_s

    def __post_init__(self):
        if not np.isfinite(self.offset_s):
            raise ValidationError("bad-video-offset", "video offset must be finite")


@dataclass(frozen=True)
class Session:
    id: SessionId
    subject: SubjectId
    trial: TrialId
    duration_s: float
    procedures: IntervalTrack = field(default_factory=lambda: IntervalTrack(TrackKind.PROCEDURE))
    errors: IntervalTrack = field(default_factory=lambda: IntervalTrack(TrackKind.ERROR))
    phases: IntervalTrack = field(default_factory=lambda: IntervalTrack(TrackKind.PHASE))
    workload: dict[WorkloadCategory, WorkloadSeries] = field(default_factory=dict)
    imu: Optional[SensorSeries] = None
    gaze: Optional[SensorSeries] = None
    video: Optional[VideoRef] = None

    def __post_init__(self):
        if not (np.isfinite(self.duration_s) and self.duration_s > 0):
            raise ValidationError("bad-duration", f"duration_s must be positive, got {self.duration_s}")
        for track, kind in ((self.procedures, TrackKind.PROCEDURE), (self.errors, TrackKind.ERROR), (self.phases, TrackKind.PHASE)):
            if track.kind is not kind:
                raise ValidationError("track-kind-mismatch", f"expected {kind.value} track, got {track.kind.value}")
            for iv in track:
                if iv.end_s > self.duration_s + 1e-9:
                    raise ValidationError(
                        "interval-exceeds-duration",
                        f"{kind.value} interval [{iv.start_s}, {iv.end_s}] exceeds duration {self.duration_s}",
                    )
        for cat, series in self.workload.items():
            if series.category is not cat:
                raise ValidationError("category-mismatch", f"workload[{cat.value}] holds {series.category.value} series")
            if series.n_samples and series.t_s[-1] > self.duration_s + 1e-9:
                raise ValidationError(
                    "series-exceeds-duration",
                    f"workload.{cat.value} sample at {series.t_s[-1]} exceeds duration {self.duration_s}",
                )
        for sensor in (self.imu, self.gaze):
            if sensor is not None and sensor.n_samples and sensor.t_s[-1] > self.duration_s + 1e-9:
                raise ValidationError(
                    "series-exceeds-duration",
                    f"{sensor.kind.value} sample at {sensor.t_s[-1]} exceeds duration {self.duration_s}",
                )
        if self.imu is not None and self.imu.kind is not SensorKind.IMU:
            raise ValidationError("sensor-kind-mismatch", "imu slot holds a non-IMU series")
        if self.gaze is not None and self.gaze.kind is not SensorKind.GAZE:
            raise ValidationError("sensor-kind-mismatch", "gaze slot holds a non-gaze series")
        has_workload = any(s.n_samples for s in self.workload.values())
        if not (len(self.procedures) or has_workload or self.imu is not None or self.gaze is not None):
            raise ValidationError(
                "empty-session",
                "session carries none of procedures, workload, imu or gaze",
            )

    def stream_presence(self) -> dict[str, bool]:
        """Presence flags keyed by STREAM_KEYS (video = reference set)."""
        flags = {
            "procedures": len(self.procedures) > 0,
            "errors": len(self.errors) > 0,
            "phases": len(self.phases) > 0,
            "imu": self.imu is not None,
            "gaze": self.gaze is not None,
            "video": self.video is not None,
        }
        for cat in CATEGORY_ORDER:
            series = self.workload.get(cat)
            flags[f"workload.{cat.value}"] = series is not None and series.n_samples > 0
        return flags


def clip_interval(iv: Interval, t0: float, t1: float) -> Optional[Interval]:
    """Intersect an interval with the window [t0, t1]; None when empty."""
    if not t0 < t1:
        raise ValueError(f"window must satisfy t0 < t1, got ({t0}, {t1})")
    start = max(iv.start_s, t0)
    end = min(iv.end_s, t1)
    if end <= start:
        return None
    return Interval(start, end, iv.label)


def total_label_duration(track: IntervalTrack, label: str) -> float:
    """Summed length of all intervals carrying the given label."""
    return float(sum(iv.duration_s for iv in track if iv.label == label))
