"""Session similarity embedding.

Each session's IMU, gaze or workload streams become a small set of
fixed-length feature channels; a pool of randomly sampled shapelets turns
those channels into one feature vector per session (minimum sliding-window
distance to each shapelet), and a deterministic PCA projects all sessions
to 2D for the scatter view.

The whole pipeline is seeded and order-canonicalized, so a given dataset,
parameter set and seed always produce bit-identical coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from . import signals
from .model import CATEGORY_ORDER, Session

DEFAULT_K = 64
DEFAULT_M = 32
DEFAULT_LENGTH = 256
DEFAULT_SEED = 0

# Channels whose standard deviation falls below this are normalized to zeros.
_DEGENERATE_STD = 1e-12


class StreamKind:
    IMU = "imu"
    GAZE = "gaze"
    FNIRS = "fnirs"

    ALL = ("imu", "gaze", "fnirs")


@dataclass(frozen=True)
class EmbedParams:
    k: int = DEFAULT_K
    m: int = DEFAULT_M
    length: int = DEFAULT_LENGTH
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if self.k <= 0:
            raise ValueError(f"k must be positive, got {self.k}")
        if self.m < 2:
            raise ValueError(f"m must be at least 2, got {self.m}")
        if self.m >= self.length:
            raise ValueError(f"m ({self.m}) must be smaller than the resample length ({self.length})")


@dataclass(frozen=True)
class FeatureChannelSet:
    session_id: str
    stream_kind: str
    channel_names: tuple[str, ...]
    channels: np.ndarray  # shape (n_channels, length)


@dataclass(frozen=True)
class Shapelet:
    values: np.ndarray
    session_id: str
    channel: str
    offset: int


@dataclass(frozen=True)
class Embedding2D:
    stream_kind: str
    seed: int
    points: tuple[tuple[str, float, float], ...]
    omitted: tuple[str, ...] = ()


def resample_linear(t: np.ndarray, v: np.ndarray, length: int) -> np.ndarray:
    """Linear interpolation at `length` points uniformly spanning [t[0], t[-1]]."""
    t = np.asarray(t, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if len(t) < 2:
        raise ValueError("resample_linear needs at least 2 samples")
    grid = np.linspace(t[0], t[-1], length)
    return np.interp(grid, t, v)


def resample_nearest(t: np.ndarray, v: np.ndarray, length: int) -> np.ndarray:
    """Nearest-neighbor resampling for ordinal-valued series."""
    t = np.asarray(t, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if len(t) < 2:
        raise ValueError("resample_nearest needs at least 2 samples")
    grid = np.linspace(t[0], t[-1], length)
    idx = np.searchsorted(t, grid)
    idx = np.clip(idx, 1, len(t) - 1)
    left_closer = (grid - t[idx - 1]) <= (t[idx] - grid)
    return v[np.where(left_closer, idx - 1, idx)]


def znormalize(x: np.ndarray) -> np.ndarray:
    """Zero-mean unit-variance scaling; near-constant channels become all zeros."""
    x = np.asarray(x, dtype=np.float64)
    std = x.std()
    if std < _DEGENERATE_STD:
        return np.zeros_like(x)
    return (x - x.mean()) / std


def build_channels(session: Session, stream_kind: str, length: int = DEFAULT_LENGTH) -> Optional[FeatureChannelSet]:
    """Fixed-length feature channels for one session, or None when the
    requested stream is absent or too short to resample."""
    if stream_kind == StreamKind.IMU:
        if session.imu is None or session.imu.n_samples < 2:
            return None
        mags = signals.imu_magnitudes(session.imu)
        names = signals.IMU_DERIVED
        rows = [znormalize(resample_linear(session.imu.t_s, mags[name], length)) for name in names]
    elif stream_kind == StreamKind.GAZE:
        if session.gaze is None or session.gaze.n_samples < 2:
            return None
        t = session.gaze.t_s
        names = signals.GAZE_DERIVED
        rows = [
            znormalize(resample_linear(t, signals.gaze_angular_speed(session.gaze), length)),
            znormalize(resample_linear(t, signals.gaze_origin_speed(session.gaze), length)),
        ]
    elif stream_kind == StreamKind.FNIRS:
        names = tuple(cat.value for cat in CATEGORY_ORDER)
        rows = []
        for cat in CATEGORY_ORDER:
            series = session.workload.get(cat)
            if series is None or series.n_samples < 2:
                return None
            # Ordinal encoding: underload -1, optimal 0, overload +1. The scale
            # is meaningful, so these channels stay unnormalized.
            encoded = series.states.astype(np.float64) - 1.0
            rows.append(resample_nearest(series.t_s, encoded, length))
    else:
        raise ValueError(f"unknown stream kind {stream_kind!r}; expected one of {StreamKind.ALL}")
    return FeatureChannelSet(session.id, stream_kind, tuple(names), np.vstack(rows))


def shapelet_distance(shapelet: np.ndarray, channel: np.ndarray) -> float:
    """Minimum RMS distance between the shapelet and any same-length window."""
    shapelet = np.asarray(shapelet, dtype=np.float64)
    channel = np.asarray(channel, dtype=np.float64)
    m = len(shapelet)
    if m > len(channel):
        raise ValueError(f"shapelet length {m} exceeds channel length {len(channel)}")
    windows = sliding_window_view(channel, m)
    dists = np.sqrt(np.mean((windows - shapelet) ** 2, axis=1))
    return float(dists.min())


def fit_shapelets(channel_sets: Sequence[FeatureChannelSet], k: int, m: int, seed: int) -> list[Shapelet]:
    """Sample k distinct shapelets uniformly from the pooled channels.

    Candidates are pooled in canonical (session id, channel) order so the
    result is independent of input ordering. Duplicate source positions are
    skipped; if fewer than k distinct positions exist, all of them are used.
    """
    if k <= 0:
        raise ValueError(f"k must be positive, got {k}")
    if m < 2:
        raise ValueError(f"m must be at least 2, got {m}")
    if not channel_sets:
        raise ValueError("no channel sets to sample shapelets from")
    ordered = sorted(channel_sets, key=lambda cs: cs.session_id)
    length = ordered[0].channels.shape[1]
    if m >= length:
        raise ValueError(f"m ({m}) must be smaller than the channel length ({length})")
    sources = [(cs, ci) for cs in ordered for ci in range(len(cs.channel_names))]
    offsets_per_channel = length - m + 1
    total = len(sources) * offsets_per_channel
    rng = np.random.Generator(np.random.PCG64(seed))
    picked: list[Shapelet] = []
    seen: set[int] = set()
    target = min(k, total)
    while len(picked) < target:
        pos = int(rng.integers(total))
        if pos in seen:
            continue
        seen.add(pos)
        cs, ci = sources[pos // offsets_per_channel]
        offset = pos % offsets_per_channel
        values = cs.channels[ci, offset : offset + m].copy()
        picked.append(Shapelet(values, cs.session_id, cs.channel_names[ci], offset))
    return picked


def shapelet_transform(channel_set: FeatureChannelSet, shapelets: Sequence[Shapelet]) -> np.ndarray:
    """Feature vector: distance of every shapelet to every channel, shapelet-major."""
    features = np.empty(len(shapelets) * len(channel_set.channel_names))
    i = 0
    for shapelet in shapelets:
        for channel in channel_set.channels:
            features[i] = shapelet_distance(shapelet.values, channel)
            i += 1
    return features


def project_2d(vectors: np.ndarray) -> np.ndarray:
    """Deterministic PCA projection onto the top-2 principal axes.

    Each axis is flipped so its largest-magnitude loading is positive;
    degenerate axes (relative eigenvalue ~0) yield zero coordinates.
    """
    x = np.asarray(vectors, dtype=np.float64)
    if x.ndim != 2 or len(x) == 0:
        raise ValueError("project_2d expects a non-empty 2D array")
    centered = x - x.mean(axis=0)
    if len(x) < 2:
        return np.zeros((len(x), 2))
    cov = centered.T @ centered / (len(x) - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1]
    eigvals = eigvals[order]
    eigvecs = eigvecs[:, order]
    tol = max(eigvals[0], 0.0) * 1e-9
    out = np.zeros((len(x), 2))
    for axis in range(min(2, len(eigvals))):
        if eigvals[axis] <= tol or eigvals[axis] <= 0:
            continue
        vec = eigvecs[:, axis]
        if vec[np.argmax(np.abs(vec))] < 0:
            vec = -vec
        out[:, axis] = centered @ vec
    return out


def embed_sessions(
    sessions: Iterable[Session],
    stream_kind: str,
    params: EmbedParams = EmbedParams(),
) -> Embedding2D:
    """Full pipeline: channels -> shapelet features -> 2D points.

    Sessions lacking the stream are listed in `omitted` rather than failing.
    """
    ordered = sorted(sessions, key=lambda s: s.id)
    channel_sets = []
    omitted = []
    for session in ordered:
        cs = build_channels(session, stream_kind, params.length)
        if cs is None:
            omitted.append(session.id)
        else:
            channel_sets.append(cs)
    if not channel_sets:
        raise ValueError(f"no session carries an embeddable {stream_kind} stream")
    shapelets = fit_shapelets(channel_sets, params.k, params.m, params.seed)
    features = np.vstack([shapelet_transform(cs, shapelets) for cs in channel_sets])
    coords = project_2d(features)
    points = tuple(
        (cs.session_id, float(coords[i, 0]), float(coords[i, 1])) for i, cs in enumerate(channel_sets)
    )
    return Embedding2D(stream_kind, params.seed, points, tuple(omitted))
