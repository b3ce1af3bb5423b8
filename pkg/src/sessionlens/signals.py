"""Derived per-timestep signals shared by the embedding and the detail views."""

from __future__ import annotations

import numpy as np

from .model import SensorKind, SensorSeries

IMU_DERIVED = ("accel_mag", "gyro_mag", "mag_mag")
GAZE_DERIVED = ("gaze_angular_speed", "gaze_origin_speed")

_IMU_GROUPS = {"accel_mag": slice(0, 3), "gyro_mag": slice(3, 6), "mag_mag": slice(6, 9)}


def imu_magnitudes(series: SensorSeries) -> dict[str, np.ndarray]:
    """Per-timestep vector norms of the accelerometer, gyro and magnetometer."""
    return {name: np.linalg.norm(series.values[:, group], axis=1) for name, group in _IMU_GROUPS.items()}


def gaze_angular_speed(series: SensorSeries) -> np.ndarray:
    """Angle (radians) between consecutive gaze directions, 0 for the first sample."""
    d = series.values[:, 3:6]
    norms = np.linalg.norm(d, axis=1)
    safe = np.where(norms > 1e-12, norms, 1.0)
    unit = d / safe[:, None]
    dots = np.clip(np.sum(unit[1:] * unit[:-1], axis=1), -1.0, 1.0)
    angles = np.arccos(dots)
    # Degenerate (zero-length) directions contribute no rotation.
    bad = (norms[1:] <= 1e-12) | (norms[:-1] <= 1e-12)
    angles[bad] = 0.0
    return np.concatenate([[0.0], angles])


def gaze_origin_speed(series: SensorSeries) -> np.ndarray:
    """Displacement of the gaze origin between consecutive samples, 0 first."""
    o = series.values[:, 0:3]
    steps = np.linalg.norm(np.diff(o, axis=0), axis=1)
    return np.concatenate([[0.0], steps])


def derived_channel(series: SensorSeries, name: str) -> np.ndarray:
    """Values for a raw or derived channel name, aligned with series.t_s."""
    if name in series.channel_names:
        return series.channel(name)
    if series.kind is SensorKind.IMU and name in IMU_DERIVED:
        return imu_magnitudes(series)[name]
    if series.kind is SensorKind.GAZE and name == "gaze_angular_speed":
        return gaze_angular_speed(series)
    if series.kind is SensorKind.GAZE and name == "gaze_origin_speed":
        return gaze_origin_speed(series)
    raise KeyError(name)


def channel_names(kind: SensorKind) -> tuple[str, ...]:
    """All queryable channel names (raw plus derived) for a sensor kind."""
    if kind is SensorKind.IMU:
        from .model import IMU_CHANNELS

        return IMU_CHANNELS + IMU_DERIVED
    from .model import GAZE_CHANNELS

    return GAZE_CHANNELS + GAZE_DERIVED
