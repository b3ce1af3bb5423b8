import numpy as np
import pytest

from sessionlens.model import (
    Interval,
    IntervalTrack,
    MentalState,
    SensorKind,
    SensorSeries,
    Session,
    TrackKind,
    WorkloadCategory,
    WorkloadSeries,
)
from sessionlens.synthgen import ErrorCoupling, GenerateSpec, ProfileSpec, generate

U, O, V = MentalState.UNDERLOAD, MentalState.OPTIMAL, MentalState.OVERLOAD


def make_workload(
    states,
    category=WorkloadCategory.ATTENTION,
    rate=10.0,
    t0=0.0,
    confidence=0.9,
):
    """Uniformly sampled workload series from a list of MentalState values."""
    n = len(states)
    t = t0 + np.arange(n) / rate
    return WorkloadSeries.from_samples(category, [(t[i], states[i], confidence) for i in range(n)], rate)


def make_imu(t, columns=None):
    t = np.asarray(t, dtype=float)
    if columns is None:
        values = np.zeros((len(t), 9))
        values[:, 2] = 9.81
    else:
        values = np.asarray(columns, dtype=float)
    return SensorSeries(SensorKind.IMU, t, values)


def make_session(
    sid="s1",
    subject="subj",
    trial="trial",
    duration=60.0,
    procedures=(),
    errors=(),
    phases=(),
    workload=None,
    imu=None,
    gaze=None,
    video=None,
):
    return Session(
        id=sid,
        subject=subject,
        trial=trial,
        duration_s=duration,
        procedures=IntervalTrack(TrackKind.PROCEDURE, tuple(Interval(*p) for p in procedures)),
        errors=IntervalTrack(TrackKind.ERROR, tuple(Interval(a, b, "error") for a, b in errors)),
        phases=IntervalTrack(TrackKind.PHASE, tuple(Interval(*p) for p in phases)),
        workload=workload or {},
        imu=imu,
        gaze=gaze,
        video=video,
    )


COUPLED_BIAS = {
    WorkloadCategory.PERCEPTION: {U: 0.3, O: 0.5, V: 0.2},
    WorkloadCategory.ATTENTION: {U: 0.25, O: 0.55, V: 0.2},
    WorkloadCategory.MEMORY: {U: 0.2, O: 0.6, V: 0.2},
}


def coupled_spec(seed=42):
    """12 sessions, 6 procedures, overload/error coupling planted on 'e'."""
    coupling = ErrorCoupling("e", WorkloadCategory.ATTENTION, MentalState.OVERLOAD, 1.0)
    return GenerateSpec(
        dataset_name="coupled",
        procedures=("a", "b", "c", "d", "e", "f"),
        trials=tuple(f"t{i:02d}" for i in range(1, 7)),
        duration_range=(500.0, 640.0),
        seed=seed,
        profiles=(
            ProfileSpec("s01", "expert", "smooth", COUPLED_BIAS, coupling),
            ProfileSpec("s02", "novice", "stop_start", COUPLED_BIAS, coupling),
        ),
    )


def null_spec(seed=8):
    """24 sessions, uniform error sprinkling, no planted coupling."""
    return GenerateSpec(
        dataset_name="null-control",
        procedures=("a", "b", "c", "d", "e", "f"),
        trials=tuple(f"t{i:02d}" for i in range(1, 7)),
        duration_range=(500.0, 640.0),
        seed=seed,
        profiles=tuple(
            ProfileSpec(f"n{i:02d}", "novice", "smooth" if i % 2 == 0 else "stop_start")
            for i in range(4)
        ),
    )


@pytest.fixture(scope="session")
def coupled_dataset(tmp_path_factory):
    out = tmp_path_factory.mktemp("coupled_ds")
    generate(coupled_spec(), out)
    return out


@pytest.fixture(scope="session")
def coupled_sessions(coupled_dataset):
    from sessionlens.ingest import load_dataset

    sessions, reports = load_dataset(coupled_dataset)
    assert all(r.loaded for r in reports)
    return sessions


@pytest.fixture(scope="session")
def null_dataset(tmp_path_factory):
    out = tmp_path_factory.mktemp("null_ds")
    generate(null_spec(), out)
    return out


@pytest.fixture(scope="session")
def null_sessions(null_dataset):
    from sessionlens.ingest import load_dataset

    sessions, _ = load_dataset(null_dataset)
    return sessions
