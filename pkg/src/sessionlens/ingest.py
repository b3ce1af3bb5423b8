"""Session bundle ingestion.

Parses a dataset directory (manifest + one bundle directory per session)
into validated Session objects and per-session quality reports covering
stream presence, sampling gaps and coverage.

Bundle layout::

    <root>/manifest.json
    <root>/<dir>/session.json
    <root>/<dir>/procedures.csv   start_s,end_s,label
    <root>/<dir>/errors.csv       start_s,end_s
    <root>/<dir>/phases.csv       start_s,end_s,phase
    <root>/<dir>/workload.csv     t_s,category,state,confidence
    <root>/<dir>/imu.csv          t_s,ax,ay,az,gx,gy,gz,mx,my,mz
    <root>/<dir>/gaze.csv         t_s,ox,oy,oz,dx,dy,dz

Any stream file may be absent. A malformed stream file is reported and
treated as absent; a session violating a hard invariant is skipped and
reported rather than aborting the whole load.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .model import (
    GAZE_CHANNELS,
    IMU_CHANNELS,
    MIN_ERROR_SPAN_S,
    PHASE_LABELS,
    STREAM_KEYS,
    CATEGORY_ORDER,
    Interval,
    IntervalTrack,
    MentalState,
    SensorKind,
    SensorSeries,
    Session,
    TrackKind,
    ValidationError,
    VideoRef,
    WorkloadCategory,
    WorkloadSeries,
)

# A gap is any inter-sample spacing above GAP_FACTOR nominal periods.
GAP_FACTOR = 5.0

PRESENT = "present"
ABSENT = "absent"

_SAMPLED_STREAMS = ("workload.perception", "workload.attention", "workload.memory", "imu", "gaze")


class DatasetError(Exception):
    """Fatal dataset problem (missing or unparsable manifest)."""


@dataclass(frozen=True)
class DatasetManifest:
    dataset_name: str
    procedure_labels: tuple[str, ...]
    sessions: tuple[tuple[str, str], ...]  # (session_id, directory)


@dataclass
class QualityReport:
    session_id: str
    stream_presence: dict[str, str] = field(default_factory=dict)
    gaps: list[tuple[str, float, float]] = field(default_factory=list)
    coverage: dict[str, float] = field(default_factory=dict)
    diagnostics: list[str] = field(default_factory=list)
    loaded: bool = True


def load_manifest(root: Path | str) -> DatasetManifest:
    path = Path(root) / "manifest.json"
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise DatasetError(f"manifest not found: {path}")
    except (OSError, json.JSONDecodeError) as exc:
        raise DatasetError(f"unparsable manifest {path}: {exc}")
    try:
        name = raw["dataset_name"]
        labels = tuple(str(x) for x in raw["procedure_labels"])
        sessions = tuple((str(s["id"]), str(s["dir"])) for s in raw["sessions"])
    except (KeyError, TypeError) as exc:
        raise DatasetError(f"manifest {path} missing required field: {exc}")
    if not labels:
        raise DatasetError("manifest procedure_labels must be non-empty")
    ids = [sid for sid, _ in sessions]
    if len(set(ids)) != len(ids):
        raise DatasetError("manifest session ids must be unique")
    return DatasetManifest(str(name), labels, sessions)


def detect_gaps(timestamps, duration_s: float, nominal_rate_hz: float) -> list[tuple[float, float]]:
    """Spans where a sampled stream is silent for more than GAP_FACTOR periods.

    Includes the leading span [0, first_t] and trailing span [last_t, duration_s]
    when they exceed the threshold; an empty series is one gap covering the
    whole session.
    """
    t = np.asarray(timestamps, dtype=np.float64)
    if len(t) == 0:
        return [(0.0, float(duration_s))] if duration_s > 0 else []
    threshold = GAP_FACTOR / nominal_rate_hz
    gaps: list[tuple[float, float]] = []
    if t[0] > threshold:
        gaps.append((0.0, float(t[0])))
    spacings = np.diff(t)
    for i in np.nonzero(spacings > threshold)[0]:
        gaps.append((float(t[i]), float(t[i + 1])))
    if duration_s - t[-1] > threshold:
        gaps.append((float(t[-1]), float(duration_s)))
    return gaps


def load_dataset(root: Path | str) -> tuple[list[Session], list[QualityReport]]:
    """Load every bundle named by the manifest.

    Returns the successfully validated sessions (manifest order) and one
    quality report per manifest entry, including skipped sessions.
    """
    root = Path(root)
    manifest = load_manifest(root)
    sessions: list[Session] = []
    reports: list[QualityReport] = []
    for sid, dirname in manifest.sessions:
        session, report = _load_bundle(root / dirname, sid, manifest.procedure_labels)
        reports.append(report)
        if session is not None:
            sessions.append(session)
    return sessions, reports


# ---------------------------------------------------------------------------
# bundle parsing


def _load_bundle(bundle_dir: Path, session_id: str, vocabulary: tuple[str, ...]) -> tuple[Optional[Session], QualityReport]:
    report = QualityReport(session_id=session_id, stream_presence={k: ABSENT for k in STREAM_KEYS})

    meta_path = bundle_dir / "session.json"
    try:
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
        subject = str(meta["subject"])
        trial = str(meta["trial"])
        duration_s = float(meta["duration_s"])
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        report.diagnostics.append(f"session.json: {exc}")
        report.loaded = False
        return None, report
    if not (np.isfinite(duration_s) and duration_s > 0):
        report.diagnostics.append(f"session.json: duration_s must be positive, got {duration_s}")
        report.loaded = False
        return None, report

    video = None
    video_raw = meta.get("video")
    if video_raw is not None:
        try:
            video = VideoRef(str(video_raw["file"]), float(video_raw.get("offset_s", 0.0)))
        except (KeyError, TypeError, ValueError, ValidationError) as exc:
            report.diagnostics.append(f"session.json video: {exc}")
            video = None
    if video is not None:
        video_file = bundle_dir / video.file_path
        if video_file.is_file():
            report.stream_presence["video"] = PRESENT
        else:
            report.diagnostics.append(f"video file missing: {video.file_path}")

    procedures = _load_track(bundle_dir / "procedures.csv", TrackKind.PROCEDURE, report, vocabulary, duration_s)
    errors = _load_track(bundle_dir / "errors.csv", TrackKind.ERROR, report, None, duration_s)
    phases = _load_track(bundle_dir / "phases.csv", TrackKind.PHASE, report, None, duration_s)
    workload = _load_workload(bundle_dir / "workload.csv", report)
    imu = _load_sensor(bundle_dir / "imu.csv", SensorKind.IMU, report)
    gaze = _load_sensor(bundle_dir / "gaze.csv", SensorKind.GAZE, report)

    try:
        session = Session(
            id=session_id,
            subject=subject,
            trial=trial,
            duration_s=duration_s,
            procedures=procedures,
            errors=errors,
            phases=phases,
            workload=workload,
            imu=imu,
            gaze=gaze,
            video=video,
        )
    except ValidationError as exc:
        report.diagnostics.append(f"session rejected [{exc.code}]: {exc}")
        report.loaded = False
        return None, report

    _fill_gap_stats(session, report)
    return session, report


def _fill_gap_stats(session: Session, report: QualityReport) -> None:
    for cat in CATEGORY_ORDER:
        series = session.workload.get(cat)
        if series is None or series.n_samples == 0:
            continue
        key = f"workload.{cat.value}"
        gaps = detect_gaps(series.t_s, session.duration_s, series.nominal_rate_hz)
        report.gaps.extend((key, a, b) for a, b in gaps)
        report.coverage[key] = _coverage(gaps, session.duration_s)
    for sensor in (session.imu, session.gaze):
        if sensor is None or sensor.n_samples == 0:
            continue
        rate = _infer_rate(sensor.t_s)
        gaps = detect_gaps(sensor.t_s, session.duration_s, rate)
        report.gaps.extend((sensor.kind.value, a, b) for a, b in gaps)
        report.coverage[sensor.kind.value] = _coverage(gaps, session.duration_s)


def _coverage(gaps: list[tuple[float, float]], duration_s: float) -> float:
    gap_time = sum(b - a for a, b in gaps)
    return max(0.0, min(1.0, 1.0 - gap_time / duration_s))


def _infer_rate(t: np.ndarray) -> float:
    """Nominal rate from the median inter-sample spacing (gap-robust)."""
    if len(t) < 2:
        return 1.0
    dt = float(np.median(np.diff(t)))
    return 1.0 / dt if dt > 0 else 1.0


def _read_rows(path: Path, expected_header: list[str], report: QualityReport, stream: str) -> Optional[list[list[str]]]:
    """Rows of a CSV stream file, or None when absent/malformed."""
    if not path.is_file():
        return None
    try:
        with open(path, encoding="utf-8-sig", newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                report.diagnostics.append(f"{path.name}: empty file")
                return None
            if [h.strip() for h in header] != expected_header:
                report.diagnostics.append(f"{path.name}: bad header {header!r}, expected {expected_header}")
                return None
            rows = []
            for lineno, row in enumerate(reader, start=2):
                if not row or (len(row) == 1 and not row[0].strip()):
                    continue
                if len(row) != len(expected_header):
                    report.diagnostics.append(f"{path.name}:{lineno}: expected {len(expected_header)} fields, got {len(row)}")
                    return None
                rows.append([f.strip() for f in row])
            return rows
    except OSError as exc:
        report.diagnostics.append(f"{path.name}: {exc}")
        return None


def _parse_float(value: str, path: Path, lineno: int, report: QualityReport) -> Optional[float]:
    try:
        out = float(value)
    except ValueError:
        report.diagnostics.append(f"{path.name}:{lineno}: non-numeric field {value!r}")
        return None
    if not np.isfinite(out):
        report.diagnostics.append(f"{path.name}:{lineno}: non-finite field {value!r}")
        return None
    return out


def _parse_float_table(rows: list[list[str]], path: Path, report: QualityReport) -> Optional[np.ndarray]:
    """Bulk-parse a rectangular block of numeric strings; on failure, scan for
    the offending row so the diagnostic carries a line number."""
    try:
        data = np.asarray(rows, dtype=np.float64)
    except ValueError:
        for lineno, row in enumerate(rows, start=2):
            for value in row:
                if _parse_float(value, path, lineno, report) is None:
                    return None
        report.diagnostics.append(f"{path.name}: unparsable numeric data")
        return None
    if not np.isfinite(data).all():
        bad = int(np.nonzero(~np.isfinite(data).all(axis=1))[0][0])
        report.diagnostics.append(f"{path.name}:{bad + 2}: non-finite field")
        return None
    return data


def _load_track(
    path: Path,
    kind: TrackKind,
    report: QualityReport,
    vocabulary: Optional[tuple[str, ...]],
    duration_s: float,
) -> IntervalTrack:
    key = {TrackKind.PROCEDURE: "procedures", TrackKind.ERROR: "errors", TrackKind.PHASE: "phases"}[kind]
    header = {
        TrackKind.PROCEDURE: ["start_s", "end_s", "label"],
        TrackKind.ERROR: ["start_s", "end_s"],
        TrackKind.PHASE: ["start_s", "end_s", "phase"],
    }[kind]
    rows = _read_rows(path, header, report, key)
    if rows is None:
        return IntervalTrack(kind)
    intervals = []
    for lineno, row in enumerate(rows, start=2):
        start = _parse_float(row[0], path, lineno, report)
        end = _parse_float(row[1], path, lineno, report)
        if start is None or end is None:
            return IntervalTrack(kind)
        if kind is TrackKind.ERROR:
            label = "error"
            if end == start:  # point error: widen to the minimum visible span
                end = min(start + MIN_ERROR_SPAN_S, duration_s)
        else:
            label = row[2]
        if kind is TrackKind.PROCEDURE and vocabulary is not None and label not in vocabulary:
            report.diagnostics.append(f"{path.name}:{lineno}: label {label!r} not in dataset vocabulary")
            return IntervalTrack(kind)
        if kind is TrackKind.PHASE and label not in PHASE_LABELS:
            report.diagnostics.append(f"{path.name}:{lineno}: phase {label!r} must be one of {PHASE_LABELS}")
            return IntervalTrack(kind)
        try:
            intervals.append(Interval(start, end, label))
        except ValidationError as exc:
            report.diagnostics.append(f"{path.name}:{lineno}: {exc}")
            return IntervalTrack(kind)
    intervals.sort(key=lambda iv: (iv.start_s, iv.end_s))
    try:
        track = IntervalTrack(kind, tuple(intervals))
    except ValidationError as exc:
        report.diagnostics.append(f"{path.name}: {exc}")
        return IntervalTrack(kind)
    if intervals:
        report.stream_presence[key] = PRESENT
    return track


def _load_workload(path: Path, report: QualityReport) -> dict[WorkloadCategory, WorkloadSeries]:
    rows = _read_rows(path, ["t_s", "category", "state", "confidence"], report, "workload")
    if rows is None:
        return {}
    by_cat: dict[WorkloadCategory, list[tuple[str, int, str]]] = {c: [] for c in CATEGORY_ORDER}
    for lineno, row in enumerate(rows, start=2):
        try:
            cat = WorkloadCategory(row[1])
            state = MentalState(row[2])
        except ValueError:
            report.diagnostics.append(f"{path.name}:{lineno}: unknown category/state {row[1]!r}/{row[2]!r}")
            return {}
        by_cat[cat].append((row[0], state.ordinal, row[3]))
    out: dict[WorkloadCategory, WorkloadSeries] = {}
    for cat, samples in by_cat.items():
        if not samples:
            continue
        numeric = _parse_float_table([[s[0], s[2]] for s in samples], path, report)
        if numeric is None:
            return {}
        codes = np.array([s[1] for s in samples], dtype=np.int8)
        try:
            out[cat] = WorkloadSeries(cat, numeric[:, 0], codes, numeric[:, 1])
        except ValidationError as exc:
            report.diagnostics.append(f"{path.name}: {cat.value}: {exc}")
            return {}
        report.stream_presence[f"workload.{cat.value}"] = PRESENT
    return out


def _load_sensor(path: Path, kind: SensorKind, report: QualityReport) -> Optional[SensorSeries]:
    channels = IMU_CHANNELS if kind is SensorKind.IMU else GAZE_CHANNELS
    rows = _read_rows(path, ["t_s", *channels], report, kind.value)
    if rows is None or len(rows) == 0:
        return None
    data = _parse_float_table(rows, path, report)
    if data is None:
        return None
    try:
        series = SensorSeries(kind, data[:, 0], data[:, 1:])
    except ValidationError as exc:
        report.diagnostics.append(f"{path.name}: {exc}")
        return None
    report.stream_presence[kind.value] = PRESENT
    return series
