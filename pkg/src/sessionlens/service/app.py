"""HTTP JSON API over a loaded dataset snapshot.

The dataset is read once at startup into an immutable snapshot shared by
all requests; the only mutable state is the embedding cache, which is
filled under a lock so concurrent misses compute each embedding once.
"""

from __future__ import annotations

import logging
import mimetypes
import os
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional

from fastapi import FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, Response
from fastapi.staticfiles import StaticFiles

from .. import analytics, embed, ingest, query
from ..model import MentalState, STATE_ORDER, SensorKind, Session, WorkloadCategory
from . import schemas

logger = logging.getLogger("sessionlens.service")

VIDEO_CHUNK = 64 * 1024


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str, detail: object = None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.detail = detail


@dataclass(frozen=True)
class ServiceConfig:
    data_root: Path
    embed_params: embed.EmbedParams = embed.EmbedParams()
    ui_dir: Optional[Path] = None


@dataclass(frozen=True)
class DatasetSnapshot:
    manifest: ingest.DatasetManifest
    sessions: dict[str, Session]
    reports: list[ingest.QualityReport]
    root: Path


@dataclass
class AppState:
    config: ServiceConfig
    snapshot: DatasetSnapshot
    _cache: dict[tuple, embed.Embedding2D] = field(default_factory=dict)
    _lock: threading.Lock = field(default_factory=threading.Lock)

    @classmethod
    def load(cls, config: ServiceConfig) -> "AppState":
        snapshot = _load_snapshot(config.data_root)
        state = cls(config=config, snapshot=snapshot)
        _log_quality_summary(snapshot)
        return state

    def reload(self) -> None:
        """Swap in a freshly loaded snapshot and drop cached embeddings."""
        snapshot = _load_snapshot(self.config.data_root)
        with self._lock:
            self.snapshot = snapshot
            self._cache.clear()
        _log_quality_summary(snapshot)

    def embedding(self, stream: str, params: embed.EmbedParams) -> embed.Embedding2D:
        key = (stream, params.k, params.m, params.length, params.seed)
        with self._lock:
            cached = self._cache.get(key)
            if cached is not None:
                return cached
            result = embed.embed_sessions(self.snapshot.sessions.values(), stream, params)
            self._cache[key] = result
            return result

    def session(self, session_id: str) -> Session:
        session = self.snapshot.sessions.get(session_id)
        if session is None:
            raise ApiError(404, "unknown-session", f"unknown session id {session_id!r}", session_id)
        return session


def _load_snapshot(data_root: Path) -> DatasetSnapshot:
    manifest = ingest.load_manifest(data_root)
    sessions, reports = ingest.load_dataset(data_root)
    return DatasetSnapshot(
        manifest=manifest,
        sessions={s.id: s for s in sessions},
        reports=reports,
        root=Path(data_root),
    )


def _log_quality_summary(snapshot: DatasetSnapshot) -> None:
    skipped = [r.session_id for r in snapshot.reports if not r.loaded]
    gappy = [r.session_id for r in snapshot.reports if r.loaded and r.gaps]
    logger.info(
        "loaded %d/%d sessions from %s (skipped: %s; with gaps: %s)",
        len(snapshot.sessions),
        len(snapshot.reports),
        snapshot.manifest.dataset_name,
        ", ".join(skipped) or "none",
        ", ".join(gappy) or "none",
    )


def _parse_category(value: str) -> WorkloadCategory:
    try:
        return WorkloadCategory(value)
    except ValueError:
        raise ApiError(400, "unknown-category", f"unknown workload category {value!r}", value)


def _parse_stream(value: str) -> str:
    if value not in embed.StreamKind.ALL:
        raise ApiError(400, "unknown-stream", f"unknown stream {value!r}; expected one of {embed.StreamKind.ALL}", value)
    return value


def create_app(config: ServiceConfig) -> FastAPI:
    state = AppState.load(config)
    app = FastAPI(title="sessionlens", version="0.1.0")
    app.state.lens = state

    @app.exception_handler(ApiError)
    async def handle_api_error(_request: Request, exc: ApiError):
        body = schemas.ErrorBody(code=exc.code, message=exc.message, detail=exc.detail)
        return JSONResponse(status_code=exc.status, content=body.model_dump())

    @app.exception_handler(RequestValidationError)
    async def handle_validation_error(_request: Request, exc: RequestValidationError):
        body = schemas.ErrorBody(code="invalid-request", message="request validation failed", detail=exc.errors())
        return JSONResponse(status_code=422, content=body.model_dump())

    @app.get("/api/health", response_model=schemas.HealthResponse)
    def health():
        return schemas.HealthResponse(status="ok", sessions=len(state.snapshot.sessions))

    @app.get("/api/sessions", response_model=list[schemas.SessionMetaModel])
    def sessions(
        top_k_trials: Optional[int] = Query(None, ge=1),
        subject: Optional[list[str]] = Query(None),
        trial: Optional[list[str]] = Query(None),
    ):
        metas = query.list_sessions(
            state.snapshot.sessions.values(),
            subjects=set(subject) if subject else None,
            trials=set(trial) if trial else None,
            top_k_trials=top_k_trials,
        )
        return [
            schemas.SessionMetaModel(
                id=m.id, subject=m.subject, trial=m.trial, duration_s=m.duration_s, streams=m.streams
            )
            for m in metas
        ]

    @app.get("/api/quality", response_model=list[schemas.QualityReportModel])
    def quality():
        return [
            schemas.QualityReportModel(
                session_id=r.session_id,
                loaded=r.loaded,
                stream_presence=r.stream_presence,
                gaps=[schemas.QualityGapModel(stream=s, start_s=a, end_s=b) for s, a, b in r.gaps],
                coverage=r.coverage,
                diagnostics=r.diagnostics,
            )
            for r in state.snapshot.reports
        ]

    @app.get("/api/embedding", response_model=schemas.EmbeddingResponse)
    def embedding(
        stream: str = Query("imu"),
        k: Optional[int] = Query(None, ge=1),
        m: Optional[int] = Query(None, ge=2),
        len_: Optional[int] = Query(None, alias="len", ge=4),
        seed: Optional[int] = Query(None),
    ):
        stream = _parse_stream(stream)
        base = state.config.embed_params
        try:
            params = embed.EmbedParams(
                k=k if k is not None else base.k,
                m=m if m is not None else base.m,
                length=len_ if len_ is not None else base.length,
                seed=seed if seed is not None else base.seed,
            )
        except ValueError as exc:
            raise ApiError(400, "bad-params", str(exc))
        try:
            result = state.embedding(stream, params)
        except ValueError as exc:
            raise ApiError(409, "no-embeddable-sessions", str(exc))
        return schemas.EmbeddingResponse(
            stream=stream,
            k=params.k,
            m=params.m,
            len=params.length,
            seed=params.seed,
            points=[schemas.EmbeddingPointModel(session_id=sid, x=x, y=y) for sid, x, y in result.points],
            omitted=list(result.omitted),
        )

    @app.post("/api/aggregate", response_model=list[schemas.GroupAggregateModel])
    def aggregate(selection: schemas.SelectionRequest):
        members = [state.session(sid) for sid in selection.session_ids]
        groups = analytics.aggregate_group(members, selection.group_by)
        return [
            schemas.GroupAggregateModel(
                key=g.key,
                group_by=selection.group_by,
                session_ids=list(g.session_ids),
                avg_duration_s=g.avg_duration_s,
                proportions=_proportions_json(g.proportions),
                error_contribution={
                    cat.value: _contribution_json(stats) for cat, stats in g.error_contribution.items()
                },
            )
            for g in groups
        ]

    @app.get("/api/sessions/{session_id}/timeline", response_model=schemas.TimelineResponse)
    def timeline(session_id: str, category: str = Query("attention")):
        session = state.session(session_id)
        bundle = query.build_timeline(session, _parse_category(category))
        return _timeline_json(bundle)

    @app.get("/api/sessions/{session_id}/matrix", response_model=schemas.MatrixResponse)
    def matrix(session_id: str, category: str = Query("attention")):
        session = state.session(session_id)
        cat = _parse_category(category)
        summary = analytics.procedure_summary(session, cat)
        proportions = analytics.state_proportions([session]).get(cat)
        return schemas.MatrixResponse(
            session_id=session_id,
            category=cat.value,
            procedures={
                label: schemas.ProcedureCellModel(
                    prevalence=stats.prevalence,
                    error_fraction=stats.error_fraction,
                    partial_r=None
                    if stats.partial_r is None
                    else {s.value: v for s, v in stats.partial_r.items()},
                )
                for label, stats in summary.labels.items()
            },
            error_contribution=_contribution_json(analytics.error_contribution([session], cat)),
            proportions=None if proportions is None else {s.value: v for s, v in proportions.items()},
        )

    @app.get("/api/sessions/{session_id}/brush", response_model=schemas.BrushResponse)
    def brush_endpoint(session_id: str, t0: float, t1: float, category: str = Query("attention")):
        session = state.session(session_id)
        cat = _parse_category(category)
        try:
            result = query.brush(session, t0, t1, cat)
        except ValueError as exc:
            raise ApiError(400, "bad-window", str(exc), {"t0": t0, "t1": t1})
        return schemas.BrushResponse(
            session_id=session_id,
            t0=t0,
            t1=t1,
            category=cat.value,
            timeline=_timeline_json(result.timeline),
            labels_touched=list(result.labels_touched),
            video_window=result.video_window,
        )

    @app.get("/api/sessions/{session_id}/series", response_model=schemas.SeriesResponse)
    def series(
        session_id: str,
        stream: str = Query(...),
        channel: str = Query(...),
        t0: Optional[float] = Query(None),
        t1: Optional[float] = Query(None),
        max_points: int = Query(query.MAX_SLICE_POINTS, ge=2),
    ):
        session = state.session(session_id)
        try:
            kind = SensorKind(stream)
        except ValueError:
            raise ApiError(400, "unknown-stream", f"unknown sensor stream {stream!r}; expected imu or gaze", stream)
        lo = 0.0 if t0 is None else t0
        hi = session.duration_s if t1 is None else t1
        try:
            result = query.slice_series(session, kind, channel, lo, hi, max_points)
        except ValueError as exc:
            message = str(exc)
            code = "unknown-channel" if "channel" in message else "bad-window" if "window" in message else "bad-stream"
            raise ApiError(400 if code != "bad-stream" else 404, code, message)
        return schemas.SeriesResponse(
            session_id=session_id,
            stream=kind.value,
            channel=channel,
            t0=lo,
            t1=hi,
            decimated=result.decimated,
            points=[
                schemas.SeriesPointModel(t_s=float(a), value=float(b))
                for a, b in zip(result.t_s, result.values)
            ],
        )

    @app.get("/api/sessions/{session_id}/video")
    def video(session_id: str, request: Request):
        session = state.session(session_id)
        if session.video is None:
            raise ApiError(404, "no-video", f"session {session_id} has no video reference")
        bundle_dir = None
        for sid, dirname in state.snapshot.manifest.sessions:
            if sid == session_id:
                bundle_dir = state.snapshot.root / dirname
                break
        path = (bundle_dir / session.video.file_path) if bundle_dir else None
        if path is None or not path.is_file():
            raise ApiError(404, "video-file-missing", f"video file for session {session_id} is not on disk")
        return _range_response(path, request.headers.get("range"))

    if config.ui_dir is not None and Path(config.ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(config.ui_dir), html=True), name="ui")

    return app


# ---------------------------------------------------------------------------
# serialization helpers


def _proportions_json(
    proportions: dict[WorkloadCategory, dict[MentalState, float]]
) -> dict[str, dict[str, float]]:
    return {cat.value: {state.value: frac for state, frac in dist.items()} for cat, dist in proportions.items()}


def _contribution_json(stats: dict[MentalState, tuple[Optional[float], int]]) -> dict[str, schemas.CorrelationStat]:
    return {state.value: schemas.CorrelationStat(r=stats[state][0], n=stats[state][1]) for state in STATE_ORDER}


def _timeline_json(bundle: query.TimelineBundle) -> schemas.TimelineResponse:
    def intervals(items) -> list[schemas.IntervalModel]:
        return [schemas.IntervalModel(start_s=i.start_s, end_s=i.end_s, label=i.label) for i in items]

    return schemas.TimelineResponse(
        session_id=bundle.session_id,
        duration_s=bundle.duration_s,
        category=bundle.category.value,
        procedures=intervals(bundle.procedures),
        errors=intervals(bundle.errors),
        phases=intervals(bundle.phases),
        workload_runs=[
            schemas.WorkloadRunModel(start_s=r.start_s, end_s=r.end_s, state=r.state.value)
            for r in bundle.workload_runs
        ],
        confidence=[schemas.ConfidencePointModel(t_s=t, value=c) for t, c in bundle.confidence],
    )


# ---------------------------------------------------------------------------
# byte-range video serving


def _range_response(path: Path, range_header: Optional[str]) -> Response:
    size = path.stat().st_size
    media_type = mimetypes.guess_type(str(path))[0] or "application/octet-stream"
    span = _parse_range(range_header, size)
    if span == "unsatisfiable":
        return Response(
            status_code=416,
            headers={"Content-Range": f"bytes */{size}", "Accept-Ranges": "bytes"},
        )
    if span is None:
        return Response(
            content=path.read_bytes(),
            media_type=media_type,
            headers={"Accept-Ranges": "bytes", "Content-Length": str(size)},
        )
    start, end = span
    length = end - start + 1
    with open(path, "rb") as fh:
        fh.seek(start)
        content = fh.read(length)
    return Response(
        content=content,
        status_code=206,
        media_type=media_type,
        headers={
            "Accept-Ranges": "bytes",
            "Content-Range": f"bytes {start}-{end}/{size}",
            "Content-Length": str(length),
        },
    )


def _parse_range(header: Optional[str], size: int):
    """Single byte range per RFC 9110; malformed headers fall back to a full
    response, unsatisfiable ones report 416."""
    if not header or size == 0:
        return None
    header = header.strip().lower()
    if not header.startswith("bytes="):
        return None
    spec = header[len("bytes=") :]
    if "," in spec or "-" not in spec:
        return None
    first, _, last = spec.partition("-")
    try:
        if first == "" and last:
            suffix = int(last)
            if suffix <= 0:
                return "unsatisfiable"
            start = max(0, size - suffix)
            return (start, size - 1)
        start = int(first)
        end = int(last) if last else size - 1
    except ValueError:
        return None
    if start >= size:
        return "unsatisfiable"
    return (start, min(end, size - 1))
