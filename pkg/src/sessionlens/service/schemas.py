"""Request/response models for the HTTP API.

Undefined statistics serialize as null (never NaN); every numeric field is
finite by construction.
"""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field

Category = Literal["perception", "attention", "memory"]
GroupBy = Literal["subject", "trial"]


class HealthResponse(BaseModel):
    status: str
    sessions: int


class SessionMetaModel(BaseModel):
    id: str
    subject: str
    trial: str
    duration_s: float
    streams: dict[str, bool]


class QualityGapModel(BaseModel):
    stream: str
    start_s: float
    end_s: float


class QualityReportModel(BaseModel):
    session_id: str
    loaded: bool
    stream_presence: dict[str, str]
    gaps: list[QualityGapModel]
    coverage: dict[str, float]
    diagnostics: list[str]


class EmbeddingPointModel(BaseModel):
    session_id: str
    x: float
    y: float


class EmbeddingResponse(BaseModel):
    stream: str
    k: int
    m: int
    len: int
    seed: int
    points: list[EmbeddingPointModel]
    omitted: list[str]


class SelectionRequest(BaseModel):
    session_ids: list[str] = Field(min_length=1)
    group_by: GroupBy = "subject"
    category: Category = "attention"


class CorrelationStat(BaseModel):
    r: Optional[float]
    n: int


class GroupAggregateModel(BaseModel):
    key: str
    group_by: GroupBy
    session_ids: list[str]
    avg_duration_s: float
    proportions: dict[str, dict[str, float]]
    error_contribution: dict[str, dict[str, CorrelationStat]]


class IntervalModel(BaseModel):
    start_s: float
    end_s: float
    label: str


class WorkloadRunModel(BaseModel):
    start_s: float
    end_s: float
    state: str


class ConfidencePointModel(BaseModel):
    t_s: float
    value: float


class TimelineResponse(BaseModel):
    session_id: str
    duration_s: float
    category: Category
    procedures: list[IntervalModel]
    errors: list[IntervalModel]
    phases: list[IntervalModel]
    workload_runs: list[WorkloadRunModel]
    confidence: list[ConfidencePointModel]


class ProcedureCellModel(BaseModel):
    prevalence: float
    error_fraction: float
    partial_r: Optional[dict[str, Optional[float]]]


class MatrixResponse(BaseModel):
    session_id: str
    category: Category
    procedures: dict[str, ProcedureCellModel]
    error_contribution: dict[str, CorrelationStat]
    proportions: Optional[dict[str, float]]


class BrushResponse(BaseModel):
    session_id: str
    t0: float
    t1: float
    category: Category
    timeline: TimelineResponse
    labels_touched: list[str]
    video_window: Optional[tuple[float, float]]


class SeriesPointModel(BaseModel):
    t_s: float
    value: float


class SeriesResponse(BaseModel):
    session_id: str
    stream: str
    channel: str
    t0: float
    t1: float
    decimated: bool
    points: list[SeriesPointModel]


class ErrorBody(BaseModel):
    code: str
    message: str
    detail: Optional[object] = None
