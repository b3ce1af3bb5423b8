"""Statistics behind the workload aggregation and summary matrix views.

The sample unit for all error/state correlations is one procedure interval
occurrence: for each occurrence we measure how many seconds were spent in a
given mental state and how many seconds of errors overlapped it, pooled
across the selected sessions. Undefined statistics (too few samples, zero
variance, degenerate conditioning) propagate as None, never as NaN or a
silent zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .model import (
    CATEGORY_ORDER,
    STATE_ORDER,
    IntervalTrack,
    MentalState,
    Session,
    WorkloadCategory,
    WorkloadSeries,
    total_label_duration,
)

MIN_CORRELATION_N = 3


@dataclass(frozen=True)
class Occurrence:
    """One procedure interval occurrence with its measured seconds."""

    session_id: str
    label: str
    start_s: float
    end_s: float
    state_seconds: np.ndarray  # seconds per MentalState ordinal, shape (3,)
    error_seconds: float


@dataclass(frozen=True)
class ProcedureLabelStats:
    prevalence: float
    error_fraction: float
    # partial correlation per mental state for the requested category;
    # None when that category's workload is absent.
    partial_r: Optional[dict[MentalState, Optional[float]]]


@dataclass(frozen=True)
class ProcedureSummary:
    session_id: str
    category: WorkloadCategory
    labels: dict[str, ProcedureLabelStats]


@dataclass(frozen=True)
class GroupAggregate:
    key: str
    group_by: str  # "subject" | "trial"
    session_ids: tuple[str, ...]
    proportions: dict[WorkloadCategory, dict[MentalState, float]]
    error_contribution: dict[WorkloadCategory, dict[MentalState, tuple[Optional[float], int]]]
    avg_duration_s: float


def pearson(x: Sequence[float] | np.ndarray, y: Sequence[float] | np.ndarray) -> Optional[float]:
    """Sample Pearson correlation; None for n < 3 or zero variance."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(x) != len(y):
        raise ValueError(f"length mismatch: {len(x)} vs {len(y)}")
    if len(x) < MIN_CORRELATION_N:
        return None
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        return None
    return float(dx @ dy) / math.sqrt(sxx * syy)


def partial_correlation(r_se: Optional[float], r_sp: Optional[float], r_ep: Optional[float]) -> Optional[float]:
    """Correlation of s and e controlling for p, from the three pairwise
    coefficients; None when any input is undefined or |r_sp| or |r_ep| is 1."""
    if r_se is None or r_sp is None or r_ep is None:
        return None
    denom_sq = (1.0 - r_sp * r_sp) * (1.0 - r_ep * r_ep)
    if denom_sq <= 0.0:
        return None
    return (r_se - r_sp * r_ep) / math.sqrt(denom_sq)


# ---------------------------------------------------------------------------
# dwell-time machinery


def _dwell_segments(series: WorkloadSeries) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample dwell segments (start, end): each sample holds its state
    until the next sample; the last one extends one nominal period."""
    t = series.t_s
    period = 1.0 / series.nominal_rate_hz
    ends = np.empty_like(t)
    ends[:-1] = t[1:]
    ends[-1] = t[-1] + period
    return t, ends


def state_seconds_in_window(series: WorkloadSeries, t0: float, t1: float) -> np.ndarray:
    """Seconds spent in each mental state (by ordinal) within [t0, t1]."""
    out = np.zeros(3)
    if series.n_samples == 0 or t1 <= t0:
        return out
    starts, ends = _dwell_segments(series)
    lo = int(np.searchsorted(ends, t0, side="right"))
    hi = int(np.searchsorted(starts, t1, side="left"))
    if lo >= hi:
        return out
    seg_start = np.maximum(starts[lo:hi], t0)
    seg_end = np.minimum(ends[lo:hi], t1)
    overlap = np.clip(seg_end - seg_start, 0.0, None)
    return np.bincount(series.states[lo:hi], weights=overlap, minlength=3)[:3]


def covered_seconds(series: WorkloadSeries) -> float:
    """Total dwell time attributed to the series' samples."""
    if series.n_samples == 0:
        return 0.0
    starts, ends = _dwell_segments(series)
    return float(np.sum(ends - starts))


def error_overlap_seconds(errors: IntervalTrack, t0: float, t1: float) -> float:
    total = 0.0
    for iv in errors:
        lo = max(iv.start_s, t0)
        hi = min(iv.end_s, t1)
        if hi > lo:
            total += hi - lo
    return total


def collect_occurrences(sessions: Iterable[Session], category: WorkloadCategory) -> list[Occurrence]:
    """Per-occurrence samples pooled across sessions.

    Sessions without procedures contribute nothing; sessions without the
    requested workload category are skipped entirely (their state seconds
    would be unknowable, and zeros would fabricate data).
    """
    occurrences: list[Occurrence] = []
    for session in sessions:
        series = session.workload.get(category)
        if series is None or series.n_samples == 0:
            continue
        for iv in session.procedures:
            occurrences.append(
                Occurrence(
                    session_id=session.id,
                    label=iv.label,
                    start_s=iv.start_s,
                    end_s=iv.end_s,
                    state_seconds=state_seconds_in_window(series, iv.start_s, iv.end_s),
                    error_seconds=error_overlap_seconds(session.errors, iv.start_s, iv.end_s),
                )
            )
    return occurrences


# ---------------------------------------------------------------------------
# aggregate statistics


def state_proportions(sessions: Iterable[Session]) -> dict[WorkloadCategory, dict[MentalState, float]]:
    """Fraction of covered workload time spent in each state, per category.

    Categories with no data anywhere are absent from the result.
    """
    totals = {cat: np.zeros(3) for cat in CATEGORY_ORDER}
    covered = {cat: 0.0 for cat in CATEGORY_ORDER}
    for session in sessions:
        for cat, series in session.workload.items():
            if series.n_samples == 0:
                continue
            starts, ends = _dwell_segments(series)
            dwell = ends - starts
            totals[cat] += np.bincount(series.states, weights=dwell, minlength=3)[:3]
            covered[cat] += float(dwell.sum())
    out: dict[WorkloadCategory, dict[MentalState, float]] = {}
    for cat in CATEGORY_ORDER:
        if covered[cat] <= 0:
            continue
        out[cat] = {state: float(totals[cat][state.ordinal] / covered[cat]) for state in STATE_ORDER}
    return out


def error_contribution(
    sessions: Iterable[Session], category: WorkloadCategory
) -> dict[MentalState, tuple[Optional[float], int]]:
    """Pearson correlation between per-occurrence state seconds and error
    seconds, for each mental state of the given category."""
    occurrences = collect_occurrences(sessions, category)
    n = len(occurrences)
    if n == 0:
        return {state: (None, 0) for state in STATE_ORDER}
    e = np.array([o.error_seconds for o in occurrences])
    s_matrix = np.vstack([o.state_seconds for o in occurrences])
    return {state: (pearson(s_matrix[:, state.ordinal], e), n) for state in STATE_ORDER}


def partial_r_per_procedure(
    sessions: Iterable[Session],
    label: str,
    category: WorkloadCategory,
    state: MentalState,
) -> Optional[float]:
    """Partial correlation between state seconds and error seconds,
    controlling for the indicator of the given procedure label."""
    occurrences = collect_occurrences(sessions, category)
    return _partial_r_from_occurrences(occurrences, label, state)


def _partial_r_from_occurrences(
    occurrences: Sequence[Occurrence], label: str, state: MentalState
) -> Optional[float]:
    if len(occurrences) < MIN_CORRELATION_N:
        return None
    s = np.array([o.state_seconds[state.ordinal] for o in occurrences])
    e = np.array([o.error_seconds for o in occurrences])
    p = np.array([1.0 if o.label == label else 0.0 for o in occurrences])
    return partial_correlation(pearson(s, e), pearson(s, p), pearson(e, p))


def procedure_summary(session: Session, category: WorkloadCategory) -> ProcedureSummary:
    """Per-label prevalence, error fraction and partial correlations for one session."""
    duration = session.duration_s
    occurrences = collect_occurrences([session], category)
    has_workload = category in session.workload and session.workload[category].n_samples > 0
    labels: dict[str, ProcedureLabelStats] = {}
    for label in sorted(session.procedures.labels):
        label_total = total_label_duration(session.procedures, label)
        error_secs = sum(
            error_overlap_seconds(session.errors, iv.start_s, iv.end_s)
            for iv in session.procedures
            if iv.label == label
        )
        partial: Optional[dict[MentalState, Optional[float]]] = None
        if has_workload:
            partial = {
                state: _partial_r_from_occurrences(occurrences, label, state) for state in STATE_ORDER
            }
        labels[label] = ProcedureLabelStats(
            prevalence=label_total / duration,
            error_fraction=error_secs / label_total if label_total > 0 else 0.0,
            partial_r=partial,
        )
    return ProcedureSummary(session.id, category, labels)


def aggregate_group(sessions: Sequence[Session], group_by: str) -> list[GroupAggregate]:
    """Group sessions by subject or trial and compute per-group statistics."""
    if group_by not in ("subject", "trial"):
        raise ValueError(f"group_by must be 'subject' or 'trial', got {group_by!r}")
    groups: dict[str, list[Session]] = {}
    for session in sessions:
        key = session.subject if group_by == "subject" else session.trial
        groups.setdefault(key, []).append(session)
    out = []
    for key in sorted(groups):
        members = groups[key]
        out.append(
            GroupAggregate(
                key=key,
                group_by=group_by,
                session_ids=tuple(s.id for s in members),
                proportions=state_proportions(members),
                error_contribution={cat: error_contribution(members, cat) for cat in CATEGORY_ORDER},
                avg_duration_s=float(np.mean([s.duration_s for s in members])),
            )
        )
    return out
