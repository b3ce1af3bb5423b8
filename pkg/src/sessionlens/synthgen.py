"""Synthetic dataset generator.

Writes ingestable session bundles with controllable ground truth: performer
profiles drive motion style and workload bias, and an optional error
coupling plants a (procedure, category, state) <-> error relationship whose
strength the analytics layer must recover. Generation is fully seeded with
a fixed-algorithm PRNG (PCG64), so identical specs produce byte-identical
trees on every platform.

Spec JSON schema (see README for a worked example)::

    {
      "dataset_name": str,
      "seed": int,
      "procedures": [str, ...],
      "trials": int | [str, ...],
      "duration_range": [lo_s, hi_s],
      "profiles": [
        {
          "subject": str,
          "skill": "expert" | "novice",
          "motion_style": "smooth" | "stop_start",
          "workload_bias": {category: {state: prob}},        # optional
          "error_coupling": {"procedure": str, "category": str,
                              "state": str, "strength": 0..1} # optional
        }, ...
      ],
      "degradations": {                                       # optional
        "drop_streams": [[session_id, stream_file], ...],
        "inject_gaps": [[session_id, stream, start_s, end_s], ...]
      }
    }
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .model import (
    CATEGORY_ORDER,
    STATE_ORDER,
    Interval,
    MentalState,
    WorkloadCategory,
)

WORKLOAD_RATE_HZ = 10.0
IMU_RATE_HZ = 50.0
GAZE_RATE_HZ = 30.0
MEAN_STATE_DWELL_S = 8.0
PF_FRACTION = 0.6

# Uniform error sprinkling rates (errors per second) by skill.
ERROR_RATES = {"expert": 0.004, "novice": 0.010}

DROPPABLE_FILES = ("procedures", "errors", "phases", "workload", "imu", "gaze")
GAP_STREAMS = ("workload.perception", "workload.attention", "workload.memory", "imu", "gaze")

DEFAULT_BIAS = {
    MentalState.UNDERLOAD: 0.25,
    MentalState.OPTIMAL: 0.5,
    MentalState.OVERLOAD: 0.25,
}


class SpecError(ValueError):
    """Invalid generator specification; nothing is written."""


@dataclass(frozen=True)
class ErrorCoupling:
    procedure: str
    category: WorkloadCategory
    state: MentalState
    strength: float

    def __post_init__(self):
        if not 0.0 <= self.strength <= 1.0:
            raise SpecError(f"coupling strength must be in [0,1], got {self.strength}")


@dataclass(frozen=True)
class ProfileSpec:
    subject: str
    skill: str = "expert"
    motion_style: str = "smooth"
    workload_bias: dict[WorkloadCategory, dict[MentalState, float]] = field(default_factory=dict)
    error_coupling: Optional[ErrorCoupling] = None

    def __post_init__(self):
        if self.skill not in ERROR_RATES:
            raise SpecError(f"skill must be one of {sorted(ERROR_RATES)}, got {self.skill!r}")
        if self.motion_style not in ("smooth", "stop_start"):
            raise SpecError(f"motion_style must be smooth or stop_start, got {self.motion_style!r}")
        for cat, dist in self.workload_bias.items():
            total = sum(dist.values())
            if abs(total - 1.0) > 1e-6:
                raise SpecError(f"workload_bias[{cat.value}] must sum to 1, got {total}")

    def bias_for(self, category: WorkloadCategory) -> dict[MentalState, float]:
        return self.workload_bias.get(category, DEFAULT_BIAS)


@dataclass(frozen=True)
class GenerateSpec:
    dataset_name: str
    procedures: tuple[str, ...]
    trials: tuple[str, ...]
    duration_range: tuple[float, float]
    seed: int
    profiles: tuple[ProfileSpec, ...]

    def __post_init__(self):
        if not self.profiles:
            raise SpecError("at least one profile is required")
        if not self.procedures:
            raise SpecError("at least one procedure label is required")
        if not self.trials:
            raise SpecError("at least one trial is required")
        lo, hi = self.duration_range
        if not (0 < lo <= hi):
            raise SpecError(f"bad duration_range {self.duration_range}")
        for profile in self.profiles:
            coupling = profile.error_coupling
            if coupling is not None and coupling.procedure not in self.procedures:
                raise SpecError(f"coupling procedure {coupling.procedure!r} not in procedure labels")


@dataclass(frozen=True)
class Degradations:
    drop_streams: tuple[tuple[str, str], ...] = ()  # (session_id, stream file)
    inject_gaps: tuple[tuple[str, str, float, float], ...] = ()  # (session_id, stream, start, end)

    def __post_init__(self):
        for _, stream_file in self.drop_streams:
            if stream_file not in DROPPABLE_FILES:
                raise SpecError(f"cannot drop {stream_file!r}; choose from {DROPPABLE_FILES}")
        for _, stream, start, end in self.inject_gaps:
            if stream not in GAP_STREAMS:
                raise SpecError(f"cannot inject gap into {stream!r}; choose from {GAP_STREAMS}")
            if not end > start >= 0:
                raise SpecError(f"bad gap span ({start}, {end})")


@dataclass
class _Bundle:
    session_id: str
    subject: str
    trial: str
    duration_s: float
    procedures: list[Interval]
    errors: list[tuple[float, float]]
    phases: list[Interval]
    workload: dict[WorkloadCategory, tuple[np.ndarray, np.ndarray, np.ndarray]]  # t, codes, conf
    imu: tuple[np.ndarray, np.ndarray]
    gaze: tuple[np.ndarray, np.ndarray]
    coupled_spans: list[tuple[float, float]] = field(default_factory=list)
    dropped: list[str] = field(default_factory=list)


# ---------------------------------------------------------------------------
# spec parsing


def parse_spec(raw: dict) -> tuple[GenerateSpec, Degradations]:
    try:
        trials_raw = raw.get("trials", 1)
        if isinstance(trials_raw, int):
            trials = tuple(f"t{i + 1:02d}" for i in range(trials_raw))
        else:
            trials = tuple(str(t) for t in trials_raw)
        profiles = tuple(_parse_profile(p) for p in raw["profiles"])
        lo, hi = raw.get("duration_range", [240.0, 420.0])
        spec = GenerateSpec(
            dataset_name=str(raw.get("dataset_name", "synthetic")),
            procedures=tuple(str(x) for x in raw.get("procedures", ["a", "b", "c", "d", "e", "f"])),
            trials=trials,
            duration_range=(float(lo), float(hi)),
            seed=int(raw.get("seed", 0)),
            profiles=profiles,
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, SpecError):
            raise
        raise SpecError(f"invalid generator spec: {exc}")
    degradations = _parse_degradations(raw.get("degradations") or {})
    return spec, degradations


def _parse_profile(raw: dict) -> ProfileSpec:
    bias = {}
    for cat_name, dist in (raw.get("workload_bias") or {}).items():
        bias[WorkloadCategory(cat_name)] = {MentalState(s): float(p) for s, p in dist.items()}
    coupling = None
    coupling_raw = raw.get("error_coupling")
    if coupling_raw is not None:
        coupling = ErrorCoupling(
            procedure=str(coupling_raw["procedure"]),
            category=WorkloadCategory(coupling_raw["category"]),
            state=MentalState(coupling_raw["state"]),
            strength=float(coupling_raw["strength"]),
        )
    return ProfileSpec(
        subject=str(raw["subject"]),
        skill=str(raw.get("skill", "expert")),
        motion_style=str(raw.get("motion_style", "smooth")),
        workload_bias=bias,
        error_coupling=coupling,
    )


def _parse_degradations(raw: dict) -> Degradations:
    return Degradations(
        drop_streams=tuple((str(s), str(f)) for s, f in raw.get("drop_streams", [])),
        inject_gaps=tuple(
            (str(s), str(st), float(a), float(b)) for s, st, a, b in raw.get("inject_gaps", [])
        ),
    )


# ---------------------------------------------------------------------------
# generation


def generate(spec: GenerateSpec, out_dir: Path | str) -> list[str]:
    """Write one bundle per (profile x trial); returns the session ids."""
    return generate_degraded(spec, Degradations(), out_dir)


def generate_degraded(spec: GenerateSpec, degradations: Degradations, out_dir: Path | str) -> list[str]:
    """Like generate(), then drop streams / cut sample spans as requested.

    The applied degradations are recorded in the ground_truth.json sidecar so
    tests can compare recovered quality reports against the planted truth.
    """
    bundles = []
    for p_idx, profile in enumerate(spec.profiles):
        for t_idx, trial in enumerate(spec.trials):
            rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([spec.seed, p_idx, t_idx])))
            bundles.append(_gen_bundle(spec, profile, trial, rng))

    known = {b.session_id for b in bundles}
    for sid, _ in degradations.drop_streams:
        if sid not in known:
            raise SpecError(f"drop_streams names unknown session {sid!r}")
    for sid, _, _, _ in degradations.inject_gaps:
        if sid not in known:
            raise SpecError(f"inject_gaps names unknown session {sid!r}")
    for bundle in bundles:
        _degrade(bundle, degradations)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "dataset_name": spec.dataset_name,
        "procedure_labels": list(spec.procedures),
        "sessions": [{"id": b.session_id, "dir": b.session_id} for b in bundles],
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    for bundle in bundles:
        _write_bundle(out / bundle.session_id, bundle)
    _write_ground_truth(out, spec, bundles, degradations)
    return [b.session_id for b in bundles]


def _bundle_profiles(spec: GenerateSpec) -> list[ProfileSpec]:
    return [profile for profile in spec.profiles for _ in spec.trials]


def _gen_bundle(spec: GenerateSpec, profile: ProfileSpec, trial: str, rng: np.random.Generator) -> _Bundle:
    duration = float(rng.uniform(*spec.duration_range))
    pf_end = duration * PF_FRACTION * float(rng.uniform(0.92, 1.08))
    pf_end = max(min(pf_end, duration - 10.0), duration * 0.3)

    procedures = _gen_procedures(spec.procedures, pf_end, rng)
    phases = [Interval(0.0, pf_end, "PF"), Interval(pf_end, duration, "FL")]

    coupling = profile.error_coupling
    workload: dict[WorkloadCategory, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}
    coupled_spans: list[tuple[float, float]] = []
    for cat in CATEGORY_ORDER:
        if coupling is not None and cat is coupling.category:
            t, codes, conf, coupled_spans = _gen_coupled_workload(duration, procedures, coupling, profile, rng)
        else:
            t, codes, conf = _gen_workload(duration, profile.bias_for(cat), rng)
        workload[cat] = (t, codes, conf)

    errors = _gen_errors(duration, profile, coupling, coupled_spans, procedures, rng)
    imu = _gen_imu(duration, profile.motion_style, rng)
    gaze = _gen_gaze(duration, rng)

    return _Bundle(
        session_id=f"{profile.subject}-{trial}",
        subject=profile.subject,
        trial=trial,
        duration_s=duration,
        procedures=procedures,
        errors=errors,
        phases=phases,
        workload=workload,
        imu=imu,
        gaze=gaze,
        coupled_spans=coupled_spans,
    )


def _gen_procedures(labels: tuple[str, ...], pf_end: float, rng: np.random.Generator) -> list[Interval]:
    """Non-sequential procedure occurrences filling the pre-flight phase.

    Labels are drawn from reshuffled bags so every label keeps appearing
    while the order stays scrambled.
    """
    out: list[Interval] = []
    bag: list[str] = []
    cursor = float(rng.uniform(0.5, 2.0))
    while True:
        length = float(rng.uniform(8.0, 20.0))
        if cursor + 2.0 >= pf_end:
            break
        end = min(cursor + length, pf_end - 0.1)
        if end - cursor < 2.0:
            break
        if not bag:
            bag = list(labels)
            rng.shuffle(bag)
        out.append(Interval(cursor, end, bag.pop()))
        cursor = end + float(rng.uniform(0.2, 2.0))
    return out


def _markov_states(n: int, probs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """State sequence with geometric dwell times (mean MEAN_STATE_DWELL_S)."""
    mean_dwell = MEAN_STATE_DWELL_S * WORKLOAD_RATE_HZ
    probs = probs / probs.sum()
    states = np.empty(n, dtype=np.int8)
    i = 0
    while i < n:
        state = int(rng.choice(3, p=probs))
        dwell = int(rng.geometric(1.0 / mean_dwell))
        states[i : i + dwell] = state
        i += dwell
    return states


def _bias_vector(bias: dict[MentalState, float]) -> np.ndarray:
    return np.array([bias.get(state, 0.0) for state in STATE_ORDER], dtype=np.float64)


def _gen_workload(
    duration: float, bias: dict[MentalState, float], rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    n = int(duration * WORKLOAD_RATE_HZ)
    t = np.arange(n) / WORKLOAD_RATE_HZ
    states = _markov_states(n, _bias_vector(bias), rng)
    conf = rng.uniform(0.55, 0.99, n)
    return t, states, conf


def _gen_coupled_workload(
    duration: float,
    procedures: list[Interval],
    coupling: ErrorCoupling,
    profile: ProfileSpec,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, list[tuple[float, float]]]:
    """Workload for the coupled category: the coupled state is suppressed in
    the baseline chain and planted as one contiguous run inside each
    occurrence of the coupled procedure, covering a random fraction of it."""
    bias = _bias_vector(profile.bias_for(coupling.category)).copy()
    target = coupling.state.ordinal
    bias[target] *= 1.0 - coupling.strength
    if bias.sum() <= 0:
        bias = np.ones(3)
    bias = bias / bias.sum()

    n = int(duration * WORKLOAD_RATE_HZ)
    t = np.arange(n) / WORKLOAD_RATE_HZ
    states = _markov_states(n, bias, rng)

    spans: list[tuple[float, float]] = []
    for iv in procedures:
        if iv.label != coupling.procedure:
            continue
        occ_len = iv.duration_s
        coverage = coupling.strength * float(rng.uniform(0.4, 0.95))
        span_len = coverage * occ_len
        if span_len < 2.0 / WORKLOAD_RATE_HZ:
            continue
        span_start = iv.start_s + float(rng.uniform(0.0, occ_len - span_len))
        i0 = int(np.searchsorted(t, span_start, side="left"))
        i1 = int(np.searchsorted(t, span_start + span_len, side="left"))
        if i1 <= i0:
            continue
        states[i0:i1] = target
        # Align the recorded span with the sampled run so downstream dwell
        # measurements match the planted extent.
        spans.append((float(t[i0]), min(float(t[i1 - 1]) + 1.0 / WORKLOAD_RATE_HZ, iv.end_s)))
    conf = rng.uniform(0.55, 0.99, n)
    return t, states, conf, spans


def _gen_errors(
    duration: float,
    profile: ProfileSpec,
    coupling: Optional[ErrorCoupling],
    coupled_spans: list[tuple[float, float]],
    procedures: list[Interval],
    rng: np.random.Generator,
) -> list[tuple[float, float]]:
    errors: list[tuple[float, float]] = []
    if coupling is not None:
        errors.extend(coupled_spans)
        sprinkle_rate = ERROR_RATES[profile.skill] * (1.0 - coupling.strength)
    else:
        sprinkle_rate = ERROR_RATES[profile.skill]
    n_extra = int(rng.poisson(sprinkle_rate * duration))
    for _ in range(n_extra):
        length = float(rng.uniform(0.5, 3.0))
        start = float(rng.uniform(0.0, max(duration - length, 0.1)))
        errors.append((start, min(start + length, duration)))
    errors.sort()
    merged: list[tuple[float, float]] = []
    for start, end in errors:
        if merged and start < merged[-1][1]:
            continue  # drop overlapping sprinkles; error tracks stay disjoint
        merged.append((start, end))
    return merged


def _wander(t: np.ndarray, n_components: int, freq_range: tuple[float, float], amp_range: tuple[float, float], rng: np.random.Generator) -> np.ndarray:
    out = np.zeros_like(t)
    for _ in range(n_components):
        f = rng.uniform(*freq_range)
        a = rng.uniform(*amp_range)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        out += a * np.sin(2.0 * np.pi * f * t + phase)
    return out


def _burst_envelope(t: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """0/1 envelope alternating rest plateaus with activity bursts."""
    env = np.zeros_like(t)
    cursor = 0.0
    end = float(t[-1]) if len(t) else 0.0
    while cursor < end:
        rest = float(rng.uniform(3.0, 8.0))
        burst = float(rng.uniform(1.0, 4.0))
        a, b = cursor + rest, cursor + rest + burst
        env[(t >= a) & (t < b)] = 1.0
        cursor = b
    return env


def _gen_imu(duration: float, style: str, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    n = int(duration * IMU_RATE_HZ)
    t = np.arange(n) / IMU_RATE_HZ
    values = np.empty((n, 9))
    gravity = np.array([0.0, 0.0, 9.81])
    mag_base = np.array([20.0, -5.0, 42.0])
    if style == "smooth":
        for axis in range(3):
            values[:, axis] = gravity[axis] + _wander(t, 3, (0.05, 0.4), (0.2, 0.6), rng) + rng.normal(0, 0.05, n)
            values[:, 3 + axis] = _wander(t, 2, (0.1, 0.5), (0.1, 0.3), rng) + rng.normal(0, 0.02, n)
            values[:, 6 + axis] = mag_base[axis] + _wander(t, 1, (0.02, 0.08), (1.0, 3.0), rng) + rng.normal(0, 0.3, n)
    else:
        env = _burst_envelope(t, rng)
        for axis in range(3):
            burst = env * _wander(t, 2, (2.0, 6.0), (3.0, 7.0), rng)
            values[:, axis] = gravity[axis] + burst + rng.normal(0, 0.08, n)
            values[:, 3 + axis] = env * _wander(t, 2, (2.0, 6.0), (1.5, 4.0), rng) + rng.normal(0, 0.05, n)
            values[:, 6 + axis] = mag_base[axis] + env * _wander(t, 1, (1.0, 3.0), (2.0, 5.0), rng) + rng.normal(0, 0.3, n)
    return t, values


def _gen_gaze(duration: float, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    n = int(duration * GAZE_RATE_HZ)
    t = np.arange(n) / GAZE_RATE_HZ
    steps = rng.normal(0.0, 0.01, (n, 3))
    steps[0] = 0.0
    raw = np.array([0.0, 0.0, 1.0]) + np.cumsum(steps, axis=0)
    norms = np.clip(np.linalg.norm(raw, axis=1), 1e-9, None)
    directions = raw / norms[:, None]
    origin = np.array([0.0, 1.35, 0.2]) + np.cumsum(rng.normal(0.0, 0.0015, (n, 3)), axis=0)
    values = np.hstack([origin, directions])
    return t, values


# ---------------------------------------------------------------------------
# degradation + writing


def _degrade(bundle: _Bundle, degradations: Degradations) -> None:
    for sid, stream_file in degradations.drop_streams:
        if sid == bundle.session_id and stream_file not in bundle.dropped:
            bundle.dropped.append(stream_file)
    for sid, stream, start, end in degradations.inject_gaps:
        if sid != bundle.session_id:
            continue
        if stream in ("imu", "gaze"):
            t, values = getattr(bundle, stream)
            keep = (t < start) | (t >= end)
            setattr(bundle, stream, (t[keep], values[keep]))
        else:
            cat = WorkloadCategory(stream.split(".", 1)[1])
            t, codes, conf = bundle.workload[cat]
            keep = (t < start) | (t >= end)
            bundle.workload[cat] = (t[keep], codes[keep], conf[keep])


def _write_bundle(bundle_dir: Path, bundle: _Bundle) -> None:
    bundle_dir.mkdir(parents=True, exist_ok=True)
    meta = {
        "subject": bundle.subject,
        "trial": bundle.trial,
        "duration_s": round(bundle.duration_s, 4),
        "video": None,
    }
    (bundle_dir / "session.json").write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")

    if "procedures" not in bundle.dropped:
        lines = ["start_s,end_s,label"]
        lines += [f"{iv.start_s:.4f},{iv.end_s:.4f},{iv.label}" for iv in bundle.procedures]
        (bundle_dir / "procedures.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    if "errors" not in bundle.dropped:
        lines = ["start_s,end_s"]
        lines += [f"{a:.4f},{b:.4f}" for a, b in bundle.errors]
        (bundle_dir / "errors.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    if "phases" not in bundle.dropped:
        lines = ["start_s,end_s,phase"]
        lines += [f"{iv.start_s:.4f},{iv.end_s:.4f},{iv.label}" for iv in bundle.phases]
        (bundle_dir / "phases.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    if "workload" not in bundle.dropped:
        lines = ["t_s,category,state,confidence"]
        for cat in CATEGORY_ORDER:
            t, codes, conf = bundle.workload[cat]
            for i in range(len(t)):
                state = STATE_ORDER[codes[i]].value
                lines.append(f"{t[i]:.4f},{cat.value},{state},{conf[i]:.4f}")
        (bundle_dir / "workload.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    if "imu" not in bundle.dropped:
        _write_sensor_csv(bundle_dir / "imu.csv", "t_s,ax,ay,az,gx,gy,gz,mx,my,mz", bundle.imu)
    if "gaze" not in bundle.dropped:
        _write_sensor_csv(bundle_dir / "gaze.csv", "t_s,ox,oy,oz,dx,dy,dz", bundle.gaze)


def _write_sensor_csv(path: Path, header: str, data: tuple[np.ndarray, np.ndarray]) -> None:
    t, values = data
    lines = [header]
    for i in range(len(t)):
        row = ",".join(f"{x:.6f}" for x in values[i])
        lines.append(f"{t[i]:.4f},{row}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_ground_truth(out: Path, spec: GenerateSpec, bundles: list[_Bundle], degradations: Degradations) -> None:
    profiles = _bundle_profiles(spec)
    truth = {
        "dataset_name": spec.dataset_name,
        "seed": spec.seed,
        "sessions": [
            {
                "id": b.session_id,
                "subject": b.subject,
                "trial": b.trial,
                "duration_s": round(b.duration_s, 4),
                "motion_style": p.motion_style,
                "n_occurrences": len(b.procedures),
                "coupling": None
                if p.error_coupling is None
                else {
                    "procedure": p.error_coupling.procedure,
                    "category": p.error_coupling.category.value,
                    "state": p.error_coupling.state.value,
                    "strength": p.error_coupling.strength,
                },
                "coupled_spans": [[round(a, 4), round(b_, 4)] for a, b_ in b.coupled_spans],
                "dropped_streams": list(b.dropped),
            }
            for b, p in zip(bundles, profiles)
        ],
        "degradations": {
            "drop_streams": [list(x) for x in degradations.drop_streams],
            "inject_gaps": [list(x) for x in degradations.inject_gaps],
        },
    }
    (out / "ground_truth.json").write_text(json.dumps(truth, indent=2) + "\n", encoding="utf-8")
