"""Acceptance suite.

One test per acceptance criterion, each printing a PASS/FAIL line (run with
`pytest tests/test_acceptance.py -v -s` to see them). All thresholds and
tolerances are asserted exactly as contracted.

Criterion 2c (planted coupling: partial_r < 0.3 for every non-coupled label
while the raw group-level correlation stays >= 0.9) is asserted faithfully
but is expected RED: the two bounds are mutually exclusive for any dataset.
Controlling for an uninvolved label's indicator cannot erase a global
state/error correlation: partial_r(b) < 0.3 with r_se >= 0.9 forces
|corr(s, p_b)| >= 0.6 for all five other labels simultaneously, while the
correlations of one variable against five disjoint partition indicators
satisfy sum of squares <= ~1.2 < 5 * 0.36. See the project decision notes.
"""

import json
import math
import socket
import subprocess
import sys
import time
import urllib.request

import numpy as np
import pytest
from pydantic import TypeAdapter

from sessionlens import analytics, embed, ingest, query
from sessionlens.model import MentalState, SensorKind, WorkloadCategory
from sessionlens.service import ServiceConfig, create_app
from sessionlens.service import schemas
from sessionlens.synthgen import Degradations, GenerateSpec, ProfileSpec, generate, generate_degraded

from conftest import U, O, V, coupled_spec, make_session, make_workload, make_imu

ATT = WorkloadCategory.ATTENTION


def report(criterion: str, ok: bool, note: str = ""):
    status = "PASS" if ok else "FAIL"
    suffix = f" ({note})" if note else ""
    print(f"ACCEPTANCE {criterion}: {status}{suffix}")
    return ok


# ---------------------------------------------------------------------------
# 1. correlation oracle equivalence


def _pearson_oracle(x, y):
    n = len(x)
    mx = math.fsum(x) / n
    my = math.fsum(y) / n
    sxy = math.fsum((x[i] - mx) * (y[i] - my) for i in range(n))
    sxx = math.fsum((x[i] - mx) ** 2 for i in range(n))
    syy = math.fsum((y[i] - my) ** 2 for i in range(n))
    if sxx == 0 or syy == 0:
        return None
    return sxy / math.sqrt(sxx * syy)


def test_criterion_01_correlation_oracle_equivalence():
    start = time.perf_counter()
    rng = np.random.Generator(np.random.PCG64(1001))
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(3, 501))
        x = rng.normal(size=n)
        y = rng.normal(size=n) + rng.uniform(-1, 1) * x
        expected = _pearson_oracle(list(x), list(y))
        got = analytics.pearson(x, y)
        assert expected is not None and got is not None
        worst = max(worst, abs(got - expected))
        assert abs(got - expected) <= 1e-12

    grid = np.linspace(-0.95, 0.95, 39)
    for r_se in grid:
        for r_sp in grid:
            for r_ep in grid:
                expected = (r_se - r_sp * r_ep) / math.sqrt((1 - r_sp**2) * (1 - r_ep**2))
                got = analytics.partial_correlation(float(r_se), float(r_sp), float(r_ep))
                assert abs(got - expected) <= 1e-12
    elapsed = time.perf_counter() - start
    assert report("1", elapsed < 5.0, f"max pearson err {worst:.2e}, {elapsed:.2f}s")


# ---------------------------------------------------------------------------
# 2. planted-coupling reproduction


@pytest.fixture(scope="module")
def coupled(coupled_sessions):
    occurrences = analytics.collect_occurrences(coupled_sessions, ATT)
    assert len(occurrences) >= 200, "fixture must provide at least 200 occurrences"
    return coupled_sessions


def test_criterion_02a_partial_r_of_coupled_label(coupled):
    start = time.perf_counter()
    r = analytics.partial_r_per_procedure(coupled, "e", ATT, V)
    elapsed = time.perf_counter() - start
    ok = r is not None and r >= 0.9 and elapsed < 30.0
    assert report("2a", ok, f"partial_r(e)={r:.4f}, {elapsed:.2f}s")


def test_criterion_02b_group_level_error_contribution(coupled):
    result = analytics.error_contribution(coupled, ATT)
    r, n = result[V]
    ok = r is not None and r >= 0.9 and n >= 200
    assert report("2b", ok, f"r(overload)={r:.4f}, n={n}")


def test_criterion_02c_other_labels_decorrelated(coupled):
    """Expected RED: infeasible jointly with 2b; see module docstring."""
    values = {}
    for label in ("a", "b", "c", "d", "f"):
        r = analytics.partial_r_per_procedure(coupled, label, ATT, V)
        assert r is not None
        values[label] = r
    ok = all(r < 0.3 for r in values.values())
    report("2c", ok, ", ".join(f"partial_r({k})={v:.3f}" for k, v in values.items()))
    assert ok, (
        "partial_r < 0.3 for non-coupled labels is mathematically incompatible "
        f"with the >= 0.9 bounds of 2a/2b (got {values}); see decision notes"
    )


# ---------------------------------------------------------------------------
# 3. null-effect control


def test_criterion_03_null_effect_control(null_sessions):
    occurrences = analytics.collect_occurrences(null_sessions, ATT)
    assert len(occurrences) >= 200
    worst = 0.0
    defined = 0
    for cat in WorkloadCategory:
        for state, (r, n) in analytics.error_contribution(null_sessions, cat).items():
            if r is not None:
                defined += 1
                worst = max(worst, abs(r))
    ok = defined > 0 and worst < 0.2
    assert report("3", ok, f"{defined} defined coefficients, max |r|={worst:.3f}, n={len(occurrences)}")


# ---------------------------------------------------------------------------
# 4. shapelet correctness


def test_criterion_04_shapelet_oracle_and_determinism(coupled):
    rng = np.random.Generator(np.random.PCG64(404))
    for _ in range(500):
        m = int(rng.integers(2, 65))
        length = int(rng.integers(m, 513))
        shapelet = rng.normal(size=m)
        channel = rng.normal(size=length)
        best = None
        for off in range(length - m + 1):
            d = math.sqrt(float(np.mean((shapelet - channel[off : off + m]) ** 2)))
            best = d if best is None else min(best, d)
        got = embed.shapelet_distance(shapelet, channel)
        assert abs(got - best) <= 1e-12

    params = embed.EmbedParams()  # defaults
    a = embed.embed_sessions(coupled, "imu", params)
    b = embed.embed_sessions(coupled, "imu", params)
    ok = a == b and all(math.isfinite(x) and math.isfinite(y) for _, x, y in a.points)
    assert report("4", ok, f"500 oracle cases exact, {len(a.points)} deterministic points")


# ---------------------------------------------------------------------------
# 5. regime separability


def _separable_10_of_10(points_a, points_b, seed=0):
    """Brute-force linear split search over pairwise and random directions."""
    xa, xb = np.asarray(points_a), np.asarray(points_b)
    directions = [xa.mean(axis=0) - xb.mean(axis=0), np.array([1.0, 0.0]), np.array([0.0, 1.0])]
    rng = np.random.Generator(np.random.PCG64(seed))
    directions += [rng.normal(size=2) for _ in range(1000)]
    for w in directions:
        if not np.any(w):
            continue
        pa, pb = xa @ w, xb @ w
        if pa.max() < pb.min() or pb.max() < pa.min():
            return True
    return False


def test_criterion_05_motion_regime_separability(tmp_path):
    start = time.perf_counter()
    spec = GenerateSpec(
        dataset_name="regimes",
        procedures=("a", "b", "c"),
        trials=("t01",),
        duration_range=(150.0, 260.0),
        seed=11,
        profiles=tuple(
            ProfileSpec(f"m{i:02d}", "expert", "smooth" if i < 5 else "stop_start") for i in range(10)
        ),
    )
    generate(spec, tmp_path / "ds")
    sessions, _ = ingest.load_dataset(tmp_path / "ds")
    out = embed.embed_sessions(sessions, "imu", embed.EmbedParams())  # defaults
    pts = {sid: (x, y) for sid, x, y in out.points}
    smooth = [pts[f"m{i:02d}-t01"] for i in range(5)]
    stop = [pts[f"m{i:02d}-t01"] for i in range(5, 10)]
    elapsed = time.perf_counter() - start
    ok = _separable_10_of_10(smooth, stop) and elapsed < 60.0
    assert report("5", ok, f"{elapsed:.1f}s")


# ---------------------------------------------------------------------------
# 6. proportions and prevalence properties


def test_criterion_06_proportions_and_prevalence():
    rng = np.random.Generator(np.random.PCG64(606))

    # proportions sum to 1 +- 1e-9
    for _ in range(50):
        states = [MentalState.from_ordinal(int(c)) for c in rng.integers(0, 3, 300)]
        session = make_session(duration=31, workload={ATT: make_workload(states)})
        props = analytics.state_proportions([session])[ATT]
        assert abs(sum(props.values()) - 1.0) <= 1e-9

    # prevalences sum to covered fraction <= 1; error_fraction split-invariant
    for _ in range(200):
        duration = 100.0
        bounds = np.sort(rng.uniform(0, duration, 2 * int(rng.integers(2, 12))))
        procs = []
        for i in range(0, len(bounds), 2):
            if bounds[i + 1] - bounds[i] > 0.5:
                procs.append((float(bounds[i]), float(bounds[i + 1]), str(rng.choice(list("abcd")))))
        if len(procs) < 2:
            continue
        errors = []
        for a, b, _ in procs[: int(rng.integers(1, len(procs)))]:
            span = min(float(rng.uniform(0.1, 2.0)), (b - a) / 2)
            errors.append((a + span / 4, a + span / 4 + span))
        session = make_session(duration=duration, procedures=procs, errors=errors)
        summary = analytics.procedure_summary(session, ATT)
        total_prev = sum(s.prevalence for s in summary.labels.values())
        covered = sum(b - a for a, b, _ in procs) / duration
        assert abs(total_prev - covered) <= 1e-9
        assert total_prev <= 1.0 + 1e-9

        # split one random occurrence in two; per-label error fractions unchanged
        idx = int(rng.integers(0, len(procs)))
        a, b, label = procs[idx]
        cut = float(rng.uniform(a + 0.1, b - 0.1))
        split_procs = sorted(procs[:idx] + [(a, cut, label), (cut, b, label)] + procs[idx + 1 :])
        split_session = make_session(duration=duration, procedures=split_procs, errors=errors)
        split_summary = analytics.procedure_summary(split_session, ATT)
        for lab, stats in summary.labels.items():
            assert abs(split_summary.labels[lab].error_fraction - stats.error_fraction) <= 1e-9
    assert report("6", True, "50 proportion sets, 200 random tracks")


# ---------------------------------------------------------------------------
# 7. gap detection


def test_criterion_07_gap_detection(tmp_path):
    spec = GenerateSpec(
        dataset_name="gappy",
        procedures=("a", "b", "c"),
        trials=tuple(f"t{i:02d}" for i in range(1, 6)),
        duration_range=(160.0, 240.0),
        seed=77,
        profiles=(ProfileSpec("g1", "expert", "smooth"), ProfileSpec("g2", "novice", "stop_start")),
    )
    # plant 20 random gaps of 1-60 s across the 10 sessions
    rng = np.random.Generator(np.random.PCG64(700))
    clean_dir = tmp_path / "clean"
    generate(spec, clean_dir)
    truth = json.loads((clean_dir / "ground_truth.json").read_text())
    durations = {s["id"]: s["duration_s"] for s in truth["sessions"]}
    ids = list(durations)
    streams = ("workload.attention", "workload.perception", "workload.memory", "imu", "gaze")
    planted: list[tuple[str, str, float, float]] = []
    while len(planted) < 20:
        sid = ids[int(rng.integers(len(ids)))]
        stream = streams[int(rng.integers(len(streams)))]
        length = float(rng.uniform(1.0, 60.0))
        hi = durations[sid] - 5.0 - length
        if hi <= 5.0:
            continue
        start = float(rng.uniform(5.0, hi))
        overlap = any(
            s == sid and st == stream and start < b + 2.0 and a - 2.0 < start + length
            for s, st, a, b in planted
        )
        if overlap:
            continue
        planted.append((sid, stream, start, start + length))

    degraded_dir = tmp_path / "degraded"
    generate_degraded(spec, Degradations(inject_gaps=tuple(planted)), degraded_dir)
    _, reports = ingest.load_dataset(degraded_dir)
    by_id = {r.session_id: r for r in reports}

    recovered = 0
    for sid, stream, g0, g1 in planted:
        hits = [
            (a, b)
            for s, a, b in by_id[sid].gaps
            if s == stream and abs(a - g0) <= 0.2 and abs(b - g1) <= 0.2
        ]
        assert len(hits) == 1, f"gap {sid}/{stream} [{g0:.1f},{g1:.1f}] not recovered: {by_id[sid].gaps}"
        recovered += 1
    total_detected = sum(len(r.gaps) for r in reports)
    assert total_detected == len(planted), f"false gaps: detected {total_detected} vs planted {len(planted)}"

    _, clean_reports = ingest.load_dataset(clean_dir)
    false_on_clean = sum(len(r.gaps) for r in clean_reports)
    assert false_on_clean == 0
    assert report("7", True, f"{recovered}/20 recovered within 0.2s, 0 false gaps")


# ---------------------------------------------------------------------------
# 8. brush/query contracts + stable service JSON


def test_criterion_08_brush_and_slice_contracts(coupled):
    session = coupled[0]
    full = query.build_timeline(session, ATT)
    brushed = query.brush(session, 0.0, session.duration_s, ATT)
    assert brushed.timeline == full

    values = session.imu.values.copy()
    spike_at = session.duration_s / 2
    idx = int(np.searchsorted(session.imu.t_s, spike_at))
    values[idx, 0] = 1e6
    spiked = make_session(
        sid=session.id, duration=session.duration_s, imu=make_imu(session.imu.t_s, values),
        procedures=[(iv.start_s, iv.end_s, iv.label) for iv in session.procedures],
    )
    out = query.slice_series(spiked, SensorKind.IMU, "ax", 0.0, session.duration_s, max_points=40)
    assert out.decimated
    raw = spiked.imu.channel("ax")
    assert out.values.max() == raw.max() == 1e6
    assert out.values.min() == raw.min()
    assert report("8-brush", True)


def test_criterion_08_stable_finite_service_json(coupled_dataset):
    def collect(app):
        from fastapi.testclient import TestClient

        with TestClient(app) as client:
            sid = client.get("/api/sessions").json()[0]["id"]
            fixed = [
                ("GET", "/api/sessions", None),
                ("GET", f"/api/sessions/{sid}/timeline?category=attention", None),
                ("GET", f"/api/sessions/{sid}/matrix?category=attention", None),
            ]
            bodies = []
            for method, path, body in fixed:
                resp = client.request(method, path, json=body)
                assert resp.status_code == 200
                assert "NaN" not in resp.text and "Infinity" not in resp.text
                bodies.append(resp.content)
            return bodies

    config = ServiceConfig(data_root=coupled_dataset, embed_params=embed.EmbedParams(k=8, m=8, length=32, seed=0))
    first = collect(create_app(config))
    second = collect(create_app(config))
    assert first == second
    assert report("8-json", True, "3 fixed requests byte-identical across app instances")


# ---------------------------------------------------------------------------
# 9. end to end through the real CLI and server


def _wait_health(base: str, deadline_s: float = 60.0) -> dict:
    start = time.time()
    while time.time() - start < deadline_s:
        try:
            with urllib.request.urlopen(base + "/api/health", timeout=2) as resp:
                return json.loads(resp.read())
        except Exception:
            time.sleep(0.25)
    raise TimeoutError("server did not become healthy")


def _client_json(base: str, *args: str):
    out = subprocess.run(
        [sys.executable, "-m", "sessionlens", "client", "--server", base, *args],
        capture_output=True,
        text=True,
        timeout=60,
    )
    assert out.returncode == 0, out.stderr or out.stdout
    return json.loads(out.stdout)


def test_criterion_09_end_to_end(tmp_path):
    spec_file = tmp_path / "spec.json"
    spec_file.write_text(json.dumps({
        "dataset_name": "e2e",
        "seed": 42,
        "procedures": ["a", "b", "c", "d", "e", "f"],
        "trials": 6,
        "duration_range": [300, 420],
        "profiles": [
            {"subject": "s01", "skill": "expert", "motion_style": "smooth"},
            {"subject": "s02", "skill": "novice", "motion_style": "stop_start"},
        ],
    }))
    data_dir = tmp_path / "ds"
    gen = subprocess.run(
        [sys.executable, "-m", "sessionlens", "synthgen", "--spec", str(spec_file), "--out", str(data_dir)],
        capture_output=True,
        text=True,
        timeout=300,
    )
    assert gen.returncode == 0, gen.stderr

    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        port = sock.getsockname()[1]
    base = f"http://127.0.0.1:{port}"
    server = subprocess.Popen(
        [sys.executable, "-m", "sessionlens", "serve", "--data", str(data_dir), "--bind", f"127.0.0.1:{port}"],
        stdout=subprocess.PIPE,
        stderr=subprocess.STDOUT,
    )
    try:
        health = _wait_health(base)
        assert health == {"status": "ok", "sessions": 12}

        start = time.perf_counter()
        sessions = _client_json(base, "sessions")
        TypeAdapter(list[schemas.SessionMetaModel]).validate_python(sessions)
        ids = [s["id"] for s in sessions]
        assert len(ids) == 12

        aggregate = _client_json(base, "aggregate", "--ids", ",".join(ids), "--group-by", "subject")
        TypeAdapter(list[schemas.GroupAggregateModel]).validate_python(aggregate)
        assert {g["key"] for g in aggregate} == {"s01", "s02"}

        matrix = _client_json(base, "matrix", ids[0], "--category", "attention")
        TypeAdapter(schemas.MatrixResponse).validate_python(matrix)

        duration = sessions[0]["duration_s"]
        brush = _client_json(base, "brush", ids[0], "--t0", "10", "--t1", str(duration / 2))
        TypeAdapter(schemas.BrushResponse).validate_python(brush)
        assert brush["labels_touched"]

        series = _client_json(
            base, "series", ids[0], "--stream", "imu", "--channel", "accel_mag",
            "--t0", "10", "--t1", str(duration / 2), "--max-points", "500",
        )
        TypeAdapter(schemas.SeriesResponse).validate_python(series)
        assert series["points"]
        elapsed = time.perf_counter() - start
        assert report("9", elapsed < 10.0, f"query sequence {elapsed:.2f}s")
    finally:
        server.terminate()
        try:
            server.wait(timeout=10)
        except subprocess.TimeoutExpired:
            server.kill()
