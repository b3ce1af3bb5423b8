import math

import numpy as np
import pytest

from sessionlens import analytics
from sessionlens.model import Interval, IntervalTrack, MentalState, TrackKind, WorkloadCategory

from conftest import make_session, make_workload, U, O, V

ATT = WorkloadCategory.ATTENTION


def pearson_oracle(x, y):
    """Direct-definition Pearson, independent of the implementation."""
    n = len(x)
    mx = math.fsum(x) / n
    my = math.fsum(y) / n
    sxy = math.fsum((x[i] - mx) * (y[i] - my) for i in range(n))
    sxx = math.fsum((x[i] - mx) ** 2 for i in range(n))
    syy = math.fsum((y[i] - my) ** 2 for i in range(n))
    return sxy / math.sqrt(sxx * syy)


class TestPearson:
    def test_exact_positive_linearity(self):
        assert analytics.pearson([1, 2, 3], [2, 4, 6]) == pytest.approx(1.0, abs=1e-12)

    def test_exact_negative_linearity(self):
        assert analytics.pearson([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0, abs=1e-12)

    def test_known_value(self):
        # oracle: sum(dx*dy) / sqrt(sum(dx^2) * sum(dy^2)) = 4 / sqrt(25)
        assert pearson_oracle([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(0.8, abs=1e-12)
        assert analytics.pearson([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(0.8, abs=1e-12)

    def test_matches_oracle_on_random_vectors(self):
        rng = np.random.Generator(np.random.PCG64(101))
        for _ in range(300):
            n = int(rng.integers(3, 80))
            x = rng.normal(size=n)
            y = rng.normal(size=n) + 0.5 * x
            assert analytics.pearson(x, y) == pytest.approx(pearson_oracle(list(x), list(y)), abs=1e-12)

    def test_undefined_cases(self):
        assert analytics.pearson([1, 2], [3, 4]) is None  # n < 3
        assert analytics.pearson([1, 1, 1], [1, 2, 3]) is None  # zero variance
        assert analytics.pearson([1, 2, 3], [5, 5, 5]) is None

    def test_symmetry_and_affine_invariance(self):
        rng = np.random.Generator(np.random.PCG64(7))
        for _ in range(100):
            n = int(rng.integers(3, 40))
            x = rng.normal(size=n)
            y = rng.normal(size=n)
            r = analytics.pearson(x, y)
            if r is None:
                continue
            assert abs(r) <= 1 + 1e-12
            assert analytics.pearson(y, x) == pytest.approx(r, abs=1e-12)
            a, b = float(rng.uniform(0.1, 5)), float(rng.normal())
            assert analytics.pearson(a * x + b, y) == pytest.approx(r, abs=1e-9)


class TestPartialCorrelation:
    def test_conditioning_on_uncorrelated_is_identity(self):
        assert analytics.partial_correlation(0.5, 0.0, 0.0) == pytest.approx(0.5, abs=1e-12)
        for r in np.linspace(-1, 1, 21):
            assert analytics.partial_correlation(float(r), 0.0, 0.0) == pytest.approx(r, abs=1e-12)

    def test_known_value(self):
        # (0.9 - 0.25) / sqrt(0.75 * 0.75) = 0.65 / 0.75
        assert analytics.partial_correlation(0.9, 0.5, 0.5) == pytest.approx(0.8667, abs=5e-5)

    def test_degenerate_conditioning_undefined(self):
        assert analytics.partial_correlation(0.3, 1.0, 0.2) is None
        assert analytics.partial_correlation(0.3, 0.2, -1.0) is None

    def test_none_propagates(self):
        assert analytics.partial_correlation(None, 0.1, 0.1) is None
        assert analytics.partial_correlation(0.5, None, 0.1) is None

    def test_matches_plugin_formula_on_grid(self):
        grid = np.linspace(-0.95, 0.95, 20)
        for r_se in grid:
            for r_sp in grid:
                for r_ep in grid:
                    expected = (r_se - r_sp * r_ep) / math.sqrt((1 - r_sp**2) * (1 - r_ep**2))
                    got = analytics.partial_correlation(float(r_se), float(r_sp), float(r_ep))
                    assert got == pytest.approx(expected, abs=1e-12)


class TestStateProportions:
    def test_single_state(self):
        session = make_session(duration=10, workload={ATT: make_workload([O] * 50)})
        props = analytics.state_proportions([session])
        assert props[ATT][O] == pytest.approx(1.0, abs=1e-9)
        assert props[ATT][U] == 0.0

    def test_two_sessions_symmetric_mix(self):
        s1 = make_session(sid="a", duration=10, workload={ATT: make_workload([V] * 100)})
        s2 = make_session(sid="b", duration=10, workload={ATT: make_workload([U] * 100)})
        props = analytics.state_proportions([s1, s2])
        assert props[ATT][V] == pytest.approx(0.5, abs=1e-9)
        assert props[ATT][U] == pytest.approx(0.5, abs=1e-9)
        assert props[ATT][O] == 0.0

    def test_30s_optimal_10s_overload(self):
        states = [O] * 300 + [V] * 100
        session = make_session(duration=40, workload={ATT: make_workload(states)})
        props = analytics.state_proportions([session])
        # one 0.1 s sample period of slack at the boundary
        assert props[ATT][O] == pytest.approx(0.75, abs=0.1 / 40 + 1e-9)
        assert props[ATT][V] == pytest.approx(0.25, abs=0.1 / 40 + 1e-9)

    def test_fractions_sum_to_one(self):
        rng = np.random.Generator(np.random.PCG64(31))
        sessions = []
        for i in range(5):
            states = [MentalState.from_ordinal(int(c)) for c in rng.integers(0, 3, 200)]
            sessions.append(make_session(sid=f"s{i}", duration=25, workload={ATT: make_workload(states)}))
        props = analytics.state_proportions(sessions)
        assert sum(props[ATT].values()) == pytest.approx(1.0, abs=1e-9)

    def test_no_workload_gives_empty(self):
        session = make_session(duration=10, procedures=[(0, 5, "a")])
        assert analytics.state_proportions([session]) == {}

    def test_concatenation_is_duration_weighted_mean(self):
        s1 = make_session(sid="a", duration=20, workload={ATT: make_workload([O] * 150 + [V] * 50)})
        s2 = make_session(sid="b", duration=60, workload={ATT: make_workload([U] * 400 + [O] * 200)})
        p1 = analytics.state_proportions([s1])[ATT]
        p2 = analytics.state_proportions([s2])[ATT]
        both = analytics.state_proportions([s1, s2])[ATT]
        w1, w2 = 200 * 0.1, 600 * 0.1  # covered seconds
        for state in (U, O, V):
            expected = (p1[state] * w1 + p2[state] * w2) / (w1 + w2)
            assert both[state] == pytest.approx(expected, abs=1e-9)


def _coupled_like_session(sid="s1", seed=0):
    """Hand-built session: overload and errors co-occur inside label 'e'."""
    rng = np.random.Generator(np.random.PCG64(seed))
    procs, errors, states = [], [], []
    cursor = 0.0
    labels = list("abcdef") * 4
    rng.shuffle(labels)
    for label in labels:
        length = float(rng.uniform(8, 16))
        start, end = cursor, cursor + length
        n = int(round(length * 10))
        if label == "e":
            frac = float(rng.uniform(0.3, 0.9))
            n_over = int(n * frac)
            states += [V] * n_over + [O] * (n - n_over)
            errors.append((start, start + n_over / 10))
        else:
            states += [O if rng.random() < 0.7 else U for _ in range(n)]
        procs.append((start, end, label))
        cursor = end
    duration = cursor + 1
    return make_session(
        sid=sid,
        duration=duration,
        procedures=procs,
        errors=errors,
        workload={ATT: make_workload(states)},
    )


class TestErrorContribution:
    def test_planted_coupling_recovered(self):
        sessions = [_coupled_like_session(f"s{i}", seed=i) for i in range(3)]
        result = analytics.error_contribution(sessions, ATT)
        r_over, n = result[V]
        assert n >= 30
        assert r_over >= 0.9
        r_opt, _ = result[O]
        assert r_opt is not None and r_opt <= 0

    def test_matches_interval_arithmetic_oracle(self):
        session = _coupled_like_session(seed=3)
        occurrences = analytics.collect_occurrences([session], ATT)
        series = session.workload[ATT]
        t = series.t_s
        period = 1.0 / series.nominal_rate_hz
        for occ, iv in zip(occurrences, session.procedures):
            s_oracle = 0.0
            for i in range(len(t)):
                seg_a = t[i]
                seg_b = t[i + 1] if i + 1 < len(t) else t[i] + period
                if series.states[i] == V.ordinal:
                    s_oracle += max(0.0, min(seg_b, iv.end_s) - max(seg_a, iv.start_s))
            e_oracle = sum(
                max(0.0, min(ev.end_s, iv.end_s) - max(ev.start_s, iv.start_s)) for ev in session.errors
            )
            assert occ.state_seconds[V.ordinal] == pytest.approx(s_oracle, abs=1e-9)
            assert occ.error_seconds == pytest.approx(e_oracle, abs=1e-9)

    def test_no_errors_is_undefined(self):
        session = make_session(
            duration=30,
            procedures=[(0, 10, "a"), (10, 20, "b"), (20, 30, "a")],
            workload={ATT: make_workload([O] * 150 + [V] * 150)},
        )
        result = analytics.error_contribution([session], ATT)
        assert all(r is None for r, _ in result.values())

    def test_too_few_occurrences_is_undefined(self):
        session = make_session(
            duration=20,
            procedures=[(0, 10, "a")],
            errors=[(2, 4)],
            workload={ATT: make_workload([V] * 100 + [O] * 100)},
        )
        result = analytics.error_contribution([session], ATT)
        assert all(r is None for r, _ in result.values())


class TestProcedureSummary:
    def test_prevalence(self):
        session = make_session(
            duration=600,
            procedures=[(0, 150, "c"), (200, 350, "c"), (400, 500, "a")],
            workload={ATT: make_workload([O] * 100)},
        )
        summary = analytics.procedure_summary(session, ATT)
        assert summary.labels["c"].prevalence == pytest.approx(0.5)
        assert summary.labels["a"].prevalence == pytest.approx(100 / 600)

    def test_fully_errored_procedure(self):
        session = make_session(
            duration=100,
            procedures=[(0, 20, "e"), (30, 50, "a")],
            errors=[(0, 20)],
            workload={ATT: make_workload([O] * 100)},
        )
        summary = analytics.procedure_summary(session, ATT)
        assert summary.labels["e"].error_fraction == pytest.approx(1.0)
        assert summary.labels["a"].error_fraction == 0.0

    def test_planted_partial_r_regime(self):
        session = _coupled_like_session(seed=11)
        summary = analytics.procedure_summary(session, ATT)
        assert summary.labels["e"].partial_r[V] >= 0.9

    def test_partial_r_absent_without_workload(self):
        session = make_session(duration=100, procedures=[(0, 20, "a")])
        summary = analytics.procedure_summary(session, ATT)
        assert summary.labels["a"].partial_r is None

    def test_prevalences_sum_to_covered_fraction(self):
        rng = np.random.Generator(np.random.PCG64(77))
        for _ in range(50):
            bounds = np.sort(rng.uniform(0, 100, 24))
            procs = [
                (bounds[i], bounds[i + 1], str(rng.choice(list("abc"))))
                for i in range(0, 24, 2)
                if bounds[i + 1] - bounds[i] > 1e-6
            ]
            session = make_session(duration=100, procedures=procs)
            summary = analytics.procedure_summary(session, ATT)
            total = sum(stats.prevalence for stats in summary.labels.values())
            covered = sum(b - a for a, b, _ in procs) / 100
            assert total == pytest.approx(covered, abs=1e-9)
            assert total <= 1 + 1e-9

    def test_error_fraction_invariant_under_split(self):
        rng = np.random.Generator(np.random.PCG64(78))
        for _ in range(100):
            length = float(rng.uniform(10, 30))
            start = float(rng.uniform(0, 50))
            errors = [(start + 2, min(start + 2 + rng.uniform(0.5, 5), start + length))]
            whole = make_session(duration=100, procedures=[(start, start + length, "a")], errors=errors)
            cut = start + float(rng.uniform(1, length - 1))
            split = make_session(
                duration=100,
                procedures=[(start, cut, "a"), (cut, start + length, "a")],
                errors=errors,
            )
            f_whole = analytics.procedure_summary(whole, ATT).labels["a"].error_fraction
            f_split = analytics.procedure_summary(split, ATT).labels["a"].error_fraction
            assert f_split == pytest.approx(f_whole, abs=1e-9)


class TestPartialRPerProcedure:
    def test_constant_indicator_undefined(self):
        session = make_session(
            duration=40,
            procedures=[(0, 10, "a"), (10, 20, "a"), (20, 30, "a")],
            errors=[(1, 2), (12, 13)],
            workload={ATT: make_workload([V] * 200 + [O] * 200)},
        )
        assert analytics.partial_r_per_procedure([session], "a", ATT, V) is None

    def test_zero_errors_undefined(self):
        session = make_session(
            duration=40,
            procedures=[(0, 10, "a"), (10, 20, "b"), (20, 30, "a")],
            workload={ATT: make_workload([V] * 200 + [O] * 200)},
        )
        assert analytics.partial_r_per_procedure([session], "a", ATT, V) is None

    def test_planted_coupling_high_for_coupled_label(self):
        sessions = [_coupled_like_session(f"s{i}", seed=20 + i) for i in range(3)]
        r = analytics.partial_r_per_procedure(sessions, "e", ATT, V)
        assert r is not None and r > 0.8

    def test_matches_plugin_oracle(self):
        sessions = [_coupled_like_session(f"s{i}", seed=30 + i) for i in range(2)]
        occ = analytics.collect_occurrences(sessions, ATT)
        s = [o.state_seconds[V.ordinal] for o in occ]
        e = [o.error_seconds for o in occ]
        p = [1.0 if o.label == "b" else 0.0 for o in occ]
        r_se = pearson_oracle(s, e)
        r_sp = pearson_oracle(s, p)
        r_ep = pearson_oracle(e, p)
        expected = (r_se - r_sp * r_ep) / math.sqrt((1 - r_sp**2) * (1 - r_ep**2))
        got = analytics.partial_r_per_procedure(sessions, "b", ATT, V)
        assert got == pytest.approx(expected, abs=1e-9)


class TestAggregateGroup:
    def test_avg_duration(self):
        sessions = [
            make_session(sid=f"s{i}", subject="p1", trial=f"t{i}", duration=d, procedures=[(0, 5, "a")])
            for i, d in enumerate([100, 200, 300])
        ]
        groups = analytics.aggregate_group(sessions, "subject")
        assert len(groups) == 1
        assert groups[0].avg_duration_s == pytest.approx(200)
        assert groups[0].session_ids == ("s0", "s1", "s2")

    def test_distinct_trials_stay_distinct_groups(self):
        sessions = [
            make_session(sid=f"s{t}", subject="p", trial=t, duration=50, procedures=[(0, 5, "a")])
            for t in ("t02", "t10", "t23")
        ]
        groups = analytics.aggregate_group(sessions, "trial")
        assert [g.key for g in groups] == ["t02", "t10", "t23"]

    def test_single_session_group_matches_own_stats(self):
        session = _coupled_like_session()
        group = analytics.aggregate_group([session], "subject")[0]
        assert group.proportions == analytics.state_proportions([session])
        assert group.error_contribution[ATT] == analytics.error_contribution([session], ATT)

    def test_bad_group_key_rejected(self):
        with pytest.raises(ValueError):
            analytics.aggregate_group([], "color")
