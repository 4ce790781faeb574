import random

import pytest

from ctxlearn.casebase import CaseBase, case_similarity
from ctxlearn.context import (
    DeviceKind,
    FacetWeights,
    GoalClass,
    Motivation,
)
from ctxlearn.engine import (
    Engine,
    EngineConfig,
    EngineError,
    FreshSolve,
    Matched,
    NoInterestSignal,
    Recommendation,
    ReusedCase,
    Unclassified,
    ValidationFailed,
    load_engine_config,
)
from ctxlearn.geo import PoiStore, great_circle_distance, load_track
from ctxlearn.casebase import load_stereotypes
from support import make_poi, make_snapshot, make_solution, random_snapshot

W = FacetWeights.uniform()


def fresh_engine(store=None, config=None, stereotypes=()):
    return Engine(
        CaseBase(),
        store if store is not None else PoiStore([]),
        config or EngineConfig(),
        stereotypes=stereotypes,
    )


FAR_PAIR_SIM = 1.0 - 0.1 * (1.0 + 1.0 / 3.0 + 1.0 + 0.5)  # 0.71666...


def far_contexts(n):
    """Pairwise aggregate similarity ~0.7167 under uniform weights: each
    pair differs in device, weather, strategic tag and companion tag,
    which lands between the generalization cohesion (0.6) and the
    classification threshold (0.75)."""
    devices = list(DeviceKind)
    return [
        make_snapshot(
            device=devices[i % 5],
            weather=f"w{i}",
            strategic=f"s{i}",
            companion_tags=frozenset({f"t{i}"}),
        )
        for i in range(n)
    ]


class TestClassify:
    def test_empty_base_unclassified(self):
        engine = fresh_engine()
        got = engine.classify(make_snapshot())
        assert got == Unclassified(None)

    def test_exact_context_matched_at_one(self):
        engine = fresh_engine(store=PoiStore([make_poi("m", 45.1, 25.951)]))
        snap = make_snapshot()
        rec = engine.solve(snap)
        assert isinstance(rec.source, FreshSolve)
        got = engine.classify(snap)
        assert isinstance(got, Matched)
        assert got.similarity == pytest.approx(1.0)

    def test_boundary_just_under_theta(self):
        engine = fresh_engine()
        a, b = far_contexts(2)
        engine.retain(a, a.task, make_solution())
        # oracle: similarity of b against the retained case
        case = next(iter(engine.base))
        sim = case_similarity(b, case, engine.config.facet_weights)
        assert sim == pytest.approx(FAR_PAIR_SIM)
        assert sim < engine.config.similarity_threshold
        got = engine.classify(b)
        assert got == Unclassified(sim)

    def test_theta_gate_agrees_with_full_scan(self):
        engine = fresh_engine()
        rng = random.Random(61)
        for i in range(30):
            engine.retain(random_snapshot(rng), make_snapshot().task, make_solution())
        for _ in range(20):
            query = random_snapshot(rng)
            got = engine.classify(query)
            best = max(
                (
                    (case_similarity(query, c, engine.config.facet_weights), c.id)
                    for c in engine.base
                    if not c.demoted
                ),
                key=lambda t: (t[0], [-ord(ch) for ch in t[1]]),
            )
            if best[0] >= engine.config.similarity_threshold:
                assert isinstance(got, Matched)
                assert got.similarity == pytest.approx(best[0])
            else:
                assert isinstance(got, Unclassified)


class TestRevise:
    def test_positive_feedback_running_mean(self):
        engine = fresh_engine()
        snap = make_snapshot()
        cid = engine.retain(snap, snap.task, make_solution())
        # the stored outcome (0.5) counts as one prior observation
        assert engine.revise(cid, 1.0) == pytest.approx(0.75)
        assert engine.base.get(cid).use_count == 1

    def test_three_zero_feedbacks_demote(self):
        engine = fresh_engine()
        snap = make_snapshot()
        cid = engine.retain(snap, snap.task, make_solution())
        for _ in range(3):
            engine.revise(cid, 0.0)
        case = engine.base.get(cid)
        assert case.outcome == pytest.approx(0.125)  # (0.5+0+0+0)/4
        assert case.use_count == 3
        assert case.demoted
        assert engine.base.retrieve_k_nearest(snap, W, k=3) == []

    def test_feedback_bounds(self):
        engine = fresh_engine()
        snap = make_snapshot()
        cid = engine.retain(snap, snap.task, make_solution())
        with pytest.raises(EngineError):
            engine.revise(cid, 1.5)

    def test_unknown_case(self):
        engine = fresh_engine()
        with pytest.raises(Exception):
            engine.revise("nope", 0.5)


class TestRetain:
    def test_retain_then_classify_matches(self):
        engine = fresh_engine()
        snap = make_snapshot()
        before = len(engine.base)
        engine.retain(snap, snap.task, make_solution())
        assert len(engine.base) == before + 1
        got = engine.classify(snap)
        assert isinstance(got, Matched) and got.similarity == pytest.approx(1.0)

    def test_fifth_qualifying_retain_generalizes(self):
        engine = fresh_engine()
        for snap in far_contexts(4):
            engine.retain(snap, snap.task, make_solution())
        assert engine.base.counts()["prototypical"] == 0
        fifth = far_contexts(5)[4]
        engine.retain(fifth, fifth.task, make_solution())
        assert engine.base.counts()["prototypical"] == 1

    def test_plan_outside_cloud_rejected(self):
        engine = fresh_engine()
        snap = make_snapshot()
        poi = make_poi("a", 45.1, 25.95)
        good = make_solution(poi)
        from ctxlearn.casebase import Solution
        from ctxlearn.plan import AgentRole, TaskPlan, TaskStep

        with pytest.raises(Exception):
            bad = Solution(
                good.cloud,
                TaskPlan((TaskStep(AgentRole.GIS_AGENT, "locate", "ghost", "x"),)),
            )
            engine.retain(snap, snap.task, bad)


class TestSolve:
    def test_cold_start_fresh_solve(self, monastery_store):
        engine = fresh_engine(store=monastery_store)
        rec = engine.solve(make_snapshot())
        assert isinstance(rec, Recommendation)
        assert isinstance(rec.source, FreshSolve)
        assert len(engine.base) == 1

    def test_second_solve_reuses(self, monastery_store):
        engine = fresh_engine(store=monastery_store)
        engine.solve(make_snapshot())
        rec = engine.solve(make_snapshot())
        assert isinstance(rec.source, ReusedCase)
        assert len(engine.base) == 1  # no duplicate case

    def test_monastery_scenario_ranked_cloud(self, monastery_store):
        engine = fresh_engine(store=monastery_store)
        rec = engine.solve(make_snapshot(interests=(0.7, 0, 0, 0.3), radius=30000.0))
        cloud = rec.solution.cloud
        assert len(cloud) > 0
        # every entry within scope, ranked by the normalized dot product
        scores = [e.score for e in cloud.entries]
        assert scores == sorted(scores, reverse=True)
        for e in cloud.entries:
            assert great_circle_distance(make_snapshot().position, e.poi.position) <= 30000.0
            m = e.poi.axis_membership.as_tuple()
            assert e.score == pytest.approx(0.7 * m[0] + 0.3 * m[3])

    def test_raw_mapping_accepted(self, monastery_store):
        engine = fresh_engine(store=monastery_store)
        raw = {
            "spatio_temporal.timestamp": "2010-06-12T10:00:00Z",
            "spatio_temporal.lat": "45.10",
            "spatio_temporal.lon": "25.95",
            "personal.interests": "0.7,0,0,0.3",
            "task.goal": "explore_area",
            "task.radius": "30000",
        }
        rec = engine.solve(raw)
        assert len(rec.solution.cloud) > 0

    def test_validation_failure_raises(self):
        engine = fresh_engine()
        with pytest.raises(ValidationFailed):
            engine.solve({"spatio_temporal.lat": "95"})

    def test_zero_interests_no_stereotype(self):
        engine = fresh_engine()
        with pytest.raises(NoInterestSignal, match="no interest signal"):
            engine.solve(make_snapshot(interests=(0, 0, 0, 0)))

    def test_zero_interests_with_stereotype(self, monastery_store, data_dir):
        catalog = load_stereotypes(data_dir / "stereotypes.jsonl")
        engine = fresh_engine(store=monastery_store, stereotypes=catalog)
        rec = engine.solve(
            make_snapshot(interests=(0, 0, 0, 0), motivation=Motivation.HIGH)
        )
        # curious-traveler interests (0.4,0.2,0.1,0.3) kick in
        assert len(rec.solution.cloud) > 0

    def test_explicit_interests_not_overridden(self, monastery_store, data_dir):
        catalog = load_stereotypes(data_dir / "stereotypes.jsonl")
        engine = fresh_engine(store=monastery_store, stereotypes=catalog)
        rec = engine.solve(make_snapshot(interests=(0, 1, 0, 0)))
        # geography-only interests: scores come from the G axis, not from
        # the curious-traveler defaults; only crasna (g=0.2) clears the gate
        assert rec.solution.cloud.poi_ids() == {"crasna_monastery"}
        assert rec.solution.cloud.entries[0].score == pytest.approx(0.2)

    def test_deterministic(self, monastery_store):
        rec1 = fresh_engine(store=monastery_store).solve(make_snapshot())
        rec2 = fresh_engine(store=monastery_store).solve(make_snapshot())
        assert rec1 == rec2

    def test_monotone_base_growth(self, monastery_store):
        engine = fresh_engine(store=monastery_store)
        sizes = []
        for snap in far_contexts(5):
            engine.solve(snap)
            sizes.append(len(engine.base))
        assert sizes == sorted(sizes)


class TestReuseAdaptation:
    def test_fixed_point_when_nothing_moved(self, monastery_store):
        engine = fresh_engine(store=monastery_store)
        first = engine.solve(make_snapshot())
        second = engine.solve(make_snapshot())
        assert second.solution.cloud == first.solution.cloud

    def test_recenter_on_new_position(self, monastery_store):
        engine = fresh_engine(store=monastery_store)
        engine.solve(make_snapshot(lat=45.10, lon=25.95, radius=20000.0))
        # ~11 km north; close enough to classify, far enough to re-ground
        moved = make_snapshot(lat=45.20, lon=25.95, radius=20000.0)
        rec = engine.solve(moved)
        assert isinstance(rec.source, ReusedCase)
        for e in rec.solution.cloud.entries:
            assert great_circle_distance(moved.position, e.poi.position) <= 20000.0

    def test_history_exclusion_on_reuse(self, monastery_store):
        engine = fresh_engine(store=monastery_store)
        first = engine.solve(make_snapshot())
        top = first.solution.cloud.entries[0].poi.id
        rec = engine.solve(make_snapshot(visited=frozenset({top})))
        assert isinstance(rec.source, ReusedCase)
        assert top not in rec.solution.cloud.poi_ids()


class TestGoalClasses:
    def test_find_nearest_bypasses_relevance(self, county_store):
        engine = fresh_engine(store=county_store)
        snap = make_snapshot(
            goal=GoalClass.FIND_NEAREST, radius=None, category="gas_station"
        )
        rec = engine.solve(snap)
        assert len(rec.solution.cloud) == 1
        assert rec.solution.cloud.entries[0].poi.category == "gas_station"

    def test_find_nearest_no_match(self):
        engine = fresh_engine(store=PoiStore([make_poi("m", 45.1, 25.9)]))
        snap = make_snapshot(goal=GoalClass.FIND_NEAREST, radius=None, category="hospital")
        rec = engine.solve(snap)
        assert len(rec.solution.cloud) == 0

    def test_follow_track_needs_track(self):
        engine = fresh_engine()
        snap = make_snapshot(
            goal=GoalClass.FOLLOW_TRACK,
            radius=None,
            start_offset=0.0,
            length=1000.0,
            corridor=500.0,
        )
        with pytest.raises(EngineError):
            engine.solve(snap)

    def test_follow_track_cloud(self, county_store, data_dir):
        track = load_track(data_dir / "drive.tsv")
        engine = fresh_engine(store=county_store)
        snap = make_snapshot(
            goal=GoalClass.FOLLOW_TRACK,
            radius=None,
            start_offset=0.0,
            length=30000.0,
            corridor=5000.0,
            lat=44.95,
            lon=26.02,
        )
        rec = engine.solve(snap, track=track)
        assert "zamfira_monastery" in rec.solution.cloud.poi_ids()

    def test_reach_poi_uses_default_radius(self, county_store):
        engine = fresh_engine(store=county_store)
        snap = make_snapshot(goal=GoalClass.REACH_POI, radius=None, category="cave")
        rec = engine.solve(snap)
        assert rec.solution.cloud.poi_ids() == {"salina_slanic"}


class TestConfig:
    def test_fixture_file_loads_defaults(self, data_dir):
        config = load_engine_config(data_dir / "engine.cfg")
        assert config == EngineConfig()

    def test_unknown_key_rejected(self, tmp_path):
        p = tmp_path / "bad.cfg"
        p.write_text("mystery = 1\n")
        with pytest.raises(EngineError):
            load_engine_config(p)

    def test_threshold_bounds(self):
        with pytest.raises(EngineError):
            EngineConfig(similarity_threshold=0.0)
        with pytest.raises(EngineError):
            EngineConfig(similarity_threshold=1.5)

    def test_overrides(self, tmp_path):
        p = tmp_path / "c.cfg"
        p.write_text("similarity_threshold = 0.9\nmax_points = 3\ndistance_threshold_m = 50\n")
        config = load_engine_config(p)
        assert config.similarity_threshold == 0.9
        assert config.max_points == 3
        assert config.change_policy.distance_threshold_m == 50.0
