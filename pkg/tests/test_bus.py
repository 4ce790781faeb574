import pytest

from ctxlearn.bus import (
    BusError,
    EXTERNAL,
    GisAgent,
    MessageBus,
    NearestScope,
    Presentation,
    RawContext,
    SubtaskRequest,
    SubtaskResult,
    build_pipeline_bus,
    device_agent_render,
    inject_raw_context,
    payload_kind,
)
from ctxlearn.casebase import CaseBase
from ctxlearn.context import DeviceKind
from ctxlearn.engine import Engine, EngineConfig
from ctxlearn.geo import GeoPoint, PoiStore, pois_in_radius
from ctxlearn.learning import RadiusScope
from ctxlearn.plan import AgentRole
from support import T0, make_poi, make_solution


def county_engine(store):
    return Engine(CaseBase(), store, EngineConfig())


def raw_request(lat="45.10", lon="25.95", **extra):
    raw = {
        "spatio_temporal.timestamp": "2010-06-12T10:00:00Z",
        "spatio_temporal.lat": lat,
        "spatio_temporal.lon": lon,
        "personal.interests": "0.7,0,0,0.3",
        "task.goal": "explore_area",
        "task.radius": "12000",
        "device": "gipix",
    }
    raw.update(extra)
    return raw


def two_poi_store():
    return PoiStore(
        [
            make_poi("alpha", 45.11, 25.95, membership=(0.9, 0, 0, 0.5)),
            make_poi("beta", 45.12, 25.96, membership=(0.6, 0, 0, 0.4)),
        ]
    )


class TestDispatch:
    def test_unregistered_recipient(self):
        bus = MessageBus()
        with pytest.raises(BusError):
            bus.dispatch(EXTERNAL, AgentRole.CONTEXT_AGENT, T0, RawContext(()))

    def test_fifo_pair_same_recipient(self):
        bus = MessageBus()
        seen = []
        bus.register(AgentRole.IR_AGENT, lambda b, env: seen.append(env.seq))
        bus.dispatch(EXTERNAL, AgentRole.IR_AGENT, T0, RawContext((("a", "1"),)))
        bus.dispatch(EXTERNAL, AgentRole.IR_AGENT, T0, RawContext((("b", "2"),)))
        bus.run_until_idle()
        assert seen == [1, 2]

    def test_empty_bus_empty_trace(self):
        bus = MessageBus()
        assert bus.run_until_idle() == []


FRESH_PIPELINE = [
    ("external", "context_agent", "raw_context"),
    ("context_agent", "cbr_agent", "validated_context"),
    ("cbr_agent", "new_case_creator", "notification"),
    ("new_case_creator", "task_decomposer", "notification"),
    ("task_decomposer", "gis_agent", "subtask_request"),
    ("task_decomposer", "ir_agent", "subtask_request"),
    ("task_decomposer", "ir_agent", "subtask_request"),
    ("task_decomposer", "device_agent", "subtask_request"),
    ("gis_agent", "device_agent", "subtask_result"),
    ("ir_agent", "device_agent", "subtask_result"),
    ("ir_agent", "device_agent", "subtask_result"),
    ("device_agent", "device_agent", "presentation"),
]


class TestPipeline:
    def test_fresh_solve_trace_matches_frozen_fixture(self):
        store = two_poi_store()
        bus = build_pipeline_bus(county_engine(store), store)
        inject_raw_context(bus, raw_request(), T0)
        entries = bus.run_until_idle()
        assert [(e.sender, e.recipient, e.kind) for e in entries] == FRESH_PIPELINE
        assert [e.seq for e in entries] == list(range(1, len(FRESH_PIPELINE) + 1))

    def test_matched_path_skips_case_creator(self):
        store = two_poi_store()
        engine = county_engine(store)
        bus = build_pipeline_bus(engine, store)
        inject_raw_context(bus, raw_request(), T0)
        bus.run_until_idle()
        inject_raw_context(bus, raw_request(), T0)
        entries = bus.run_until_idle()
        senders = {e.sender for e in entries}
        assert "new_case_creator" not in senders
        assert entries[-1].kind == "presentation"

    def test_invalid_raw_goes_straight_to_device(self):
        store = two_poi_store()
        bus = build_pipeline_bus(county_engine(store), store)
        inject_raw_context(bus, raw_request(lat="95"), T0)
        entries = bus.run_until_idle()
        assert [(e.sender, e.recipient, e.kind) for e in entries] == [
            ("external", "context_agent", "raw_context"),
            ("context_agent", "device_agent", "presentation"),
        ]
        presentation = bus.processed[-1].payload
        assert presentation.error == "context validation failed"

    def test_no_interest_signal_error_presentation(self):
        store = two_poi_store()
        bus = build_pipeline_bus(county_engine(store), store)
        inject_raw_context(bus, raw_request(**{"personal.interests": "0,0,0,0"}), T0)
        entries = bus.run_until_idle()
        assert entries[-1].kind == "presentation"
        assert bus.processed[-1].payload.error == "no interest signal"

    def test_replay_determinism(self):
        def run():
            store = two_poi_store()
            bus = build_pipeline_bus(county_engine(store), store)
            inject_raw_context(bus, raw_request(), T0)
            bus.run_until_idle()
            return [e.line() for e in bus.trace]

        assert run() == run() == run()

    def test_every_injection_exactly_one_presentation(self):
        store = two_poi_store()
        engine = county_engine(store)
        bus = build_pipeline_bus(engine, store)
        for i, raw in enumerate(
            [raw_request(), raw_request(lat="95"), raw_request(lat="45.8")]
        ):
            mark = len(bus.processed)
            inject_raw_context(bus, raw, T0)
            bus.run_until_idle()
            presentations = [
                e for e in bus.processed[mark:] if isinstance(e.payload, Presentation)
            ]
            assert len(presentations) == 1, f"injection {i}"

    def test_gis_before_ir_before_device_per_poi(self):
        store = two_poi_store()
        bus = build_pipeline_bus(county_engine(store), store)
        inject_raw_context(bus, raw_request(), T0)
        bus.run_until_idle()
        order = {}
        for env in bus.processed:
            payload = env.payload
            if isinstance(payload, SubtaskResult) and payload.kind == "gis":
                for poi_id, _ in payload.hits:
                    order.setdefault(poi_id, {})["gis"] = env.seq
            if isinstance(payload, SubtaskResult) and payload.kind == "ir":
                order.setdefault(payload.poi_id, {})["ir"] = env.seq
            if isinstance(payload, Presentation):
                for poi_id in order:
                    order[poi_id]["device"] = env.seq
        assert order, "expected at least one POI through the pipeline"
        for poi_id, seqs in order.items():
            assert seqs["gis"] < seqs["ir"] < seqs["device"], poi_id

    def test_find_nearest_recruits_gis_ir_device(self):
        store = PoiStore(
            [make_poi("fuel", 45.2, 25.9, membership=(0, 0, 0, 0), category="gas_station")]
        )
        bus = build_pipeline_bus(county_engine(store), store)
        raw = raw_request(
            **{"task.goal": "find_nearest", "task.category": "gas_station", "task.radius": ""}
        )
        inject_raw_context(bus, raw, T0)
        entries = bus.run_until_idle()
        requests = [
            e.recipient for e in entries if e.kind == "subtask_request" and e.sender == "task_decomposer"
        ]
        assert requests == ["gis_agent", "ir_agent", "device_agent"]

    def test_empty_cloud_recruits_gis_and_device_only(self):
        bus = build_pipeline_bus(county_engine(PoiStore([])), PoiStore([]))
        inject_raw_context(bus, raw_request(), T0)
        entries = bus.run_until_idle()
        requests = [
            e.recipient for e in entries if e.kind == "subtask_request" and e.sender == "task_decomposer"
        ]
        assert requests == ["gis_agent", "device_agent"]
        assert entries[-1].kind == "presentation"

    def test_trace_causality(self):
        # every non-external envelope was emitted while its sender handled
        # an earlier envelope addressed to that sender
        store = two_poi_store()
        bus = build_pipeline_bus(county_engine(store), store)
        inject_raw_context(bus, raw_request(), T0)
        bus.run_until_idle()
        for env in bus.processed:
            if env.sender == EXTERNAL:
                continue
            assert any(
                prior.recipient is env.sender and prior.seq < env.seq
                for prior in bus.processed
            ), env

    def test_hop_budget_cuts_cycle(self):
        bus = MessageBus(hop_budget=50)

        def cyclic(b: MessageBus, env) -> None:
            b.dispatch(AgentRole.IR_AGENT, AgentRole.IR_AGENT, env.sim_time, env.payload)

        bus.register(AgentRole.IR_AGENT, cyclic)
        bus.dispatch(EXTERNAL, AgentRole.IR_AGENT, T0, RawContext(()))
        with pytest.raises(BusError, match="hop budget exceeded"):
            bus.run_until_idle()


class TestGisAgent:
    def test_radius_request_equals_direct_call(self):
        store = two_poi_store()
        bus = MessageBus()
        results = []
        bus.register(AgentRole.GIS_AGENT, GisAgent(store))
        bus.register(AgentRole.DEVICE_AGENT, lambda b, env: results.append(env.payload))
        scope = RadiusScope(GeoPoint(45.10, 25.95), 12_000)
        bus.dispatch(
            EXTERNAL, AgentRole.GIS_AGENT, T0, SubtaskRequest(kind="gis", group=1, scope=scope)
        )
        bus.run_until_idle()
        direct = tuple((p.id, d) for p, d in pois_in_radius(store, scope.center, scope.radius_m))
        assert results[0].hits == direct

    def test_nearest_request(self):
        store = PoiStore(
            [make_poi("fuel", 45.2, 25.9, membership=(0, 0, 0, 0), category="gas_station")]
        )
        bus = MessageBus()
        results = []
        bus.register(AgentRole.GIS_AGENT, GisAgent(store))
        bus.register(AgentRole.DEVICE_AGENT, lambda b, env: results.append(env.payload))
        bus.dispatch(
            EXTERNAL,
            AgentRole.GIS_AGENT,
            T0,
            SubtaskRequest(
                kind="gis", group=1, scope=NearestScope(GeoPoint(45.0, 25.9), "gas_station")
            ),
        )
        bus.run_until_idle()
        assert [pid for pid, _ in results[0].hits] == ["fuel"]

    def test_error_becomes_soft_result(self):
        store = two_poi_store()
        bus = MessageBus()
        results = []
        bus.register(AgentRole.GIS_AGENT, GisAgent(store))
        bus.register(AgentRole.DEVICE_AGENT, lambda b, env: results.append(env.payload))
        bad = RadiusScope(GeoPoint(45.0, 25.9), -5.0)
        bus.dispatch(
            EXTERNAL, AgentRole.GIS_AGENT, T0, SubtaskRequest(kind="gis", group=1, scope=bad)
        )
        bus.run_until_idle()  # does not raise
        assert results[0].error is not None


class TestIrAgent:
    def test_repository_file_returned_verbatim(self, data_dir):
        store = two_poi_store()
        engine = county_engine(store)
        bus = build_pipeline_bus(engine, store, repository=data_dir / "repo")
        bus._handlers[AgentRole.IR_AGENT](
            bus,
            bus.dispatch(
                EXTERNAL,
                AgentRole.IR_AGENT,
                T0,
                SubtaskRequest(kind="ir", group=9, poi_id="zamfira_monastery"),
            ),
        )
        result = bus._queue[-1].payload
        assert result.text == (data_dir / "repo" / "zamfira_monastery.txt").read_text()
        assert result.warning is False

    def test_missing_file_soft_warning(self, data_dir):
        store = two_poi_store()
        bus = build_pipeline_bus(county_engine(store), store, repository=data_dir / "repo")
        bus._handlers[AgentRole.IR_AGENT](
            bus,
            bus.dispatch(
                EXTERNAL,
                AgentRole.IR_AGENT,
                T0,
                SubtaskRequest(kind="ir", group=9, poi_id="nowhere"),
            ),
        )
        result = bus._queue[-1].payload
        assert result.text == "" and result.warning is True

    def test_three_files_in_request_order(self, data_dir):
        bus = MessageBus()
        results = []
        from ctxlearn.bus import IrAgent

        bus.register(AgentRole.IR_AGENT, IrAgent(data_dir / "repo"))
        bus.register(AgentRole.DEVICE_AGENT, lambda b, env: results.append(env.payload))
        for pid in ("zamfira_monastery", "cheia_monastery", "salina_slanic"):
            bus.dispatch(
                EXTERNAL, AgentRole.IR_AGENT, T0, SubtaskRequest(kind="ir", group=1, poi_id=pid)
            )
        bus.run_until_idle()
        assert [r.poi_id for r in results] == [
            "zamfira_monastery",
            "cheia_monastery",
            "salina_slanic",
        ]
        assert all(not r.warning for r in results)


def eight_poi_solution():
    pois = [make_poi(f"p{i}", 45.0 + i * 0.01, 25.9) for i in range(8)]
    return make_solution(*pois)


class TestDeviceRender:
    def test_gipix_five_lines_top_ranked(self):
        presentation = device_agent_render(eight_poi_solution(), {}, DeviceKind.GIPIX)
        assert len(presentation.lines) == 5
        for i in range(5):
            assert presentation.lines[i].startswith(f"{i + 1}. p{i}")

    def test_desktop_unbounded(self):
        solution = eight_poi_solution()
        presentation = device_agent_render(solution, {}, DeviceKind.DESKTOP)
        assert len(presentation.lines) == 8 + len(solution.plan.steps)

    def test_pda_ten_lines(self):
        presentation = device_agent_render(eight_poi_solution(), {}, DeviceKind.PDA)
        assert len(presentation.lines) == 10

    def test_empty_cloud_single_line(self):
        empty = make_solution()
        presentation = device_agent_render(empty, {}, DeviceKind.DESKTOP)
        assert presentation.lines == ("no learning points in scope",)

    def test_enrichment_notes_on_desktop(self):
        poi = make_poi("a", 45.0, 25.9)
        presentation = device_agent_render(
            make_solution(poi), {"a": "First line.\nSecond."}, DeviceKind.DESKTOP
        )
        assert presentation.lines[-1] == "note a: First line."

    def test_deterministic_formatting(self):
        a = device_agent_render(eight_poi_solution(), {}, DeviceKind.PDA)
        b = device_agent_render(eight_poi_solution(), {}, DeviceKind.PDA)
        assert a == b


class TestPayloadKinds:
    def test_names(self):
        assert payload_kind(RawContext(())) == "raw_context"
        assert payload_kind(Presentation((), group=0)) == "presentation"
        from ctxlearn.engine import Matched, Unclassified

        assert payload_kind(Matched("c", 1.0)) == "classification"
        assert payload_kind(Unclassified()) == "classification"
