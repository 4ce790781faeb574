"""Scenario ingestion and replay: the static (plan-ahead) and dynamic
(en-route) learner runs, with event-triggered re-solving along a track.

Scenario files are line-oriented key=value text. A header common to
both modes is followed by the mode-specific body keys:

    mode = static | dynamic
    device = gipix
    start = 2010-06-12T10:00:00Z
    sunset = 2010-06-12T18:00:00Z
    speed = 11.11                      # m/s
    interests = 0.7,0,0,0.3            # H,G,NS,C
    learning_style = activist          # optional profile keys follow
    motivation = high
    preferred_stimuli = visual
    visited = poi1,poi2

    # static body: one explicit request
    goal = explore_area
    radius = 30000
    lat = 45.10
    lon = 25.77

    # dynamic body: a track and a standing goal
    track = fixtures/drive.tsv
    goal = explore_area
    radius = 5000
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime
from pathlib import Path

from .bus import (
    DEFAULT_HOP_BUDGET,
    MessageBus,
    Notification,
    Presentation,
    ReusedCase,
    build_pipeline_bus,
    inject_raw_context,
)
from .context import (
    ContextSnapshot,
    OperatingMode,
    ValidationErrors,
    detect_context_change,
    validate_instance,
)
from .engine import Engine
from .geo import Track, format_utc, load_track, parse_utc
from .plan import ReachabilityGate

__all__ = ["Clock", "Scenario", "EventEntry", "EventLog", "load_scenario", "run_static", "run_dynamic"]


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class Clock:
    start: datetime
    sunset: datetime
    speed_mps: float


@dataclass(frozen=True)
class Scenario:
    mode: OperatingMode
    clock: Clock
    profile: tuple[tuple[str, str], ...]  # raw context fields shared by every injection
    request: tuple[tuple[str, str], ...] | None  # static only
    track_path: str | None  # dynamic only
    goal: tuple[tuple[str, str], ...] | None  # dynamic standing goal

    def __post_init__(self) -> None:
        if self.mode is OperatingMode.STATIC and self.request is None:
            raise ScenarioError("static scenarios need exactly one request")
        if self.mode is OperatingMode.DYNAMIC and self.track_path is None:
            raise ScenarioError("dynamic scenarios need a track")


_HEADER_KEYS = {"mode", "device", "start", "sunset", "speed"}
_PROFILE_KEYS = {
    "interests": "personal.interests",
    "learning_style": "personal.learning_style",
    "motivation": "personal.motivation",
    "preferred_stimuli": "personal.preferred_stimuli",
    "limitations": "personal.limitations",
    "visited": "historical.visited",
    "companions": "social.companions",
    "companion_tags": "social.companion_tags",
    "weather": "environmental.weather",
    "indoor": "environmental.indoor",
    "crowded": "environmental.crowded",
    "modality": "user_interface.modality",
    "network": "infrastructure.network",
    "battery": "infrastructure.battery",
    "strategic": "strategic.tag",
}
_GOAL_KEYS = {
    "goal": "task.goal",
    "radius": "task.radius",
    "start_offset": "task.start_offset",
    "length": "task.length",
    "corridor": "task.corridor",
    "category": "task.category",
    "topic": "task.topic",
}


def load_scenario(path: str | Path) -> Scenario:
    """Parse a scenario file; a relative track path is resolved against
    the scenario file's directory."""
    pairs: dict[str, str] = {}
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ScenarioError(f"scenario line {lineno}: expected key=value")
        key, _, value = line.partition("=")
        pairs[key.strip()] = value.strip()

    for key in ("mode", "device", "start", "sunset", "speed"):
        if key not in pairs:
            raise ScenarioError(f"scenario missing header key {key!r}")
    try:
        mode = OperatingMode(pairs["mode"])
    except ValueError:
        raise ScenarioError(f"unknown mode {pairs['mode']!r}") from None
    clock = Clock(
        start=parse_utc(pairs["start"]),
        sunset=parse_utc(pairs["sunset"]),
        speed_mps=float(pairs["speed"]),
    )

    profile: dict[str, str] = {"device": pairs["device"]}
    for key, target in _PROFILE_KEYS.items():
        if key in pairs:
            profile[target] = pairs[key]

    goal_fields: dict[str, str] = {}
    for key, target in _GOAL_KEYS.items():
        if key in pairs:
            goal_fields[target] = pairs[key]

    if mode is OperatingMode.STATIC:
        for key in ("lat", "lon"):
            if key not in pairs:
                raise ScenarioError(f"static scenario missing {key!r}")
        request = dict(goal_fields)
        request["spatio_temporal.lat"] = pairs["lat"]
        request["spatio_temporal.lon"] = pairs["lon"]
        return Scenario(
            mode=mode,
            clock=clock,
            profile=tuple(sorted(profile.items())),
            request=tuple(sorted(request.items())),
            track_path=None,
            goal=None,
        )
    track_path = pairs.get("track")
    if track_path is not None and not Path(track_path).is_absolute():
        track_path = str(path.parent / track_path)
    return Scenario(
        mode=mode,
        clock=clock,
        profile=tuple(sorted(profile.items())),
        request=None,
        track_path=track_path,
        goal=tuple(sorted(goal_fields.items())),
    )


# ---------------------------------------------------------------------------
# Event log
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EventEntry:
    sim_time: datetime
    kind: str  # request | context_change | recommendation | presentation
    summary: str

    def line(self) -> str:
        return "\t".join([format_utc(self.sim_time), self.kind, self.summary])


class EventLog:
    def __init__(self) -> None:
        self.entries: list[EventEntry] = []

    def append(self, sim_time: datetime, kind: str, summary: str) -> None:
        if self.entries and sim_time < self.entries[-1].sim_time:
            raise ScenarioError("event log times must be non-decreasing")
        self.entries.append(EventEntry(sim_time, kind, summary))

    def lines(self) -> list[str]:
        return [e.line() for e in self.entries]

    def save(self, path: str | Path) -> None:
        lines = self.lines()
        Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")

    def kinds(self) -> list[str]:
        return [e.kind for e in self.entries]


def _raw_fields(
    scenario: Scenario,
    goal_fields: tuple[tuple[str, str], ...],
    position: tuple[str, str] | None,
    sim_time: datetime,
) -> dict[str, str]:
    raw = dict(scenario.profile)
    raw.update(dict(goal_fields))
    raw["task.operating_mode"] = scenario.mode.value
    raw["spatio_temporal.timestamp"] = format_utc(sim_time)
    if position is not None:
        raw["spatio_temporal.lat"] = position[0]
        raw["spatio_temporal.lon"] = position[1]
    return raw


def _collect_run_events(
    bus: MessageBus, log: EventLog, sim_time: datetime, start_index: int
) -> None:
    """Turn the envelopes processed since start_index into log entries."""
    notified = False
    for env in bus.processed[start_index:]:
        payload = env.payload
        if isinstance(payload, Notification) and not notified:
            notified = True
            src = (
                f"reused={payload.source.case_id}"
                if isinstance(payload.source, ReusedCase)
                else "fresh"
            )
            top = ",".join(e.poi.id for e in payload.solution.cloud.entries[:3])
            log.append(
                sim_time,
                "recommendation",
                f"goal={payload.goal.value} source={src} cloud={len(payload.solution.cloud)}"
                + (f" top={top}" if top else ""),
            )
        elif isinstance(payload, Presentation):
            status = f"error={payload.error}" if payload.error else "ok"
            first = payload.lines[0] if payload.lines else ""
            log.append(
                sim_time, "presentation", f"{status} lines={len(payload.lines)} | {first}"
            )


def run_static(scenario: Scenario, engine: Engine, bus: MessageBus) -> EventLog:
    """Inject the single scripted request and run the pipeline to idle."""
    if scenario.mode is not OperatingMode.STATIC:
        raise ScenarioError("run_static needs a static scenario")
    engine.reach_gate = ReachabilityGate(scenario.clock.sunset, scenario.clock.speed_mps)
    log = EventLog()
    t = scenario.clock.start
    raw = _raw_fields(scenario, scenario.request, None, t)
    goal = raw.get("task.goal", "")
    log.append(t, "request", f"goal={goal} lat={raw['spatio_temporal.lat']} lon={raw['spatio_temporal.lon']}")
    mark = len(bus.processed)
    inject_raw_context(bus, raw, t)
    bus.run_until_idle()
    _collect_run_events(bus, log, t, mark)
    return log


def run_dynamic(
    scenario: Scenario, engine: Engine, bus: MessageBus, track: Track | None = None
) -> EventLog:
    """Replay the track; the first point always solves, later points
    re-solve when the context-change policy triggers (measured between
    consecutive points)."""
    if scenario.mode is not OperatingMode.DYNAMIC:
        raise ScenarioError("run_dynamic needs a dynamic scenario")
    if track is None:
        if scenario.track_path is None:
            raise ScenarioError("dynamic scenario without a track")
        track = load_track(scenario.track_path)
    engine.reach_gate = ReachabilityGate(scenario.clock.sunset, scenario.clock.speed_mps)
    policy = engine.config.change_policy
    log = EventLog()

    prev: ContextSnapshot | None = None
    for index, (t, pos) in enumerate(track.points):
        raw = _raw_fields(
            scenario, scenario.goal or (), (repr(pos.lat), repr(pos.lon)), t
        )
        candidate = validate_instance(engine.template, raw)
        if isinstance(candidate, ValidationErrors):
            raise ScenarioError(f"track point {index}: {candidate}")
        if index == 0:
            log.append(t, "request", f"track start lat={pos.lat} lon={pos.lon}")
        else:
            if not detect_context_change(prev, candidate, policy):
                prev = candidate
                continue
            log.append(
                t,
                "context_change",
                f"lat={pos.lat} lon={pos.lon}",
            )
        prev = candidate
        mark = len(bus.processed)
        inject_raw_context(bus, raw, t)
        bus.run_until_idle()
        _collect_run_events(bus, log, t, mark)
    return log


def run_scenario(
    scenario: Scenario,
    engine: Engine,
    repository: str | Path | None = None,
    hop_budget: int = DEFAULT_HOP_BUDGET,
) -> tuple[EventLog, MessageBus]:
    """Build the canonical pipeline bus for the scenario and run it."""
    track = None
    if scenario.mode is OperatingMode.DYNAMIC:
        if scenario.track_path is None:
            raise ScenarioError("dynamic scenario without a track")
        track = load_track(scenario.track_path)
    bus = build_pipeline_bus(engine, engine.store, repository, track, hop_budget)
    if scenario.mode is OperatingMode.STATIC:
        log = run_static(scenario, engine, bus)
    else:
        log = run_dynamic(scenario, engine, bus, track)
    return log, bus
