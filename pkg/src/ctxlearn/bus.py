"""Deterministic in-process realization of the seven-agent pipeline:
typed envelopes, sequence-ordered FIFO delivery, task decomposition and
device-specific presentation.

The bus is single-threaded; the total processing order is the ascending
envelope sequence, so identical initial queues always replay to an
identical trace. The envelope contract carries no transport detail, so
a networked transport could replace this one without touching handlers.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Callable, Mapping

from .casebase import Solution
from .context import (
    ContextSnapshot,
    ContextTemplate,
    DEFAULT_TEMPLATE,
    DeviceKind,
    GoalClass,
    TaskFacet,
    ValidationErrors,
    validate_instance,
)
from .engine import Classification, Engine, EngineError, FreshSolve, Matched, ReusedCase, Unclassified
from .geo import GeoPoint, PoiStore, Track, format_utc, nearest_poi, pois_along_track, pois_in_radius
from .learning import RadiusScope, TrackScope
from .plan import AgentRole

EXTERNAL = "external"
DEFAULT_HOP_BUDGET = 10_000


class BusError(RuntimeError):
    pass


@dataclass(frozen=True)
class NearestScope:
    """Subtask addressing for nearest-POI lookups."""

    center: GeoPoint
    category: str | None


SpatialSubtaskScope = RadiusScope | TrackScope | NearestScope


# ---------------------------------------------------------------------------
# Payloads
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RawContext:
    fields: tuple[tuple[str, str], ...]

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, str]) -> "RawContext":
        return cls(tuple(sorted(mapping.items())))

    def as_mapping(self) -> dict[str, str]:
        return dict(self.fields)


@dataclass(frozen=True)
class ValidatedContext:
    snapshot: ContextSnapshot
    group: int


@dataclass(frozen=True)
class Notification:
    """What the task decomposer needs: the classified situation, the
    context it arose in, the task description and the goal, plus the
    solution being acted on."""

    situation: Classification
    context: ContextSnapshot
    task_description: TaskFacet
    goal: GoalClass
    solution: Solution
    source: ReusedCase | FreshSolve
    scope: SpatialSubtaskScope | None
    group: int


@dataclass(frozen=True)
class SubtaskRequest:
    kind: str  # "gis" | "ir" | "present"
    group: int
    scope: SpatialSubtaskScope | None = None
    poi_id: str | None = None
    solution: Solution | None = None
    device: DeviceKind | None = None
    expected_results: int = 0


@dataclass(frozen=True)
class SubtaskResult:
    kind: str  # matches the request kind
    group: int
    poi_id: str | None = None
    hits: tuple[tuple[str, float], ...] = ()  # (poi id, distance or offset)
    text: str = ""
    warning: bool = False
    error: str | None = None


@dataclass(frozen=True)
class Presentation:
    lines: tuple[str, ...]
    group: int
    error: str | None = None


Payload = (
    RawContext
    | ValidatedContext
    | Classification
    | Notification
    | SubtaskRequest
    | SubtaskResult
    | Presentation
)


def payload_kind(payload: object) -> str:
    if isinstance(payload, (Matched, Unclassified)):
        return "classification"
    names = {
        RawContext: "raw_context",
        ValidatedContext: "validated_context",
        Notification: "notification",
        SubtaskRequest: "subtask_request",
        SubtaskResult: "subtask_result",
        Presentation: "presentation",
    }
    return names[type(payload)]


def _summarize(payload: object) -> str:
    if isinstance(payload, RawContext):
        return f"{len(payload.fields)} fields"
    if isinstance(payload, ValidatedContext):
        p = payload.snapshot.position
        return f"pos=({p.lat:.5f},{p.lon:.5f}) goal={payload.snapshot.task.goal_class.value}"
    if isinstance(payload, Matched):
        return f"matched {payload.case_id} sim={payload.similarity:.4f}"
    if isinstance(payload, Unclassified):
        best = "none" if payload.best_similarity is None else f"{payload.best_similarity:.4f}"
        return f"unclassified best={best}"
    if isinstance(payload, Notification):
        src = (
            f"reused {payload.source.case_id}"
            if isinstance(payload.source, ReusedCase)
            else "fresh"
        )
        return f"goal={payload.goal.value} cloud={len(payload.solution.cloud)} source={src}"
    if isinstance(payload, SubtaskRequest):
        extra = payload.poi_id or ""
        return f"{payload.kind} {extra}".rstrip()
    if isinstance(payload, SubtaskResult):
        if payload.error:
            return f"{payload.kind} error: {payload.error}"
        extra = payload.poi_id or f"{len(payload.hits)} hits"
        return f"{payload.kind} {extra}".rstrip()
    if isinstance(payload, Presentation):
        status = "error" if payload.error else "ok"
        return f"{status} {len(payload.lines)} lines"
    return type(payload).__name__


@dataclass(frozen=True)
class Envelope:
    seq: int
    sender: AgentRole | str
    recipient: AgentRole
    sim_time: datetime
    payload: Payload


@dataclass(frozen=True)
class TraceEntry:
    seq: int
    sim_time: datetime
    sender: str
    recipient: str
    kind: str
    summary: str

    def line(self) -> str:
        return "\t".join(
            [
                str(self.seq),
                format_utc(self.sim_time),
                self.sender,
                self.recipient,
                self.kind,
                self.summary,
            ]
        )


Handler = Callable[["MessageBus", Envelope], None]


class MessageBus:
    """Sequence-ordered message queue over the seven registered roles."""

    def __init__(self, hop_budget: int = DEFAULT_HOP_BUDGET):
        self.hop_budget = hop_budget
        self._handlers: dict[AgentRole, Handler] = {}
        self._queue: deque[Envelope] = deque()
        self._next_seq = 1
        self._next_group = 1
        self.trace: list[TraceEntry] = []
        self.processed: list[Envelope] = []

    def register(self, role: AgentRole, handler: Handler) -> None:
        self._handlers[role] = handler

    def next_group(self) -> int:
        g = self._next_group
        self._next_group += 1
        return g

    def dispatch(
        self, sender: AgentRole | str, recipient: AgentRole, sim_time: datetime, payload: Payload
    ) -> Envelope:
        """Assign the next sequence number and enqueue; per-recipient FIFO
        order follows from the global sequence order."""
        if recipient not in self._handlers:
            raise BusError(f"recipient {recipient} not registered")
        env = Envelope(self._next_seq, sender, recipient, sim_time, payload)
        self._next_seq += 1
        self._queue.append(env)
        return env

    def run_until_idle(self) -> list[TraceEntry]:
        """Process queued envelopes in ascending sequence order until no
        work remains; returns the trace of this run."""
        entries: list[TraceEntry] = []
        hops = 0
        while self._queue:
            hops += 1
            if hops > self.hop_budget:
                raise BusError("hop budget exceeded")
            env = self._queue.popleft()
            sender = env.sender.value if isinstance(env.sender, AgentRole) else str(env.sender)
            entry = TraceEntry(
                env.seq,
                env.sim_time,
                sender,
                env.recipient.value,
                payload_kind(env.payload),
                _summarize(env.payload),
            )
            entries.append(entry)
            self.trace.append(entry)
            self.processed.append(env)
            self._handlers[env.recipient](self, env)
        return entries

    def save_trace(self, path: str | Path) -> None:
        lines = [e.line() for e in self.trace]
        Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


# ---------------------------------------------------------------------------
# Device rendering
# ---------------------------------------------------------------------------

DEVICE_LINE_BUDGET: dict[DeviceKind, int | None] = {
    DeviceKind.MOBILE_PHONE: 5,
    DeviceKind.GIPIX: 5,
    DeviceKind.PDA: 10,
    DeviceKind.LAPTOP: None,
    DeviceKind.DESKTOP: None,
}


def device_agent_render(
    solution: Solution,
    enrichments: Mapping[str, str],
    device: DeviceKind,
) -> Presentation:
    """Deterministic textual rendering, truncated to the device budget:
    ranked POI lines first, then plan steps, then background notes."""
    if not solution.cloud.entries:
        return Presentation(("no learning points in scope",), group=0)
    lines: list[str] = []
    for rank, entry in enumerate(solution.cloud.entries, start=1):
        lines.append(
            f"{rank}. {entry.poi.name} [{entry.score:.2f}] {entry.distance_m:.0f} m"
        )
    for step in solution.plan.steps:
        lines.append(f"> {step.instruction}")
    for poi_id in sorted(enrichments):
        text = enrichments[poi_id].strip()
        if text:
            first = text.splitlines()[0]
            lines.append(f"note {poi_id}: {first}")
    budget = DEVICE_LINE_BUDGET[device]
    if budget is not None:
        lines = lines[:budget]
    return Presentation(tuple(lines), group=0)


# ---------------------------------------------------------------------------
# Agents
# ---------------------------------------------------------------------------


class ContextAgent:
    """Validates raw context against the template and forwards it."""

    def __init__(self, template: ContextTemplate = DEFAULT_TEMPLATE):
        self.template = template

    def __call__(self, bus: MessageBus, env: Envelope) -> None:
        if not isinstance(env.payload, RawContext):
            return
        group = bus.next_group()
        result = validate_instance(self.template, env.payload.as_mapping())
        if isinstance(result, ValidationErrors):
            bus.dispatch(
                AgentRole.CONTEXT_AGENT,
                AgentRole.DEVICE_AGENT,
                env.sim_time,
                Presentation(
                    tuple(str(v) for v in result.violations),
                    group=group,
                    error="context validation failed",
                ),
            )
            return
        bus.dispatch(
            AgentRole.CONTEXT_AGENT,
            AgentRole.CBR_AGENT,
            env.sim_time,
            ValidatedContext(result, group),
        )


class CbrAgent:
    """Runs classification and produces the solution, reusing a matched
    case or solving fresh; fresh experiences go to the case creator."""

    def __init__(self, engine: Engine, track: Track | None = None):
        self.engine = engine
        self.track = track

    def __call__(self, bus: MessageBus, env: Envelope) -> None:
        if not isinstance(env.payload, ValidatedContext):
            return
        group = env.payload.group
        try:
            context, weights = self.engine.effective_context(env.payload.snapshot)
            classification = self.engine.classify(context, weights)
            if isinstance(classification, Matched):
                case = self.engine.base.get(classification.case_id)
                solution = self.engine.reuse(case, context, self.track)
                problem = case.problem
                source: ReusedCase | FreshSolve = ReusedCase(case.id)
                recipient = AgentRole.TASK_DECOMPOSER
            else:
                solution = self.engine.fresh_solution(context, self.track)
                problem = context.task
                source = FreshSolve()
                recipient = AgentRole.NEW_CASE_CREATOR
        except EngineError as exc:
            bus.dispatch(
                AgentRole.CBR_AGENT,
                AgentRole.DEVICE_AGENT,
                env.sim_time,
                Presentation((str(exc),), group=group, error=str(exc)),
            )
            return
        scope = _scope_of(self.engine, context, problem, self.track)
        bus.dispatch(
            AgentRole.CBR_AGENT,
            recipient,
            env.sim_time,
            Notification(
                situation=classification,
                context=context,
                task_description=problem,
                goal=problem.goal_class,
                solution=solution,
                source=source,
                scope=scope,
                group=group,
            ),
        )


def _scope_of(
    engine: Engine, context: ContextSnapshot, problem: TaskFacet, track: Track | None
) -> SpatialSubtaskScope | None:
    params = problem.goal_params
    goal = problem.goal_class
    if goal is GoalClass.FOLLOW_TRACK:
        if track is None:
            return None
        return TrackScope(track, params.start_offset_m, params.length_m, params.corridor_m)
    if goal is GoalClass.FIND_NEAREST:
        return NearestScope(context.position, params.category)
    radius = params.radius_m if params.radius_m is not None else engine.config.reach_radius_m
    return RadiusScope(context.position, radius)


class NewCaseCreatorAgent:
    """Retains the fresh experience, then lets the pipeline continue."""

    def __init__(self, engine: Engine):
        self.engine = engine

    def __call__(self, bus: MessageBus, env: Envelope) -> None:
        if not isinstance(env.payload, Notification):
            return
        n = env.payload
        self.engine.retain(n.context, n.task_description, n.solution)
        bus.dispatch(AgentRole.NEW_CASE_CREATOR, AgentRole.TASK_DECOMPOSER, env.sim_time, n)


class TaskDecomposerAgent:
    """Splits the notified task into subtasks and recruits the
    application agents: spatial grounding, one enrichment per cloud POI,
    then presentation."""

    def __call__(self, bus: MessageBus, env: Envelope) -> None:
        if not isinstance(env.payload, Notification):
            return
        n = env.payload
        expected = 0
        if n.scope is not None:
            bus.dispatch(
                AgentRole.TASK_DECOMPOSER,
                AgentRole.GIS_AGENT,
                env.sim_time,
                SubtaskRequest(kind="gis", group=n.group, scope=n.scope),
            )
            expected += 1
        for entry in n.solution.cloud.entries:
            bus.dispatch(
                AgentRole.TASK_DECOMPOSER,
                AgentRole.IR_AGENT,
                env.sim_time,
                SubtaskRequest(kind="ir", group=n.group, poi_id=entry.poi.id),
            )
            expected += 1
        bus.dispatch(
            AgentRole.TASK_DECOMPOSER,
            AgentRole.DEVICE_AGENT,
            env.sim_time,
            SubtaskRequest(
                kind="present",
                group=n.group,
                solution=n.solution,
                device=n.context.device,
                expected_results=expected,
            ),
        )


class GisAgent:
    """Answers spatial subtasks from the local store."""

    def __init__(self, store: PoiStore):
        self.store = store

    def __call__(self, bus: MessageBus, env: Envelope) -> None:
        if not isinstance(env.payload, SubtaskRequest) or env.payload.kind != "gis":
            return
        req = env.payload
        try:
            if isinstance(req.scope, RadiusScope):
                hits = tuple(
                    (poi.id, d)
                    for poi, d in pois_in_radius(self.store, req.scope.center, req.scope.radius_m)
                )
            elif isinstance(req.scope, TrackScope):
                hits = tuple(
                    (poi.id, off)
                    for poi, off, _lat in pois_along_track(
                        self.store,
                        req.scope.track,
                        req.scope.start_offset_m,
                        req.scope.length_m,
                        req.scope.corridor_m,
                    )
                )
            elif isinstance(req.scope, NearestScope):
                found = nearest_poi(self.store, req.scope.center, req.scope.category)
                hits = () if found is None else ((found[0].id, found[1]),)
            else:
                hits = ()
            result = SubtaskResult(kind="gis", group=req.group, hits=hits)
        except Exception as exc:  # soft failure: the bus must keep running
            result = SubtaskResult(kind="gis", group=req.group, error=str(exc))
        bus.dispatch(AgentRole.GIS_AGENT, AgentRole.DEVICE_AGENT, env.sim_time, result)


class IrAgent:
    """Serves per-POI background text from a local repository directory
    of <poi id>.txt files."""

    def __init__(self, repository: str | Path | None = None):
        self.repository = Path(repository) if repository is not None else None

    def __call__(self, bus: MessageBus, env: Envelope) -> None:
        if not isinstance(env.payload, SubtaskRequest) or env.payload.kind != "ir":
            return
        req = env.payload
        text = ""
        warning = True
        if self.repository is not None and req.poi_id:
            path = self.repository / f"{req.poi_id}.txt"
            if path.is_file():
                text = path.read_text(encoding="utf-8")
                warning = False
        bus.dispatch(
            AgentRole.IR_AGENT,
            AgentRole.DEVICE_AGENT,
            env.sim_time,
            SubtaskResult(
                kind="ir", group=req.group, poi_id=req.poi_id, text=text, warning=warning
            ),
        )


@dataclass
class _PendingPresentation:
    solution: Solution
    device: DeviceKind
    expected: int
    enrichments: dict[str, str] = field(default_factory=dict)
    received: int = 0


class DeviceAgent:
    """Collects the subtask results for each pipeline and renders the
    final presentation once all of them arrived. Presentation envelopes
    addressed to this agent are terminal."""

    def __init__(self) -> None:
        self._pending: dict[int, _PendingPresentation] = {}

    def __call__(self, bus: MessageBus, env: Envelope) -> None:
        payload = env.payload
        if isinstance(payload, Presentation):
            return  # terminal
        if isinstance(payload, SubtaskRequest) and payload.kind == "present":
            pending = _PendingPresentation(
                solution=payload.solution,
                device=payload.device,
                expected=payload.expected_results,
            )
            self._pending[payload.group] = pending
            if pending.expected == 0:
                self._finish(bus, env, payload.group)
            return
        if isinstance(payload, SubtaskResult):
            pending = self._pending.get(payload.group)
            if pending is None:
                return
            pending.received += 1
            if payload.kind == "ir" and payload.poi_id:
                pending.enrichments[payload.poi_id] = payload.text
            if pending.received >= pending.expected:
                self._finish(bus, env, payload.group)

    def _finish(self, bus: MessageBus, env: Envelope, group: int) -> None:
        pending = self._pending.pop(group)
        rendered = device_agent_render(pending.solution, pending.enrichments, pending.device)
        bus.dispatch(
            AgentRole.DEVICE_AGENT,
            AgentRole.DEVICE_AGENT,
            env.sim_time,
            Presentation(rendered.lines, group=group, error=rendered.error),
        )


def build_pipeline_bus(
    engine: Engine,
    store: PoiStore,
    repository: str | Path | None = None,
    track: Track | None = None,
    hop_budget: int = DEFAULT_HOP_BUDGET,
) -> MessageBus:
    """Wire the canonical seven-role pipeline onto a fresh bus."""
    bus = MessageBus(hop_budget=hop_budget)
    bus.register(AgentRole.CONTEXT_AGENT, ContextAgent(engine.template))
    bus.register(AgentRole.CBR_AGENT, CbrAgent(engine, track))
    bus.register(AgentRole.NEW_CASE_CREATOR, NewCaseCreatorAgent(engine))
    bus.register(AgentRole.TASK_DECOMPOSER, TaskDecomposerAgent())
    bus.register(AgentRole.GIS_AGENT, GisAgent(store))
    bus.register(AgentRole.IR_AGENT, IrAgent(repository))
    bus.register(AgentRole.DEVICE_AGENT, DeviceAgent())
    return bus


def inject_raw_context(
    bus: MessageBus, mapping: Mapping[str, str], sim_time: datetime
) -> Envelope:
    """External entry point: hand a raw context instance to the pipeline."""
    return bus.dispatch(
        EXTERNAL, AgentRole.CONTEXT_AGENT, sim_time, RawContext.from_mapping(mapping)
    )
