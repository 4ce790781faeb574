"""Agent roles and the ordered task plans that guide a user to the
recommended learning points.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime
from enum import Enum

from .context import ContextSnapshot
from .geo import reachable_before_dark
from .learning import LearningPointCloud


class AgentRole(Enum):
    CONTEXT_AGENT = "context_agent"
    CBR_AGENT = "cbr_agent"
    NEW_CASE_CREATOR = "new_case_creator"
    TASK_DECOMPOSER = "task_decomposer"
    DEVICE_AGENT = "device_agent"
    GIS_AGENT = "gis_agent"
    IR_AGENT = "ir_agent"


@dataclass(frozen=True)
class TaskStep:
    agent: AgentRole
    action: str
    target_poi: str | None
    instruction: str


@dataclass(frozen=True)
class TaskPlan:
    """Ordered steps; for any POI its GIS step precedes its IR step,
    which precedes its device step."""

    steps: tuple[TaskStep, ...]

    def __post_init__(self) -> None:
        rank = {AgentRole.GIS_AGENT: 0, AgentRole.IR_AGENT: 1, AgentRole.DEVICE_AGENT: 2}
        seen: dict[str, int] = {}
        for step in self.steps:
            if step.target_poi is None or step.agent not in rank:
                continue
            r = rank[step.agent]
            if seen.get(step.target_poi, -1) >= r:
                raise ValueError(f"plan steps for {step.target_poi} out of GIS->IR->device order")
            seen[step.target_poi] = r

    def poi_ids(self) -> frozenset[str]:
        return frozenset(s.target_poi for s in self.steps if s.target_poi is not None)


@dataclass(frozen=True)
class ReachabilityGate:
    """Round-trip daylight constraint applied when planning steps."""

    sunset: datetime
    speed_mps: float


def plan_tasks(
    cloud: LearningPointCloud,
    context: ContextSnapshot,
    gate: ReachabilityGate | None = None,
) -> TaskPlan:
    """One locate/enrich/guide step triplet per cloud POI, in rank order.

    With a gate, POIs whose round trip plus visit no longer fits before
    sunset are left out of the plan (the cloud itself is not touched).
    """
    steps: list[TaskStep] = []
    for entry in cloud.entries:
        poi = entry.poi
        if gate is not None and not reachable_before_dark(
            context.position, poi, context.timestamp, gate.sunset, gate.speed_mps
        ):
            continue
        steps.append(
            TaskStep(
                AgentRole.GIS_AGENT,
                "locate",
                poi.id,
                f"resolve route to {poi.name} ({entry.distance_m:.0f} m)",
            )
        )
        steps.append(
            TaskStep(AgentRole.IR_AGENT, "enrich", poi.id, f"fetch background on {poi.name}")
        )
        steps.append(
            TaskStep(
                AgentRole.DEVICE_AGENT,
                "guide",
                poi.id,
                f"visit {poi.name} (~{poi.visit_duration_min} min)",
            )
        )
    return TaskPlan(tuple(steps))
