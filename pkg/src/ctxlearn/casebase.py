"""The knowledge base: initial/point/prototypical cases, k-nearest
retrieval by context similarity, generalization of point cases into
prototypical cases, user stereotypes, and line-delimited persistence.

Cases persist as one JSON object per line with alphabetically sorted
keys, so a save/load/save cycle is byte-identical.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .axes import AxisMembership, InterestVector
from .context import (
    ContextSnapshot,
    DeviceKind,
    EnvironmentalFacet,
    FacetId,
    FACET_ORDER,
    FacetWeights,
    GoalClass,
    GoalParams,
    InfrastructureFacet,
    LearningStyle,
    Modality,
    Motivation,
    OperatingMode,
    PersonalFacet,
    SocialFacet,
    SpatioTemporalFacet,
    Stimuli,
    TaskFacet,
    aggregate_similarity,
    jaccard,
    seconds_of_day,
    DEFAULT_POSITION_LAMBDA_M,
    HALF_DAY_S,
)
from .geo import GeoPoint, Poi, format_utc, great_circle_distance, parse_utc
from .learning import CloudEntry, LearningPointCloud
from .plan import AgentRole, TaskPlan, TaskStep


class CaseBaseError(ValueError):
    pass


class CaseKind(Enum):
    INITIAL = "initial"
    POINT = "point"
    PROTOTYPICAL = "prototypical"


@dataclass(frozen=True)
class Solution:
    """A ranked cloud plus the plan that acts on it."""

    cloud: LearningPointCloud
    plan: TaskPlan

    def __post_init__(self) -> None:
        missing = self.plan.poi_ids() - self.cloud.poi_ids()
        if missing:
            raise CaseBaseError(f"plan references POIs outside the cloud: {sorted(missing)}")


@dataclass(frozen=True)
class ContextProfile:
    """Generalization of several point-case contexts: an interval per
    numeric field, an observed-value set per categorical field, and the
    union of each tag set."""

    intervals: tuple[tuple[str, tuple[float, float]], ...]
    categories: tuple[tuple[str, frozenset[str]], ...]
    tag_unions: tuple[tuple[str, frozenset[str]], ...]
    member_count: int

    def __post_init__(self) -> None:
        for name, (lo, hi) in self.intervals:
            if lo > hi:
                raise CaseBaseError(f"profile interval {name} inverted")
        for name, values in self.categories:
            if not values:
                raise CaseBaseError(f"profile category set {name} empty")

    def interval(self, name: str) -> tuple[float, float]:
        return dict(self.intervals)[name]

    def category(self, name: str) -> frozenset[str]:
        return dict(self.categories)[name]

    def tags(self, name: str) -> frozenset[str]:
        return dict(self.tag_unions)[name]


@dataclass
class Case:
    id: str
    kind: CaseKind
    context: ContextSnapshot | ContextProfile
    problem: TaskFacet
    solution: Solution
    outcome: float = 0.5
    use_count: int = 0
    demoted: bool = False
    covered: bool = False

    def __post_init__(self) -> None:
        if not 0.0 <= self.outcome <= 1.0:
            raise CaseBaseError("outcome out of [0, 1]")
        if self.use_count < 0:
            raise CaseBaseError("use_count must be non-negative")
        is_profile = isinstance(self.context, ContextProfile)
        if (self.kind is CaseKind.PROTOTYPICAL) != is_profile:
            raise CaseBaseError("prototypical cases carry a profile, others a snapshot")


# ---------------------------------------------------------------------------
# Profile construction and similarity
# ---------------------------------------------------------------------------

_CAT_FIELDS = (
    "learning_style",
    "preferred_stimuli",
    "operating_mode",
    "goal_class",
    "device",
    "weather",
    "indoor",
    "crowded",
    "modality",
    "network",
    "strategic",
)


def _snapshot_numeric(snapshot: ContextSnapshot) -> dict[str, float]:
    iv = snapshot.personal.interests
    return {
        "interests.h": iv.h,
        "interests.g": iv.g,
        "interests.ns": iv.ns,
        "interests.c": iv.c,
        "motivation_rank": float(snapshot.personal.motivation.rank),
        "companion_count": float(snapshot.social.companion_count),
        "lat": snapshot.position.lat,
        "lon": snapshot.position.lon,
        "time_of_day_s": seconds_of_day(snapshot.timestamp),
        "battery": snapshot.infrastructure.battery,
    }


def _snapshot_categorical(snapshot: ContextSnapshot) -> dict[str, str]:
    return {
        "learning_style": snapshot.personal.learning_style.value,
        "preferred_stimuli": snapshot.personal.preferred_stimuli.value,
        "operating_mode": snapshot.task.operating_mode.value,
        "goal_class": snapshot.task.goal_class.value,
        "device": snapshot.device.value,
        "weather": snapshot.environmental.weather,
        "indoor": "true" if snapshot.environmental.indoor else "false",
        "crowded": "true" if snapshot.environmental.crowded else "false",
        "modality": snapshot.user_interface.value,
        "network": "true" if snapshot.infrastructure.network_available else "false",
        "strategic": snapshot.strategic or "",
    }


def _snapshot_tags(snapshot: ContextSnapshot) -> dict[str, frozenset[str]]:
    return {
        "limitations": snapshot.personal.limitation_tags,
        "companions": snapshot.social.companion_tags,
        "visited": snapshot.historical,
    }


def build_profile(snapshots: Sequence[ContextSnapshot]) -> ContextProfile:
    """Per-field min/max intervals and observed-value unions."""
    if not snapshots:
        raise CaseBaseError("cannot build a profile from zero members")
    numeric = [_snapshot_numeric(s) for s in snapshots]
    categorical = [_snapshot_categorical(s) for s in snapshots]
    tags = [_snapshot_tags(s) for s in snapshots]
    intervals = tuple(
        (name, (min(row[name] for row in numeric), max(row[name] for row in numeric)))
        for name in sorted(numeric[0])
    )
    categories = tuple(
        (name, frozenset(row[name] for row in categorical)) for name in _CAT_FIELDS
    )
    unions = tuple(
        (name, frozenset().union(*(row[name] for row in tags)))
        for name in sorted(("limitations", "companions", "visited"))
    )
    return ContextProfile(intervals, categories, unions, member_count=len(snapshots))


def _interval_distance(value: float, interval: tuple[float, float]) -> float:
    lo, hi = interval
    if value < lo:
        return lo - value
    if value > hi:
        return value - hi
    return 0.0


def _in_set(profile: ContextProfile, name: str, value: str) -> float:
    return 1.0 if value in profile.category(name) else 0.0


def profile_facet_similarity(
    query: ContextSnapshot,
    profile: ContextProfile,
    facet: FacetId,
    position_lambda_m: float = DEFAULT_POSITION_LAMBDA_M,
) -> float:
    """Facet similarity of a snapshot against a generalized profile.

    Numeric fields score 1 inside the interval, otherwise the per-facet
    decay rule applied to the distance to the nearest bound; categorical
    fields score 1 when the value was observed.
    """
    num = _snapshot_numeric(query)
    cat = _snapshot_categorical(query)
    tag = _snapshot_tags(query)

    if facet is FacetId.PERSONAL:
        interest_gap = sum(
            _interval_distance(num[f"interests.{axis}"], profile.interval(f"interests.{axis}"))
            for axis in ("h", "g", "ns", "c")
        )
        parts = [
            1.0 - interest_gap / 4.0,
            _in_set(profile, "learning_style", cat["learning_style"]),
            1.0 - min(_interval_distance(num["motivation_rank"], profile.interval("motivation_rank")), 2.0) / 2.0,
            _in_set(profile, "preferred_stimuli", cat["preferred_stimuli"]),
            jaccard(tag["limitations"], profile.tags("limitations")),
        ]
    elif facet is FacetId.TASK:
        parts = [
            _in_set(profile, "operating_mode", cat["operating_mode"]),
            _in_set(profile, "goal_class", cat["goal_class"]),
        ]
    elif facet is FacetId.DEVICE:
        parts = [_in_set(profile, "device", cat["device"])]
    elif facet is FacetId.SOCIAL:
        count_gap = _interval_distance(num["companion_count"], profile.interval("companion_count"))
        parts = [
            1.0 / (1.0 + count_gap),
            jaccard(tag["companions"], profile.tags("companions")),
        ]
    elif facet is FacetId.SPATIO_TEMPORAL:
        lat_lo, lat_hi = profile.interval("lat")
        lon_lo, lon_hi = profile.interval("lon")
        nearest = GeoPoint(
            min(max(query.position.lat, lat_lo), lat_hi),
            min(max(query.position.lon, lon_lo), lon_hi),
        )
        d = great_circle_distance(query.position, nearest)
        tod_gap = _interval_distance(num["time_of_day_s"], profile.interval("time_of_day_s"))
        parts = [
            math.exp(-d / position_lambda_m),
            1.0 - min(tod_gap, HALF_DAY_S) / HALF_DAY_S,
        ]
    elif facet is FacetId.ENVIRONMENTAL:
        parts = [
            _in_set(profile, "weather", cat["weather"]),
            _in_set(profile, "indoor", cat["indoor"]),
            _in_set(profile, "crowded", cat["crowded"]),
        ]
    elif facet is FacetId.USER_INTERFACE:
        parts = [_in_set(profile, "modality", cat["modality"])]
    elif facet is FacetId.INFRASTRUCTURE:
        battery_gap = _interval_distance(num["battery"], profile.interval("battery"))
        parts = [
            _in_set(profile, "network", cat["network"]),
            1.0 - min(battery_gap, 1.0),
        ]
    elif facet is FacetId.STRATEGIC:
        parts = [_in_set(profile, "strategic", cat["strategic"])]
    elif facet is FacetId.HISTORICAL:
        parts = [jaccard(tag["visited"], profile.tags("visited"))]
    else:
        raise ValueError(f"unknown facet {facet!r}")
    return sum(parts) / len(parts)


def profile_similarity(
    query: ContextSnapshot,
    profile: ContextProfile,
    weights: FacetWeights,
    position_lambda_m: float = DEFAULT_POSITION_LAMBDA_M,
) -> float:
    return sum(
        w * profile_facet_similarity(query, profile, f, position_lambda_m)
        for f, w in zip(FACET_ORDER, weights.weights)
        if w > 0.0
    )


def case_similarity(
    query: ContextSnapshot,
    case: Case,
    weights: FacetWeights,
    position_lambda_m: float = DEFAULT_POSITION_LAMBDA_M,
) -> float:
    if isinstance(case.context, ContextProfile):
        return profile_similarity(query, case.context, weights, position_lambda_m)
    return aggregate_similarity(query, case.context, weights, position_lambda_m)


# ---------------------------------------------------------------------------
# Stereotypes
# ---------------------------------------------------------------------------

_ORDER_OPS = {
    ">=": lambda a, b: a >= b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    "<": lambda a, b: a < b,
}


@dataclass(frozen=True)
class Trigger:
    fieldname: str
    op: str  # ==, !=, >=, <=, >, <
    value: str

    def evaluate(self, personal: PersonalFacet, task: TaskFacet) -> bool:
        resolved = _resolve_trigger_field(self.fieldname, personal, task)
        if resolved is None:
            return False
        if self.op == "==":
            return str(resolved) == self.value
        if self.op == "!=":
            return str(resolved) != self.value
        cmp = _ORDER_OPS.get(self.op)
        if cmp is None:
            raise CaseBaseError(f"unknown trigger comparator {self.op!r}")
        if isinstance(resolved, float):
            return cmp(resolved, float(self.value))
        if self.fieldname == "motivation":
            return cmp(Motivation(str(resolved)).rank, Motivation(self.value).rank)
        raise CaseBaseError(f"ordering comparator on non-numeric field {self.fieldname!r}")


def _resolve_trigger_field(name: str, personal: PersonalFacet, task: TaskFacet):
    iv = personal.interests
    table: dict[str, object] = {
        "interests.h": iv.h,
        "interests.g": iv.g,
        "interests.ns": iv.ns,
        "interests.c": iv.c,
        "learning_style": personal.learning_style.value,
        "motivation": personal.motivation.value,
        "preferred_stimuli": personal.preferred_stimuli.value,
        "operating_mode": task.operating_mode.value,
        "goal_class": task.goal_class.value,
        "category": task.goal_params.category,
        "topic": task.goal_params.topic,
    }
    if name not in table:
        raise CaseBaseError(f"unknown trigger field {name!r}")
    return table[name]


@dataclass(frozen=True)
class Stereotype:
    name: str
    triggers: tuple[Trigger, ...]
    default_interests: InterestVector
    default_weights: FacetWeights

    def __post_init__(self) -> None:
        if not self.triggers:
            raise CaseBaseError(f"stereotype {self.name}: needs at least one trigger")

    def matches(self, personal: PersonalFacet, task: TaskFacet) -> bool:
        return all(t.evaluate(personal, task) for t in self.triggers)


def match_stereotypes(
    catalog: Sequence[Stereotype], personal: PersonalFacet, task: TaskFacet
) -> list[Stereotype]:
    """All stereotypes whose every trigger holds, in catalog order."""
    return [s for s in catalog if s.matches(personal, task)]


# ---------------------------------------------------------------------------
# The case base
# ---------------------------------------------------------------------------


class CaseBase:
    """Single-writer case store; retrieval never sees demoted cases."""

    def __init__(self, cases: Iterable[Case] = ()):
        self._cases: dict[str, Case] = {}
        for case in cases:
            self.add(case)

    def __len__(self) -> int:
        return len(self._cases)

    def __iter__(self):
        return iter(self._cases.values())

    def add(self, case: Case) -> str:
        if case.id in self._cases:
            raise CaseBaseError(f"duplicate case id {case.id!r}")
        self._cases[case.id] = case
        return case.id

    def get(self, case_id: str) -> Case:
        if case_id not in self._cases:
            raise CaseBaseError(f"no case {case_id!r}")
        return self._cases[case_id]

    def next_case_id(self, prefix: str = "case") -> str:
        n = sum(1 for c in self._cases.values() if c.id.startswith(f"{prefix}-")) + 1
        while f"{prefix}-{n:04d}" in self._cases:
            n += 1
        return f"{prefix}-{n:04d}"

    def counts(self) -> dict[str, int]:
        out = {
            "total": len(self._cases),
            "initial": 0,
            "point": 0,
            "prototypical": 0,
            "demoted": 0,
            "covered": 0,
        }
        for c in self._cases.values():
            out[c.kind.value] += 1
            out["demoted"] += int(c.demoted)
            out["covered"] += int(c.covered)
        return out

    def retrieve_k_nearest(
        self,
        query: ContextSnapshot,
        weights: FacetWeights,
        k: int,
        position_lambda_m: float = DEFAULT_POSITION_LAMBDA_M,
    ) -> list[tuple[Case, float]]:
        """Top-k cases by aggregate context similarity, ties by id."""
        if k < 1:
            raise CaseBaseError("k must be >= 1")
        scored = [
            (case, case_similarity(query, case, weights, position_lambda_m))
            for case in self._cases.values()
            if not case.demoted
        ]
        scored.sort(key=lambda cs: (-cs[1], cs[0].id))
        return scored[:k]

    def generalize(
        self,
        goal_class: GoalClass,
        weights: FacetWeights,
        min_members: int = 5,
        cohesion: float = 0.6,
        position_lambda_m: float = DEFAULT_POSITION_LAMBDA_M,
    ) -> Case | None:
        """Aggregate uncovered point cases of one goal class into a
        prototypical case when the group is large and cohesive enough.

        Members stay in the base, flagged as covered; the new case takes
        the solution of the member with the best outcome.
        """
        members = [
            c
            for c in self._cases.values()
            if c.kind is CaseKind.POINT
            and not c.covered
            and not c.demoted
            and c.problem.goal_class is goal_class
        ]
        if len(members) < min_members:
            return None
        for i, a in enumerate(members):
            for b in members[i + 1 :]:
                sim = aggregate_similarity(a.context, b.context, weights, position_lambda_m)
                if sim < cohesion:
                    return None
        profile = build_profile([m.context for m in members])
        best = sorted(members, key=lambda c: (-c.outcome, c.id))[0]
        proto = Case(
            id=self.next_case_id("proto"),
            kind=CaseKind.PROTOTYPICAL,
            context=profile,
            problem=best.problem,
            solution=best.solution,
            outcome=best.outcome,
        )
        self.add(proto)
        for m in members:
            m.covered = True
        return proto

    # -- persistence --------------------------------------------------------

    def save(self, path: str | Path) -> None:
        lines = [case_to_json(c) for c in self._cases.values()]
        Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "CaseBase":
        base = cls()
        text = Path(path).read_text(encoding="utf-8")
        for line in text.splitlines():
            if not line.strip():
                continue
            base.add(case_from_json(line))
        return base


# ---------------------------------------------------------------------------
# JSON encoding (one object per line, keys sorted)
# ---------------------------------------------------------------------------


def _snapshot_to_obj(s: ContextSnapshot) -> dict:
    gp = s.task.goal_params
    params = {
        k: v
        for k, v in (
            ("radius", gp.radius_m),
            ("start_offset", gp.start_offset_m),
            ("length", gp.length_m),
            ("corridor", gp.corridor_m),
            ("category", gp.category),
            ("topic", gp.topic),
        )
        if v is not None
    }
    return {
        "personal": {
            "interests": list(s.personal.interests.as_tuple()),
            "learning_style": s.personal.learning_style.value,
            "motivation": s.personal.motivation.value,
            "preferred_stimuli": s.personal.preferred_stimuli.value,
            "limitations": sorted(s.personal.limitation_tags),
        },
        "task": {
            "operating_mode": s.task.operating_mode.value,
            "goal": s.task.goal_class.value,
            "params": params,
        },
        "device": s.device.value,
        "social": {
            "companions": s.social.companion_count,
            "tags": sorted(s.social.companion_tags),
        },
        "spatio_temporal": {
            "timestamp": format_utc(s.timestamp),
            "lat": s.position.lat,
            "lon": s.position.lon,
            "heading": s.spatio_temporal.heading_deg,
            "speed": s.spatio_temporal.speed_mps,
        },
        "environmental": {
            "weather": s.environmental.weather,
            "indoor": s.environmental.indoor,
            "crowded": s.environmental.crowded,
        },
        "user_interface": s.user_interface.value,
        "infrastructure": {
            "network": s.infrastructure.network_available,
            "battery": s.infrastructure.battery,
        },
        "strategic": s.strategic,
        "historical": sorted(s.historical),
    }


def _task_from_obj(obj: Mapping) -> TaskFacet:
    params = obj.get("params", {})
    return TaskFacet(
        operating_mode=OperatingMode(obj["operating_mode"]),
        goal_class=GoalClass(obj["goal"]),
        goal_params=GoalParams(
            radius_m=params.get("radius"),
            start_offset_m=params.get("start_offset"),
            length_m=params.get("length"),
            corridor_m=params.get("corridor"),
            category=params.get("category"),
            topic=params.get("topic"),
        ),
    )


def _snapshot_from_obj(obj: Mapping) -> ContextSnapshot:
    st = obj["spatio_temporal"]
    return ContextSnapshot(
        personal=PersonalFacet(
            interests=InterestVector(*obj["personal"]["interests"]),
            learning_style=LearningStyle(obj["personal"]["learning_style"]),
            motivation=Motivation(obj["personal"]["motivation"]),
            preferred_stimuli=Stimuli(obj["personal"]["preferred_stimuli"]),
            limitation_tags=frozenset(obj["personal"]["limitations"]),
        ),
        task=_task_from_obj(obj["task"]),
        device=DeviceKind(obj["device"]),
        social=SocialFacet(obj["social"]["companions"], frozenset(obj["social"]["tags"])),
        spatio_temporal=SpatioTemporalFacet(
            timestamp=parse_utc(st["timestamp"]),
            position=GeoPoint(st["lat"], st["lon"]),
            heading_deg=st.get("heading"),
            speed_mps=st.get("speed"),
        ),
        environmental=EnvironmentalFacet(
            weather=obj["environmental"]["weather"],
            indoor=obj["environmental"]["indoor"],
            crowded=obj["environmental"]["crowded"],
        ),
        user_interface=Modality(obj["user_interface"]),
        infrastructure=InfrastructureFacet(
            network_available=obj["infrastructure"]["network"],
            battery=obj["infrastructure"]["battery"],
        ),
        strategic=obj["strategic"],
        historical=frozenset(obj["historical"]),
    )


def _poi_to_obj(p: Poi) -> dict:
    return {
        "id": p.id,
        "name": p.name,
        "lat": p.position.lat,
        "lon": p.position.lon,
        "membership": list(p.axis_membership.as_tuple()),
        "visit_min": p.visit_duration_min,
        "category": p.category,
        "description": p.description,
    }


def _poi_from_obj(obj: Mapping) -> Poi:
    return Poi(
        id=obj["id"],
        name=obj["name"],
        position=GeoPoint(obj["lat"], obj["lon"]),
        axis_membership=AxisMembership(*obj["membership"]),
        visit_duration_min=obj["visit_min"],
        category=obj["category"],
        description=obj["description"],
    )


def _solution_to_obj(sol: Solution) -> dict:
    return {
        "cloud": [
            {"poi": _poi_to_obj(e.poi), "score": e.score, "distance": e.distance_m}
            for e in sol.cloud.entries
        ],
        "plan": [
            {
                "agent": s.agent.value,
                "action": s.action,
                "target": s.target_poi,
                "instruction": s.instruction,
            }
            for s in sol.plan.steps
        ],
    }


def _solution_from_obj(obj: Mapping) -> Solution:
    cloud = LearningPointCloud(
        tuple(
            CloudEntry(_poi_from_obj(e["poi"]), e["score"], e["distance"])
            for e in obj["cloud"]
        )
    )
    plan = TaskPlan(
        tuple(
            TaskStep(AgentRole(s["agent"]), s["action"], s["target"], s["instruction"])
            for s in obj["plan"]
        )
    )
    return Solution(cloud, plan)


def _profile_to_obj(p: ContextProfile) -> dict:
    return {
        "intervals": {name: list(iv) for name, iv in p.intervals},
        "categories": {name: sorted(vals) for name, vals in p.categories},
        "tag_unions": {name: sorted(vals) for name, vals in p.tag_unions},
        "member_count": p.member_count,
    }


def _profile_from_obj(obj: Mapping) -> ContextProfile:
    return ContextProfile(
        intervals=tuple(sorted((n, (v[0], v[1])) for n, v in obj["intervals"].items())),
        categories=tuple(
            (n, frozenset(obj["categories"][n])) for n in _CAT_FIELDS if n in obj["categories"]
        ),
        tag_unions=tuple(sorted((n, frozenset(v)) for n, v in obj["tag_unions"].items())),
        member_count=obj["member_count"],
    )


def case_to_json(case: Case) -> str:
    if isinstance(case.context, ContextProfile):
        context_obj: dict = {"profile": _profile_to_obj(case.context)}
    else:
        context_obj = {"snapshot": _snapshot_to_obj(case.context)}
    obj = {
        "id": case.id,
        "kind": case.kind.value,
        "context": context_obj,
        "problem": _snapshot_to_obj_task(case.problem),
        "solution": _solution_to_obj(case.solution),
        "outcome": case.outcome,
        "use_count": case.use_count,
        "demoted": case.demoted,
        "covered": case.covered,
    }
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _snapshot_to_obj_task(task: TaskFacet) -> dict:
    gp = task.goal_params
    params = {
        k: v
        for k, v in (
            ("radius", gp.radius_m),
            ("start_offset", gp.start_offset_m),
            ("length", gp.length_m),
            ("corridor", gp.corridor_m),
            ("category", gp.category),
            ("topic", gp.topic),
        )
        if v is not None
    }
    return {"operating_mode": task.operating_mode.value, "goal": task.goal_class.value, "params": params}


def case_from_json(line: str) -> Case:
    obj = json.loads(line)
    context_obj = obj["context"]
    context: ContextSnapshot | ContextProfile
    if "profile" in context_obj:
        context = _profile_from_obj(context_obj["profile"])
    else:
        context = _snapshot_from_obj(context_obj["snapshot"])
    return Case(
        id=obj["id"],
        kind=CaseKind(obj["kind"]),
        context=context,
        problem=_task_from_obj(obj["problem"]),
        solution=_solution_from_obj(obj["solution"]),
        outcome=obj["outcome"],
        use_count=obj["use_count"],
        demoted=obj["demoted"],
        covered=obj["covered"],
    )


def save_stereotypes(catalog: Sequence[Stereotype], path: str | Path) -> None:
    lines = []
    for s in catalog:
        obj = {
            "name": s.name,
            "triggers": [
                {"field": t.fieldname, "op": t.op, "value": t.value} for t in s.triggers
            ],
            "interests": list(s.default_interests.as_tuple()),
            "weights": list(s.default_weights.weights),
        }
        lines.append(json.dumps(obj, sort_keys=True, separators=(",", ":")))
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def load_stereotypes(path: str | Path) -> list[Stereotype]:
    catalog = []
    text = Path(path).read_text(encoding="utf-8")
    for line in text.splitlines():
        if not line.strip():
            continue
        obj = json.loads(line)
        catalog.append(
            Stereotype(
                name=obj["name"],
                triggers=tuple(
                    Trigger(t["field"], t["op"], str(t["value"])) for t in obj["triggers"]
                ),
                default_interests=InterestVector(*obj["interests"]),
                default_weights=FacetWeights(tuple(obj["weights"])),
            )
        )
    return catalog
