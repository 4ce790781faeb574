"""The multidimensional context space: ten facets, templates and
instance validation, per-facet and aggregate similarity, and
change detection for event-triggered re-solving.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import Mapping

from .axes import InterestVector
from .geo import GeoPoint, great_circle_distance, parse_utc

DEFAULT_POSITION_LAMBDA_M = 5000.0  # spatial decay horizon for similarity
HALF_DAY_S = 12 * 3600.0
MOTIVATION_RANK = {"high": 2, "medium": 1, "low": 0}


class DeviceKind(Enum):
    MOBILE_PHONE = "mobile_phone"
    GIPIX = "gipix"
    PDA = "pda"
    LAPTOP = "laptop"
    DESKTOP = "desktop"


class LearningStyle(Enum):
    ACTIVIST = "activist"
    REFLECTIVE = "reflective"
    THEORIST = "theorist"
    PRAGMATIC = "pragmatic"


class Motivation(Enum):
    HIGH = "high"
    MEDIUM = "medium"
    LOW = "low"

    @property
    def rank(self) -> int:
        return MOTIVATION_RANK[self.value]


class Stimuli(Enum):
    VISUAL = "visual"
    AUDITORY = "auditory"
    KINAESTHETIC = "kinaesthetic"


class Modality(Enum):
    TEXTUAL = "textual"
    GRAPHICAL = "graphical"


class OperatingMode(Enum):
    STATIC = "static"
    DYNAMIC = "dynamic"


class GoalClass(Enum):
    EXPLORE_AREA = "explore_area"
    FOLLOW_TRACK = "follow_track"
    REACH_POI = "reach_poi"
    FIND_NEAREST = "find_nearest"


class FacetId(Enum):
    PERSONAL = "personal"
    TASK = "task"
    DEVICE = "device"
    SOCIAL = "social"
    SPATIO_TEMPORAL = "spatio_temporal"
    ENVIRONMENTAL = "environmental"
    USER_INTERFACE = "user_interface"
    INFRASTRUCTURE = "infrastructure"
    STRATEGIC = "strategic"
    HISTORICAL = "historical"


FACET_ORDER = tuple(FacetId)


@dataclass(frozen=True)
class PersonalFacet:
    interests: InterestVector
    learning_style: LearningStyle
    motivation: Motivation
    preferred_stimuli: Stimuli
    limitation_tags: frozenset[str] = frozenset()


@dataclass(frozen=True)
class GoalParams:
    radius_m: float | None = None
    start_offset_m: float | None = None
    length_m: float | None = None
    corridor_m: float | None = None
    category: str | None = None
    topic: str | None = None


# Parameters that must be present for each goal class.
REQUIRED_GOAL_PARAMS: dict[GoalClass, tuple[str, ...]] = {
    GoalClass.EXPLORE_AREA: ("radius_m",),
    GoalClass.FOLLOW_TRACK: ("start_offset_m", "length_m", "corridor_m"),
    GoalClass.REACH_POI: (),
    GoalClass.FIND_NEAREST: ("category",),
}


@dataclass(frozen=True)
class TaskFacet:
    operating_mode: OperatingMode
    goal_class: GoalClass
    goal_params: GoalParams = GoalParams()

    def __post_init__(self) -> None:
        for name in REQUIRED_GOAL_PARAMS[self.goal_class]:
            if getattr(self.goal_params, name) is None:
                raise ValueError(f"goal {self.goal_class.value} requires {name}")


@dataclass(frozen=True)
class SocialFacet:
    companion_count: int = 0
    companion_tags: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        if self.companion_count < 0:
            raise ValueError("companion count must be non-negative")


@dataclass(frozen=True)
class SpatioTemporalFacet:
    timestamp: datetime  # aware, UTC
    position: GeoPoint
    heading_deg: float | None = None
    speed_mps: float | None = None

    def __post_init__(self) -> None:
        if self.timestamp.tzinfo is None:
            raise ValueError("timestamp must be timezone-aware")
        if self.heading_deg is not None and not 0.0 <= self.heading_deg < 360.0:
            raise ValueError("heading out of [0, 360)")
        if self.speed_mps is not None and self.speed_mps < 0.0:
            raise ValueError("speed must be non-negative")


@dataclass(frozen=True)
class EnvironmentalFacet:
    weather: str = "clear"
    indoor: bool = False
    crowded: bool = False


@dataclass(frozen=True)
class InfrastructureFacet:
    network_available: bool = True
    battery: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.battery <= 1.0:
            raise ValueError("battery fraction out of [0, 1]")


@dataclass(frozen=True)
class ContextSnapshot:
    """One point in the context space; all ten facets always present."""

    personal: PersonalFacet
    task: TaskFacet
    device: DeviceKind
    social: SocialFacet
    spatio_temporal: SpatioTemporalFacet
    environmental: EnvironmentalFacet
    user_interface: Modality
    infrastructure: InfrastructureFacet
    strategic: str | None = None
    historical: frozenset[str] = frozenset()

    @property
    def position(self) -> GeoPoint:
        return self.spatio_temporal.position

    @property
    def timestamp(self) -> datetime:
        return self.spatio_temporal.timestamp

    def categorical_signature(self) -> tuple:
        """The enumerated/tag-valued field values used by change detection."""
        return (
            self.personal.learning_style,
            self.personal.motivation,
            self.personal.preferred_stimuli,
            self.task.operating_mode,
            self.task.goal_class,
            self.device,
            self.environmental.weather,
            self.environmental.indoor,
            self.environmental.crowded,
            self.user_interface,
            self.infrastructure.network_available,
            self.strategic,
        )


@dataclass(frozen=True)
class FacetWeights:
    """Non-negative weight per facet, normalized to sum 1 on construction."""

    weights: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.weights) != len(FACET_ORDER):
            raise ValueError(f"expected {len(FACET_ORDER)} weights")
        if any(w < 0.0 for w in self.weights):
            raise ValueError("facet weights must be non-negative")
        total = sum(self.weights)
        if total <= 0.0:
            raise ValueError("at least one facet weight must be positive")
        # skip the division for already-normalized tuples so that
        # re-constructing from stored weights is exactly stable
        if abs(total - 1.0) > 1e-9:
            object.__setattr__(self, "weights", tuple(w / total for w in self.weights))

    @classmethod
    def uniform(cls) -> "FacetWeights":
        return cls(tuple(1.0 for _ in FACET_ORDER))

    @classmethod
    def from_mapping(cls, mapping: Mapping[FacetId, float]) -> "FacetWeights":
        return cls(tuple(mapping.get(f, 0.0) for f in FACET_ORDER))

    def weight(self, facet: FacetId) -> float:
        return self.weights[FACET_ORDER.index(facet)]


# ---------------------------------------------------------------------------
# Similarity
# ---------------------------------------------------------------------------


def _eq(a: object, b: object) -> float:
    return 1.0 if a == b else 0.0


def jaccard(a: frozenset, b: frozenset) -> float:
    """Set overlap; two empty sets count as a perfect match."""
    if not a and not b:
        return 1.0
    return len(a & b) / len(a | b)


def interest_similarity(a: InterestVector, b: InterestVector) -> float:
    return 1.0 - sum(abs(x - y) for x, y in zip(a.as_tuple(), b.as_tuple())) / 4.0


def position_similarity(
    a: GeoPoint, b: GeoPoint, lambda_m: float = DEFAULT_POSITION_LAMBDA_M
) -> float:
    return math.exp(-great_circle_distance(a, b) / lambda_m)


def seconds_of_day(ts: datetime) -> float:
    return ts.hour * 3600.0 + ts.minute * 60.0 + ts.second + ts.microsecond / 1e6


def time_of_day_similarity(a: datetime, b: datetime) -> float:
    dt = abs(seconds_of_day(a) - seconds_of_day(b))
    return 1.0 - min(dt, HALF_DAY_S) / HALF_DAY_S


def count_similarity(a: int, b: int) -> float:
    return 1.0 / (1.0 + abs(a - b))


def facet_similarity(
    a: ContextSnapshot,
    b: ContextSnapshot,
    facet: FacetId,
    position_lambda_m: float = DEFAULT_POSITION_LAMBDA_M,
) -> float:
    """Similarity of one facet between two snapshots, in [0, 1].

    Categorical fields compare by equality and are averaged within the
    facet; sets use Jaccard overlap; positions decay exponentially with
    great-circle distance; times compare by time of day.
    """
    if facet is FacetId.PERSONAL:
        pa, pb = a.personal, b.personal
        parts = [
            interest_similarity(pa.interests, pb.interests),
            _eq(pa.learning_style, pb.learning_style),
            1.0 - abs(pa.motivation.rank - pb.motivation.rank) / 2.0,
            _eq(pa.preferred_stimuli, pb.preferred_stimuli),
            jaccard(pa.limitation_tags, pb.limitation_tags),
        ]
    elif facet is FacetId.TASK:
        parts = [
            _eq(a.task.operating_mode, b.task.operating_mode),
            _eq(a.task.goal_class, b.task.goal_class),
        ]
    elif facet is FacetId.DEVICE:
        parts = [_eq(a.device, b.device)]
    elif facet is FacetId.SOCIAL:
        parts = [
            count_similarity(a.social.companion_count, b.social.companion_count),
            jaccard(a.social.companion_tags, b.social.companion_tags),
        ]
    elif facet is FacetId.SPATIO_TEMPORAL:
        sa, sb = a.spatio_temporal, b.spatio_temporal
        parts = [
            position_similarity(sa.position, sb.position, position_lambda_m),
            time_of_day_similarity(sa.timestamp, sb.timestamp),
        ]
    elif facet is FacetId.ENVIRONMENTAL:
        ea, eb = a.environmental, b.environmental
        parts = [_eq(ea.weather, eb.weather), _eq(ea.indoor, eb.indoor), _eq(ea.crowded, eb.crowded)]
    elif facet is FacetId.USER_INTERFACE:
        parts = [_eq(a.user_interface, b.user_interface)]
    elif facet is FacetId.INFRASTRUCTURE:
        ia, ib = a.infrastructure, b.infrastructure
        parts = [_eq(ia.network_available, ib.network_available), 1.0 - abs(ia.battery - ib.battery)]
    elif facet is FacetId.STRATEGIC:
        parts = [_eq(a.strategic, b.strategic)]
    elif facet is FacetId.HISTORICAL:
        parts = [jaccard(a.historical, b.historical)]
    else:
        raise ValueError(f"unknown facet {facet!r}")
    return sum(parts) / len(parts)


def aggregate_similarity(
    a: ContextSnapshot,
    b: ContextSnapshot,
    weights: FacetWeights,
    position_lambda_m: float = DEFAULT_POSITION_LAMBDA_M,
) -> float:
    """Weighted arithmetic mean of the per-facet similarities."""
    return sum(
        w * facet_similarity(a, b, f, position_lambda_m)
        for f, w in zip(FACET_ORDER, weights.weights)
        if w > 0.0
    )


# ---------------------------------------------------------------------------
# Change detection
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChangePolicy:
    distance_threshold_m: float = 100.0
    time_threshold_s: float = 900.0


def detect_context_change(
    prev: ContextSnapshot, next_: ContextSnapshot, policy: ChangePolicy = ChangePolicy()
) -> bool:
    """True when displacement, elapsed time, or any categorical value
    crosses the policy thresholds."""
    if next_.timestamp < prev.timestamp:
        raise ValueError("snapshots out of temporal order")
    if great_circle_distance(prev.position, next_.position) >= policy.distance_threshold_m:
        return True
    if (next_.timestamp - prev.timestamp).total_seconds() >= policy.time_threshold_s:
        return True
    return prev.categorical_signature() != next_.categorical_signature()


# ---------------------------------------------------------------------------
# Templates and validation
# ---------------------------------------------------------------------------
#
# Raw context instances are flat mappings with dotted field keys, the
# same keys used in scenario files:
#
#   personal.interests=0.7,0,0,0.3      personal.learning_style=activist
#   personal.motivation=high            personal.preferred_stimuli=visual
#   personal.limitations=tag1,tag2      task.operating_mode=static
#   task.goal=explore_area              task.radius=30000
#   task.start_offset / task.length / task.corridor / task.category / task.topic
#   device=gipix                        social.companions=2
#   social.companion_tags=family        spatio_temporal.timestamp=2010-06-12T10:00:00Z
#   spatio_temporal.lat=45.1            spatio_temporal.lon=25.8
#   spatio_temporal.heading=90          spatio_temporal.speed=11.1
#   environmental.weather=clear         environmental.indoor=false
#   environmental.crowded=false         user_interface.modality=textual
#   infrastructure.network=true         infrastructure.battery=0.8
#   strategic.tag=anniversary           historical.visited=poi1,poi2


@dataclass(frozen=True)
class Violation:
    fieldname: str
    message: str

    def __str__(self) -> str:
        return f"{self.fieldname}: {self.message}"


@dataclass(frozen=True)
class ValidationErrors:
    violations: tuple[Violation, ...]

    def __str__(self) -> str:
        return "; ".join(str(v) for v in self.violations)


@dataclass(frozen=True)
class FieldConstraint:
    required: bool = False
    allowed: frozenset[str] | None = None
    bounds: tuple[float, float] | None = None
    default: str | None = None


_NUMERIC_FIELDS = {
    "spatio_temporal.lat",
    "spatio_temporal.lon",
    "spatio_temporal.heading",
    "spatio_temporal.speed",
    "infrastructure.battery",
    "social.companions",
    "task.radius",
    "task.start_offset",
    "task.length",
    "task.corridor",
}

_ENUM_FIELDS: dict[str, type[Enum]] = {
    "personal.learning_style": LearningStyle,
    "personal.motivation": Motivation,
    "personal.preferred_stimuli": Stimuli,
    "task.operating_mode": OperatingMode,
    "task.goal": GoalClass,
    "device": DeviceKind,
    "user_interface.modality": Modality,
}

# Built-in defaults; position and timestamp have none and must be given.
BASE_DEFAULTS: dict[str, str] = {
    "personal.interests": "0,0,0,0",
    "personal.learning_style": "activist",
    "personal.motivation": "medium",
    "personal.preferred_stimuli": "visual",
    "personal.limitations": "",
    "task.operating_mode": "static",
    "task.goal": "explore_area",
    "task.radius": "10000",
    "device": "mobile_phone",
    "social.companions": "0",
    "social.companion_tags": "",
    "environmental.weather": "clear",
    "environmental.indoor": "false",
    "environmental.crowded": "false",
    "user_interface.modality": "textual",
    "infrastructure.network": "true",
    "infrastructure.battery": "1.0",
    "strategic.tag": "",
    "historical.visited": "",
}

_REQUIRED_FIELDS = ("spatio_temporal.timestamp", "spatio_temporal.lat", "spatio_temporal.lon")


@dataclass(frozen=True)
class ContextTemplate:
    """Field presence requirements, allowed value sets, bounds, defaults."""

    constraints: tuple[tuple[str, FieldConstraint], ...] = ()

    def __post_init__(self) -> None:
        # A template must accept at least its own defaults.
        for name, c in self.constraints:
            if c.default is None:
                continue
            problem = _check_constraint(name, c.default, c)
            if problem is not None:
                raise ValueError(f"template default for {name} violates its constraint: {problem}")

    def constraint(self, fieldname: str) -> FieldConstraint | None:
        for name, c in self.constraints:
            if name == fieldname:
                return c
        return None


DEFAULT_TEMPLATE = ContextTemplate()


def _check_constraint(name: str, value: str, c: FieldConstraint) -> str | None:
    if c.allowed is not None and value not in c.allowed:
        return f"not in allowed set {sorted(c.allowed)}"
    if c.bounds is not None:
        try:
            v = float(value)
        except ValueError:
            return "not numeric"
        lo, hi = c.bounds
        if not lo <= v <= hi:
            return f"out of [{lo}, {hi}]"
    return None


def _parse_bool(value: str) -> bool:
    if value.lower() in ("true", "1", "yes"):
        return True
    if value.lower() in ("false", "0", "no"):
        return False
    raise ValueError(f"not a boolean: {value!r}")


def _parse_tags(value: str) -> frozenset[str]:
    return frozenset(t.strip() for t in value.split(",") if t.strip())


def validate_instance(
    template: ContextTemplate, raw: "Mapping[str, str] | ContextSnapshot"
) -> ContextSnapshot | ValidationErrors:
    """Check a raw instance against the template, filling defaults for
    absent optional fields. Returns the typed snapshot or the full list
    of field-level violations; never raises on malformed values.

    Validating an already-validated snapshot returns it unchanged.
    """
    if isinstance(raw, ContextSnapshot):
        problems = _check_snapshot_against_template(template, raw)
        if problems:
            return ValidationErrors(tuple(problems))
        return raw

    fields = dict(raw)
    violations: list[Violation] = []

    for name in _REQUIRED_FIELDS:
        if name not in fields:
            violations.append(Violation(name, "required field absent"))
    for name, c in template.constraints:
        if c.required and name not in fields:
            violations.append(Violation(name, "required field absent"))
        if name not in fields and c.default is not None:
            fields[name] = c.default
    for name, default in BASE_DEFAULTS.items():
        fields.setdefault(name, default)

    for name, c in template.constraints:
        if name in fields:
            problem = _check_constraint(name, fields[name], c)
            if problem is not None:
                violations.append(Violation(name, problem))

    parsed: dict[str, object] = {}

    def number(name: str, lo: float | None = None, hi: float | None = None) -> float | None:
        text = fields.get(name)
        if text is None or text == "":
            return None
        try:
            v = float(text)
        except ValueError:
            violations.append(Violation(name, f"not numeric: {text!r}"))
            return None
        if lo is not None and hi is not None and not lo <= v <= hi:
            violations.append(Violation(name, f"out of [{lo}, {hi}]"))
            return None
        return v

    def enum_value(name: str, kind: type[Enum]) -> Enum | None:
        text = fields[name]
        try:
            return kind(text)
        except ValueError:
            allowed = ",".join(e.value for e in kind)
            violations.append(Violation(name, f"{text!r} not one of {allowed}"))
            return None

    def boolean(name: str) -> bool | None:
        try:
            return _parse_bool(fields[name])
        except ValueError as exc:
            violations.append(Violation(name, str(exc)))
            return None

    for name in _ENUM_FIELDS:
        parsed[name] = enum_value(name, _ENUM_FIELDS[name])

    interests_text = fields["personal.interests"]
    try:
        vals = [float(x) for x in interests_text.split(",")]
        if len(vals) != 4:
            raise ValueError("need 4 comma-separated values")
        parsed["personal.interests"] = InterestVector(*vals)
    except ValueError as exc:
        violations.append(Violation("personal.interests", str(exc)))

    parsed["infrastructure.battery"] = number("infrastructure.battery", 0.0, 1.0)
    parsed["infrastructure.network"] = boolean("infrastructure.network")
    parsed["environmental.indoor"] = boolean("environmental.indoor")
    parsed["environmental.crowded"] = boolean("environmental.crowded")

    companions = number("social.companions", 0.0, math.inf)
    parsed["social.companions"] = None if companions is None else int(companions)

    lat = number("spatio_temporal.lat", -90.0, 90.0)
    lon = number("spatio_temporal.lon", -180.0, 180.0 - 1e-12)
    heading = number("spatio_temporal.heading", 0.0, 360.0 - 1e-9)
    speed = number("spatio_temporal.speed", 0.0, math.inf)

    ts: datetime | None = None
    if "spatio_temporal.timestamp" in fields:
        try:
            ts = parse_utc(fields["spatio_temporal.timestamp"])
        except ValueError as exc:
            violations.append(Violation("spatio_temporal.timestamp", str(exc)))

    goal_params = GoalParams(
        radius_m=number("task.radius", 0.0, math.inf),
        start_offset_m=number("task.start_offset", 0.0, math.inf),
        length_m=number("task.length", 0.0, math.inf),
        corridor_m=number("task.corridor", 0.0, math.inf),
        category=fields.get("task.category") or None,
        topic=fields.get("task.topic") or None,
    )

    if lat is None and not any(v.fieldname == "spatio_temporal.lat" for v in violations):
        violations.append(Violation("spatio_temporal.lat", "required field absent"))
    if lon is None and not any(v.fieldname == "spatio_temporal.lon" for v in violations):
        violations.append(Violation("spatio_temporal.lon", "required field absent"))
    if ts is None and not any(v.fieldname == "spatio_temporal.timestamp" for v in violations):
        violations.append(Violation("spatio_temporal.timestamp", "required field absent"))
    if violations:
        return ValidationErrors(tuple(violations))

    goal = parsed["task.goal"]
    for pname in REQUIRED_GOAL_PARAMS[goal]:  # type: ignore[index]
        if getattr(goal_params, pname) is None:
            violations.append(
                Violation(f"task.{pname}", f"required for goal {goal.value}")  # type: ignore[union-attr]
            )
    if violations:
        return ValidationErrors(tuple(violations))

    snapshot = ContextSnapshot(
        personal=PersonalFacet(
            interests=parsed["personal.interests"],  # type: ignore[arg-type]
            learning_style=parsed["personal.learning_style"],  # type: ignore[arg-type]
            motivation=parsed["personal.motivation"],  # type: ignore[arg-type]
            preferred_stimuli=parsed["personal.preferred_stimuli"],  # type: ignore[arg-type]
            limitation_tags=_parse_tags(fields["personal.limitations"]),
        ),
        task=TaskFacet(
            operating_mode=parsed["task.operating_mode"],  # type: ignore[arg-type]
            goal_class=goal,  # type: ignore[arg-type]
            goal_params=goal_params,
        ),
        device=parsed["device"],  # type: ignore[arg-type]
        social=SocialFacet(
            companion_count=parsed["social.companions"],  # type: ignore[arg-type]
            companion_tags=_parse_tags(fields["social.companion_tags"]),
        ),
        spatio_temporal=SpatioTemporalFacet(
            timestamp=ts,  # type: ignore[arg-type]
            position=GeoPoint(lat, lon),  # type: ignore[arg-type]
            heading_deg=heading,
            speed_mps=speed,
        ),
        environmental=EnvironmentalFacet(
            weather=fields["environmental.weather"],
            indoor=parsed["environmental.indoor"],  # type: ignore[arg-type]
            crowded=parsed["environmental.crowded"],  # type: ignore[arg-type]
        ),
        user_interface=parsed["user_interface.modality"],  # type: ignore[arg-type]
        infrastructure=InfrastructureFacet(
            network_available=parsed["infrastructure.network"],  # type: ignore[arg-type]
            battery=parsed["infrastructure.battery"],  # type: ignore[arg-type]
        ),
        strategic=fields["strategic.tag"] or None,
        historical=_parse_tags(fields["historical.visited"]),
    )
    return snapshot


def snapshot_raw_value(snapshot: ContextSnapshot, fieldname: str) -> str:
    """Render one snapshot field back to its raw text form."""
    from .geo import format_utc

    p = snapshot.personal
    values: dict[str, str] = {
        "personal.interests": ",".join(repr(v) for v in p.interests.as_tuple()),
        "personal.learning_style": p.learning_style.value,
        "personal.motivation": p.motivation.value,
        "personal.preferred_stimuli": p.preferred_stimuli.value,
        "personal.limitations": ",".join(sorted(p.limitation_tags)),
        "task.operating_mode": snapshot.task.operating_mode.value,
        "task.goal": snapshot.task.goal_class.value,
        "device": snapshot.device.value,
        "social.companions": str(snapshot.social.companion_count),
        "social.companion_tags": ",".join(sorted(snapshot.social.companion_tags)),
        "spatio_temporal.timestamp": format_utc(snapshot.timestamp),
        "spatio_temporal.lat": repr(snapshot.position.lat),
        "spatio_temporal.lon": repr(snapshot.position.lon),
        "environmental.weather": snapshot.environmental.weather,
        "environmental.indoor": "true" if snapshot.environmental.indoor else "false",
        "environmental.crowded": "true" if snapshot.environmental.crowded else "false",
        "user_interface.modality": snapshot.user_interface.value,
        "infrastructure.network": "true" if snapshot.infrastructure.network_available else "false",
        "infrastructure.battery": repr(snapshot.infrastructure.battery),
        "strategic.tag": snapshot.strategic or "",
        "historical.visited": ",".join(sorted(snapshot.historical)),
    }
    gp = snapshot.task.goal_params
    for key, value in (
        ("task.radius", gp.radius_m),
        ("task.start_offset", gp.start_offset_m),
        ("task.length", gp.length_m),
        ("task.corridor", gp.corridor_m),
        ("spatio_temporal.heading", snapshot.spatio_temporal.heading_deg),
        ("spatio_temporal.speed", snapshot.spatio_temporal.speed_mps),
    ):
        if value is not None:
            values[key] = repr(value)
    if gp.category is not None:
        values["task.category"] = gp.category
    if gp.topic is not None:
        values["task.topic"] = gp.topic
    if fieldname not in values:
        raise KeyError(fieldname)
    return values[fieldname]


def _check_snapshot_against_template(
    template: ContextTemplate, snapshot: ContextSnapshot
) -> list[Violation]:
    problems = []
    for name, c in template.constraints:
        try:
            text = snapshot_raw_value(snapshot, name)
        except KeyError:
            continue
        problem = _check_constraint(name, text, c)
        if problem is not None:
            problems.append(Violation(name, problem))
    return problems


def load_template(path: str | Path) -> ContextTemplate:
    """Template file: one constraint per line:

        <facet.field> allowed <v1,v2,...>
        <facet.field> bounds <lo,hi>
        <facet.field> default <value>
        <facet.field> required
    """
    constraints: dict[str, FieldConstraint] = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(None, 2)
        if len(parts) < 2:
            raise ValueError(f"template line {lineno}: expected '<field> <kind> [args]'")
        name, kind = parts[0], parts[1]
        args = parts[2] if len(parts) > 2 else ""
        c = constraints.get(name, FieldConstraint())
        if kind == "allowed":
            c = replace(c, allowed=frozenset(v.strip() for v in args.split(",") if v.strip()))
        elif kind == "bounds":
            lo, hi = (float(x) for x in args.split(","))
            c = replace(c, bounds=(lo, hi))
        elif kind == "default":
            c = replace(c, default=args.strip())
        elif kind == "required":
            c = replace(c, required=True)
        else:
            raise ValueError(f"template line {lineno}: unknown constraint kind {kind!r}")
        constraints[name] = c
    return ContextTemplate(tuple(constraints.items()))
