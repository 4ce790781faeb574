"""Shared builders and independent brute-force oracles for the tests.

The oracles deliberately reimplement the documented math with plain
loops so the indexed/engineered paths are checked against them.
"""

from __future__ import annotations

import math
import random
from datetime import datetime, timedelta, timezone

from ctxlearn.axes import AxisMembership, InterestVector
from ctxlearn.context import (
    ContextSnapshot,
    DeviceKind,
    EnvironmentalFacet,
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
)
from ctxlearn.geo import GeoPoint, Poi, PoiStore

UTC = timezone.utc
T0 = datetime(2010, 6, 12, 10, 0, 0, tzinfo=UTC)

EARTH_RADIUS_M = 6_371_000.0
METERS_PER_DEG = EARTH_RADIUS_M * math.pi / 180.0


def make_snapshot(
    lat: float = 45.10,
    lon: float = 25.95,
    ts: datetime = T0,
    interests: tuple[float, float, float, float] = (0.7, 0.0, 0.0, 0.3),
    goal: GoalClass = GoalClass.EXPLORE_AREA,
    radius: float | None = 30000.0,
    mode: OperatingMode = OperatingMode.STATIC,
    device: DeviceKind = DeviceKind.GIPIX,
    visited: frozenset[str] = frozenset(),
    weather: str = "clear",
    strategic: str | None = None,
    motivation: Motivation = Motivation.HIGH,
    style: LearningStyle = LearningStyle.ACTIVIST,
    stimuli: Stimuli = Stimuli.VISUAL,
    battery: float = 0.8,
    companions: int = 0,
    companion_tags: frozenset[str] = frozenset(),
    category: str | None = None,
    start_offset: float | None = None,
    length: float | None = None,
    corridor: float | None = None,
) -> ContextSnapshot:
    return ContextSnapshot(
        personal=PersonalFacet(
            interests=InterestVector(*interests),
            learning_style=style,
            motivation=motivation,
            preferred_stimuli=stimuli,
        ),
        task=TaskFacet(
            operating_mode=mode,
            goal_class=goal,
            goal_params=GoalParams(
                radius_m=radius,
                start_offset_m=start_offset,
                length_m=length,
                corridor_m=corridor,
                category=category,
            ),
        ),
        device=device,
        social=SocialFacet(companion_count=companions, companion_tags=companion_tags),
        spatio_temporal=SpatioTemporalFacet(timestamp=ts, position=GeoPoint(lat, lon)),
        environmental=EnvironmentalFacet(weather=weather),
        user_interface=Modality.TEXTUAL,
        infrastructure=InfrastructureFacet(battery=battery),
        strategic=strategic,
        historical=visited,
    )


def random_snapshot(rng: random.Random) -> ContextSnapshot:
    return make_snapshot(
        lat=rng.uniform(44.8, 45.8),
        lon=rng.uniform(25.4, 26.4),
        ts=T0 + timedelta(seconds=rng.randrange(0, 86400)),
        interests=tuple(round(rng.random(), 3) for _ in range(4)),
        mode=rng.choice(list(OperatingMode)),
        device=rng.choice(list(DeviceKind)),
        visited=frozenset(rng.sample(["p1", "p2", "p3", "p4", "p5"], rng.randrange(0, 4))),
        weather=rng.choice(["clear", "rain", "fog"]),
        strategic=rng.choice([None, "anniversary", "exam"]),
        motivation=rng.choice(list(Motivation)),
        style=rng.choice(list(LearningStyle)),
        stimuli=rng.choice(list(Stimuli)),
        battery=round(rng.random(), 3),
        companions=rng.randrange(0, 4),
    )


def make_poi(
    pid: str,
    lat: float,
    lon: float,
    membership: tuple[float, float, float, float] = (0.8, 0.1, 0.0, 0.6),
    category: str = "monastery",
    visit_min: int = 45,
    name: str | None = None,
) -> Poi:
    return Poi(
        id=pid,
        name=name or pid.replace("_", " "),
        position=GeoPoint(lat, lon),
        axis_membership=AxisMembership(*membership),
        visit_duration_min=visit_min,
        category=category,
        description=f"notes on {pid}",
    )


def random_store(rng: random.Random, n: int, lat0: float = 45.0, lon0: float = 25.5) -> PoiStore:
    """n POIs uniformly placed in a 1x1 degree box."""
    pois = []
    for i in range(n):
        pois.append(
            make_poi(
                f"poi{i:04d}",
                rng.uniform(lat0, lat0 + 1.0),
                rng.uniform(lon0, lon0 + 1.0),
                membership=tuple(round(rng.random(), 3) for _ in range(4)),
                category=rng.choice(["monastery", "museum", "cave", "gas_station"]),
                visit_min=rng.randrange(10, 120),
            )
        )
    return PoiStore(pois)


# ---------------------------------------------------------------------------
# Brute-force oracles
# ---------------------------------------------------------------------------


def oracle_haversine(a: GeoPoint, b: GeoPoint) -> float:
    phi1, phi2 = math.radians(a.lat), math.radians(b.lat)
    dphi = phi2 - phi1
    dlmb = math.radians(b.lon) - math.radians(a.lon)
    s = math.sin(dphi / 2) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlmb / 2) ** 2
    return 2 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(s)))


def oracle_radius_ids(store: PoiStore, center: GeoPoint, radius_m: float) -> set[str]:
    """Index-free scan over every POI."""
    return {p.id for p in store if oracle_haversine(center, p.position) <= radius_m}


def _oracle_segment_distance(p: GeoPoint, a: GeoPoint, b: GeoPoint) -> tuple[float, float]:
    """Equirectangular point-to-segment distance, reimplemented."""
    lat0 = math.radians((a.lat + b.lat) / 2.0)
    kx = METERS_PER_DEG * math.cos(lat0)
    ax, ay = a.lon * kx, a.lat * METERS_PER_DEG
    bx, by = b.lon * kx, b.lat * METERS_PER_DEG
    px, py = p.lon * kx, p.lat * METERS_PER_DEG
    dx, dy = bx - ax, by - ay
    denom = dx * dx + dy * dy
    if denom == 0.0:
        return math.hypot(px - ax, py - ay), 0.0
    t = max(0.0, min(1.0, ((px - ax) * dx + (py - ay) * dy) / denom))
    return math.hypot(px - (ax + t * dx), py - (ay + t * dy)), t


def oracle_corridor_ids(
    store: PoiStore,
    verts: list[GeoPoint],
    corridor_m: float,
) -> set[str]:
    """Per-segment brute-force minimum over every POI and sub-polyline
    segment; the caller supplies the extracted sub-polyline."""
    out = set()
    for poi in store:
        best = math.inf
        for a, b in zip(verts, verts[1:]):
            d, _t = _oracle_segment_distance(poi.position, a, b)
            best = min(best, d)
        if best <= corridor_m:
            out.add(poi.id)
    return out


def make_solution(*pois: Poi, plan: bool = True):
    """A small well-formed solution over the given POIs (rank = given order)."""
    from ctxlearn.casebase import Solution
    from ctxlearn.learning import CloudEntry, LearningPointCloud
    from ctxlearn.plan import AgentRole, TaskPlan, TaskStep

    entries = tuple(
        CloudEntry(p, round(0.9 - 0.1 * i, 3), 100.0 * (i + 1)) for i, p in enumerate(pois)
    )
    steps: tuple = ()
    if plan:
        steps = tuple(
            TaskStep(role, action, p.id, f"{action} {p.id}")
            for p in pois
            for role, action in (
                (AgentRole.GIS_AGENT, "locate"),
                (AgentRole.IR_AGENT, "enrich"),
                (AgentRole.DEVICE_AGENT, "guide"),
            )
        )
    return Solution(LearningPointCloud(entries), TaskPlan(steps))


def oracle_nearest(store: PoiStore, pos: GeoPoint, category: str | None) -> tuple[str, float] | None:
    best: tuple[float, str] | None = None
    for poi in store:
        if category is not None and poi.category != category:
            continue
        d = oracle_haversine(pos, poi.position)
        if best is None or (d, poi.id) < best:
            best = (d, poi.id)
    if best is None:
        return None
    return best[1], best[0]
