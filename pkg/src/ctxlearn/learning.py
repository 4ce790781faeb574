"""Interest/relevance scoring and construction of the ranked learning
point cloud from a spatial scope (circular area or track corridor).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable

from .axes import AXIS_ORDER, AxisMembership, InterestVector, SubjectAxis
from .geo import GeoPoint, Poi, PoiStore, Track, pois_along_track, pois_in_radius

if TYPE_CHECKING:
    from .context import ContextSnapshot

__all__ = [
    "SubjectAxis",
    "AXIS_ORDER",
    "InterestVector",
    "AxisMembership",
    "CloudEntry",
    "LearningPointCloud",
    "RadiusScope",
    "TrackScope",
    "relevance",
    "build_cloud",
]

DEFAULT_MIN_RELEVANCE = 0.2
DEFAULT_MAX_POINTS = 10


def relevance(interests: InterestVector, membership: AxisMembership) -> float:
    """Dot product of the sum-normalized interests with the membership.

    Bounded by the strongest membership, so a POI can never score higher
    than its best axis fit.
    """
    total = sum(interests.as_tuple())
    if total == 0.0:
        raise ValueError("all-zero interest vector")
    return sum(w / total * m for w, m in zip(interests.as_tuple(), membership.as_tuple()))


@dataclass(frozen=True)
class CloudEntry:
    poi: Poi
    score: float  # relevance in [0, 1]
    distance_m: float  # radial distance, or along-track offset


@dataclass(frozen=True)
class LearningPointCloud:
    """Ranked POIs: relevance descending, ties by distance then id."""

    entries: tuple[CloudEntry, ...]

    def __post_init__(self) -> None:
        ids = [e.poi.id for e in self.entries]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate poi in cloud")
        keys = [(-e.score, e.distance_m, e.poi.id) for e in self.entries]
        if keys != sorted(keys):
            raise ValueError("cloud entries out of order")
        for e in self.entries:
            if not 0.0 <= e.score <= 1.0:
                raise ValueError(f"cloud score {e.score} out of [0, 1]")

    def __len__(self) -> int:
        return len(self.entries)

    def poi_ids(self) -> frozenset[str]:
        return frozenset(e.poi.id for e in self.entries)


@dataclass(frozen=True)
class RadiusScope:
    center: GeoPoint
    radius_m: float


@dataclass(frozen=True)
class TrackScope:
    track: Track
    start_offset_m: float
    length_m: float
    corridor_m: float


SpatialScope = RadiusScope | TrackScope


def rank_entries(
    candidates: Iterable[tuple[Poi, float]],
    interests: InterestVector,
    visited: frozenset[str],
    min_relevance: float,
    max_points: int | None,
    category: str | None = None,
) -> LearningPointCloud:
    """Score, filter and order spatial candidates into a cloud."""
    scored = []
    for poi, dist in candidates:
        if poi.id in visited:
            continue
        if category is not None and poi.category != category:
            continue
        score = relevance(interests, poi.axis_membership)
        if score < min_relevance:
            continue
        scored.append(CloudEntry(poi, score, dist))
    scored.sort(key=lambda e: (-e.score, e.distance_m, e.poi.id))
    if max_points is not None:
        if max_points < 1:
            raise ValueError("max_points must be >= 1")
        scored = scored[:max_points]
    return LearningPointCloud(tuple(scored))


def build_cloud(
    store: PoiStore,
    context: "ContextSnapshot",
    scope: SpatialScope,
    min_relevance: float = DEFAULT_MIN_RELEVANCE,
    max_points: int | None = DEFAULT_MAX_POINTS,
    category: str | None = None,
) -> LearningPointCloud:
    """Spatial query -> drop already-visited POIs -> relevance gate ->
    rank -> truncate.

    For a track scope the entry distance is the along-track offset.
    """
    interests = context.personal.interests
    if interests.is_zero():
        raise ValueError("all-zero interest vector")
    if isinstance(scope, RadiusScope):
        candidates: list[tuple[Poi, float]] = list(
            pois_in_radius(store, scope.center, scope.radius_m)
        )
    else:
        candidates = [
            (poi, off)
            for poi, off, _lat in pois_along_track(
                store, scope.track, scope.start_offset_m, scope.length_m, scope.corridor_m
            )
        ]
    return rank_entries(
        candidates, interests, context.historical, min_relevance, max_points, category
    )
