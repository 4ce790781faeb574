"""Geospatial primitives: POI storage with a grid index, great-circle
geometry, radius and track-corridor queries, and daylight reachability.

Distances are meters on a sphere of radius 6,371,000 m. All query
boundaries are inclusive (<=). Point-to-segment distances use a local
equirectangular projection centered on each segment, which is accurate
to well under a meter at county scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime, timedelta
from pathlib import Path
from typing import Iterable, Iterator

from .axes import AxisMembership

EARTH_RADIUS_M = 6_371_000.0
GRID_CELL_DEG = 0.01
METERS_PER_DEG_LAT = EARTH_RADIUS_M * math.pi / 180.0

# Categories that justify a POI with no learning-axis membership
# (public-interest services).
SERVICE_CATEGORIES = frozenset(
    {"gas_station", "drugstore", "hospital", "general_store", "restaurant"}
)


class GeoError(ValueError):
    """Invalid geometry arguments (bounds, offsets, degenerate inputs)."""


@dataclass(frozen=True)
class GeoPoint:
    lat: float  # degrees, [-90, 90]
    lon: float  # degrees, [-180, 180)

    def __post_init__(self) -> None:
        if not -90.0 <= self.lat <= 90.0:
            raise GeoError(f"latitude {self.lat} out of [-90, 90]")
        if not -180.0 <= self.lon < 180.0:
            raise GeoError(f"longitude {self.lon} out of [-180, 180)")


def great_circle_distance(a: GeoPoint, b: GeoPoint) -> float:
    """Haversine distance in meters between two points."""
    lat1, lon1 = math.radians(a.lat), math.radians(a.lon)
    lat2, lon2 = math.radians(b.lat), math.radians(b.lon)
    dlat = lat2 - lat1
    dlon = lon2 - lon1
    h = math.sin(dlat / 2.0) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin(dlon / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(h)))


@dataclass(frozen=True)
class Poi:
    id: str
    name: str
    position: GeoPoint
    axis_membership: AxisMembership
    visit_duration_min: int  # minutes, > 0
    category: str
    description: str = ""

    def __post_init__(self) -> None:
        if self.visit_duration_min <= 0:
            raise GeoError(f"poi {self.id}: visit duration must be positive")
        if max(self.axis_membership.as_tuple()) <= 0.0 and self.category not in SERVICE_CATEGORIES:
            raise GeoError(
                f"poi {self.id}: needs a positive axis membership or a service category"
            )


def _cell_of(p: GeoPoint) -> tuple[int, int]:
    return (math.floor(p.lat / GRID_CELL_DEG), math.floor(p.lon / GRID_CELL_DEG))


class PoiStore:
    """Immutable POI collection with a uniform lat/lon grid index.

    The grid narrows candidates; every candidate is re-checked with the
    exact great-circle distance, so results are identical to a full scan.
    """

    def __init__(self, pois: Iterable[Poi]):
        self._by_id: dict[str, Poi] = {}
        self._grid: dict[tuple[int, int], list[Poi]] = {}
        for poi in pois:
            if poi.id in self._by_id:
                raise GeoError(f"duplicate poi id {poi.id!r}")
            self._by_id[poi.id] = poi
            self._grid.setdefault(_cell_of(poi.position), []).append(poi)
        self._pois = tuple(self._by_id.values())

    def __len__(self) -> int:
        return len(self._pois)

    def __iter__(self) -> Iterator[Poi]:
        return iter(self._pois)

    def get(self, poi_id: str) -> Poi | None:
        return self._by_id.get(poi_id)

    def _cells_in_box(
        self, lat_min: float, lat_max: float, lon_min: float, lon_max: float
    ) -> Iterator[list[Poi]] | None:
        """Grid buckets intersecting a lat/lon box, or None when a full
        scan is cheaper than enumerating cells."""
        clat_min = math.floor(max(-90.0, lat_min) / GRID_CELL_DEG)
        clat_max = math.floor(min(90.0, lat_max) / GRID_CELL_DEG)
        wrap = lon_max - lon_min >= 360.0
        clon_min = math.floor(lon_min / GRID_CELL_DEG)
        clon_max = math.floor(lon_max / GRID_CELL_DEG)
        n_lon = 1 if wrap else clon_max - clon_min + 1
        n_cells = (clat_max - clat_min + 1) * (36000 if wrap else n_lon)
        if n_cells > max(64, 4 * len(self._pois)):
            return None

        def gen() -> Iterator[list[Poi]]:
            lon_cells = range(36000) if wrap else range(clon_min, clon_max + 1)
            for clat in range(clat_min, clat_max + 1):
                for clon in lon_cells:
                    wrapped = ((clon + 18000) % 36000) - 18000
                    bucket = self._grid.get((clat, wrapped))
                    if bucket:
                        yield bucket

        return gen()

    def candidates_in_box(
        self, lat_min: float, lat_max: float, lon_min: float, lon_max: float
    ) -> Iterable[Poi]:
        cells = self._cells_in_box(lat_min, lat_max, lon_min, lon_max)
        if cells is None:
            return self._pois
        out: list[Poi] = []
        for bucket in cells:
            out.extend(bucket)
        return out


def _box_margins(lat: float, radius_m: float) -> tuple[float, float]:
    """Degree margins that safely cover a radius around a latitude."""
    dlat = radius_m / METERS_PER_DEG_LAT + GRID_CELL_DEG
    band = min(89.99, abs(lat) + dlat)
    dlon = radius_m / (METERS_PER_DEG_LAT * math.cos(math.radians(band))) + GRID_CELL_DEG
    return dlat, min(dlon, 360.0)


def pois_in_radius(
    store: PoiStore, center: GeoPoint, radius_m: float
) -> list[tuple[Poi, float]]:
    """POIs within radius_m of center (inclusive), nearest first, ties by id."""
    if radius_m < 0:
        raise GeoError("radius must be non-negative")
    dlat, dlon = _box_margins(center.lat, radius_m)
    hits = []
    for poi in store.candidates_in_box(
        center.lat - dlat, center.lat + dlat, center.lon - dlon, center.lon + dlon
    ):
        d = great_circle_distance(center, poi.position)
        if d <= radius_m:
            hits.append((poi, d))
    hits.sort(key=lambda h: (h[1], h[0].id))
    return hits


def nearest_poi(
    store: PoiStore, pos: GeoPoint, category: str | None = None
) -> tuple[Poi, float] | None:
    """Nearest POI matching the category filter, or None.

    Expanding-radius search: once any match falls within the current
    radius, the closest of those is the global minimum.
    """
    radius = 1_000.0
    max_distance = math.pi * EARTH_RADIUS_M
    while True:
        for poi, d in pois_in_radius(store, pos, radius):
            if category is None or poi.category == category:
                return poi, d
        if radius > max_distance:
            return None
        radius *= 4.0


@dataclass(frozen=True)
class Track:
    """Timestamped GPS polyline; timestamps strictly increasing, >= 2 points."""

    points: tuple[tuple[datetime, GeoPoint], ...]

    def __post_init__(self) -> None:
        if len(self.points) < 2:
            raise GeoError("a track needs at least two points")
        for (t0, _), (t1, _) in zip(self.points, self.points[1:]):
            if t1 <= t0:
                raise GeoError("track timestamps must be strictly increasing")

    def positions(self) -> list[GeoPoint]:
        return [p for _, p in self.points]


def track_arc_lengths(track: Track) -> list[float]:
    """Cumulative great-circle arc length at each track vertex."""
    cum = [0.0]
    pts = track.positions()
    for a, b in zip(pts, pts[1:]):
        cum.append(cum[-1] + great_circle_distance(a, b))
    return cum


def _interpolate(a: GeoPoint, b: GeoPoint, t: float) -> GeoPoint:
    return GeoPoint(a.lat + (b.lat - a.lat) * t, a.lon + (b.lon - a.lon) * t)


def _sub_polyline(track: Track, start_m: float, length_m: float) -> tuple[list[GeoPoint], float]:
    """Vertices of the polyline slice [start_m, start_m + length_m].

    Returns the vertices and the arc length at the slice start; endpoint
    vertices are interpolated within their segments.
    """
    cum = track_arc_lengths(track)
    total = cum[-1]
    if start_m < 0 or length_m <= 0:
        raise GeoError("start offset must be >= 0 and length > 0")
    end_m = start_m + length_m
    if end_m > total:
        raise GeoError(f"segment [{start_m}, {end_m}] exceeds track length {total}")
    pts = track.positions()
    verts: list[GeoPoint] = []
    for i in range(len(pts) - 1):
        seg_start, seg_end = cum[i], cum[i + 1]
        if seg_end < start_m or seg_start > end_m:
            continue
        seg_len = seg_end - seg_start
        if not verts:
            t = 0.0 if seg_len == 0 else (start_m - seg_start) / seg_len
            verts.append(_interpolate(pts[i], pts[i + 1], max(0.0, t)))
        if seg_end <= end_m:
            verts.append(pts[i + 1])
        else:
            t = 0.0 if seg_len == 0 else (end_m - seg_start) / seg_len
            verts.append(_interpolate(pts[i], pts[i + 1], min(1.0, t)))
            break
    return verts, start_m


def point_to_segment(p: GeoPoint, a: GeoPoint, b: GeoPoint) -> tuple[float, float]:
    """(distance_m, fraction along a->b) of the closest segment point to p.

    Planar computation in an equirectangular projection centered on the
    segment midpoint.
    """
    lat0 = math.radians((a.lat + b.lat) / 2.0)
    kx = METERS_PER_DEG_LAT * math.cos(lat0)
    ky = METERS_PER_DEG_LAT

    ax, ay = a.lon * kx, a.lat * ky
    bx, by = b.lon * kx, b.lat * ky
    px, py = p.lon * kx, p.lat * ky

    dx, dy = bx - ax, by - ay
    seg_sq = dx * dx + dy * dy
    if seg_sq == 0.0:
        return math.hypot(px - ax, py - ay), 0.0
    t = ((px - ax) * dx + (py - ay) * dy) / seg_sq
    t = min(1.0, max(0.0, t))
    cx, cy = ax + t * dx, ay + t * dy
    return math.hypot(px - cx, py - cy), t


def pois_along_track(
    store: PoiStore,
    track: Track,
    start_offset_m: float,
    length_m: float,
    corridor_m: float,
) -> list[tuple[Poi, float, float]]:
    """POIs within corridor_m of the track slice, as (poi, along_offset,
    lateral_distance), ordered by along_offset then id.

    along_offset is the arc length (from the track start) of the closest
    polyline point to the POI.
    """
    if corridor_m < 0:
        raise GeoError("corridor must be non-negative")
    verts, slice_start = _sub_polyline(track, start_offset_m, length_m)
    if len(verts) < 2:
        return []

    lat_min = min(v.lat for v in verts)
    lat_max = max(v.lat for v in verts)
    lon_min = min(v.lon for v in verts)
    lon_max = max(v.lon for v in verts)
    dlat, dlon = _box_margins(max(abs(lat_min), abs(lat_max)), corridor_m)

    seg_lens = [great_circle_distance(a, b) for a, b in zip(verts, verts[1:])]
    hits: list[tuple[Poi, float, float]] = []
    for poi in store.candidates_in_box(
        lat_min - dlat, lat_max + dlat, lon_min - dlon, lon_max + dlon
    ):
        best_d = math.inf
        best_off = 0.0
        cum = slice_start
        for a, b, seg_len in zip(verts, verts[1:], seg_lens):
            d, t = point_to_segment(poi.position, a, b)
            if d < best_d:
                best_d = d
                best_off = cum + t * seg_len
            cum += seg_len
        if best_d <= corridor_m:
            hits.append((poi, best_off, best_d))
    hits.sort(key=lambda h: (h[1], h[0].id))
    return hits


def nearest_offset_on_track(track: Track, pos: GeoPoint) -> float:
    """Arc-length offset of the track point closest to pos."""
    pts = track.positions()
    cum = track_arc_lengths(track)
    best_d = math.inf
    best_off = 0.0
    for i, (a, b) in enumerate(zip(pts, pts[1:])):
        d, t = point_to_segment(pos, a, b)
        if d < best_d:
            best_d = d
            best_off = cum[i] + t * (cum[i + 1] - cum[i])
    return best_off


def reachable_before_dark(
    pos: GeoPoint, poi: Poi, now: datetime, sunset: datetime, speed_mps: float
) -> bool:
    """True when a round trip plus the visit fits before sunset (inclusive).

    Travel time uses the straight great-circle distance at speed_mps.
    """
    if speed_mps <= 0:
        raise GeoError("speed must be positive")
    if sunset < now:
        return False
    d = great_circle_distance(pos, poi.position)
    done = now + timedelta(seconds=2.0 * d / speed_mps) + timedelta(minutes=poi.visit_duration_min)
    return done <= sunset


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------
# POI file: UTF-8, one record per line, tab-separated fields:
#   id  name  lat  lon  h  g  ns  c  visit_min  category  description
# Lines starting with '#' and blank lines are ignored.
# Track file: one point per line: ISO-8601 timestamp, lat, lon (tab-separated).

POI_FIELD_COUNT = 11


def parse_utc(text: str) -> datetime:
    """ISO-8601 parser accepting a trailing 'Z'; naive times are taken as UTC."""
    from datetime import timezone

    ts = datetime.fromisoformat(text.replace("Z", "+00:00"))
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def format_utc(ts: datetime) -> str:
    from datetime import timezone

    return ts.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _parse_poi_line(line: str) -> Poi:
    parts = line.split("\t")
    if len(parts) != POI_FIELD_COUNT:
        raise GeoError(f"expected {POI_FIELD_COUNT} tab-separated fields, got {len(parts)}")
    pid, name, lat, lon, h, g, ns, c, visit, category, description = parts
    if not pid:
        raise GeoError("empty id")
    return Poi(
        id=pid,
        name=name,
        position=GeoPoint(float(lat), float(lon)),
        axis_membership=AxisMembership(float(h), float(g), float(ns), float(c)),
        visit_duration_min=int(visit),
        category=category,
        description=description,
    )


def load_pois(path: str | Path) -> tuple[PoiStore, list[tuple[int, str]]]:
    """Parse a POI file; malformed lines are rejected per line, not fatally.

    Returns the store and a list of (line_number, reason) rejections.
    """
    rejected: list[tuple[int, str]] = []
    pois: list[Poi] = []
    seen: set[str] = set()
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        try:
            poi = _parse_poi_line(line)
            if poi.id in seen:
                raise GeoError(f"duplicate poi id {poi.id!r}")
            seen.add(poi.id)
            pois.append(poi)
        except (GeoError, ValueError) as exc:
            rejected.append((lineno, str(exc)))
    return PoiStore(pois), rejected


def save_pois(store: PoiStore, path: str | Path) -> None:
    lines = []
    for poi in store:
        m = poi.axis_membership
        lines.append(
            "\t".join(
                [
                    poi.id,
                    poi.name,
                    repr(poi.position.lat),
                    repr(poi.position.lon),
                    repr(m.h),
                    repr(m.g),
                    repr(m.ns),
                    repr(m.c),
                    str(poi.visit_duration_min),
                    poi.category,
                    poi.description,
                ]
            )
        )
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def save_track(track: Track, path: str | Path) -> None:
    lines = [
        "\t".join([format_utc(ts), repr(p.lat), repr(p.lon)]) for ts, p in track.points
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_track(path: str | Path) -> Track:
    points = []
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise GeoError(f"track line {lineno}: expected timestamp, lat, lon")
        ts, lat, lon = parts
        points.append((parse_utc(ts), GeoPoint(float(lat), float(lon))))
    return Track(tuple(points))
