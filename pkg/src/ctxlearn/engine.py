"""The four-phase reasoning cycle gated by a similarity threshold:
classify, reuse/adapt, revise, retain, plus the end-to-end solve
pipeline that produces a recommendation.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

from .casebase import Case, CaseBase, CaseKind, Solution, Stereotype, match_stereotypes
from .context import (
    ChangePolicy,
    ContextSnapshot,
    ContextTemplate,
    DEFAULT_TEMPLATE,
    FacetWeights,
    GoalClass,
    TaskFacet,
    ValidationErrors,
    validate_instance,
)
from .geo import PoiStore, Track, nearest_offset_on_track, nearest_poi, track_arc_lengths
from .learning import (
    CloudEntry,
    LearningPointCloud,
    RadiusScope,
    TrackScope,
    build_cloud,
    relevance,
)
from .plan import ReachabilityGate, plan_tasks


class EngineError(ValueError):
    pass


class NoInterestSignal(EngineError):
    """Interests are all zero and no stereotype supplies defaults."""


class ValidationFailed(EngineError):
    def __init__(self, errors: ValidationErrors):
        super().__init__(f"context validation failed: {errors}")
        self.errors = errors


@dataclass(frozen=True)
class Matched:
    case_id: str
    similarity: float


@dataclass(frozen=True)
class Unclassified:
    best_similarity: float | None = None


Classification = Matched | Unclassified


@dataclass(frozen=True)
class ReusedCase:
    case_id: str


@dataclass(frozen=True)
class FreshSolve:
    pass


@dataclass(frozen=True)
class Recommendation:
    solution: Solution
    source: ReusedCase | FreshSolve
    classification: Classification

    def __post_init__(self) -> None:
        if isinstance(self.source, ReusedCase):
            if not isinstance(self.classification, Matched):
                raise EngineError("a reused solution requires a matched classification")
            if self.classification.case_id != self.source.case_id:
                raise EngineError("reused case id disagrees with the classification")


@dataclass(frozen=True)
class EngineConfig:
    similarity_threshold: float = 0.75  # classification gate, (0, 1]
    retrieval_width: int = 3
    facet_weights: FacetWeights = FacetWeights.uniform()
    min_relevance: float = 0.2
    max_points: int = 10
    change_policy: ChangePolicy = ChangePolicy()
    demotion_min_uses: int = 3
    demotion_outcome: float = 0.2
    generalize_min_members: int = 5
    generalize_cohesion: float = 0.6
    position_lambda_m: float = 5000.0
    reach_radius_m: float = 30000.0  # default scope for reach_poi goals

    def __post_init__(self) -> None:
        if not 0.0 < self.similarity_threshold <= 1.0:
            raise EngineError("similarity threshold must be in (0, 1]")
        if self.retrieval_width < 1:
            raise EngineError("retrieval width must be >= 1")


_CONFIG_KEYS = {
    "similarity_threshold": float,
    "retrieval_width": int,
    "min_relevance": float,
    "max_points": int,
    "demotion_min_uses": int,
    "demotion_outcome": float,
    "generalize_min_members": int,
    "generalize_cohesion": float,
    "position_lambda_m": float,
    "reach_radius_m": float,
}


def load_engine_config(path: str | Path) -> EngineConfig:
    """key=value config file; unknown keys rejected. Supported keys are
    the EngineConfig fields plus facet_weights (ten comma floats),
    distance_threshold_m and time_threshold_s (change policy)."""
    kwargs: dict = {}
    policy: dict = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise EngineError(f"config line {lineno}: expected key=value")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key in _CONFIG_KEYS:
            kwargs[key] = _CONFIG_KEYS[key](value)
        elif key == "facet_weights":
            kwargs["facet_weights"] = FacetWeights(tuple(float(x) for x in value.split(",")))
        elif key == "distance_threshold_m":
            policy["distance_threshold_m"] = float(value)
        elif key == "time_threshold_s":
            policy["time_threshold_s"] = float(value)
        else:
            raise EngineError(f"config line {lineno}: unknown key {key!r}")
    if policy:
        kwargs["change_policy"] = ChangePolicy(**policy)
    return EngineConfig(**kwargs)


class Engine:
    """Serializes all case-base mutation; snapshots are immutable."""

    def __init__(
        self,
        base: CaseBase,
        store: PoiStore,
        config: EngineConfig = EngineConfig(),
        template: ContextTemplate = DEFAULT_TEMPLATE,
        stereotypes: Sequence[Stereotype] = (),
        reach_gate: ReachabilityGate | None = None,
    ):
        self.base = base
        self.store = store
        self.config = config
        self.template = template
        self.stereotypes = tuple(stereotypes)
        self.reach_gate = reach_gate

    # -- context preparation -------------------------------------------------

    def validate(self, raw) -> ContextSnapshot:
        result = validate_instance(self.template, raw)
        if isinstance(result, ValidationErrors):
            raise ValidationFailed(result)
        return result

    def effective_context(self, snapshot: ContextSnapshot) -> tuple[ContextSnapshot, FacetWeights]:
        """Apply stereotype defaults when the user gave no interest signal.

        Explicit interests always win; the first matching stereotype
        supplies both interests and facet weights otherwise.
        """
        if not snapshot.personal.interests.is_zero():
            return snapshot, self.config.facet_weights
        matched = match_stereotypes(self.stereotypes, snapshot.personal, snapshot.task)
        if not matched:
            raise NoInterestSignal("no interest signal")
        stereo = matched[0]
        personal = replace(snapshot.personal, interests=stereo.default_interests)
        return replace(snapshot, personal=personal), stereo.default_weights

    # -- the four phases -------------------------------------------------------

    def classify(
        self, context: ContextSnapshot, weights: FacetWeights | None = None
    ) -> Classification:
        """Matched iff the best retrieved case reaches the threshold."""
        w = weights or self.config.facet_weights
        hits = self.base.retrieve_k_nearest(
            context, w, self.config.retrieval_width, self.config.position_lambda_m
        )
        if not hits:
            return Unclassified(None)
        best, sim = hits[0]
        if sim >= self.config.similarity_threshold:
            return Matched(best.id, sim)
        return Unclassified(sim)

    def reuse(self, case: Case, context: ContextSnapshot, track: Track | None = None) -> Solution:
        """Adapt a matched case: keep its problem, re-ground the scope on
        the query position, rebuild the cloud with current interests and
        history, regenerate the plan. Nothing is replayed verbatim."""
        return self._solve_problem(context, case.problem, track, recenter=True)

    def revise(self, case_id: str, feedback: float) -> float:
        """Fold graded feedback into the case outcome (the stored outcome
        counts as one prior observation); repeatedly poor cases are
        demoted out of retrieval."""
        if not 0.0 <= feedback <= 1.0:
            raise EngineError(f"feedback {feedback} out of [0, 1]")
        case = self.base.get(case_id)
        case.outcome = (case.outcome * (case.use_count + 1) + feedback) / (case.use_count + 2)
        case.use_count += 1
        if (
            case.use_count >= self.config.demotion_min_uses
            and case.outcome < self.config.demotion_outcome
        ):
            case.demoted = True
        return case.outcome

    def retain(self, context: ContextSnapshot, problem: TaskFacet, solution: Solution) -> str:
        """Store the fresh experience as a point case, then try to
        generalize the goal class."""
        case = Case(
            id=self.base.next_case_id(),
            kind=CaseKind.POINT,
            context=context,
            problem=problem,
            solution=solution,
        )
        case_id = self.base.add(case)
        self.base.generalize(
            problem.goal_class,
            self.config.facet_weights,
            self.config.generalize_min_members,
            self.config.generalize_cohesion,
            self.config.position_lambda_m,
        )
        return case_id

    # -- solving ---------------------------------------------------------------

    def fresh_solution(self, context: ContextSnapshot, track: Track | None = None) -> Solution:
        return self._solve_problem(context, context.task, track, recenter=False)

    def _solve_problem(
        self, context: ContextSnapshot, problem: TaskFacet, track: Track | None, recenter: bool
    ) -> Solution:
        goal = problem.goal_class
        params = problem.goal_params
        if goal is GoalClass.FIND_NEAREST:
            cloud = self._nearest_cloud(context, params.category)
        elif goal is GoalClass.FOLLOW_TRACK:
            cloud = self._corridor_cloud(context, problem, track, recenter)
        else:
            radius = params.radius_m if params.radius_m is not None else self.config.reach_radius_m
            scope = RadiusScope(context.position, radius)
            cloud = build_cloud(
                self.store,
                context,
                scope,
                self.config.min_relevance,
                self.config.max_points,
                category=params.category,
            )
        plan = plan_tasks(cloud, context, self.reach_gate)
        return Solution(cloud, plan)

    def _nearest_cloud(self, context: ContextSnapshot, category: str | None) -> LearningPointCloud:
        # Service lookups bypass the relevance gate: the nearest match is
        # the answer even when it carries no learning value.
        hit = nearest_poi(self.store, context.position, category)
        if hit is None:
            return LearningPointCloud(())
        poi, distance = hit
        interests = context.personal.interests
        score = 0.0 if interests.is_zero() else relevance(interests, poi.axis_membership)
        return LearningPointCloud((CloudEntry(poi, score, distance),))

    def _corridor_cloud(
        self, context: ContextSnapshot, problem: TaskFacet, track: Track | None, recenter: bool
    ) -> LearningPointCloud:
        if track is None:
            raise EngineError("follow_track goals require a track")
        params = problem.goal_params
        start, length = params.start_offset_m, params.length_m
        if recenter:
            # re-ground the segment ahead of the user's current position;
            # near the track end the remaining stretch may be shorter
            total = track_arc_lengths(track)[-1]
            start = nearest_offset_on_track(track, context.position)
            length = min(length, total - start)
            if length <= 0:
                return LearningPointCloud(())
        scope = TrackScope(track, start, length, params.corridor_m)
        return build_cloud(
            self.store, context, scope, self.config.min_relevance, self.config.max_points
        )

    def solve(self, raw, track: Track | None = None) -> Recommendation:
        """validate -> stereotype defaults -> classify -> reuse or fresh
        solve -> retain fresh experiences. Deterministic for identical
        inputs and engine state."""
        snapshot = self.validate(raw)
        context, weights = self.effective_context(snapshot)
        classification = self.classify(context, weights)
        if isinstance(classification, Matched):
            case = self.base.get(classification.case_id)
            solution = self.reuse(case, context, track)
            return Recommendation(solution, ReusedCase(case.id), classification)
        solution = self.fresh_solution(context, track)
        self.retain(context, context.task, solution)
        return Recommendation(solution, FreshSolve(), classification)
