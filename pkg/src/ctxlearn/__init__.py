"""Context-aware learning-point recommender: maps a point in a
multidimensional context space to a ranked cloud of learning points,
via a case-based reasoning cycle over a knowledge base of cases,
stereotypes and geospatial data, replayed through a deterministic
multi-agent pipeline.
"""

from .axes import AxisMembership, InterestVector, SubjectAxis
from .casebase import Case, CaseBase, CaseKind, ContextProfile, Solution, Stereotype, Trigger
from .context import (
    ChangePolicy,
    ContextSnapshot,
    ContextTemplate,
    DeviceKind,
    FacetId,
    FacetWeights,
    GoalClass,
    OperatingMode,
    ValidationErrors,
    aggregate_similarity,
    detect_context_change,
    facet_similarity,
    validate_instance,
)
from .engine import Engine, EngineConfig, FreshSolve, Matched, Recommendation, ReusedCase, Unclassified
from .geo import GeoPoint, Poi, PoiStore, Track, great_circle_distance, load_pois, nearest_poi, pois_along_track, pois_in_radius, reachable_before_dark
from .learning import LearningPointCloud, RadiusScope, TrackScope, build_cloud, relevance
from .plan import AgentRole, TaskPlan, TaskStep, plan_tasks
from .scenario import EventLog, Scenario, load_scenario, run_dynamic, run_scenario, run_static

__version__ = "0.1.0"
