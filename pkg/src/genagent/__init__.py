"""On-the-fly generalization of buildings and roads with genetic agents.

Every map object is an agent that evolves a small plan of cartographic
operators (simplify, square, enlarge, displace, eliminate) to solve its
legibility conflicts at the requested target scale. Agents run in
synchronous rounds against a snapshot of their neighbors' committed state.
"""
from .agents import RoundReport, SessionConfig, SessionResult, run_session
from .constraints import ConflictGraph, build_conflict_graph
from .errors import (
    ConfigError,
    DegenerateGeometry,
    EmptyScene,
    EndpointMismatch,
    GenAgentError,
    IoError,
    KindMismatch,
    ParseError,
    SchemaError,
)
from .fitness import FitnessComponents, general_fitness
from .genome import AgentContext, Chromosome, GaConfig, Gene, run_ga
from .geometry import ELIMINATED, MapObject, Point2, Polygon, Polyline, ScaleSpec
from .io import RunConfig, load_features, write_outputs
from .operators import Bounds, OperatorKind, apply_plan

__version__ = "0.1.0"

__all__ = [
    "AgentContext", "Bounds", "Chromosome", "ConfigError", "ConflictGraph", "DegenerateGeometry",
    "ELIMINATED", "EmptyScene", "EndpointMismatch", "FitnessComponents", "GaConfig", "Gene",
    "GenAgentError", "IoError", "KindMismatch", "MapObject", "OperatorKind", "ParseError", "Point2",
    "Polygon", "Polyline", "RoundReport", "RunConfig", "ScaleSpec", "SchemaError", "SessionConfig",
    "SessionResult", "apply_plan", "build_conflict_graph", "general_fitness", "load_features",
    "run_ga", "run_session", "write_outputs",
]
