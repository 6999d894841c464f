"""Python access to the wire-avoidance simulator core.

Vectors are plain 3-tuples (any 3-sequence is accepted).
"""

from ._srd import (
    AvoidanceParams,
    RunLog,
    Scenario,
    ScenarioParseError,
    ScenarioValidationError,
    builtin_names,
    closest_point_on_segment,
    combine_output,
    ebrake_check,
    ebrake_horizon_length,
    estimate_line_direction,
    load_scenario,
    proximity_rejection,
    resolve_scenario,
    run,
    tangent_for_detection,
    turntable,
    yaw_sweep,
)

__all__ = [
    "AvoidanceParams",
    "RunLog",
    "Scenario",
    "ScenarioParseError",
    "ScenarioValidationError",
    "builtin_names",
    "closest_point_on_segment",
    "combine_output",
    "ebrake_check",
    "ebrake_horizon_length",
    "estimate_line_direction",
    "load_scenario",
    "proximity_rejection",
    "resolve_scenario",
    "run",
    "tangent_for_detection",
    "turntable",
    "yaw_sweep",
]
