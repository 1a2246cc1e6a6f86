from .motion import ProximityTracker, proximity_events, sinusoid_value, step_agent
from .scenario import (
    AgentConfig,
    AreaRect,
    Environment,
    Scenario,
    ScenarioError,
    SimEntityConfig,
    StimulusSpec,
    load_scenario,
    load_scenario_file,
)
from .engine import (
    InjectStimulus,
    Pause,
    Resume,
    SetWaypoints,
    Simulation,
    Snapshot,
    StepOne,
)

__all__ = [
    "AgentConfig",
    "AreaRect",
    "Environment",
    "InjectStimulus",
    "Pause",
    "ProximityTracker",
    "Resume",
    "Scenario",
    "ScenarioError",
    "SetWaypoints",
    "SimEntityConfig",
    "Simulation",
    "Snapshot",
    "StepOne",
    "StimulusSpec",
    "load_scenario",
    "load_scenario_file",
    "proximity_events",
    "sinusoid_value",
    "step_agent",
]
