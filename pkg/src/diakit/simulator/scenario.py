"""Scenario files: the simulation input (environment, entities, agents, stimuli).

Loading validates everything against the checked spec up front so a bad
scenario fails before the first tick, with exit code 2 at the CLI.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from ..model import CheckedSpec, SourceDecl
from ..values import ValueTypeError, decode_value
from .motion import DEFAULT_DETECTION_RANGE, Point

TIMED_KINDS = ("constant", "sequence", "sinusoid")
BEHAVIOR_NAMES = ("forward", "table")


class ScenarioError(ValueError):
    """The scenario contradicts the spec or its own environment."""


@dataclass(frozen=True)
class AreaRect:
    name: str
    x: float
    y: float
    w: float
    h: float


@dataclass(frozen=True)
class Wall:
    """A structural line segment; rendering data only, motion does not collide."""

    x1: float
    y1: float
    x2: float
    y2: float


@dataclass(frozen=True)
class Environment:
    width: float
    height: float
    areas: tuple[AreaRect, ...] = ()
    walls: tuple[Wall, ...] = ()

    def contains(self, p: Point) -> bool:
        return 0.0 <= p[0] <= self.width and 0.0 <= p[1] <= self.height


@dataclass(frozen=True)
class SimEntityConfig:
    device_class: str
    id: str
    attributes: dict[str, Any]  # typed values, decoded at load
    position: Point
    behavior_name: str = "forward"
    behavior_params: dict[str, Any] = field(default_factory=dict)

    @property
    def detection_range(self) -> float:
        return float(self.behavior_params.get("detectionRange", DEFAULT_DETECTION_RANGE))


@dataclass(frozen=True)
class AgentConfig:
    id: str
    properties: dict[str, str]
    position: Point
    speed: float
    waypoints: tuple[Point, ...] = ()


@dataclass(frozen=True)
class StimulusSpec:
    kind: str
    refresh_period: int = 1
    start_tick: int = 0
    # timed kinds
    device_id: str | None = None
    source: str | None = None
    value: Any = None  # constant
    values: tuple[Any, ...] = ()  # sequence
    offset: float = 0.0  # sinusoid
    amplitude: float = 0.0
    period_ticks: int = 1
    phase_radians: float = 0.0
    # agentProximity
    device_class: str | None = None
    agent_property: str | None = None
    enter_source: str | None = None
    leave_source: str | None = None


@dataclass(frozen=True)
class Scenario:
    environment: Environment
    entities: tuple[SimEntityConfig, ...] = ()
    agents: tuple[AgentConfig, ...] = ()
    stimuli: tuple[StimulusSpec, ...] = ()
    duration_ticks: int = 0
    seed: int = 0
    tick_seconds: float = 1.0  # informational


def _point(raw: Any, what: str) -> Point:
    if (
        not isinstance(raw, (list, tuple))
        or len(raw) != 2
        or not all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in raw)
    ):
        raise ScenarioError(f"{what}: expected [x, y] coordinates, got {raw!r}")
    return (float(raw[0]), float(raw[1]))


def _source_of(spec: CheckedSpec, device_class: str, name: str, what: str) -> SourceDecl:
    for s in spec.effective_members(device_class).sources:
        if s.name == name:
            return s
    raise ScenarioError(f"{what}: device class {device_class!r} has no source {name!r}")


def _decode_stimulus_value(spec: CheckedSpec, src: SourceDecl, raw: Any, what: str) -> Any:
    if src.indices:
        raise ScenarioError(f"{what}: timed stimuli cannot target indexed source {src.name!r}")
    try:
        return decode_value(raw, src.value_type, spec, what)
    except ValueTypeError as e:
        raise ScenarioError(str(e)) from None


def load_scenario(data: dict, spec: CheckedSpec) -> Scenario:
    if not isinstance(data, dict):
        raise ScenarioError("scenario must be a JSON object")

    env_raw = data.get("environment")
    if not isinstance(env_raw, dict):
        raise ScenarioError("missing 'environment'")
    width = float(env_raw.get("width", 0))
    height = float(env_raw.get("height", 0))
    if width <= 0 or height <= 0:
        raise ScenarioError("environment width/height must be positive")
    areas: list[AreaRect] = []
    names: set[str] = set()
    for a in env_raw.get("areas", []):
        rect = AreaRect(a["name"], float(a["x"]), float(a["y"]), float(a["w"]), float(a["h"]))
        if rect.name in names:
            raise ScenarioError(f"duplicate area name {rect.name!r}")
        names.add(rect.name)
        if rect.x < 0 or rect.y < 0 or rect.x + rect.w > width or rect.y + rect.h > height:
            raise ScenarioError(f"area {rect.name!r} exceeds the environment bounds")
        areas.append(rect)
    walls: list[Wall] = []
    for w in env_raw.get("walls", []):
        wall = Wall(float(w["x1"]), float(w["y1"]), float(w["x2"]), float(w["y2"]))
        for p in ((wall.x1, wall.y1), (wall.x2, wall.y2)):
            if not (0.0 <= p[0] <= width and 0.0 <= p[1] <= height):
                raise ScenarioError(f"wall endpoint {p} is out of bounds")
        walls.append(wall)
    env = Environment(width, height, tuple(areas), tuple(walls))

    abstract = {d.parent for d in spec.devices.values() if d.parent}
    ids: set[str] = set()
    entities: list[SimEntityConfig] = []
    for e in data.get("entities", []):
        cls = e.get("deviceClass")
        if cls not in spec.devices:
            raise ScenarioError(f"unknown device class {cls!r}")
        if cls in abstract:
            raise ScenarioError(f"device class {cls!r} is abstract and cannot be instantiated")
        ent_id = e.get("id")
        if not ent_id or ent_id in ids:
            raise ScenarioError(f"missing or duplicate entity id {ent_id!r}")
        ids.add(ent_id)
        pos = _point(e.get("position"), f"entity {ent_id}")
        if not env.contains(pos):
            raise ScenarioError(f"entity {ent_id!r} is out of bounds at {pos}")
        declared = spec.effective_members(cls).attributes
        raw_attrs = e.get("attributes", {})
        attrs: dict[str, Any] = {}
        for a in declared:
            if a.name not in raw_attrs:
                raise ScenarioError(f"entity {ent_id!r} is missing attribute {a.name!r}")
            try:
                attrs[a.name] = decode_value(raw_attrs[a.name], a.type, spec, f"{ent_id}.{a.name}")
            except ValueTypeError as err:
                raise ScenarioError(str(err)) from None
        unknown = set(raw_attrs) - {a.name for a in declared}
        if unknown:
            raise ScenarioError(f"entity {ent_id!r} has unknown attribute(s) {sorted(unknown)}")
        behavior = e.get("behavior", {}) or {}
        b_name = behavior.get("name", "forward")
        if b_name not in BEHAVIOR_NAMES:
            raise ScenarioError(f"entity {ent_id!r}: unknown behavior {b_name!r}")
        b_params = dict(behavior.get("params", {}) or {})
        if b_name == "table":
            tables = b_params.get("tables", {})
            for src_name, table in tables.items():
                src = _source_of(spec, cls, src_name, f"entity {ent_id!r} table")
                if len(src.indices) != 1 or str(src.indices[0].type) != "String":
                    raise ScenarioError(
                        f"entity {ent_id!r}: table source {src_name!r} must have exactly one String index"
                    )
                for key, raw_val in table.items():
                    try:
                        decode_value(raw_val, src.value_type, spec, f"{ent_id}.{src_name}[{key}]")
                    except ValueTypeError as err:
                        raise ScenarioError(str(err)) from None
        entities.append(SimEntityConfig(cls, ent_id, attrs, pos, b_name, b_params))

    agents: list[AgentConfig] = []
    for a in data.get("agents", []):
        agent_id = a.get("id")
        if not agent_id or agent_id in ids:
            raise ScenarioError(f"missing or duplicate agent id {agent_id!r}")
        ids.add(agent_id)
        pos = _point(a.get("position"), f"agent {agent_id}")
        if not env.contains(pos):
            raise ScenarioError(f"agent {agent_id!r} is out of bounds at {pos}")
        speed = float(a.get("speed", 1.0))
        if speed <= 0:
            raise ScenarioError(f"agent {agent_id!r}: speed must be > 0")
        waypoints = tuple(_point(p, f"agent {agent_id} waypoint") for p in a.get("waypoints", []))
        for wp in waypoints:
            if not env.contains(wp):
                raise ScenarioError(f"agent {agent_id!r} waypoint {wp} is out of bounds")
        props = {str(k): str(v) for k, v in (a.get("properties", {}) or {}).items()}
        agents.append(AgentConfig(agent_id, props, pos, speed, waypoints))

    entity_by_id = {e.id: e for e in entities}
    stimuli: list[StimulusSpec] = []
    for s in data.get("stimuli", []):
        kind = s.get("kind")
        refresh = int(s.get("refreshPeriod", 1))
        if refresh < 1:
            raise ScenarioError("refreshPeriod must be >= 1")
        start = int(s.get("startTick", 0))
        if start < 0:
            raise ScenarioError("startTick must be >= 0")
        target = s.get("target", {}) or {}
        if kind in TIMED_KINDS:
            dev_id = target.get("deviceId")
            src_name = target.get("source")
            if dev_id not in entity_by_id:
                raise ScenarioError(f"stimulus targets unknown entity {dev_id!r}")
            cls = entity_by_id[dev_id].device_class
            src = _source_of(spec, cls, src_name, "stimulus")
            if kind == "constant":
                value = _decode_stimulus_value(spec, src, s.get("value"), f"stimulus on {dev_id}")
                stimuli.append(StimulusSpec("constant", refresh, start, dev_id, src_name, value=value))
            elif kind == "sequence":
                vals = tuple(
                    _decode_stimulus_value(spec, src, v, f"stimulus on {dev_id}")
                    for v in s.get("values", [])
                )
                if not vals:
                    raise ScenarioError("sequence stimulus needs at least one value")
                stimuli.append(StimulusSpec("sequence", refresh, start, dev_id, src_name, values=vals))
            else:
                if str(src.value_type) != "Float":
                    raise ScenarioError(
                        f"sinusoid stimulus needs a Float source, {src.name!r} is {src.value_type}"
                    )
                period = int(s.get("periodTicks", 0))
                if period < 1:
                    raise ScenarioError("sinusoid periodTicks must be >= 1")
                stimuli.append(
                    StimulusSpec(
                        "sinusoid", refresh, start, dev_id, src_name,
                        offset=float(s.get("offset", 0.0)),
                        amplitude=float(s.get("amplitude", 0.0)),
                        period_ticks=period,
                        phase_radians=float(s.get("phaseRadians", 0.0)),
                    )
                )
        elif kind == "agentProximity":
            cls = target.get("deviceClass")
            prop = target.get("agentProperty")
            if cls not in spec.devices:
                raise ScenarioError(f"agentProximity targets unknown device class {cls!r}")
            if not prop:
                raise ScenarioError("agentProximity needs target.agentProperty")
            enter = s.get("enterSource")
            leave = s.get("leaveSource")
            for name in (enter, leave):
                src = _source_of(spec, cls, name, "agentProximity stimulus")
                if str(src.value_type) != "String" or src.indices:
                    raise ScenarioError(
                        f"agentProximity source {name!r} must be an un-indexed String source"
                    )
            stimuli.append(
                StimulusSpec(
                    "agentProximity", refresh, start,
                    device_class=cls, agent_property=prop,
                    enter_source=enter, leave_source=leave,
                )
            )
        else:
            raise ScenarioError(f"unknown stimulus kind {kind!r}")

    duration = int(data.get("durationTicks", 0))
    if duration < 0:
        raise ScenarioError("durationTicks must be >= 0")
    return Scenario(
        environment=env,
        entities=tuple(entities),
        agents=tuple(agents),
        stimuli=tuple(stimuli),
        duration_ticks=duration,
        seed=int(data.get("seed", 0)),
        tick_seconds=float(data.get("tickSeconds", 1.0)),
    )


def load_scenario_file(path: str | Path, spec: CheckedSpec) -> Scenario:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ScenarioError(f"invalid scenario JSON: {e}") from None
    return load_scenario(data, spec)
