"""The deterministic tick loop driving the runtime, with live steering.

Per tick, in fixed order: (1) apply the steering inbox, (2) move agents,
(3) evaluate agent-proximity stimuli, (4) fire timed stimuli due this tick
in declaration order followed by steered injections, (5) drain runtime
deliveries to completion.  Identical inputs produce byte-identical traces.

One thread owns the loop.  `steer` and `snapshot` are safe to call from
other threads: steering goes through a locked inbox applied at tick
boundaries, snapshots are immutable objects swapped atomically.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field
from typing import Any, Callable

from ..model import CheckedSpec
from ..runtime import Engine, EventRecord, RuntimeFault
from ..values import ValueTypeError, decode_value, encode_value, validate_value
from .motion import ProximityTracker, Sensor, sinusoid_value, step_agent
from .scenario import Scenario, ScenarioError, SimEntityConfig, StimulusSpec


# -- steering commands ---------------------------------------------------------

@dataclass(frozen=True)
class InjectStimulus:
    device_id: str
    source: str
    value: Any  # plain JSON form; decoded and validated at steer() time


@dataclass(frozen=True)
class SetWaypoints:
    agent_id: str
    points: tuple[tuple[float, float], ...]


@dataclass(frozen=True)
class Pause:
    pass


@dataclass(frozen=True)
class Resume:
    pass


@dataclass(frozen=True)
class StepOne:
    pass


SteerCommand = InjectStimulus | SetWaypoints | Pause | Resume | StepOne


@dataclass(frozen=True)
class Snapshot:
    """Immutable world state published at each tick boundary (JSON-ready)."""

    tick: int
    paused: bool
    finished: bool
    width: float
    height: float
    areas: tuple[dict, ...]
    walls: tuple[dict, ...]
    entities: tuple[dict, ...]
    agents: tuple[dict, ...]
    events: tuple[dict, ...]  # events of the tick that just completed

    def to_json_obj(self) -> dict:
        return {
            "tick": self.tick,
            "paused": self.paused,
            "finished": self.finished,
            "environment": {
                "width": self.width,
                "height": self.height,
                "areas": list(self.areas),
                "walls": list(self.walls),
            },
            "entities": list(self.entities),
            "agents": list(self.agents),
            "events": list(self.events),
        }


@dataclass
class _AgentState:
    id: str
    properties: dict[str, str]
    position: tuple[float, float]
    speed: float
    waypoints: list[tuple[float, float]] = field(default_factory=list)


class _ForwardBehavior:
    """Default simulated-entity behavior: stimuli are forwarded to sources by
    the loop; actions are accepted (the command record is the observable)."""

    def __init__(self, config: SimEntityConfig):
        self.config = config

    def act(self, action: str, method: str, args: list[Any]) -> None:
        pass


class _TableBehavior(_ForwardBehavior):
    """Forwarding behavior plus pull tables keyed by a single String index."""

    def __init__(self, config: SimEntityConfig, tables: dict[str, dict[str, Any]]):
        super().__init__(config)
        self.tables = tables

    def pull(self, source: str, indices: dict[str, Any]) -> Any:
        table = self.tables.get(source)
        if table is None:
            raise RuntimeFault(
                "R-NO-PULL-HANDLER", f"{self.config.id!r} serves no pulls for {source!r}"
            )
        (key,) = indices.values()
        if key not in table:
            raise RuntimeFault(
                "R-NO-TABLE-ENTRY", f"{self.config.id!r} has no {source!r} entry for {key!r}"
            )
        return table[key]


class Simulation:
    """One scenario executing against one checked spec and component logic set."""

    def __init__(self, spec: CheckedSpec, logic: dict[str, Any], scenario: Scenario):
        self.spec = spec
        self.scenario = scenario
        self.engine = Engine(spec)
        self.tick = 0
        self.paused = False
        self.finished = scenario.duration_ticks == 0

        self._lock = threading.Lock()
        self._wakeup = threading.Condition(self._lock)
        self._inbox: list[SteerCommand] = []
        self._step_requests = 0
        self._stop = False
        self._listeners: list[Callable[[Snapshot], None]] = []

        self.agents = {
            a.id: _AgentState(a.id, dict(a.properties), a.position, a.speed, list(a.waypoints))
            for a in scenario.agents
        }
        self._trackers: dict[int, ProximityTracker] = {
            i: ProximityTracker()
            for i, s in enumerate(scenario.stimuli)
            if s.kind == "agentProximity"
        }
        self._sequence_pos: dict[int, int] = {
            i: 0 for i, s in enumerate(scenario.stimuli) if s.kind == "sequence"
        }
        self._tick_injections: list[InjectStimulus] = []

        self._setup(logic)
        self._snapshot = self._build_snapshot(())

    # -- setup -------------------------------------------------------------------

    def _setup(self, logic: dict[str, Any]) -> None:
        for cfg in self.scenario.entities:
            if cfg.behavior_name == "table":
                tables_raw = cfg.behavior_params.get("tables", {})
                tables: dict[str, dict[str, Any]] = {}
                for src_name, table in tables_raw.items():
                    decl = next(
                        s
                        for s in self.spec.effective_members(cfg.device_class).sources
                        if s.name == src_name
                    )
                    tables[src_name] = {
                        key: decode_value(raw, decl.value_type, self.spec, f"{cfg.id}.{src_name}")
                        for key, raw in table.items()
                    }
                behavior: _ForwardBehavior = _TableBehavior(cfg, tables)
            else:
                behavior = _ForwardBehavior(cfg)
            self.engine.register_entity(cfg.device_class, cfg.id, cfg.attributes, behavior)
        missing = [c for c in self.spec.components() if c not in logic]
        if missing:
            raise ScenarioError(f"no component logic provided for: {', '.join(missing)}")
        for component in self.spec.components():
            self.engine.register_component_logic(component, logic[component])
        self.engine.init_components()

    # -- public control ------------------------------------------------------------

    def steer(self, command: SteerCommand) -> None:
        """Validate and queue a steering command; applied at the next tick boundary."""
        if isinstance(command, InjectStimulus):
            inst = self.engine.entity(command.device_id)  # raises on unknown id
            decl = None
            for s in self.spec.effective_members(inst.device_class).sources:
                if s.name == command.source:
                    decl = s
                    break
            if decl is None:
                raise RuntimeFault(
                    "R-UNKNOWN-SOURCE",
                    f"{inst.device_class!r} has no source {command.source!r}",
                )
            if decl.indices:
                raise RuntimeFault(
                    "R-ARITY-MISMATCH", f"cannot inject into indexed source {decl.name!r}"
                )
            try:
                value = decode_value(command.value, decl.value_type, self.spec, "injected value")
            except ValueTypeError:
                try:
                    validate_value(command.value, decl.value_type, self.spec, "injected value")
                    value = command.value
                except ValueTypeError as e:
                    raise RuntimeFault("R-TYPE-MISMATCH", str(e)) from None
            command = InjectStimulus(command.device_id, command.source, value)
        elif isinstance(command, SetWaypoints):
            if command.agent_id not in self.agents:
                raise RuntimeFault("R-UNKNOWN-ENTITY", f"unknown agent {command.agent_id!r}")
            for p in command.points:
                if not self.scenario.environment.contains(tuple(p)):
                    raise RuntimeFault("R-OUT-OF-BOUNDS", f"waypoint {p} is out of bounds")
        with self._wakeup:
            if isinstance(command, Pause):
                self.paused = True
            elif isinstance(command, Resume):
                self.paused = False
            elif isinstance(command, StepOne):
                self._step_requests += 1
            else:
                self._inbox.append(command)
            self._wakeup.notify_all()

    def stop(self) -> None:
        with self._wakeup:
            self._stop = True
            self._wakeup.notify_all()

    def add_listener(self, fn: Callable[[Snapshot], None]) -> None:
        self._listeners.append(fn)

    def snapshot(self) -> Snapshot:
        return self._snapshot

    # -- tick machinery ----------------------------------------------------------------

    def _fire_stimulus(
        self, device_id: str, source: str, value: Any, steered: bool = False
    ) -> None:
        rec = self.engine.record_stimulus(device_id, source, value, steered)
        # The library behavior of simulated entities forwards stimuli to sources.
        if device_id in self.engine.entities:
            self.engine.publish_source(device_id, source, value, cause=rec.seq)

    def _due(self, stim: StimulusSpec) -> bool:
        if self.tick < stim.start_tick:
            return False
        return (self.tick - stim.start_tick) % stim.refresh_period == 0

    def tick_once(self) -> None:
        if self.finished:
            return
        self.engine.current_tick = self.tick

        # Phase 1: steering inbox.
        with self._lock:
            commands, self._inbox = self._inbox, []
        for cmd in commands:
            if isinstance(cmd, SetWaypoints):
                self.agents[cmd.agent_id].waypoints = [tuple(p) for p in cmd.points]
            elif isinstance(cmd, InjectStimulus):
                self._tick_injections.append(cmd)

        # Phase 2: move agents.
        for agent in self.agents.values():
            agent.position = step_agent(agent.position, agent.waypoints, agent.speed)

        # Phase 3: agent-proximity stimuli.
        for i, stim in enumerate(self.scenario.stimuli):
            if stim.kind != "agentProximity" or not self._due(stim):
                continue
            sensors = [
                Sensor(cfg.id, cfg.position, cfg.detection_range)
                for cfg in self.scenario.entities
                if self.spec.is_subclass(cfg.device_class, stim.device_class)
                and cfg.id in self.engine.entities
            ]
            positions = {
                a.id: a.position
                for a in self.agents.values()
                if stim.agent_property in a.properties
            }
            for sensor_id, edge, agent_id in self._trackers[i].step(positions, sensors):
                value = self.agents[agent_id].properties[stim.agent_property]
                source = stim.enter_source if edge == "enter" else stim.leave_source
                self._fire_stimulus(sensor_id, source, value)

        # Phase 4: timed stimuli in declaration order, then steered injections.
        for i, stim in enumerate(self.scenario.stimuli):
            if stim.kind not in ("constant", "sequence", "sinusoid") or not self._due(stim):
                continue
            if stim.kind == "constant":
                self._fire_stimulus(stim.device_id, stim.source, stim.value)
            elif stim.kind == "sequence":
                pos = self._sequence_pos[i]
                if pos < len(stim.values):
                    self._sequence_pos[i] = pos + 1
                    self._fire_stimulus(stim.device_id, stim.source, stim.values[pos])
            else:
                v = sinusoid_value(
                    self.tick, stim.offset, stim.amplitude, stim.period_ticks, stim.phase_radians
                )
                self._fire_stimulus(stim.device_id, stim.source, v)
        injections, self._tick_injections = self._tick_injections, []
        for inj in injections:
            self._fire_stimulus(inj.device_id, inj.source, inj.value, steered=True)

        # Phase 5: drain deliveries to completion.
        self.engine.drain()

        events = tuple(e.to_json_obj() for e in self.engine.events if e.tick == self.tick)
        self.tick += 1
        if self.tick >= self.scenario.duration_ticks:
            self.finished = True
        self._snapshot = self._build_snapshot(events)
        for fn in self._listeners:
            fn(self._snapshot)

    def run(self) -> list[EventRecord]:
        """Run every remaining tick back to back (headless mode)."""
        while not self.finished:
            self.tick_once()
        return self.engine.events

    def run_interactive(self, pace_seconds: float = 0.1) -> list[EventRecord]:
        """Loop honoring pause/resume/step; used behind the UI gateway."""
        while not self.finished:
            with self._wakeup:
                while self.paused and self._step_requests == 0 and not self._stop:
                    self._wakeup.wait(timeout=0.5)
                if self._stop:
                    break
                stepping = False
                if self._step_requests > 0:
                    self._step_requests -= 1
                    stepping = True
            self.tick_once()
            if not stepping and pace_seconds > 0:
                time.sleep(pace_seconds)
        return self.engine.events

    # -- snapshots ------------------------------------------------------------------------

    def _build_snapshot(self, events: tuple[dict, ...]) -> Snapshot:
        env = self.scenario.environment
        entities = []
        for cfg in self.scenario.entities:
            live = self.engine.entities.get(cfg.id)
            entities.append(
                {
                    "id": cfg.id,
                    "deviceClass": cfg.device_class,
                    "position": list(cfg.position),
                    "attributes": {
                        k: encode_value(v)
                        for k, v in (live.attributes if live else cfg.attributes).items()
                    },
                    "online": bool(live and live.online),
                }
            )
        agents = [
            {
                "id": a.id,
                "position": list(a.position),
                "properties": dict(a.properties),
                "waypoints": [list(p) for p in a.waypoints],
            }
            for a in self.agents.values()
        ]
        areas = [
            {"name": r.name, "x": r.x, "y": r.y, "w": r.w, "h": r.h} for r in env.areas
        ]
        walls = [
            {"x1": w.x1, "y1": w.y1, "x2": w.x2, "y2": w.y2} for w in env.walls
        ]
        return Snapshot(
            tick=self.tick,
            paused=self.paused,
            finished=self.finished,
            width=env.width,
            height=env.height,
            areas=tuple(areas),
            walls=tuple(walls),
            entities=tuple(entities),
            agents=tuple(agents),
            events=events,
        )
