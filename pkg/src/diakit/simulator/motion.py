"""Agent motion, proximity detection, and the timed stimulus waveforms."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

Point = tuple[float, float]

DEFAULT_DETECTION_RANGE = 5.0


def step_agent(position: Point, waypoints: list[Point], speed: float) -> Point:
    """Advance one tick toward the first waypoint; consumes it on arrival.

    Moves `speed` meters straight at the waypoint; when the remaining distance
    is within one step, lands exactly on the waypoint (no overshoot, and the
    leftover speed budget is not spent) and pops it from `waypoints`.
    """
    if not waypoints:
        return position
    x, y = position
    tx, ty = waypoints[0]
    dist = math.hypot(tx - x, ty - y)
    if dist <= speed:
        waypoints.pop(0)
        return (tx, ty)
    return (x + speed * (tx - x) / dist, y + speed * (ty - y) / dist)


def sinusoid_value(t: int, offset: float, amplitude: float, period_ticks: int, phase: float) -> float:
    if period_ticks <= 0:
        raise ValueError("period_ticks must be > 0")
    return offset + amplitude * math.sin(2.0 * math.pi * t / period_ticks + phase)


@dataclass(frozen=True)
class Sensor:
    id: str
    position: Point
    detection_range: float = DEFAULT_DETECTION_RANGE


@dataclass
class ProximityTracker:
    """Enter/leave detection with hysteresis on strict inequalities.

    An agent is tracked by at most one sensor at a time: the first sensor in
    ascending id order whose range it enters.  Enter fires when an untracked
    agent's distance drops strictly below the range; leave fires when a
    tracked agent's distance to *its* sensor strictly exceeds the range.
    Distances exactly at the range produce no event, so per (sensor, agent)
    the events strictly alternate, starting with enter.
    """

    tracked: dict[str, str] = field(default_factory=dict)  # agent id -> sensor id

    def step(self, agent_positions: dict[str, Point], sensors: list[Sensor]) -> list[tuple[str, str, str]]:
        events: list[tuple[str, str, str]] = []
        by_id = {s.id: s for s in sensors}
        for agent_id in sorted(agent_positions):
            pos = agent_positions[agent_id]
            sensor_id = self.tracked.get(agent_id)
            if sensor_id is None:
                for sensor in sorted(sensors, key=lambda s: s.id):
                    if math.dist(pos, sensor.position) < sensor.detection_range:
                        self.tracked[agent_id] = sensor.id
                        events.append((sensor.id, "enter", agent_id))
                        break
            else:
                sensor = by_id.get(sensor_id)
                if sensor is None:
                    # Sensor disappeared (unplugged): forget silently.
                    del self.tracked[agent_id]
                elif math.dist(pos, sensor.position) > sensor.detection_range:
                    del self.tracked[agent_id]
                    events.append((sensor.id, "leave", agent_id))
        # Agents that vanished from the population drop out of tracking.
        for agent_id in list(self.tracked):
            if agent_id not in agent_positions:
                del self.tracked[agent_id]
        return events


def proximity_events(
    previous_positions: dict[str, Point],
    current_positions: dict[str, Point],
    sensors: list[Sensor],
) -> list[tuple[str, str, str]]:
    """Events produced by one move: tracking state is seeded from the previous
    positions, then the current positions are evaluated."""
    tracker = ProximityTracker()
    tracker.step(previous_positions, sensors)
    return tracker.step(current_positions, sensors)
