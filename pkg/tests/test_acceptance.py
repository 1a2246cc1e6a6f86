"""Acceptance suite: one test per release criterion, at its stated tolerance.

Each test prints one `ACCEPTANCE <name>: PASS` line (visible with `pytest -s`
or in the failure output); a test failure marks the criterion FAIL.
"""

import hashlib
import json
import random
import time

import mpmath
import pytest

from diakit import newscast
from diakit.checker import check
from diakit.codegen import generate_manifest, manifest_json
from diakit.parser import parse
from diakit.runtime import trace_lines
from diakit.simulator import (
    InjectStimulus,
    Simulation,
    load_scenario,
    load_scenario_file,
    sinusoid_value,
)
from diakit.simulator.motion import ProximityTracker, Sensor

from test_checker import NEGATIVE_SPECS
from test_discovery_oracle import run_trials
from support import check_codes


def report(name: str, started: float, budget: float | None = None):
    elapsed = time.monotonic() - started
    if budget is not None:
        assert elapsed < budget, f"{name}: {elapsed:.2f}s exceeds {budget}s budget"
    print(f"ACCEPTANCE {name}: PASS ({elapsed:.2f}s)")


def test_newscast_fixture_check():
    t0 = time.monotonic()
    model, diags = parse(newscast.fixture_sources())
    assert [d for d in diags if d.severity == "error"] == []
    spec = check(model)

    assert len(spec.contexts) == 6
    assert len(spec.controllers) == 2
    actions_used = {u.action for c in spec.controllers.values() for u in c.action_uses}
    assert len(actions_used) == 2
    concrete = spec.concrete_devices()
    assert len(concrete) == 7
    abstract = set(spec.devices) - set(concrete)
    assert abstract == {"SwitchableDevice", "LocatedDevice"}
    report("newscast-fixture-check", t0, budget=1.0)


def test_negative_check_suite():
    t0 = time.monotonic()
    assert len(NEGATIVE_SPECS) >= 10
    assert sorted(NEGATIVE_SPECS) == [f"E{i:03d}" for i in range(1, 14)]
    for code, (text, expected) in NEGATIVE_SPECS.items():
        got = check_codes(text)
        assert got == expected, (code, got)
    report("negative-check-suite", t0, budget=1.0)


def test_manifest_determinism():
    t0 = time.monotonic()
    digests = set()
    for _ in range(5):
        model, _ = parse(newscast.fixture_sources())
        data = manifest_json(generate_manifest(check(model))).encode("utf-8")
        digests.add(hashlib.sha256(data).hexdigest())
    assert len(digests) == 1
    report("manifest-determinism", t0, budget=1.0)


def test_discovery_oracle_1000_trials():
    t0 = time.monotonic()
    run_trials(1000, seed=20260811, max_entities=100)
    report("discovery-oracle", t0, budget=10.0)


def _chain_root_first(events, record):
    by_seq = {e.seq: e for e in events}
    chain = [record]
    while chain[-1].cause is not None:
        chain.append(by_seq[chain[-1].cause])
    chain.reverse()
    return chain


def test_end_to_end_walkthrough():
    t0 = time.monotonic()
    spec = newscast.load_spec()
    scenario = load_scenario_file(newscast.scenario_path(), spec)
    traces = []
    for _ in range(2):
        sim = Simulation(spec, newscast.builtin_logic(), scenario)
        events = sim.run()
        traces.append(trace_lines(events))
    assert traces[0] == traces[1]  # byte-identical reruns

    displays = [e for e in events if e.kind == "command" and e.name == "Display.display"]
    assert displays, "no display command reached the screen"
    hall_screen = [e for e in displays if e.producer == "s1"]
    assert hall_screen
    chain = _chain_root_first(events, hall_screen[0])
    waypoints = [
        ("stimulus", "br1", "badgeDetected"),
        ("contextPublish", "Proximity", None),
        ("contextPublish", ("LanguageSelector", "DepartmentSelector"), None),
        ("contextPublish", "NewsSelector", None),
        ("command", "s1", "Display.display"),
    ]
    idx = 0
    for e in chain:
        if idx == len(waypoints):
            break
        kind, producer, name = waypoints[idx]
        producers = producer if isinstance(producer, tuple) else (producer,)
        if e.kind == kind and e.producer in producers and (name is None or e.name == name):
            idx += 1
    assert idx == len(waypoints), f"causal order incomplete: matched {idx}/{len(waypoints)}"

    for cmd in (e for e in events if e.kind == "command"):
        root = _chain_root_first(events, cmd)[0]
        assert root.kind == "stimulus"
    report("end-to-end-walkthrough", t0, budget=5.0)


def test_proximity_boundary():
    t0 = time.monotonic()
    sensors = [Sensor("br1", (0.0, 0.0), 5.0)]
    tracker = ProximityTracker()
    assert tracker.step({"a": (5.0, 0.0)}, sensors) == []  # exactly at range: no event
    assert tracker.step({"a": (4.999, 0.0)}, sensors) == [("br1", "enter", "a")]
    assert tracker.step({"a": (5.001, 0.0)}, sensors) == [("br1", "leave", "a")]
    report("proximity-boundary", t0)


def test_sinusoid_against_independent_evaluation():
    t0 = time.monotonic()
    rng = random.Random(99)
    mpmath.mp.dps = 50
    for _ in range(100):
        t = rng.randint(0, 10_000)
        offset = rng.uniform(-20, 20)
        amplitude = rng.uniform(0, 10)
        period = rng.randint(1, 500)
        phase = rng.uniform(-7, 7)
        want = float(
            mpmath.mpf(offset)
            + mpmath.mpf(amplitude)
            * mpmath.sin(2 * mpmath.pi * mpmath.mpf(t) / period + mpmath.mpf(phase))
        )
        assert abs(sinusoid_value(t, offset, amplitude, period, phase) - want) < 1e-9
    report("sinusoid", t0)


def test_steering_equivalence():
    t0 = time.monotonic()
    spec = newscast.load_spec()
    data = json.loads(newscast.scenario_path().read_text(encoding="utf-8"))
    data["agents"][0]["position"] = [1.0, 19.0]
    data["agents"][0]["waypoints"] = []
    data["durationTicks"] = 12

    steered = Simulation(spec, newscast.builtin_logic(), load_scenario(data, spec))
    for _ in range(5):
        steered.tick_once()
    steered.steer(InjectStimulus("br1", "badgeDetected", "0A12"))
    while not steered.finished:
        steered.tick_once()

    scripted_data = json.loads(json.dumps(data))
    scripted_data["stimuli"].append(
        {
            "kind": "sequence",
            "target": {"deviceId": "br1", "source": "badgeDetected"},
            "refreshPeriod": 1,
            "startTick": 5,
            "values": ["0A12"],
        }
    )
    scripted = Simulation(spec, newscast.builtin_logic(), load_scenario(scripted_data, spec))
    scripted.run()

    def strip(trace):
        out = []
        for line in trace.splitlines():
            obj = json.loads(line)
            obj.pop("steered", None)
            out.append(json.dumps(obj, sort_keys=True, separators=(",", ":")))
        return out

    left = trace_lines(steered.engine.events)
    right = trace_lines(scripted.engine.events)
    assert strip(left) == strip(right)
    report("steering-equivalence", t0)
