#!/usr/bin/env python3
"""Run the shipped Newscast walkthrough end to end and print the causal story.

Usage: python scripts/run_newscast.py [--ticks N]
"""

import argparse
import json

from diakit import newscast
from diakit.runtime import trace_lines
from diakit.simulator import Simulation, load_scenario


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ticks", type=int, default=None, help="override scenario duration")
    args = ap.parse_args()

    spec = newscast.load_spec()
    data = json.loads(newscast.scenario_path().read_text(encoding="utf-8"))
    if args.ticks is not None:
        data["durationTicks"] = args.ticks
    scenario = load_scenario(data, spec)

    sim = Simulation(spec, newscast.builtin_logic(), scenario)
    events = sim.run()

    print(f"ran {sim.tick} ticks, {len(events)} events\n")
    by_seq = {e.seq: e for e in events}
    for e in events:
        arrow = f" <- #{e.cause}" if e.cause is not None else ""
        print(f"#{e.seq:<3} tick {e.tick:<3} {e.kind:<15} {e.producer:<14} {e.name}{arrow}")

    commands = [e for e in events if e.kind == "command"]
    if commands:
        print("\ncausal chain of the first command:")
        chain = [commands[0]]
        while chain[-1].cause is not None:
            chain.append(by_seq[chain[-1].cause])
        for e in reversed(chain):
            print(f"  {e.kind}({e.producer}.{e.name})")

    print("\ntrace (JSON Lines):")
    print(trace_lines(events), end="")


if __name__ == "__main__":
    main()
