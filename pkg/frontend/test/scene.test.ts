import { describe, expect, it } from "vitest";

import { parseServerMessage, MalformedMessage, type SnapshotMessage } from "../src/protocol.js";
import { buildScene } from "../src/scene.js";

function snapshot(overrides: Partial<SnapshotMessage> = {}): SnapshotMessage {
  return {
    type: "snapshot",
    tick: 0,
    paused: true,
    finished: false,
    environment: { width: 30, height: 20, areas: [{ name: "Hall", x: 0, y: 0, w: 30, h: 20 }] },
    entities: [
      {
        id: "s1",
        deviceClass: "Screen",
        position: [18, 10],
        attributes: { brightness: 70 },
        online: true,
      },
    ],
    agents: [{ id: "alice", position: [15, 0], properties: { badgeId: "0A12" }, waypoints: [] }],
    events: [],
    ...overrides,
  };
}

describe("buildScene", () => {
  it("renders one node per area, entity, and agent", () => {
    const scene = buildScene(snapshot(), 900, 600);
    expect(scene.nodes).toHaveLength(3);
    expect(scene.nodes.map((n) => n.kind)).toEqual(["area", "entity", "agent"]);
  });

  it("scales meters to canvas pixels uniformly", () => {
    const scene = buildScene(snapshot(), 900, 600);
    expect(scene.scale).toBe(30); // min(900/30, 600/20)
    const entity = scene.nodes.find((n) => n.kind === "entity")!;
    expect(entity.x).toBe(18 * 30);
    expect(entity.y).toBe(10 * 30);
  });

  it("anchors event popups above the producing entity", () => {
    const snap = snapshot({
      events: [
        {
          seq: 7,
          cause: null,
          tick: 3,
          kind: "stimulus",
          producer: "s1",
          name: "badgeDetected",
          value: "0A12",
          indices: {},
        },
      ],
    });
    const scene = buildScene(snap, 900, 600);
    const popup = scene.nodes.find((n) => n.kind === "popup")!;
    const entity = scene.nodes.find((n) => n.kind === "entity")!;
    expect(popup.x).toBe(entity.x);
    expect(popup.y).toBeLessThan(entity.y);
  });

  it("skips popups for events produced by unplaced components", () => {
    const snap = snapshot({
      events: [
        {
          seq: 8,
          cause: 7,
          tick: 3,
          kind: "contextPublish",
          producer: "Proximity",
          name: "Proximity",
          value: [],
          indices: {},
        },
      ],
    });
    expect(buildScene(snap, 900, 600).nodes.filter((n) => n.kind === "popup")).toHaveLength(0);
  });

  it("dims offline entities", () => {
    const snap = snapshot();
    snap.entities[0]!.online = false;
    const scene = buildScene(snap, 900, 600);
    const entity = scene.nodes.find((n) => n.kind === "entity")!;
    expect(entity.kind === "entity" && entity.dimmed).toBe(true);
  });

  it("is idempotent: the same snapshot builds an identical scene", () => {
    const snap = snapshot();
    expect(buildScene(snap, 900, 600)).toEqual(buildScene(snap, 900, 600));
  });

  it("draws walls as scaled segments", () => {
    const snap = snapshot();
    snap.environment.walls = [{ x1: 0, y1: 10, x2: 30, y2: 10 }];
    const wall = buildScene(snap, 900, 600).nodes.find((n) => n.kind === "wall")!;
    expect(wall.kind === "wall" && [wall.x, wall.y, wall.x2, wall.y2]).toEqual([0, 300, 900, 300]);
  });
});

describe("parseServerMessage", () => {
  it("accepts well-formed snapshots", () => {
    const msg = parseServerMessage(JSON.stringify(snapshot()));
    expect(msg.type).toBe("snapshot");
  });

  it("rejects malformed frames so the last good scene survives", () => {
    expect(() => parseServerMessage("not json")).toThrow(MalformedMessage);
    expect(() => parseServerMessage("{}")).toThrow(MalformedMessage);
    expect(() =>
      parseServerMessage(JSON.stringify({ type: "snapshot", tick: "NaN" })),
    ).toThrow(MalformedMessage);
    const bad = snapshot() as unknown as Record<string, unknown>;
    (bad.entities as unknown[]).push({ id: 42, position: "nowhere" });
    expect(() => parseServerMessage(JSON.stringify(bad))).toThrow(MalformedMessage);
  });
});
