// Pure scene construction: a snapshot in meters becomes a list of drawable
// nodes in canvas pixels.  Building the same snapshot twice yields an
// identical scene (rendering is idempotent).

import type { EventView, SnapshotMessage } from "./protocol.js";

export type SceneNode =
  | { kind: "area"; id: string; x: number; y: number; w: number; h: number; label: string }
  | { kind: "wall"; id: string; x: number; y: number; x2: number; y2: number }
  | { kind: "entity"; id: string; x: number; y: number; label: string; dimmed: boolean }
  | { kind: "agent"; id: string; x: number; y: number; label: string }
  | { kind: "popup"; id: string; x: number; y: number; label: string };

export interface Scene {
  width: number;
  height: number;
  scale: number;
  nodes: SceneNode[];
}

export function popupLabel(event: EventView): string {
  return `${event.kind === "command" ? "!" : "~"} ${event.name}`;
}

export function buildScene(
  snap: SnapshotMessage,
  canvasWidth: number,
  canvasHeight: number,
): Scene {
  const { width, height } = snap.environment;
  const scale = Math.min(canvasWidth / width, canvasHeight / height);
  const sx = (m: number) => m * scale;
  const sy = (m: number) => m * scale;

  const nodes: SceneNode[] = [];
  for (const area of snap.environment.areas) {
    nodes.push({
      kind: "area",
      id: `area:${area.name}`,
      x: sx(area.x),
      y: sy(area.y),
      w: sx(area.w),
      h: sy(area.h),
      label: area.name,
    });
  }
  for (const [i, wall] of (snap.environment.walls ?? []).entries()) {
    nodes.push({
      kind: "wall",
      id: `wall:${i}`,
      x: sx(wall.x1),
      y: sy(wall.y1),
      x2: sx(wall.x2),
      y2: sy(wall.y2),
    });
  }
  const entityPos = new Map<string, [number, number]>();
  for (const e of snap.entities) {
    entityPos.set(e.id, e.position);
    nodes.push({
      kind: "entity",
      id: `entity:${e.id}`,
      x: sx(e.position[0]),
      y: sy(e.position[1]),
      label: `${e.id} (${e.deviceClass})`,
      dimmed: !e.online,
    });
  }
  for (const a of snap.agents) {
    nodes.push({
      kind: "agent",
      id: `agent:${a.id}`,
      x: sx(a.position[0]),
      y: sy(a.position[1]),
      label: a.id,
    });
  }
  // Popups hover above the producing entity; events whose producer is not a
  // placed entity (context/controller activity) have no anchor on the map.
  for (const ev of snap.events) {
    const pos = entityPos.get(ev.producer);
    if (!pos) continue;
    nodes.push({
      kind: "popup",
      id: `popup:${ev.seq}`,
      x: sx(pos[0]),
      y: sy(pos[1]) - 14,
      label: popupLabel(ev),
    });
  }
  return { width: canvasWidth, height: canvasHeight, scale, nodes };
}
