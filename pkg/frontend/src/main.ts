// Console wiring: one websocket, a canvas map, and the steering controls.

import { ReconnectingSocket, SteeringTracker, type Reply } from "./client.js";
import {
  MalformedMessage,
  parseServerMessage,
  type ClientCommand,
  type SnapshotMessage,
} from "./protocol.js";
import { drawScene } from "./render.js";
import { buildScene } from "./scene.js";

const canvas = document.getElementById("map") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const banner = document.getElementById("banner")!;
const tickLabel = document.getElementById("tick")!;
const stateLabel = document.getElementById("state")!;
const eventLog = document.getElementById("events")!;

let lastGoodSnapshot: SnapshotMessage | null = null;
let plottedPoints: [number, number][] = [];

function showBanner(text: string): void {
  banner.textContent = text;
  banner.classList.remove("hidden");
}

function clearBanner(): void {
  banner.classList.add("hidden");
}

function redraw(): void {
  if (!lastGoodSnapshot) return;
  drawScene(ctx, buildScene(lastGoodSnapshot, canvas.width, canvas.height));
}

function applySnapshot(snap: SnapshotMessage): void {
  lastGoodSnapshot = snap;
  tickLabel.textContent = String(snap.tick);
  stateLabel.textContent = snap.finished ? "finished" : snap.paused ? "paused" : "running";
  redraw();
}

function logEvent(text: string): void {
  const line = document.createElement("div");
  line.textContent = text;
  eventLog.prepend(line);
  while (eventLog.childElementCount > 60) eventLog.lastElementChild?.remove();
}

const tracker = new SteeringTracker((text) => socket.send(text));

const socket = new ReconnectingSocket(`ws://${location.host}/ws`, {
  onOpen: clearBanner,
  onClose: () => {
    tracker.failAll("connection lost");
    showBanner("connection lost, retrying…");
  },
  onMessage: (text) => {
    let msg;
    try {
      msg = parseServerMessage(text);
    } catch (err) {
      if (err instanceof MalformedMessage) {
        showBanner(`malformed message: ${err.message}`);
        return; // keep the last good scene
      }
      throw err;
    }
    if (msg.type === "snapshot") {
      clearBanner();
      applySnapshot(msg);
    } else if (msg.type === "event") {
      logEvent(`#${msg.event.seq} ${msg.event.kind} ${msg.event.producer} ${msg.event.name}`);
    } else {
      tracker.handleReply(msg);
    }
  },
});

function wireButton(id: string, makeCommand: () => ClientCommand | null): void {
  const button = document.getElementById(id) as HTMLButtonElement;
  button.addEventListener("click", async () => {
    const cmd = makeCommand();
    if (!cmd) return;
    button.disabled = true; // re-enabled by the matching ack/error
    let reply: Reply;
    try {
      reply = await tracker.send(cmd);
    } finally {
      button.disabled = false;
    }
    if (reply.type === "error") showBanner(reply.message);
    else clearBanner();
  });
}

wireButton("pause", () => ({ type: "pause" }));
wireButton("resume", () => ({ type: "resume" }));
wireButton("step", () => ({ type: "step" }));

wireButton("inject", () => {
  const deviceId = (document.getElementById("inj-device") as HTMLInputElement).value.trim();
  const source = (document.getElementById("inj-source") as HTMLInputElement).value.trim();
  const rawValue = (document.getElementById("inj-value") as HTMLInputElement).value;
  if (!deviceId || !source) {
    showBanner("inject needs a device id and a source name");
    return null;
  }
  let value: unknown = rawValue;
  try {
    value = JSON.parse(rawValue); // numbers/objects typed as JSON, else string
  } catch {
    /* keep the raw string */
  }
  return { type: "inject", deviceId, source, value };
});

// Trajectory plotting: click points on the map, then send them to the agent.
canvas.addEventListener("click", (ev) => {
  if (!lastGoodSnapshot) return;
  const rect = canvas.getBoundingClientRect();
  const scene = buildScene(lastGoodSnapshot, canvas.width, canvas.height);
  const mx = (ev.clientX - rect.left) / scene.scale;
  const my = (ev.clientY - rect.top) / scene.scale;
  plottedPoints.push([Math.round(mx * 100) / 100, Math.round(my * 100) / 100]);
  (document.getElementById("path-points") as HTMLElement).textContent =
    plottedPoints.map(([x, y]) => `(${x}, ${y})`).join(" → ") || "none";
});

wireButton("send-path", () => {
  const agentId = (document.getElementById("path-agent") as HTMLInputElement).value.trim();
  if (!agentId || plottedPoints.length === 0) {
    showBanner("pick an agent and click at least one point on the map");
    return null;
  }
  const points = plottedPoints;
  plottedPoints = [];
  (document.getElementById("path-points") as HTMLElement).textContent = "none";
  return { type: "waypoints", agentId, points };
});

(document.getElementById("clear-path") as HTMLButtonElement).addEventListener("click", () => {
  plottedPoints = [];
  (document.getElementById("path-points") as HTMLElement).textContent = "none";
});
