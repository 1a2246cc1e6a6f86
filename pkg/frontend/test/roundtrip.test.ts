// Live round trip against a real `diakit simulate --serve` process:
// connect, receive the tick-0 snapshot, pause/step/inject, observe the
// injected event, and verify every requestId is answered exactly once.

import { execFileSync, spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import WebSocket from "ws";

import { parseServerMessage, type ServerMessage, type SnapshotMessage } from "../src/protocol.js";

const PYTHON = process.env.DIAKIT_PYTHON ?? "python3";

function fixturePaths(): { files: string[]; scenario: string } {
  const out = execFileSync(PYTHON, [
    "-c",
    "from diakit import newscast\n" +
      "print(newscast.fixture_paths()[0])\n" +
      "print(newscast.fixture_paths()[1])\n" +
      "print(newscast.scenario_path())",
  ])
    .toString()
    .trim()
    .split("\n");
  return { files: [out[0]!, out[1]!], scenario: out[2]! };
}

let proc: ChildProcess;
let port = 0;
let workDir: string;

beforeAll(async () => {
  workDir = mkdtempSync(join(tmpdir(), "diakit-ui-"));
  const { files, scenario } = fixturePaths();
  proc = spawn(PYTHON, [
    "-m",
    "diakit.cli",
    "simulate",
    ...files,
    "--scenario",
    scenario,
    "--trace",
    join(workDir, "trace.jsonl"),
    "--serve",
    "0",
  ]);
  port = await new Promise<number>((resolve, reject) => {
    let buffer = "";
    proc.stdout!.on("data", (chunk) => {
      buffer += chunk.toString();
      const match = buffer.match(/LISTENING (\d+)/);
      if (match) resolve(Number(match[1]));
    });
    proc.stderr!.on("data", (chunk) => process.stderr.write(chunk));
    proc.on("exit", (code) => reject(new Error(`server exited early: ${code}`)));
    setTimeout(() => reject(new Error("no LISTENING line")), 15000);
  });
});

afterAll(async () => {
  proc.kill("SIGTERM");
  await new Promise((resolve) => proc.on("exit", resolve));
  rmSync(workDir, { recursive: true, force: true });
});

class Client {
  private queue: ServerMessage[] = [];
  private waiters: ((msg: ServerMessage) => void)[] = [];
  readonly replies = new Map<number, ServerMessage[]>();

  constructor(private readonly ws: WebSocket) {
    ws.on("message", (data) => {
      const msg = parseServerMessage(data.toString());
      if ((msg.type === "ack" || msg.type === "error") && typeof msg.requestId === "number") {
        const seen = this.replies.get(msg.requestId) ?? [];
        seen.push(msg);
        this.replies.set(msg.requestId, seen);
      }
      const waiter = this.waiters.shift();
      if (waiter) waiter(msg);
      else this.queue.push(msg);
    });
  }

  next(): Promise<ServerMessage> {
    const queued = this.queue.shift();
    if (queued) return Promise.resolve(queued);
    return new Promise((resolve) => this.waiters.push(resolve));
  }

  async nextOfType<T extends ServerMessage["type"]>(type: T, limit = 80): Promise<ServerMessage> {
    for (let i = 0; i < limit; i++) {
      const msg = await this.next();
      if (msg.type === type) return msg;
    }
    throw new Error(`no ${type} message within ${limit} frames`);
  }

  send(obj: unknown): void {
    this.ws.send(JSON.stringify(obj));
  }
}

describe("console round trip", () => {
  it("connects, steers, and sees the injected event in the next snapshot", async () => {
    const ws = new WebSocket(`ws://127.0.0.1:${port}/ws`);
    await new Promise((resolve, reject) => {
      ws.on("open", resolve);
      ws.on("error", reject);
    });
    const client = new Client(ws);

    const first = (await client.nextOfType("snapshot")) as SnapshotMessage;
    expect(first.tick).toBe(0); // serve mode starts paused at tick 0
    expect(first.entities.map((e) => e.id).sort()).toEqual(["br1", "pdb1", "s1"]);

    client.send({ type: "pause", requestId: 1 });
    const ack1 = await client.nextOfType("ack");
    expect(ack1.type === "ack" && ack1.requestId).toBe(1);

    client.send({
      type: "inject",
      requestId: 2,
      deviceId: "br1",
      source: "badgeDetected",
      value: "0A12",
    });
    const ack2 = await client.nextOfType("ack");
    expect(ack2.type === "ack" && ack2.requestId).toBe(2);

    client.send({ type: "step", requestId: 3 });
    const ack3 = await client.nextOfType("ack");
    expect(ack3.type === "ack" && ack3.requestId).toBe(3);

    const after = (await client.nextOfType("snapshot")) as SnapshotMessage;
    expect(after.tick).toBe(1);
    const injected = after.events.filter(
      (e) => e.kind === "stimulus" && e.producer === "br1" && e.steered === true,
    );
    expect(injected).toHaveLength(1);
    expect(injected[0]!.value).toBe("0A12");

    // ill-typed injection answers with an error carrying the requestId
    client.send({ type: "inject", requestId: 4, deviceId: "br1", source: "badgeDetected", value: 7 });
    const err = await client.nextOfType("error");
    expect(err.type === "error" && err.requestId).toBe(4);

    for (const id of [1, 2, 3, 4]) {
      expect(client.replies.get(id) ?? []).toHaveLength(1); // exactly one reply each
    }
    ws.close();
  });
});
