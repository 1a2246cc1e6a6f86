// Steering bookkeeping and the reconnecting socket.
//
// Every command gets a fresh requestId; the matching ack/error settles the
// promise and re-enables the control.  Replies are counted so a duplicate
// reply for the same id (a server bug) is surfaced instead of silently
// resolving twice.

import {
  type AckMessage,
  type ClientCommand,
  type ErrorMessage,
  serializeCommand,
} from "./protocol.js";

export type Reply = AckMessage | ErrorMessage;

export class SteeringTracker {
  private nextId = 1;
  private pending = new Map<number, (reply: Reply) => void>();
  private replyCounts = new Map<number, number>();

  constructor(private readonly sendText: (text: string) => void) {}

  get busy(): boolean {
    return this.pending.size > 0;
  }

  send(cmd: ClientCommand): Promise<Reply> {
    const id = this.nextId++;
    const promise = new Promise<Reply>((resolve) => {
      this.pending.set(id, resolve);
    });
    this.sendText(serializeCommand(cmd, id));
    return promise;
  }

  /** Feed a server reply; returns true when it settled a pending command. */
  handleReply(msg: Reply): boolean {
    const id = msg.requestId;
    if (typeof id !== "number") return false;
    this.replyCounts.set(id, (this.replyCounts.get(id) ?? 0) + 1);
    const resolve = this.pending.get(id);
    if (!resolve) return false;
    this.pending.delete(id);
    resolve(msg);
    return true;
  }

  /** Exactly-once check: ids that received more than one reply. */
  duplicatedReplies(): number[] {
    return [...this.replyCounts.entries()].filter(([, n]) => n > 1).map(([id]) => id);
  }

  /** Sockets drop: fail every in-flight command with a local error. */
  failAll(message: string): void {
    for (const [id, resolve] of this.pending) {
      resolve({ type: "error", requestId: id, message });
    }
    this.pending.clear();
  }
}

export function backoffMillis(attempt: number, baseMs = 250, capMs = 5000): number {
  return Math.min(capMs, baseMs * 2 ** Math.max(0, attempt));
}

export interface SocketHooks {
  onMessage: (text: string) => void;
  onOpen: () => void;
  onClose: () => void;
}

/** Browser-side reconnecting websocket; reconnects with capped backoff. */
export class ReconnectingSocket {
  private ws: WebSocket | null = null;
  private attempt = 0;
  private closed = false;

  constructor(
    private readonly url: string,
    private readonly hooks: SocketHooks,
  ) {
    this.connect();
  }

  private connect(): void {
    if (this.closed) return;
    const ws = new WebSocket(this.url);
    this.ws = ws;
    ws.onopen = () => {
      this.attempt = 0;
      this.hooks.onOpen();
    };
    ws.onmessage = (ev) => this.hooks.onMessage(String(ev.data));
    ws.onclose = () => {
      this.hooks.onClose();
      if (!this.closed) {
        setTimeout(() => this.connect(), backoffMillis(this.attempt++));
      }
    };
    ws.onerror = () => ws.close();
  }

  send(text: string): void {
    if (!this.ws || this.ws.readyState !== WebSocket.OPEN) {
      throw new Error("socket is not open");
    }
    this.ws.send(text);
  }

  close(): void {
    this.closed = true;
    this.ws?.close();
  }
}
