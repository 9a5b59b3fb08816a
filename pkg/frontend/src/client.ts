/**
 * Console client: owns the socket, the state, and the command gate.
 *
 * Outgoing values are hard-capped at the limits announced in the session
 * hello (the server clamps anyway; the console never even asks for more).
 * Waypoint assignment is disabled while the scout is under manual control.
 */

import { encodeCommand, parseFrame, FrameError } from "./protocol.js";
import type { Command, ServerFrame } from "./protocol.js";
import {
  applyFrame,
  initialState,
  markConnection,
  recordCommand,
} from "./state.js";
import type { ConsoleState } from "./state.js";

/** Minimal socket surface so tests can inject a fake. */
export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: (() => void) | null;
  onmessage: ((event: { data: string }) => void) | null;
  onclose: (() => void) | null;
}

export class ConsoleClient {
  state: ConsoleState;
  private readonly socket: SocketLike;
  private readonly onChange: (state: ConsoleState) => void;

  constructor(socket: SocketLike,
              onChange: (state: ConsoleState) => void = () => {}) {
    this.state = initialState();
    this.socket = socket;
    this.onChange = onChange;
    socket.onopen = () => this.update(markConnection(this.state, "open"));
    socket.onclose = () => this.update(markConnection(this.state, "closed"));
    socket.onmessage = (event) => this.receive(event.data);
  }

  private update(state: ConsoleState): void {
    this.state = state;
    this.onChange(state);
  }

  private receive(raw: string): void {
    let frame: ServerFrame;
    try {
      frame = parseFrame(raw);
    } catch (err) {
      const message = err instanceof FrameError ? err.message : String(err);
      this.update({ ...this.state, banner: `bad frame: ${message}` });
      return;
    }
    this.update(applyFrame(this.state, frame));
  }

  private send(command: Command): void {
    this.update(recordCommand(this.state, command));
    this.socket.send(encodeCommand(command));
  }

  get live(): boolean {
    return this.state.connection === "open" && this.state.result === null;
  }

  private limits() {
    return this.state.hello?.limits ?? { d_max: 0, r_max: 0, d_achieve: 0 };
  }

  /** Cap applied client-side; returns the value actually requested. */
  rotate(value: number): number {
    const cap = this.limits().r_max;
    const sent = Math.max(-cap, Math.min(cap, value));
    if (this.live) {
      this.send({ cmd: "rotate", value: sent });
    }
    return sent;
  }

  move(value: number): number {
    const cap = this.limits().d_max;
    const sent = Math.max(0, Math.min(cap, value));
    if (this.live) {
      this.send({ cmd: "move", value: sent });
    }
    return sent;
  }

  scan(): void {
    if (this.live) {
      this.send({ cmd: "scan" });
    }
  }

  /** Only the coordinating role may delegate; scouting disables it. */
  assignWaypoint(x: number, y: number): boolean {
    if (!this.live || this.state.phase === "scouting"
        || this.state.phase === "awaiting_exploration") {
      this.update({
        ...this.state,
        banner: "waypoint assignment unavailable right now",
      });
      return false;
    }
    this.send({ cmd: "assign_waypoint", x, y });
    return true;
  }

  end(): void {
    if (this.live) {
      this.send({ cmd: "end" });
    }
  }

  disconnect(): void {
    this.socket.close();
  }
}
