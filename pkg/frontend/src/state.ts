/**
 * Console state: a pure reducer over incoming frames plus a command log.
 *
 * The state deliberately holds nothing but received frames and the command
 * history — never any scene geometry. Each sent command gets exactly one
 * resolution (ack or rejection), matched oldest-first per command kind.
 */

import type {
  AgentId,
  Command,
  HelloFrame,
  ObservationFrame,
  ReportFrame,
  ResultFrame,
  ServerFrame,
} from "./protocol.js";

export type CommandStatus = "pending" | "acked" | "rejected";

export interface CommandLogEntry {
  command: Command;
  status: CommandStatus;
  applied?: number;
  clamped?: number;
  message?: string;
}

export interface ConsoleState {
  connection: "connecting" | "open" | "closed";
  hello: HelloFrame | null;
  observations: Partial<Record<AgentId, ObservationFrame>>;
  history: CommandLogEntry[];
  reports: ReportFrame[];
  turn: number;
  simTime: number;
  phase: string;
  result: ResultFrame | null;
  banner: string | null;
}

export function initialState(): ConsoleState {
  return {
    connection: "connecting",
    hello: null,
    observations: {},
    history: [],
    reports: [],
    turn: 0,
    simTime: 0,
    phase: "connecting",
    result: null,
    banner: null,
  };
}

function resolvePending(history: CommandLogEntry[], commandKind: string,
                        patch: Partial<CommandLogEntry>): CommandLogEntry[] {
  const index = history.findIndex(
    (e) => e.status === "pending" && e.command.cmd === commandKind);
  if (index < 0) {
    return history;
  }
  const next = history.slice();
  next[index] = { ...next[index], ...patch };
  return next;
}

export function recordCommand(state: ConsoleState,
                              command: Command): ConsoleState {
  return {
    ...state,
    history: [...state.history, { command, status: "pending" }],
  };
}

export function applyFrame(state: ConsoleState,
                           frame: ServerFrame): ConsoleState {
  switch (frame.type) {
    case "hello":
      return { ...state, hello: frame, turn: frame.turn, phase: "operating",
               banner: null };
    case "observation":
      return {
        ...state,
        observations: { ...state.observations, [frame.agent]: frame },
        turn: frame.turn,
        simTime: frame.time,
        phase: frame.phase,
      };
    case "ack":
      return {
        ...state,
        turn: frame.turn,
        history: resolvePending(state.history, frame.command,
                                { status: "acked", applied: frame.applied }),
      };
    case "rejected":
      return {
        ...state,
        history: resolvePending(state.history, frame.command, {
          status: "rejected",
          clamped: frame.clamped,
          message: frame.message,
        }),
      };
    case "report":
      return { ...state, reports: [...state.reports, frame] };
    case "result":
      return { ...state, result: frame, phase: frame.outcome };
    case "error":
      return { ...state, banner: frame.message };
  }
}

export function markConnection(state: ConsoleState,
                               connection: ConsoleState["connection"]):
    ConsoleState {
  return { ...state, connection };
}

/** Invariant check: every command has at most one resolution and none is
 * silently dropped once the episode ended. */
export function pendingCommands(state: ConsoleState): number {
  return state.history.filter((e) => e.status === "pending").length;
}
