/**
 * Browser wiring: connect, render the egocentric views, forward commands.
 * All geometry math lives in polar.ts; this file only paints and wires DOM.
 */

import { ConsoleClient } from "./client.js";
import { buildScene, toWorld, unproject } from "./polar.js";
import type { Primitive } from "./polar.js";
import type { AgentId } from "./protocol.js";
import type { ConsoleState } from "./state.js";

const RADIUS = 180;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

function paint(canvas: HTMLCanvasElement, primitives: Primitive[]): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) {
    return;
  }
  const cx = canvas.width / 2;
  const cy = canvas.height / 2;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.save();
  ctx.translate(cx, cy);
  for (const p of primitives) {
    if (p.kind === "grid") {
      ctx.strokeStyle = "#2e4436";
      for (const meters of p.ringsMeters) {
        ctx.beginPath();
        ctx.arc(0, 0, (meters / p.maxRange) * p.radiusPx, 0, 2 * Math.PI);
        ctx.stroke();
      }
      ctx.beginPath();
      ctx.moveTo(0, -p.radiusPx);
      ctx.lineTo(0, p.radiusPx);
      ctx.moveTo(-p.radiusPx, 0);
      ctx.lineTo(p.radiusPx, 0);
      ctx.stroke();
    } else if (p.kind === "fov") {
      ctx.strokeStyle = "#4f7a5a";
      ctx.beginPath();
      ctx.moveTo(0, 0);
      ctx.lineTo(-Math.sin(p.halfAngle) * p.radiusPx,
                 -Math.cos(p.halfAngle) * p.radiusPx);
      ctx.moveTo(0, 0);
      ctx.lineTo(-Math.sin(-p.halfAngle) * p.radiusPx,
                 -Math.cos(-p.halfAngle) * p.radiusPx);
      ctx.stroke();
    } else if (p.kind === "wedge") {
      // Canvas arcs run clockwise in screen space; our bearings are
      // counterclockwise with 0 pointing up.
      const a0 = -Math.PI / 2 - p.endBearing;
      const a1 = -Math.PI / 2 - p.startBearing;
      ctx.fillStyle = "rgba(196, 92, 70, 0.35)";
      ctx.beginPath();
      ctx.arc(0, 0, p.outerPx, a0, a1);
      ctx.arc(0, 0, p.innerPx, a1, a0, true);
      ctx.closePath();
      ctx.fill();
    } else {
      ctx.fillStyle = p.occluded ? "rgba(180,180,180,0.6)" : "#e8d44d";
      ctx.beginPath();
      ctx.arc(p.x, p.y, 5, 0, 2 * Math.PI);
      ctx.fill();
      ctx.fillStyle = p.occluded ? "#9a9a9a" : "#e4e4e4";
      ctx.font = "12px monospace";
      const badge = p.occluded ? " (occluded)" : "";
      ctx.fillText(`${p.label}${badge} ${p.distance.toFixed(1)}m`,
                   p.x + 8, p.y - 6);
    }
  }
  // The agent itself.
  ctx.fillStyle = "#7ec8e3";
  ctx.beginPath();
  ctx.moveTo(0, -8);
  ctx.lineTo(5, 6);
  ctx.lineTo(-5, 6);
  ctx.closePath();
  ctx.fill();
  ctx.restore();
}

function render(state: ConsoleState): void {
  el<HTMLSpanElement>("status").textContent =
    `${state.connection} | turn ${state.turn} | t=${state.simTime.toFixed(1)}s `
    + `| phase ${state.phase}`;
  el<HTMLSpanElement>("task").textContent = state.hello
    ? `scene ${state.hello.scene}: find "${state.hello.target}"`
    : "awaiting session";
  const banner = el<HTMLDivElement>("banner");
  banner.textContent = state.banner ?? "";
  banner.style.display = state.banner ? "block" : "none";

  for (const agent of ["humanoid", "quadruped"] as AgentId[]) {
    const frame = state.observations[agent];
    paint(el<HTMLCanvasElement>(`view-${agent}`),
          buildScene(frame ? frame.observation : null, RADIUS));
  }

  const log = el<HTMLUListElement>("log");
  log.innerHTML = "";
  const entries = [
    ...state.history.slice(-8).map((e) => {
      const name = e.command.cmd;
      if (e.status === "pending") {
        return `${name}: ...`;
      }
      if (e.status === "rejected") {
        return `${name}: rejected (${e.message ?? ""}, limit `
          + `${e.clamped?.toFixed(2) ?? "?"})`;
      }
      return e.applied === undefined
        ? `${name}: ok`
        : `${name}: applied ${e.applied.toFixed(2)}`;
    }),
    ...state.reports.slice(-3).map((r) => `scout: ${r.outcome} (${r.reason})`),
  ];
  for (const text of entries) {
    const item = document.createElement("li");
    item.textContent = text;
    log.appendChild(item);
  }
  if (state.result) {
    el<HTMLDivElement>("result").textContent =
      `episode ${state.result.outcome}: ${state.result.detail} `
      + `(t=${state.result.time.toFixed(1)}s, ${state.result.turns} turns)`;
  }

  const limits = state.hello?.limits;
  if (limits) {
    const rotate = el<HTMLInputElement>("rotate-value");
    rotate.min = String(-limits.r_max);
    rotate.max = String(limits.r_max);
    const move = el<HTMLInputElement>("move-value");
    move.min = "0";
    move.max = String(limits.d_max);
  }
}

function start(): void {
  const url = el<HTMLInputElement>("server-url").value;
  const socket = new WebSocket(url);
  const client = new ConsoleClient(socket as unknown as
    ConstructorParameters<typeof ConsoleClient>[0], render);

  el<HTMLButtonElement>("rotate").onclick = () => {
    client.rotate(parseFloat(el<HTMLInputElement>("rotate-value").value));
  };
  el<HTMLButtonElement>("move").onclick = () => {
    client.move(parseFloat(el<HTMLInputElement>("move-value").value));
  };
  el<HTMLButtonElement>("scan").onclick = () => client.scan();
  el<HTMLButtonElement>("end").onclick = () => client.end();

  // Click on the coordinator's view to delegate a waypoint there.
  el<HTMLCanvasElement>("view-humanoid").onclick = (event) => {
    const frame = client.state.observations.humanoid;
    if (!frame) {
      return;
    }
    const canvas = event.currentTarget as HTMLCanvasElement;
    const rect = canvas.getBoundingClientRect();
    const px = event.clientX - rect.left - canvas.width / 2;
    const py = event.clientY - rect.top - canvas.height / 2;
    const { bearing, distance } = unproject(px, py,
                                            frame.observation.max_range,
                                            RADIUS);
    const world = toWorld(frame.observation, bearing, distance);
    client.assignWaypoint(world.x, world.y);
  };
}

el<HTMLButtonElement>("connect").onclick = start;
