import { describe, expect, it } from "vitest";

import { parseFrame } from "../src/protocol.js";
import {
  applyFrame,
  initialState,
  pendingCommands,
  recordCommand,
} from "../src/state.js";

const hello = parseFrame(JSON.stringify({
  type: "hello",
  role: "human-humanoid",
  scene: "pillar-unilateral",
  target: "door",
  limits: { d_max: 2.0, r_max: 1.5707963, d_achieve: 0.5 },
  turn: 0,
}));

const observation = parseFrame(JSON.stringify({
  type: "observation",
  agent: "humanoid",
  turn: 3,
  time: 4.5,
  phase: "operating",
  observation: {
    pose: { x: 1, y: 2, heading: 0.1 },
    fov_half_angle: 0.785,
    max_range: 8,
    entities: [{ name: "door", bearing: 0.2, distance: 3,
                 occluded: false }],
    obstacle_arcs: [],
  },
}));

describe("applyFrame", () => {
  it("stores the session header and limits", () => {
    const state = applyFrame(initialState(), hello);
    expect(state.hello?.limits.d_max).toBe(2.0);
    expect(state.hello?.target).toBe("door");
  });

  it("keeps the latest observation per agent", () => {
    let state = applyFrame(initialState(), observation);
    expect(state.observations.humanoid?.turn).toBe(3);
    expect(state.turn).toBe(3);
    expect(state.simTime).toBeCloseTo(4.5);
    const quadObs = parseFrame(JSON.stringify({
      ...JSON.parse(JSON.stringify(observation)),
      agent: "quadruped",
      turn: 4,
    }));
    state = applyFrame(state, quadObs);
    expect(state.observations.humanoid?.turn).toBe(3);
    expect(state.observations.quadruped?.turn).toBe(4);
  });

  it("resolves pending commands oldest-first", () => {
    let state = recordCommand(initialState(), { cmd: "move", value: 1.0 });
    state = recordCommand(state, { cmd: "move", value: 0.5 });
    state = applyFrame(state, parseFrame(JSON.stringify(
      { type: "ack", command: "move", applied: 1.0, turn: 1 })));
    expect(state.history[0].status).toBe("acked");
    expect(state.history[0].applied).toBe(1.0);
    expect(state.history[1].status).toBe("pending");
    expect(pendingCommands(state)).toBe(1);
  });

  it("records rejections with the echoed clamp", () => {
    let state = recordCommand(initialState(), { cmd: "move", value: 2.0 });
    state = applyFrame(state, parseFrame(JSON.stringify({
      type: "rejected", command: "move", requested: 3.0, clamped: 2.0,
      message: "displacement exceeds d_max",
    })));
    expect(state.history[0].status).toBe("rejected");
    expect(state.history[0].clamped).toBe(2.0);
    expect(state.history[0].message).toContain("d_max");
  });

  it("shows error banners without crashing", () => {
    const state = applyFrame(initialState(), parseFrame(JSON.stringify(
      { type: "error", message: "busy" })));
    expect(state.banner).toBe("busy");
  });

  it("terminates on a result frame", () => {
    const state = applyFrame(initialState(), parseFrame(JSON.stringify({
      type: "result", outcome: "success", detail: "target achieved",
      time: 18.2, turns: 12,
    })));
    expect(state.result?.outcome).toBe("success");
    expect(state.phase).toBe("success");
  });

  it("never stores scene geometry", () => {
    let state = applyFrame(initialState(), hello);
    state = applyFrame(state, observation);
    const banned = ["obstacles", "vertices", "boundary", "reference_path",
                    "bounds"];
    const walk = (node: unknown): void => {
      if (Array.isArray(node)) {
        node.forEach(walk);
      } else if (node && typeof node === "object") {
        for (const key of Object.keys(node)) {
          expect(banned).not.toContain(key);
          walk((node as Record<string, unknown>)[key]);
        }
      }
    };
    walk(state);
  });
});
