/**
 * Egocentric polar projection: turns one observation frame into draw
 * primitives for a radar-style canvas. Pure data in, pure data out, so the
 * projection math is unit-testable without a DOM.
 *
 * Convention: the agent sits at the origin looking "up"; positive bearings
 * swing counterclockwise (to the viewer's left). Distances scale linearly
 * to the canvas radius at max_range.
 */

import type { ObservationPayload } from "./protocol.js";

export interface GridPrimitive {
  kind: "grid";
  radiusPx: number;
  ringsMeters: number[];
  maxRange: number;
}

export interface FovPrimitive {
  kind: "fov";
  halfAngle: number;
  radiusPx: number;
}

export interface WedgePrimitive {
  kind: "wedge";
  startBearing: number;
  endBearing: number;
  innerPx: number;  // obstruction starts here...
  outerPx: number;  // ...and shades out to the rim
}

export interface MarkerPrimitive {
  kind: "marker";
  label: string;
  x: number;        // canvas offsets from center, +x right, +y down
  y: number;
  occluded: boolean;
  distance: number;
  bearing: number;
}

export type Primitive =
  | GridPrimitive
  | FovPrimitive
  | WedgePrimitive
  | MarkerPrimitive;

export function project(bearing: number, distance: number, maxRange: number,
                        radiusPx: number): { x: number; y: number } {
  const r = (Math.min(distance, maxRange) / maxRange) * radiusPx;
  return { x: -Math.sin(bearing) * r, y: -Math.cos(bearing) * r };
}

function rings(maxRange: number): number[] {
  const step = maxRange > 4 ? 2 : 1;
  const out: number[] = [];
  for (let r = step; r <= maxRange + 1e-9; r += step) {
    out.push(r);
  }
  return out;
}

/** Draw list for one observation; null renders an empty polar grid. */
export function buildScene(obs: ObservationPayload | null,
                           radiusPx: number): Primitive[] {
  const maxRange = obs ? obs.max_range : 8;
  const primitives: Primitive[] = [
    { kind: "grid", radiusPx, ringsMeters: rings(maxRange), maxRange },
  ];
  if (!obs) {
    return primitives;
  }
  primitives.push({
    kind: "fov",
    halfAngle: Math.min(obs.fov_half_angle, Math.PI),
    radiusPx,
  });
  for (const arc of obs.obstacle_arcs) {
    primitives.push({
      kind: "wedge",
      startBearing: arc.start_bearing,
      endBearing: arc.end_bearing,
      innerPx: (Math.min(arc.min_distance, maxRange) / maxRange) * radiusPx,
      outerPx: radiusPx,
    });
  }
  for (const entity of obs.entities) {
    const { x, y } = project(entity.bearing, entity.distance, maxRange,
                             radiusPx);
    primitives.push({
      kind: "marker",
      label: entity.name,
      x,
      y,
      occluded: entity.occluded,
      distance: entity.distance,
      bearing: entity.bearing,
    });
  }
  return primitives;
}

/** Inverse of project for canvas clicks: (px, py) offsets from the center
 * back to (bearing, distance) in the agent frame. */
export function unproject(px: number, py: number, maxRange: number,
                          radiusPx: number):
    { bearing: number; distance: number } {
  const r = Math.hypot(px, py);
  return {
    bearing: Math.atan2(-px, -py),
    distance: (r / radiusPx) * maxRange,
  };
}

/** World position of a clicked point, derived from the observed pose (the
 * agent's own pose is proprioception, not scene geometry). */
export function toWorld(obs: ObservationPayload, bearing: number,
                        distance: number): { x: number; y: number } {
  const angle = obs.pose.heading + bearing;
  return {
    x: obs.pose.x + distance * Math.cos(angle),
    y: obs.pose.y + distance * Math.sin(angle),
  };
}
