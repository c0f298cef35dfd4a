/** Pure scene-building helpers for the graph view, plus a thin canvas painter. */

export interface Camera {
  cx: number;
  cy: number;
  scale: number;
}

export interface Slice {
  center: number;
  halfWidth: number;
}

export interface Marker {
  index: number;
  x: number;
  y: number;
  color: string;
  highlighted: boolean;
  dimmed: boolean;
}

export interface Segment {
  points: [number, number][];
  color: string;
  width: number;
  highlighted: boolean;
  dimmed: boolean;
}

export interface Scene {
  segments: Segment[];
  markers: Marker[];
}

export interface SceneInput {
  positions: number[][];
  adjacency: [number, number][];
  polylines: number[][][] | null;
  probabilities: number[];
  batch: number[];
  slice: Slice | null;
}

const LOW_RGB = [37, 99, 235] as const; // background class
const HIGH_RGB = [220, 38, 38] as const; // structure class
const NEUTRAL = "rgb(148, 163, 184)";
const EDGE_COLOR = "rgb(148, 163, 184)";

/**
 * Map a probability to a color, linearly per channel, so the map is
 * monotone in every channel and p = 0.5 lands exactly halfway between
 * the two class colors.
 */
export function probabilityColor(p: number): string {
  const t = Math.min(1, Math.max(0, p));
  const mix = (lo: number, hi: number) => Math.round(lo + (hi - lo) * t);
  const r = mix(LOW_RGB[0], HIGH_RGB[0]);
  const g = mix(LOW_RGB[1], HIGH_RGB[1]);
  const b = mix(LOW_RGB[2], HIGH_RGB[2]);
  return `rgb(${r}, ${g}, ${b})`;
}

/** First two coordinates of a position; the third (if any) drives slicing. */
export function projectPoint(position: number[]): { x: number; y: number; z: number | null } {
  return {
    x: position[0] ?? 0,
    y: position[1] ?? 0,
    z: position.length > 2 ? position[2]! : null,
  };
}

/** A point with no depth, or no active slice, is always inside the slice. */
export function inSlice(z: number | null, slice: Slice | null): boolean {
  if (z === null || slice === null) return true;
  return Math.abs(z - slice.center) <= slice.halfWidth;
}

/** Depth extent of the positions, or null when they are 2-D. */
export function depthRange(positions: number[][]): [number, number] | null {
  let lo = Infinity;
  let hi = -Infinity;
  for (const p of positions) {
    if (p.length > 2) {
      lo = Math.min(lo, p[2]!);
      hi = Math.max(hi, p[2]!);
    }
  }
  return lo <= hi ? [lo, hi] : null;
}

/** Camera framing all the given points inside width x height with a margin. */
export function fitCamera(
  points: [number, number][],
  width: number,
  height: number,
  margin = 0.12,
): Camera {
  if (points.length === 0) return { cx: 0, cy: 0, scale: 1 };
  let xLo = Infinity;
  let xHi = -Infinity;
  let yLo = Infinity;
  let yHi = -Infinity;
  for (const [x, y] of points) {
    xLo = Math.min(xLo, x);
    xHi = Math.max(xHi, x);
    yLo = Math.min(yLo, y);
    yHi = Math.max(yHi, y);
  }
  const spanX = Math.max(xHi - xLo, 1e-9);
  const spanY = Math.max(yHi - yLo, 1e-9);
  const usable = 1 - 2 * margin;
  const scale = Math.min((width * usable) / spanX, (height * usable) / spanY);
  return { cx: (xLo + xHi) / 2, cy: (yLo + yHi) / 2, scale };
}

export function worldToScreen(
  cam: Camera,
  x: number,
  y: number,
  width: number,
  height: number,
): [number, number] {
  return [(x - cam.cx) * cam.scale + width / 2, (y - cam.cy) * cam.scale + height / 2];
}

/**
 * Build the drawable scene: edges (or measured polylines when present),
 * plus one marker per sample colored by probability. Batch members are
 * flagged highlighted; out-of-slice geometry is flagged dimmed.
 */
export function buildScene(input: SceneInput): Scene {
  const { positions, adjacency, polylines, probabilities, batch, slice } = input;
  const inBatch = new Set(batch);
  const colorOf = (i: number) =>
    i < probabilities.length ? probabilityColor(probabilities[i]!) : NEUTRAL;

  const segments: Segment[] = [];
  if (polylines !== null) {
    polylines.forEach((line, i) => {
      const pts = line.map(projectPoint);
      if (pts.length < 2) return;
      segments.push({
        points: pts.map((p) => [p.x, p.y]),
        color: colorOf(i),
        width: inBatch.has(i) ? 4 : 2,
        highlighted: inBatch.has(i),
        dimmed: !pts.some((p) => inSlice(p.z, slice)),
      });
    });
  } else {
    for (const [a, b] of adjacency) {
      const pa = positions[a];
      const pb = positions[b];
      if (pa === undefined || pb === undefined) continue;
      const qa = projectPoint(pa);
      const qb = projectPoint(pb);
      segments.push({
        points: [
          [qa.x, qa.y],
          [qb.x, qb.y],
        ],
        color: EDGE_COLOR,
        width: 1,
        highlighted: false,
        dimmed: !(inSlice(qa.z, slice) && inSlice(qb.z, slice)),
      });
    }
  }

  const markers: Marker[] = positions.map((pos, i) => {
    const q = projectPoint(pos);
    return {
      index: i,
      x: q.x,
      y: q.y,
      color: colorOf(i),
      highlighted: inBatch.has(i),
      dimmed: !inSlice(q.z, slice),
    };
  });

  return { segments, markers };
}

/**
 * Camera for the current batch, framed once per batch so all members sit
 * together on screen after a single jump.
 */
export function cameraForBatch(
  positions: number[][],
  batch: number[],
  width: number,
  height: number,
): Camera {
  const pts: [number, number][] = [];
  for (const i of batch) {
    const pos = positions[i];
    if (pos !== undefined) {
      const q = projectPoint(pos);
      pts.push([q.x, q.y]);
    }
  }
  if (pts.length === 0) {
    return fitCamera(
      positions.map((p) => {
        const q = projectPoint(p);
        return [q.x, q.y];
      }),
      width,
      height,
    );
  }
  const cam = fitCamera(pts, width, height, 0.3);
  // Cap the zoom so a tight batch still shows surrounding context.
  const overview = fitCamera(
    positions.map((p) => {
      const q = projectPoint(p);
      return [q.x, q.y];
    }),
    width,
    height,
  );
  return { ...cam, scale: Math.min(cam.scale, overview.scale * 6) };
}

/** Paint a scene onto a canvas. Kept free of state so callers own the camera. */
export function drawScene(
  ctx: CanvasRenderingContext2D,
  scene: Scene,
  cam: Camera,
  width: number,
  height: number,
): void {
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = "#0f172a";
  ctx.fillRect(0, 0, width, height);

  for (const seg of scene.segments) {
    ctx.globalAlpha = seg.dimmed ? 0.12 : 1;
    ctx.strokeStyle = seg.color;
    ctx.lineWidth = seg.width;
    ctx.beginPath();
    seg.points.forEach(([x, y], j) => {
      const [sx, sy] = worldToScreen(cam, x, y, width, height);
      if (j === 0) ctx.moveTo(sx, sy);
      else ctx.lineTo(sx, sy);
    });
    ctx.stroke();
  }

  for (const m of scene.markers) {
    const [sx, sy] = worldToScreen(cam, m.x, m.y, width, height);
    ctx.globalAlpha = m.dimmed ? 0.15 : 1;
    ctx.fillStyle = m.color;
    ctx.beginPath();
    ctx.arc(sx, sy, m.highlighted ? 6 : 3, 0, 2 * Math.PI);
    ctx.fill();
    if (m.highlighted) {
      ctx.strokeStyle = "#fbbf24";
      ctx.lineWidth = 2.5;
      ctx.beginPath();
      ctx.arc(sx, sy, 10, 0, 2 * Math.PI);
      ctx.stroke();
    }
  }
  ctx.globalAlpha = 1;
}
