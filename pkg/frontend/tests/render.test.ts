import { describe, expect, it } from "vitest";

import {
  buildScene,
  cameraForBatch,
  depthRange,
  fitCamera,
  inSlice,
  probabilityColor,
  projectPoint,
  worldToScreen,
} from "../src/render.js";

function channels(color: string): [number, number, number] {
  const m = /^rgb\((\d+), (\d+), (\d+)\)$/.exec(color);
  if (m === null) throw new Error(`unexpected color format: ${color}`);
  return [Number(m[1]), Number(m[2]), Number(m[3])];
}

describe("probabilityColor", () => {
  it("renders p = 0.5 exactly halfway between the class colors", () => {
    const [r0, g0, b0] = channels(probabilityColor(0));
    const [r1, g1, b1] = channels(probabilityColor(1));
    const [r, g, b] = channels(probabilityColor(0.5));
    expect(r).toBe(Math.round((r0 + r1) / 2));
    expect(g).toBe(Math.round((g0 + g1) / 2));
    expect(b).toBe(Math.round((b0 + b1) / 2));
  });

  it("is monotone in every channel", () => {
    let prev = channels(probabilityColor(0));
    for (let i = 1; i <= 100; i++) {
      const cur = channels(probabilityColor(i / 100));
      for (let c = 0; c < 3; c++) {
        const direction = Math.sign(
          channels(probabilityColor(1))[c]! - channels(probabilityColor(0))[c]!,
        );
        expect((cur[c]! - prev[c]!) * direction).toBeGreaterThanOrEqual(0);
      }
      prev = cur;
    }
  });

  it("clamps out-of-range probabilities to the endpoints", () => {
    expect(probabilityColor(-0.2)).toBe(probabilityColor(0));
    expect(probabilityColor(1.7)).toBe(probabilityColor(1));
  });
});

describe("projection and slicing", () => {
  it("projects 2-D points with no depth", () => {
    expect(projectPoint([3, 4])).toEqual({ x: 3, y: 4, z: null });
  });

  it("keeps the depth coordinate of 3-D points", () => {
    expect(projectPoint([3, 4, 5])).toEqual({ x: 3, y: 4, z: 5 });
  });

  it("treats depthless points and absent slices as always visible", () => {
    expect(inSlice(null, { center: 0, halfWidth: 1 })).toBe(true);
    expect(inSlice(123, null)).toBe(true);
  });

  it("filters by distance from the slice center", () => {
    const slice = { center: 2, halfWidth: 0.5 };
    expect(inSlice(2.4, slice)).toBe(true);
    expect(inSlice(2.6, slice)).toBe(false);
  });

  it("reports the depth extent only for 3-D positions", () => {
    expect(depthRange([[0, 0], [1, 1]])).toBeNull();
    expect(depthRange([[0, 0, -1], [1, 1, 4]])).toEqual([-1, 4]);
  });
});

describe("fitCamera", () => {
  it("keeps every point inside the viewport", () => {
    const pts: [number, number][] = [
      [-3, 2],
      [5, -1],
      [0.5, 7],
    ];
    const cam = fitCamera(pts, 800, 600);
    for (const [x, y] of pts) {
      const [sx, sy] = worldToScreen(cam, x, y, 800, 600);
      expect(sx).toBeGreaterThanOrEqual(0);
      expect(sx).toBeLessThanOrEqual(800);
      expect(sy).toBeGreaterThanOrEqual(0);
      expect(sy).toBeLessThanOrEqual(600);
    }
  });

  it("centers a single point", () => {
    const cam = fitCamera([[2, 3]], 400, 400);
    const [sx, sy] = worldToScreen(cam, 2, 3, 400, 400);
    expect(sx).toBeCloseTo(200);
    expect(sy).toBeCloseTo(200);
  });
});

describe("buildScene", () => {
  const positions = [
    [0, 0],
    [1, 0],
    [2, 0],
    [3, 0],
  ];
  const adjacency: [number, number][] = [
    [0, 1],
    [1, 2],
    [2, 3],
  ];

  it("produces nothing for an empty graph", () => {
    const scene = buildScene({
      positions: [],
      adjacency: [],
      polylines: null,
      probabilities: [],
      batch: [],
      slice: null,
    });
    expect(scene.segments).toHaveLength(0);
    expect(scene.markers).toHaveLength(0);
  });

  it("highlights exactly the batch members", () => {
    const scene = buildScene({
      positions,
      adjacency,
      polylines: null,
      probabilities: [0.1, 0.9, 0.5, 0.5],
      batch: [1, 3],
      slice: null,
    });
    const highlighted = scene.markers.filter((m) => m.highlighted).map((m) => m.index);
    expect(highlighted).toEqual([1, 3]);
    expect(scene.segments).toHaveLength(3);
  });

  it("colors markers by their probability", () => {
    const scene = buildScene({
      positions,
      adjacency,
      polylines: null,
      probabilities: [0.1, 0.9, 0.5, 0.5],
      batch: [],
      slice: null,
    });
    expect(scene.markers[0]!.color).toBe(probabilityColor(0.1));
    expect(scene.markers[1]!.color).toBe(probabilityColor(0.9));
  });

  it("draws measured polylines instead of adjacency when present", () => {
    const scene = buildScene({
      positions: [
        [0.5, 0],
        [1.5, 0],
      ],
      adjacency: [[0, 1]],
      polylines: [
        [
          [0, 0],
          [1, 0],
        ],
        [
          [1, 0],
          [2, 0],
        ],
      ],
      probabilities: [0.2, 0.8],
      batch: [1],
      slice: null,
    });
    expect(scene.segments).toHaveLength(2);
    expect(scene.segments[1]!.highlighted).toBe(true);
    expect(scene.segments[0]!.highlighted).toBe(false);
    expect(scene.segments[1]!.color).toBe(probabilityColor(0.8));
  });

  it("dims geometry outside the active depth slice", () => {
    const scene = buildScene({
      positions: [
        [0, 0, 0],
        [1, 0, 10],
      ],
      adjacency: [[0, 1]],
      polylines: null,
      probabilities: [0.5, 0.5],
      batch: [],
      slice: { center: 0, halfWidth: 1 },
    });
    expect(scene.markers[0]!.dimmed).toBe(false);
    expect(scene.markers[1]!.dimmed).toBe(true);
    expect(scene.segments[0]!.dimmed).toBe(true);
  });
});

describe("cameraForBatch", () => {
  it("frames all batch members on screen together", () => {
    const positions = [
      [0, 0],
      [10, 10],
      [200, 5],
      [4, 80],
    ];
    const cam = cameraForBatch(positions, [1, 3], 800, 600);
    for (const i of [1, 3]) {
      const [sx, sy] = worldToScreen(cam, positions[i]![0]!, positions[i]![1]!, 800, 600);
      expect(sx).toBeGreaterThanOrEqual(0);
      expect(sx).toBeLessThanOrEqual(800);
      expect(sy).toBeGreaterThanOrEqual(0);
      expect(sy).toBeLessThanOrEqual(600);
    }
  });

  it("falls back to the whole graph when the batch is empty", () => {
    const positions = [
      [0, 0],
      [10, 10],
    ];
    const cam = cameraForBatch(positions, [], 800, 600);
    const overview = fitCamera(
      positions.map((p) => [p[0]!, p[1]!] as [number, number]),
      800,
      600,
    );
    expect(cam).toEqual(overview);
  });
});
