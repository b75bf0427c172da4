import { describe, expect, it } from "vitest";

import { BoundaryEditor, normalizeAnchor, wrapPhi } from "../src/state.js";

describe("BoundaryEditor", () => {
  it("collects vertices and closes after three", () => {
    const b = new BoundaryEditor(1024, 512);
    b.addVertex(100, 100);
    b.addVertex(200, 100);
    expect(b.close()).toBe(false);
    b.addVertex(150, 200);
    expect(b.canCreateSession()).toBe(true);
    expect(b.close()).toBe(true);
    expect(b.list().length).toBe(3);
  });

  it("undo restores the previous vertex list exactly", () => {
    const b = new BoundaryEditor(1024, 512);
    b.addVertex(10, 20);
    b.addVertex(30, 40);
    const before = b.list().map((v) => ({ ...v }));
    b.addVertex(50, 60);
    b.moveVertex(0, 99, 88);
    b.undo();
    b.undo();
    expect(b.list()).toEqual(before);
  });

  it("wraps a vertex dragged across the seam", () => {
    const b = new BoundaryEditor(1024, 512);
    b.addVertex(-24, 100); // off the left edge
    expect(b.list()[0].x).toBe(1000);
    b.addVertex(1030, 100); // off the right edge
    expect(b.list()[1].x).toBe(6);
    b.addVertex(512, 400);
    const boundary = b.toBoundary();
    for (const p of boundary) {
      expect(p.phi).toBeGreaterThanOrEqual(0);
      expect(p.phi).toBeLessThan(2 * Math.PI);
      expect(p.theta).toBeGreaterThanOrEqual(0);
      expect(p.theta).toBeLessThanOrEqual(Math.PI);
    }
  });

  it("converts vertices to radians against the image size", () => {
    const b = new BoundaryEditor(2048, 1024);
    b.addVertex(512, 512);
    expect(b.toBoundary()[0]).toEqual({ phi: Math.PI / 2, theta: Math.PI / 2 });
  });
});

describe("anchor normalization", () => {
  it("wraps phi and clamps theta", () => {
    expect(wrapPhi(-0.3)).toBeCloseTo(2 * Math.PI - 0.3, 12);
    expect(wrapPhi(2 * Math.PI + 0.4)).toBeCloseTo(0.4, 12);
    const a = normalizeAnchor({ phi: -1, theta: 4 });
    expect(a.phi).toBeCloseTo(2 * Math.PI - 1, 12);
    expect(a.theta).toBe(Math.PI);
  });
});
