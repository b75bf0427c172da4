/**
 * Editor state: the boundary polyline being drawn, undo history, and
 * anchor bookkeeping. Pure data operations, no DOM and no network.
 */

import type { Anchor, Vertex } from "./types.js";

const TWO_PI = 2 * Math.PI;

export function wrapPhi(phi: number): number {
  const w = phi % TWO_PI;
  return w < 0 ? w + TWO_PI : w;
}

export function clampTheta(theta: number): number {
  return Math.min(Math.PI, Math.max(0, theta));
}

export class BoundaryEditor {
  private vertices: Vertex[] = [];
  private history: Vertex[][] = [];
  closed = false;

  constructor(
    public imageWidth: number,
    public imageHeight: number,
  ) {}

  list(): readonly Vertex[] {
    return this.vertices;
  }

  private push(): void {
    this.history.push(this.vertices.map((v) => ({ ...v })));
  }

  addVertex(x: number, y: number): void {
    if (this.closed) return;
    this.push();
    // x wraps across the seam so a vertex dragged past the edge stays valid
    this.vertices.push({
      x: ((x % this.imageWidth) + this.imageWidth) % this.imageWidth,
      y: Math.min(this.imageHeight, Math.max(0, y)),
    });
  }

  moveVertex(index: number, x: number, y: number): void {
    if (index < 0 || index >= this.vertices.length) return;
    this.push();
    this.vertices[index] = {
      x: ((x % this.imageWidth) + this.imageWidth) % this.imageWidth,
      y: Math.min(this.imageHeight, Math.max(0, y)),
    };
  }

  close(): boolean {
    if (this.vertices.length < 3) return false;
    this.push();
    this.closed = true;
    return true;
  }

  undo(): void {
    const prev = this.history.pop();
    if (prev !== undefined) {
      this.vertices = prev;
      this.closed = false;
    }
  }

  canCreateSession(): boolean {
    return this.vertices.length >= 3;
  }

  /** Boundary message for the service, in radians (source space). */
  toBoundary(): Array<{ phi: number; theta: number }> {
    return this.vertices.map((v) => ({
      phi: (v.x / this.imageWidth) * TWO_PI,
      theta: (v.y / this.imageHeight) * Math.PI,
    }));
  }
}

export function normalizeAnchor(anchor: Anchor): Anchor {
  return { phi: wrapPhi(anchor.phi), theta: clampTheta(anchor.theta) };
}
