export interface Vertex {
  x: number; // source-image pixel coordinates
  y: number;
}

export interface Anchor {
  phi: number; // radians, [0, 2*pi)
  theta: number; // radians, [0, pi]
}

export interface MeshStats {
  boundary_samples: number;
  vertices: number;
  triangles: number;
}

export interface SplitPlanInfo {
  method: string;
  path: number[];
  left_boundary: number[];
  right_boundary: number[];
  sub_spans: number[];
  flagged: boolean;
}

export interface SessionInfo {
  session_id: string;
  mesh_stats: MeshStats;
  split_plan: SplitPlanInfo | null;
}

export interface CloneTimings {
  membraneMs: number;
  rasterMs: number;
}

export interface CloneResult {
  blob: Uint8Array;
  timings: CloneTimings;
}

export interface CloneOptions {
  supersampling?: number;
  rect?: { x: number; y: number; w: number; h: number };
}

export type SplitMode = "auto" | "off" | "median" | "pca-sphere" | "pca-projected";
