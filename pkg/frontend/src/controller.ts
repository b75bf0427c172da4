/**
 * Headless editor controller: boundary drawing, session creation and the
 * live anchor drag. All pixels displayed by the UI come from the service
 * responses stored here; the browser layer (main.ts) only binds events
 * and paints blobs.
 */

import { ServiceClient, ServiceError } from "./api.js";
import { BoundaryEditor, normalizeAnchor } from "./state.js";
import { InFlightOne } from "./throttle.js";
import type { Anchor, CloneTimings, SessionInfo, SplitMode } from "./types.js";

export interface ControllerEvents {
  onComposite?: (blob: Uint8Array, anchor: Anchor) => void;
  onLatency?: (t: CloneTimings) => void;
  onToast?: (message: string) => void;
}

interface ClonePayload {
  anchor: Anchor;
  preview: boolean;
}

export class EditorController {
  boundary: BoundaryEditor;
  session: SessionInfo | null = null;
  targetId: string | null = null;
  anchor: Anchor = { phi: Math.PI, theta: Math.PI / 2 };
  splitMode: SplitMode = "auto";
  supersampling = 16;
  previewRect: { x: number; y: number; w: number; h: number } | null = null;
  displayed: Uint8Array | null = null;
  displayedAnchor: Anchor | null = null;

  private lastGoodAnchor: Anchor;
  private cloneQueue: InFlightOne<ClonePayload, Uint8Array>;

  constructor(
    private api: ServiceClient,
    imageWidth: number,
    imageHeight: number,
    private events: ControllerEvents = {},
  ) {
    this.boundary = new BoundaryEditor(imageWidth, imageHeight);
    this.lastGoodAnchor = this.anchor;
    this.cloneQueue = new InFlightOne(
      (p) => this.requestClone(p),
      (settled) => {
        if (settled.error !== undefined) {
          this.handleCloneError(settled.error);
        } else if (settled.result !== undefined) {
          this.displayed = settled.result;
          this.displayedAnchor = this.anchor;
          this.lastGoodAnchor = this.anchor;
          this.events.onComposite?.(settled.result, this.anchor);
        }
      },
    );
  }

  get cloneCallCount(): number {
    return this.cloneQueue.launched;
  }

  async createSession(source: Blob, target: Blob): Promise<SessionInfo> {
    if (!this.boundary.canCreateSession()) {
      throw new Error("boundary needs at least 3 vertices");
    }
    this.targetId = await this.api.uploadTarget(target);
    this.session = await this.api.createSession(source, this.boundary.toBoundary(), {
      split: this.splitMode,
      supersampling: this.supersampling,
    });
    if (this.session.split_plan?.flagged) {
      this.events.onToast?.(
        "splitting left a sub-region wider than 180°; expect artifacts",
      );
    }
    return this.session;
  }

  private async requestClone(p: ClonePayload): Promise<Uint8Array> {
    if (!this.session || !this.targetId) throw new Error("no session");
    const result = await this.api.clone(this.session.session_id, this.targetId, p.anchor, {
      // previews drop to single sampling for latency; release renders full quality
      supersampling: p.preview ? 1 : this.supersampling,
      rect: p.preview && this.previewRect ? this.previewRect : undefined,
    });
    this.events.onLatency?.(result.timings);
    return result.blob;
  }

  private handleCloneError(error: unknown): void {
    if (error instanceof ServiceError && error.status === 422) {
      this.anchor = this.lastGoodAnchor; // snap back, keep interacting
      this.events.onToast?.(error.hint ? `${error.detail} (${error.hint})` : error.detail);
    } else {
      this.events.onToast?.(String(error));
    }
  }

  /** Pointer-move during a drag: wraps the seam, one request in flight. */
  dragAnchor(anchor: Anchor): void {
    this.anchor = normalizeAnchor(anchor);
    this.cloneQueue.schedule({ anchor: this.anchor, preview: true });
  }

  /** Pointer-up: request the full-quality composite for the rest position. */
  releaseAnchor(): void {
    this.cloneQueue.schedule({ anchor: this.anchor, preview: false });
  }

  /** Resolves when the request queue is empty (tests and teardown). */
  settle(): Promise<void> {
    return this.cloneQueue.drain();
  }
}
