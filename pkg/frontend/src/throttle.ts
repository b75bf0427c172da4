/**
 * Latest-wins scheduler with at most one task in flight.
 *
 * Pointer-move storms call `schedule` freely; while a request runs, only
 * the newest payload is remembered and fired when the running one
 * settles. Results are delivered with a sequence number so consumers
 * can discard stale completions even if the transport reorders them.
 */

export interface Settled<R> {
  seq: number;
  result?: R;
  error?: unknown;
}

export class InFlightOne<P, R> {
  private running = false;
  private pending: P | null = null;
  private seq = 0;
  private delivered = -1;
  private idleResolvers: Array<() => void> = [];

  constructor(
    private run: (payload: P) => Promise<R>,
    private onSettle: (s: Settled<R>) => void,
  ) {}

  /** Number of times `run` has been started. */
  launched = 0;

  schedule(payload: P): void {
    if (this.running) {
      this.pending = payload; // overwrite: only the latest matters
      return;
    }
    void this.launch(payload);
  }

  private async launch(payload: P): Promise<void> {
    this.running = true;
    const mySeq = this.seq++;
    this.launched += 1;
    let settled: Settled<R>;
    try {
      settled = { seq: mySeq, result: await this.run(payload) };
    } catch (error) {
      settled = { seq: mySeq, error };
    }
    if (mySeq > this.delivered) {
      this.delivered = mySeq;
      this.onSettle(settled);
    }
    this.running = false;
    const next = this.pending;
    this.pending = null;
    if (next !== null) {
      void this.launch(next);
    } else {
      this.idleResolvers.splice(0).forEach((r) => r());
    }
  }

  /** Resolves once no task is running and nothing is pending. */
  drain(): Promise<void> {
    if (!this.running && this.pending === null) return Promise.resolve();
    return new Promise((resolve) => this.idleResolvers.push(resolve));
  }
}
