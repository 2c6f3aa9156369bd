/** Debounced scheduling and stale-response protection for service calls. */

// Must stay at or below the 250ms ceiling the UI promises for edit latency.
export const DEFAULT_DEBOUNCE_MS = 200;

/** Collapses a burst of calls into one trailing invocation. */
export class Debouncer {
  private timer: ReturnType<typeof setTimeout> | null = null;

  constructor(readonly delayMs: number = DEFAULT_DEBOUNCE_MS) {}

  get armed(): boolean {
    return this.timer !== null;
  }

  schedule(run: () => void): void {
    if (this.timer !== null) {
      clearTimeout(this.timer);
    }
    this.timer = setTimeout(() => {
      this.timer = null;
      run();
    }, this.delayMs);
  }

  cancel(): void {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
  }
}

/**
 * Monotone sequence gate: responses are applied only if no response from a
 * later request has already been applied, so out-of-order arrivals never
 * overwrite fresher data.
 */
export class SequenceGate {
  private issued = 0;
  private applied = 0;

  /** Reserve the sequence number for a request about to be sent. */
  next(): number {
    this.issued += 1;
    return this.issued;
  }

  /** True if the response for this sequence number should be applied. */
  accept(sequence: number): boolean {
    if (sequence <= this.applied) {
      return false;
    }
    this.applied = sequence;
    return true;
  }
}
