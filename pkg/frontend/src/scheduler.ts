/** Serializes label requests: at most one in flight, at most four per
 * second, and only the newest pending request survives (intermediate
 * parameter changes are coalesced; responses for superseded requests are
 * dropped). */

export interface SchedulerClock {
  now(): number;
  sleep(ms: number): Promise<void>;
}

const realClock: SchedulerClock = {
  now: () => Date.now(),
  sleep: (ms) => new Promise((resolve) => setTimeout(resolve, ms)),
};

export class RequestScheduler<Req, Resp> {
  private pending: Req | null = null;
  private pumping = false;
  private lastSentAt = -Infinity;
  private generation = 0;

  constructor(
    private send: (request: Req) => Promise<Resp>,
    private apply: (response: Resp, request: Req) => void,
    private onError: (error: unknown) => void = () => {},
    private minIntervalMs = 250,
    private clock: SchedulerClock = realClock,
  ) {}

  /** Queue a request; any not-yet-sent previous request is replaced. */
  submit(request: Req): void {
    this.pending = request;
    this.generation += 1;
    void this.pump();
  }

  /** True while a request is queued or in flight. */
  get busy(): boolean {
    return this.pumping || this.pending !== null;
  }

  private async pump(): Promise<void> {
    if (this.pumping) return;
    this.pumping = true;
    try {
      while (this.pending !== null) {
        const wait = this.lastSentAt + this.minIntervalMs - this.clock.now();
        if (wait > 0) {
          await this.clock.sleep(wait);
          continue; // pending may have been replaced while sleeping
        }
        const request = this.pending;
        const generation = this.generation;
        this.pending = null;
        this.lastSentAt = this.clock.now();
        try {
          const response = await this.send(request);
          // newest wins: drop the response if a newer request arrived
          if (this.generation === generation) {
            this.apply(response, request);
          }
        } catch (error) {
          if (this.generation === generation) {
            this.onError(error);
          }
        }
      }
    } finally {
      this.pumping = false;
    }
  }
}
