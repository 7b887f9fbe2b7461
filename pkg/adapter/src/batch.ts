/**
 * Order-preserving batch collector. Items flush when the batch is full or
 * `flushMs` after the oldest queued item arrived, whichever comes first.
 * Flush handlers never overlap: a flush that becomes due while another is
 * still running waits its turn, so a single writer downstream stays single.
 */
export class BatchQueue<T> {
  private pending: T[] = [];
  private timer: ReturnType<typeof setTimeout> | null = null;
  private chain: Promise<void> = Promise.resolve();
  private failure: unknown = null;

  constructor(
    private readonly size: number,
    private readonly flushMs: number,
    private readonly onFlush: (batch: T[]) => void | Promise<void>,
  ) {}

  push(item: T): void {
    this.pending.push(item);
    if (this.pending.length >= this.size) {
      this.flushNow();
    } else if (this.timer === null) {
      this.timer = setTimeout(() => this.flushNow(), this.flushMs);
    }
  }

  /** Hand anything still queued to the handler and wait for all handlers. */
  async drain(): Promise<void> {
    this.flushNow();
    await this.chain;
    if (this.failure !== null) {
      throw this.failure;
    }
  }

  private flushNow(): void {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    if (this.pending.length === 0) {
      return;
    }
    const batch = this.pending;
    this.pending = [];
    this.chain = this.chain.then(async () => {
      try {
        await this.onFlush(batch);
      } catch (err) {
        // keep later batches flowing; drain() reports the first failure
        if (this.failure === null) {
          this.failure = err;
        }
      }
    });
  }
}
