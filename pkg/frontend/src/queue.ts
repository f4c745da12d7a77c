/** One in-flight generate at a time; submissions during flight queue latest-wins. */

export class LatestWinsQueue<T, R> {
  private inFlight = false;
  private pending: T | null = null;

  constructor(
    private readonly run: (input: T) => Promise<R>,
    private readonly onResult: (input: T, result: R) => void,
    private readonly onError: (input: T, error: unknown) => void = () => {},
  ) {}

  get busy(): boolean {
    return this.inFlight;
  }

  /** Queue an input; if idle it runs immediately, otherwise it replaces any waiting one. */
  submit(input: T): void {
    if (this.inFlight) {
      this.pending = input;
      return;
    }
    void this.drain(input);
  }

  private async drain(input: T): Promise<void> {
    this.inFlight = true;
    try {
      let current: T | null = input;
      while (current !== null) {
        try {
          const result = await this.run(current);
          this.onResult(current, result);
        } catch (error) {
          this.onError(current, error);
        }
        current = this.pending;
        this.pending = null;
      }
    } finally {
      this.inFlight = false;
    }
  }
}
