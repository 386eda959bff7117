/**
 * Countdown display state. The server's remaining pot is the authority:
 * every server response re-syncs the value, local ticks only count it down
 * between syncs, and the display never goes negative.
 */
export class CountdownTimer {
  private remaining: number;

  constructor(initialRemaining: number) {
    this.remaining = Math.max(0, Math.floor(initialRemaining));
  }

  get seconds(): number {
    return this.remaining;
  }

  get expired(): boolean {
    return this.remaining <= 0;
  }

  /** Re-sync to the server-reported remaining pot. */
  sync(serverRemaining: number): number {
    this.remaining = Math.max(0, Math.floor(serverRemaining));
    return this.remaining;
  }

  /** One local one-second tick; clamped at zero. */
  tick(): number {
    this.remaining = Math.max(0, this.remaining - 1);
    return this.remaining;
  }
}
