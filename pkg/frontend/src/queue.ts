import type { PendingScore } from "./types";

const STORAGE_KEY = "semio-review-queue";

interface StorageLike {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

/**
 * Scores that could not reach the server wait here (persisted, so a page
 * reload loses nothing) and are flushed in order once a submit succeeds
 * again or the browser comes back online.
 */
export class OfflineQueue {
  constructor(private readonly storage: StorageLike) {}

  private read(): PendingScore[] {
    const raw = this.storage.getItem(STORAGE_KEY);
    if (!raw) {
      return [];
    }
    try {
      return JSON.parse(raw) as PendingScore[];
    } catch {
      return [];
    }
  }

  private write(items: PendingScore[]): void {
    if (items.length === 0) {
      this.storage.removeItem(STORAGE_KEY);
    } else {
      this.storage.setItem(STORAGE_KEY, JSON.stringify(items));
    }
  }

  get length(): number {
    return this.read().length;
  }

  enqueue(pending: PendingScore): void {
    const items = this.read();
    items.push(pending);
    this.write(items);
  }

  /**
   * Submit queued scores in order. Stops at the first network failure and
   * keeps the remainder queued; returns how many were delivered.
   */
  async flush(submit: (pending: PendingScore) => Promise<unknown>): Promise<number> {
    const items = this.read();
    let delivered = 0;
    while (delivered < items.length) {
      try {
        await submit(items[delivered]!);
        delivered += 1;
      } catch {
        break;
      }
    }
    this.write(items.slice(delivered));
    return delivered;
  }
}
