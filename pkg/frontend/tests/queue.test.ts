import { beforeEach, describe, expect, it, vi } from "vitest";

import { OfflineQueue } from "../src/queue";
import type { PendingScore } from "../src/types";

function pending(id: string, score: 1 | 2 | 3 | 4 | 5 = 3): PendingScore {
  return { sample_id: id, reviewer_id: "r", score };
}

beforeEach(() => {
  localStorage.clear();
});

describe("OfflineQueue", () => {
  it("persists enqueued scores across instances", () => {
    const a = new OfflineQueue(localStorage);
    a.enqueue(pending("s1"));
    a.enqueue(pending("s2", 5));
    const b = new OfflineQueue(localStorage);
    expect(b.length).toBe(2);
  });

  it("flushes in order and clears on success", async () => {
    const queue = new OfflineQueue(localStorage);
    queue.enqueue(pending("s1"));
    queue.enqueue(pending("s2"));
    const seen: string[] = [];
    const delivered = await queue.flush(async (p) => {
      seen.push(p.sample_id);
    });
    expect(delivered).toBe(2);
    expect(seen).toEqual(["s1", "s2"]);
    expect(queue.length).toBe(0);
  });

  it("keeps undelivered items when a flush fails midway", async () => {
    const queue = new OfflineQueue(localStorage);
    queue.enqueue(pending("s1"));
    queue.enqueue(pending("s2"));
    queue.enqueue(pending("s3"));
    const submit = vi
      .fn<(p: PendingScore) => Promise<void>>()
      .mockResolvedValueOnce(undefined)
      .mockRejectedValueOnce(new Error("offline again"));
    const delivered = await queue.flush(submit);
    expect(delivered).toBe(1);
    expect(queue.length).toBe(2);
    // a later flush resumes with the remaining items, in order
    const rest: string[] = [];
    await queue.flush(async (p) => {
      rest.push(p.sample_id);
    });
    expect(rest).toEqual(["s2", "s3"]);
  });

  it("tolerates corrupted storage", () => {
    localStorage.setItem("semio-review-queue", "{not json");
    expect(new OfflineQueue(localStorage).length).toBe(0);
  });
});
