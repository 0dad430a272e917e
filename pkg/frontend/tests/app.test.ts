import { beforeEach, describe, expect, it, vi } from "vitest";

import { ApiError, NetworkError, type ReviewApi } from "../src/api";
import { ReviewApp } from "../src/app";
import { OfflineQueue } from "../src/queue";
import type { MediaInfo, NextSample, PendingScore } from "../src/types";

function sample(id: string, scored = 0): NextSample {
  return {
    sample_id: id,
    feature_id: "tonic",
    feature_name: "Tonic",
    justification: `justification for ${id}`,
    clip_url: `/api/review/frame/${id}`,
    media_url: `/api/review/media/${id}`,
    progress: { scored, total: 3 },
  };
}

const media: MediaInfo = {
  video_id: "v",
  duration_s: 16,
  start_s: 2,
  end_s: 8,
  frame_interval_s: 0.5,
};

class FakeApi implements ReviewApi {
  queue: (NextSample | "done")[] = [];
  submissions: PendingScore[] = [];
  submitError: Error | null = null;
  nextError: Error | null = null;

  async fetchNext(): Promise<NextSample | "done"> {
    if (this.nextError) {
      const error = this.nextError;
      this.nextError = null;
      throw error;
    }
    return this.queue.length ? this.queue.shift()! : "done";
  }

  async submitScore(pending: PendingScore) {
    if (this.submitError) {
      const error = this.submitError;
      this.submitError = null;
      throw error;
    }
    this.submissions.push(pending);
    return { status: "ok", overwrite: false };
  }

  async fetchSummary() {
    return {
      feature_id: null,
      histogram: { "1": 0, "2": 0, "3": 0, "4": 0, "5": 0 },
      median: null,
      proportion_ge_3: null,
      count: this.submissions.length,
    };
  }

  async fetchMediaInfo() {
    return media;
  }

  frameUrl(clipUrl: string, t: number) {
    return `${clipUrl}?t=${t}`;
  }
}

function makeApp(api: FakeApi) {
  document.body.innerHTML = '<div id="app"></div>';
  localStorage.clear();
  const root = document.getElementById("app")!;
  const app = new ReviewApp(root, api, new OfflineQueue(localStorage), {
    reviewerId: "tester",
    retryDelayMs: 5,
  });
  app.start();
  return { app, root };
}

function press(key: string) {
  document.dispatchEvent(new KeyboardEvent("keydown", { key }));
}

beforeEach(() => {
  vi.restoreAllMocks();
});

describe("ReviewApp", () => {
  it("renders the first sample with justification and progress", async () => {
    const api = new FakeApi();
    api.queue = [sample("tonic:a")];
    const { app, root } = makeApp(api);
    await app.settle();
    expect(root.querySelector("#feature-name")!.textContent).toBe("Tonic");
    expect(root.querySelector("#justification")!.textContent).toContain("justification for tonic:a");
    expect(root.querySelector("#progress")!.textContent).toBe("0 / 3 scored");
  });

  it("never renders ground truth or the model decision", async () => {
    const api = new FakeApi();
    api.queue = [sample("tonic:a")];
    const { app, root } = makeApp(api);
    await app.settle();
    const text = root.textContent ?? "";
    expect(text).not.toMatch(/true_positive|true_negative|ground truth|present/i);
  });

  it("submits scores for keys 1-5 and advances", async () => {
    const api = new FakeApi();
    api.queue = [sample("tonic:a"), sample("tonic:b", 1)];
    const { app, root } = makeApp(api);
    await app.settle();
    press("4");
    await app.settle();
    expect(api.submissions).toEqual([
      { sample_id: "tonic:a", reviewer_id: "tester", score: 4 },
    ]);
    expect(root.querySelector("#justification")!.textContent).toContain("tonic:b");
  });

  it("ignores every key outside 1-5 (no emission path)", async () => {
    const api = new FakeApi();
    api.queue = [sample("tonic:a")];
    const { app } = makeApp(api);
    await app.settle();
    for (const key of ["0", "6", "7", "8", "9", "a", "Enter", " ", "-", "F1"]) {
      press(key);
    }
    await app.settle();
    expect(api.submissions).toEqual([]);
  });

  it("offers exactly five score buttons, 1..5", async () => {
    const api = new FakeApi();
    api.queue = [sample("tonic:a")];
    const { app, root } = makeApp(api);
    await app.settle();
    const buttons = [...root.querySelectorAll<HTMLButtonElement>(".score-button")];
    expect(buttons.map((b) => b.dataset.score)).toEqual(["1", "2", "3", "4", "5"]);
    buttons[2]!.click();
    await app.settle();
    expect(api.submissions[0]!.score).toBe(3);
  });

  it("rolls back on a rejected submission and shows the error inline", async () => {
    const api = new FakeApi();
    api.queue = [sample("tonic:a")];
    const { app, root } = makeApp(api);
    await app.settle();
    api.submitError = new ApiError(422, "score out of range");
    press("2");
    await app.settle();
    // still on the same sample, error visible, nothing recorded
    expect(api.submissions).toEqual([]);
    expect(app.current?.sample_id).toBe("tonic:a");
    const error = root.querySelector("#inline-error")!;
    expect(error.classList.contains("hidden")).toBe(false);
    expect(error.textContent).toContain("422");
    // and scoring again after the hiccup works
    press("2");
    await app.settle();
    expect(api.submissions.length).toBe(1);
  });

  it("queues offline submissions locally and flushes on reconnect", async () => {
    const api = new FakeApi();
    api.queue = [sample("tonic:a"), sample("tonic:b", 1), sample("tonic:c", 2)];
    const { app, root } = makeApp(api);
    await app.settle();
    api.submitError = new NetworkError("offline");
    press("5");
    await app.settle();
    // queued, banner shown, advanced without data loss
    expect(api.submissions).toEqual([]);
    expect(new OfflineQueue(localStorage).length).toBe(1);
    expect(root.querySelector("#banner")!.textContent).toContain("queued");
    expect(app.current?.sample_id).toBe("tonic:b");
    // next successful submission flushes the queue first
    press("1");
    await app.settle();
    const ids = api.submissions.map((p) => [p.sample_id, p.score]);
    expect(ids).toContainEqual(["tonic:a", 5]);
    expect(ids).toContainEqual(["tonic:b", 1]);
    expect(new OfflineQueue(localStorage).length).toBe(0);
  });

  it("shows a retry banner when the server is unreachable and recovers", async () => {
    vi.useFakeTimers();
    try {
      const api = new FakeApi();
      api.nextError = new NetworkError("refused");
      api.queue = [sample("tonic:a")];
      const { app, root } = makeApp(api);
      await app.settle();
      expect(root.querySelector("#banner")!.textContent).toContain("retrying");
      await vi.advanceTimersByTimeAsync(10);
      await app.settle();
      expect(app.current?.sample_id).toBe("tonic:a");
    } finally {
      vi.useRealTimers();
    }
  });

  it("shows the overwrite flag when the server reports a resubmission", async () => {
    const api = new FakeApi();
    api.queue = [sample("tonic:a"), sample("tonic:b", 1)];
    const { app, root } = makeApp(api);
    await app.settle();
    const submit = api.submitScore.bind(api);
    api.submitScore = async (pending: PendingScore) => {
      await submit(pending);
      return { status: "ok", overwrite: true };
    };
    press("3");
    await app.settle();
    const banner = root.querySelector("#banner")!;
    expect(banner.classList.contains("hidden")).toBe(false);
    expect(banner.textContent).toContain("overwritten");
  });

  it("reaches the done screen after the last sample", async () => {
    const api = new FakeApi();
    api.queue = [sample("tonic:a", 2)];
    const { app, root } = makeApp(api);
    await app.settle();
    press("3");
    await app.settle();
    expect(app.done).toBe(true);
    expect(root.querySelector("#done-screen")!.classList.contains("hidden")).toBe(false);
    expect(root.querySelector("#done-summary")!.textContent).toContain("1 scores recorded");
  });

  it("toggles the raw-recording view with the r key", async () => {
    const api = new FakeApi();
    api.queue = [sample("tonic:a")];
    const { app, root } = makeApp(api);
    await app.settle();
    const toggle = root.querySelector("#raw-toggle")!;
    expect(toggle.textContent).toBe("full recording");
    press("r");
    await app.settle();
    expect(toggle.textContent).toBe("supporting segment");
    press("R");
    await app.settle();
    expect(toggle.textContent).toBe("full recording");
  });
});
