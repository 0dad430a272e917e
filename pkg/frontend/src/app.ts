import { ApiError, NetworkError, ReviewApiClient, type ReviewApi } from "./api";
import { ClipPlayer } from "./player";
import { OfflineQueue } from "./queue";
import { SCORES, asScore, type NextSample, type Score } from "./types";

export interface AppOptions {
  reviewerId: string;
  retryDelayMs?: number;
}

/**
 * Keyboard-first review loop: show clip + justification, take a 1-5 score,
 * advance. Scores can only enter through the five buttons or the 1-5 keys,
 * so an out-of-range submission has no code path. The view never receives
 * the ground-truth label or the model's decision (the server does not send
 * them), keeping the review blind.
 */
export class ReviewApp {
  current: NextSample | null = null;
  done = false;
  submitting = false;
  private player: ClipPlayer | null = null;
  private chain: Promise<void> = Promise.resolve();
  private retryTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ReviewApi,
    private readonly queue: OfflineQueue,
    private readonly options: AppOptions,
  ) {}

  /** Await all in-flight handler work, including tasks queued by tasks. */
  async settle(): Promise<void> {
    let current: Promise<void>;
    do {
      current = this.chain;
      await current;
    } while (current !== this.chain);
  }

  private enqueueTask(task: () => Promise<void>): void {
    this.chain = this.chain.then(task, task);
  }

  start(): void {
    this.renderChrome();
    document.addEventListener("keydown", (event) => this.handleKey(event));
    this.enqueueTask(() => this.loadNext());
  }

  private renderChrome(): void {
    this.root.innerHTML = `
      <header>
        <h1>Semiology review</h1>
        <span id="progress"></span>
      </header>
      <div id="banner" class="banner hidden"></div>
      <main id="sample" class="hidden">
        <h2 id="feature-name"></h2>
        <div class="clip">
          <img id="clip-frame" alt="clip frame" />
          <button id="raw-toggle" type="button">full recording</button>
        </div>
        <blockquote id="justification"></blockquote>
        <div id="score-row"></div>
        <div id="inline-error" class="error hidden"></div>
        <p class="hint">keys 1&ndash;5 submit a faithfulness score; r toggles the full recording</p>
      </main>
      <main id="done-screen" class="hidden">
        <h2>All samples scored</h2>
        <p id="done-summary"></p>
      </main>
    `;
    const row = this.el("score-row");
    for (const score of SCORES) {
      const button = document.createElement("button");
      button.type = "button";
      button.className = "score-button";
      button.dataset.score = String(score);
      button.textContent = `${score} (${score * 20}%)`;
      button.addEventListener("click", () => this.submit(score));
      row.appendChild(button);
    }
    this.el("raw-toggle").addEventListener("click", () => this.toggleRaw());
  }

  private el(id: string): HTMLElement {
    const element = this.root.querySelector<HTMLElement>(`#${id}`);
    if (!element) {
      throw new Error(`missing element #${id}`);
    }
    return element;
  }

  handleKey(event: KeyboardEvent): void {
    if (event.key === "r" || event.key === "R") {
      this.toggleRaw();
      return;
    }
    const score = asScore(Number.parseInt(event.key, 10));
    if (score === null) {
      return; // every other key is inert: no submission path exists
    }
    this.submit(score);
  }

  submit(score: Score, sample: NextSample | null = this.current): void {
    if (!sample || this.submitting || this.done) {
      return;
    }
    this.submitting = true;
    this.enqueueTask(async () => {
      const pending = {
        sample_id: sample.sample_id,
        reviewer_id: this.options.reviewerId,
        score,
      };
      try {
        const ack = await this.api.submitScore(pending);
        this.submitting = false;
        this.showBanner(ack.overwrite ? "score overwritten (resubmission)" : null);
        await this.flushQueued();
        await this.loadNext();
      } catch (err) {
        this.submitting = false;
        if (err instanceof NetworkError) {
          // offline: keep the score, advance, deliver on reconnect
          this.queue.enqueue(pending);
          this.showBanner(`offline: ${this.queue.length} score(s) queued locally`);
          await this.loadNext();
          return;
        }
        // non-2xx: roll back to the same sample and surface the error inline
        const message =
          err instanceof ApiError ? `rejected (${err.status}): ${err.message}` : String(err);
        this.showInlineError(message);
      }
    });
  }

  private async flushQueued(): Promise<void> {
    if (this.queue.length === 0) {
      return;
    }
    const delivered = await this.queue.flush((pending) => this.api.submitScore(pending));
    if (delivered > 0 && this.queue.length === 0) {
      this.showBanner("queued scores delivered");
    }
  }

  async loadNext(): Promise<void> {
    this.showInlineError(null);
    let next: NextSample | "done";
    try {
      next = await this.api.fetchNext(this.options.reviewerId);
    } catch (err) {
      if (err instanceof NetworkError) {
        this.showBanner("server unreachable; retrying...");
        this.scheduleRetry();
        return;
      }
      this.showBanner(`server error: ${String(err)}`);
      return;
    }
    if (next === "done") {
      this.renderDone();
      return;
    }
    this.current = next;
    this.done = false;
    this.renderSample(next);
    await this.startPlayer(next);
  }

  private scheduleRetry(): void {
    if (this.retryTimer !== null) {
      return;
    }
    this.retryTimer = setTimeout(() => {
      this.retryTimer = null;
      this.enqueueTask(() => this.loadNext());
    }, this.options.retryDelayMs ?? 2000);
  }

  private renderSample(sample: NextSample): void {
    this.el("sample").classList.remove("hidden");
    this.el("done-screen").classList.add("hidden");
    this.el("feature-name").textContent = sample.feature_name;
    this.el("justification").textContent = sample.justification || "(no justification text)";
    this.el("progress").textContent = `${sample.progress.scored} / ${sample.progress.total} scored`;
  }

  private async startPlayer(sample: NextSample): Promise<void> {
    this.player?.stop();
    this.player = null;
    try {
      const info = await this.api.fetchMediaInfo(sample.media_url);
      const img = this.el("clip-frame") as HTMLImageElement;
      this.player = new ClipPlayer(img, (t) => this.api.frameUrl(sample.clip_url, t), info);
      this.player.start();
    } catch {
      // clip metadata is cosmetic; scoring must keep working without it
    }
  }

  private toggleRaw(): void {
    if (!this.player) {
      return;
    }
    const raw = this.player.toggleRaw();
    this.el("raw-toggle").textContent = raw ? "supporting segment" : "full recording";
  }

  private renderDone(): void {
    this.current = null;
    this.done = true;
    this.player?.stop();
    this.el("sample").classList.add("hidden");
    this.el("done-screen").classList.remove("hidden");
    this.enqueueTask(async () => {
      try {
        const summary = await this.api.fetchSummary();
        this.el("done-summary").textContent =
          `${summary.count} scores recorded; median ${summary.median ?? "n/a"}.`;
      } catch {
        this.el("done-summary").textContent = "summary unavailable";
      }
    });
  }

  showBanner(message: string | null): void {
    const banner = this.el("banner");
    if (message) {
      banner.textContent = message;
      banner.classList.remove("hidden");
    } else {
      banner.textContent = "";
      banner.classList.add("hidden");
    }
  }

  private showInlineError(message: string | null): void {
    const element = this.el("inline-error");
    if (message) {
      element.textContent = message;
      element.classList.remove("hidden");
    } else {
      element.textContent = "";
      element.classList.add("hidden");
    }
  }
}

export function bootstrap(): ReviewApp {
  const root = document.getElementById("app");
  if (!root) {
    throw new Error("missing #app root");
  }
  const reviewerId =
    new URLSearchParams(window.location.search).get("reviewer") ?? "anonymous";
  const app = new ReviewApp(
    root,
    new ReviewApiClient(""),
    new OfflineQueue(window.localStorage),
    { reviewerId },
  );
  app.start();
  window.addEventListener("online", () => {
    void app.loadNext();
  });
  return app;
}
