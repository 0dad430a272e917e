import type { MediaInfo, NextSample, PendingScore, ScoreAck, SummaryPayload } from "./types";

/** Server answered, but not with 2xx (422 bad score, 404 unknown sample, ...). */
export class ApiError extends Error {
  constructor(public readonly status: number, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

/** fetch itself failed: offline, server down, connection reset. */
export class NetworkError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "NetworkError";
  }
}

/** What the app needs from the server; tests substitute fakes. */
export interface ReviewApi {
  fetchNext(reviewerId: string): Promise<NextSample | "done">;
  submitScore(pending: PendingScore): Promise<ScoreAck>;
  fetchSummary(featureId?: string): Promise<SummaryPayload>;
  fetchMediaInfo(mediaUrl: string): Promise<MediaInfo>;
  frameUrl(clipUrl: string, t: number): string;
}

export class ReviewApiClient implements ReviewApi {
  constructor(private readonly baseUrl: string = "") {}

  private url(path: string): string {
    return `${this.baseUrl}${path}`;
  }

  private async request(path: string, init?: RequestInit): Promise<Response> {
    let response: Response;
    try {
      response = await fetch(this.url(path), init);
    } catch (err) {
      throw new NetworkError(err instanceof Error ? err.message : String(err));
    }
    if (!response.ok && response.status !== 204) {
      const body = await response.text().catch(() => "");
      throw new ApiError(response.status, body || response.statusText);
    }
    return response;
  }

  /** Next unscored sample for this reviewer, or "done" (HTTP 204). */
  async fetchNext(reviewerId: string): Promise<NextSample | "done"> {
    const response = await this.request(
      `/api/review/next?reviewer=${encodeURIComponent(reviewerId)}`,
    );
    if (response.status === 204) {
      return "done";
    }
    return (await response.json()) as NextSample;
  }

  async submitScore(pending: PendingScore): Promise<ScoreAck> {
    const response = await this.request("/api/review/score", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(pending),
    });
    return (await response.json()) as ScoreAck;
  }

  async fetchSummary(featureId?: string): Promise<SummaryPayload> {
    const query = featureId ? `?feature=${encodeURIComponent(featureId)}` : "";
    const response = await this.request(`/api/review/summary${query}`);
    return (await response.json()) as SummaryPayload;
  }

  async fetchMediaInfo(mediaUrl: string): Promise<MediaInfo> {
    const response = await this.request(mediaUrl);
    return (await response.json()) as MediaInfo;
  }

  frameUrl(clipUrl: string, t: number): string {
    return this.url(`${clipUrl}?t=${t.toFixed(3)}`);
  }
}
