import type { MediaInfo } from "./types";

/**
 * Advance playback time by one frame interval, looping inside the active
 * range. Exported separately so the loop arithmetic is unit-testable.
 */
export function nextTime(t: number, start: number, end: number, step: number): number {
  const advanced = t + step;
  return advanced >= end || advanced < start ? start : advanced;
}

/**
 * Frame-stepping clip player. The pipeline's video container is not
 * browser-decodable, so the server exposes single frames as PNG and the
 * player walks them at the sampling rate, looping the supporting segment
 * by default with a toggle for the full recording.
 */
export class ClipPlayer {
  private timer: ReturnType<typeof setInterval> | null = null;
  private t = 0;
  private raw = false;

  constructor(
    private readonly img: HTMLImageElement,
    private readonly frameUrl: (t: number) => string,
    private readonly info: MediaInfo,
  ) {
    this.t = this.rangeStart();
  }

  private rangeStart(): number {
    return this.raw ? 0 : this.info.start_s;
  }

  private rangeEnd(): number {
    return this.raw ? this.info.duration_s : this.info.end_s;
  }

  get rawMode(): boolean {
    return this.raw;
  }

  get currentTime(): number {
    return this.t;
  }

  start(): void {
    this.stop();
    this.render();
    this.timer = setInterval(() => this.tick(), this.info.frame_interval_s * 1000);
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  tick(): void {
    this.t = nextTime(this.t, this.rangeStart(), this.rangeEnd(), this.info.frame_interval_s);
    this.render();
  }

  toggleRaw(): boolean {
    this.raw = !this.raw;
    this.t = this.rangeStart();
    this.render();
    return this.raw;
  }

  private render(): void {
    this.img.src = this.frameUrl(this.t);
  }
}
