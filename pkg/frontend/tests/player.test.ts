import { describe, expect, it } from "vitest";

import { ClipPlayer, nextTime } from "../src/player";
import type { MediaInfo } from "../src/types";

const info: MediaInfo = {
  video_id: "v",
  duration_s: 16,
  start_s: 4,
  end_s: 10,
  frame_interval_s: 0.5,
};

describe("nextTime", () => {
  it("steps forward inside the range", () => {
    expect(nextTime(4.0, 4, 10, 0.5)).toBe(4.5);
  });

  it("wraps back to the range start at the end", () => {
    expect(nextTime(9.5, 4, 10, 0.5)).toBe(4);
    expect(nextTime(9.9, 4, 10, 0.5)).toBe(4);
  });

  it("recovers when the time is outside the range", () => {
    expect(nextTime(0, 4, 10, 0.5)).toBe(4);
  });
});

describe("ClipPlayer", () => {
  it("loops the supporting segment and toggles to the full recording", () => {
    const img = document.createElement("img");
    const player = new ClipPlayer(img, (t) => `/frame?t=${t}`, info);
    expect(player.currentTime).toBe(4);
    for (let i = 0; i < 12; i += 1) {
      player.tick();
      expect(player.currentTime).toBeGreaterThanOrEqual(4);
      expect(player.currentTime).toBeLessThan(10);
    }
    expect(player.toggleRaw()).toBe(true);
    expect(player.currentTime).toBe(0);
    for (let i = 0; i < 40; i += 1) {
      player.tick();
      expect(player.currentTime).toBeLessThan(16);
    }
    expect(player.toggleRaw()).toBe(false);
    expect(player.currentTime).toBe(4);
    expect(img.src).toContain("/frame?t=");
  });
});
