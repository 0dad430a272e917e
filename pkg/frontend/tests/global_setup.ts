// Spawns the real Python review service against a freshly generated
// detection run, so the scripted session drives actual HTTP + storage.
import { execFileSync, spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { createServer } from "node:net";
import { tmpdir } from "node:os";
import { join } from "node:path";
import type { TestProject } from "vitest/node";

async function freePort(): Promise<number> {
  return await new Promise((resolve, reject) => {
    const server = createServer();
    server.listen(0, "127.0.0.1", () => {
      const address = server.address();
      if (address && typeof address === "object") {
        const port = address.port;
        server.close(() => resolve(port));
      } else {
        reject(new Error("no port"));
      }
    });
  });
}

async function waitForServer(url: string, timeoutMs = 30_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const response = await fetch(`${url}/api/review/summary`);
      if (response.ok) {
        return;
      }
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 150));
  }
  throw new Error(`review server at ${url} did not come up`);
}

let child: ChildProcess | null = null;
let workDir: string | null = null;

export default async function setup(project: TestProject): Promise<() => Promise<void>> {
  workDir = mkdtempSync(join(tmpdir(), "semio-ui-test-"));
  const prep = execFileSync(
    "python3",
    [join(import.meta.dirname, "helpers", "prepare_review_fixture.py"), workDir],
    { encoding: "utf-8" },
  );
  const { manifest, out } = JSON.parse(prep.trim().split("\n").at(-1)!) as {
    manifest: string;
    out: string;
  };

  const port = await freePort();
  child = spawn(
    "python3",
    ["-m", "semio.cli", "serve-review", "--manifest", manifest, "--out", out,
     "--port", String(port)],
    { stdio: ["ignore", "inherit", "inherit"] },
  );
  const serverUrl = `http://127.0.0.1:${port}`;
  await waitForServer(serverUrl);

  project.provide("serverUrl", serverUrl);
  project.provide("outDir", out);

  return async () => {
    child?.kill("SIGINT");
    await new Promise((resolve) => setTimeout(resolve, 300));
    child?.kill("SIGKILL");
    if (workDir) {
      rmSync(workDir, { recursive: true, force: true });
    }
  };
}

declare module "vitest" {
  export interface ProvidedContext {
    serverUrl: string;
    outDir: string;
  }
}
