/**
 * End-to-end linking: a chrono quad click must recolor exactly the
 * engine-reported fiber node ids red (earlier step) and yellow (later
 * step), verified by inspecting the viewer's scene state against the
 * patch. Runs once against recorded engine fixtures and once against a
 * live engine process over the wire protocol.
 */
import { spawn } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import net from "node:net";
import { tmpdir } from "node:os";
import { join, dirname } from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { routeClick } from "../src/picking";
import { SceneStore } from "../src/sceneStore";
import type { PatchFrame, RGBA, ServerFrame, WireRequest } from "../src/protocol";
import { handshake, snapshot, transcript } from "./fixtures";

const here = dirname(fileURLToPath(import.meta.url));
const repoRoot = join(here, "..", "..");

function sameColor(a: RGBA, b: RGBA): boolean {
  return a.length === b.length && a.every((v, i) => v === b[i]);
}

function highlightedIds(store: SceneStore, color: RGBA): Set<string> {
  const out = new Set<string>();
  for (const id of store.ids()) {
    const node = store.get(id);
    if (node && sameColor(node.doc.color, color)) out.add(id);
  }
  return out;
}

function verifyLinking(
  store: SceneStore,
  patch: PatchFrame["patch"],
  palette: { highlightEarlier: RGBA; highlightLater: RGBA },
  timePair: [number, number],
): void {
  const reportedRed = new Set<string>();
  const reportedYellow = new Set<string>();
  for (const [id, color] of Object.entries(patch.recolored)) {
    if (sameColor(color as RGBA, palette.highlightEarlier)) reportedRed.add(id);
    if (sameColor(color as RGBA, palette.highlightLater)) reportedYellow.add(id);
  }
  expect(reportedRed.size + reportedYellow.size).toBeGreaterThan(0);

  // scene inspection: exactly the reported nodes carry highlight colors
  expect(highlightedIds(store, palette.highlightEarlier)).toEqual(reportedRed);
  expect(highlightedIds(store, palette.highlightLater)).toEqual(reportedYellow);

  // and they are fiber nodes of the two linked time steps
  const [earlier, later] = timePair;
  const earlierPrefix = `grid/${String(earlier).padStart(3, "0")}/fiber/`;
  const laterPrefix = `grid/${String(later).padStart(3, "0")}/fiber/`;
  for (const id of reportedRed) expect(id.startsWith(earlierPrefix)).toBe(true);
  for (const id of reportedYellow) expect(id.startsWith(laterPrefix)).toBe(true);
}

describe("fixture-driven linking", () => {
  it("click recolors exactly the engine-reported fibers", () => {
    const store = new SceneStore();
    const snap = snapshot();
    store.loadSnapshot(snap.scene, snap.sceneVersion);
    const palette = handshake().palette;
    const entries = transcript();

    // entry 0 extracts the chart; entry 1 is the quad click
    const extract = entries[0]!;
    store.submitPatch(extract.response.patch, extract.response.sceneVersion);

    const click = entries[1]!;
    const request = click.request as Extract<
      WireRequest,
      { type: "click_chrono_quad" }
    >;
    const quadId =
      `chart/${request.chartId}/quad/` +
      `${String(request.timePair[0]).padStart(3, "0")}/` +
      `${String(request.binIndex).padStart(3, "0")}`;
    const quad = store.get(quadId);
    expect(quad?.doc.pick?.semantic).toBe("chronoQuad");

    // the viewer routes the pick to the identical request the engine saw
    const action = routeClick({ nodeId: quadId, pick: quad!.doc.pick! });
    expect(action).toEqual({ kind: "request", request });

    store.submitPatch(click.response.patch, click.response.sceneVersion);
    verifyLinking(store, click.response.patch, palette, request.timePair);
  });

  it("a second click reverts the first highlight", () => {
    const store = new SceneStore();
    const snap = snapshot();
    store.loadSnapshot(snap.scene, snap.sceneVersion);
    const palette = handshake().palette;
    const entries = transcript();
    for (const entry of entries.slice(0, 2)) {
      store.submitPatch(entry.response.patch, entry.response.sceneVersion);
    }
    const second = entries[2]!;
    const request = second.request as Extract<
      WireRequest,
      { type: "click_chrono_quad" }
    >;
    store.submitPatch(second.response.patch, second.response.sceneVersion);
    verifyLinking(store, second.response.patch, palette, request.timePair);
  });
});

describe("live engine linking", () => {
  let proc: ReturnType<typeof spawn> | null = null;
  let port = 0;
  let workdir = "";

  beforeAll(async () => {
    workdir = mkdtempSync(join(tmpdir(), "marv-e2e-"));
    await run("python3", ["-m", "marv.cli", "synth", workdir,
                          "--steps", "3", "--records", "120"]);
    proc = spawn(
      "python3",
      ["-m", "marv.cli", "serve", join(workdir, "study.json"), "--port", "0"],
      { cwd: repoRoot, env: { ...process.env, PYTHONPATH: join(repoRoot, "src") } },
    );
    port = await new Promise<number>((resolve, reject) => {
      let buffer = "";
      const timer = setTimeout(
        () => reject(new Error(`server did not start: ${buffer}`)),
        20000,
      );
      proc!.stdout!.on("data", (chunk: Buffer) => {
        buffer += chunk.toString();
        const match = buffer.match(/wire protocol on [\d.]+:(\d+)/);
        if (match) {
          clearTimeout(timer);
          resolve(Number(match[1]));
        }
      });
      proc!.stderr!.on("data", (chunk: Buffer) => {
        buffer += chunk.toString();
      });
      proc!.on("exit", () => reject(new Error(`server exited: ${buffer}`)));
    });
  });

  afterAll(() => {
    proc?.kill();
    if (workdir) rmSync(workdir, { recursive: true, force: true });
  });

  it("clicking over the wire recolors exactly the reported fibers", async () => {
    const client = await WireTestClient.connect(port);
    try {
      const hs = await client.next();
      if (hs.type !== "handshake") throw new Error(`expected handshake, got ${hs.type}`);
      const palette = hs.palette;

      client.send({ type: "open" });
      const snap = await client.next();
      if (snap.type !== "snapshot") throw new Error(`expected snapshot, got ${snap.type}`);
      const store = new SceneStore();
      store.loadSnapshot(snap.scene, snap.sceneVersion);

      client.send({ type: "extract_chrono", attribute: "Diameter" });
      const extractPatch = await client.next();
      if (extractPatch.type !== "patch") throw new Error("expected patch");
      store.submitPatch(extractPatch.patch, extractPatch.sceneVersion);

      const request: WireRequest = {
        type: "click_chrono_quad",
        chartId: "chrono-a006",
        binIndex: 2,
        timePair: [1, 2],
      };
      client.send(request);
      const clickPatch = await client.next();
      if (clickPatch.type !== "patch") throw new Error("expected patch");
      store.submitPatch(clickPatch.patch, clickPatch.sceneVersion);
      verifyLinking(store, clickPatch.patch, palette, [1, 2]);
    } finally {
      client.close();
    }
  }, 30000);
});

function run(cmd: string, args: string[]): Promise<void> {
  return new Promise((resolve, reject) => {
    const child = spawn(cmd, args, {
      cwd: repoRoot,
      env: { ...process.env, PYTHONPATH: join(repoRoot, "src") },
    });
    let err = "";
    child.stderr.on("data", (chunk: Buffer) => (err += chunk.toString()));
    child.on("exit", (code) =>
      code === 0 ? resolve() : reject(new Error(`${cmd} failed: ${err}`)),
    );
  });
}

/** Minimal length-prefixed TCP client for marv-wire/1. */
class WireTestClient {
  private buffer = Buffer.alloc(0);
  private waiters: ((frame: ServerFrame) => void)[] = [];
  private frames: ServerFrame[] = [];

  private constructor(private readonly socket: net.Socket) {
    socket.on("data", (chunk: Buffer) => {
      this.buffer = Buffer.concat([this.buffer, chunk]);
      this.drain();
    });
  }

  static connect(port: number): Promise<WireTestClient> {
    return new Promise((resolve, reject) => {
      const socket = net.createConnection({ host: "127.0.0.1", port }, () =>
        resolve(new WireTestClient(socket)),
      );
      socket.on("error", reject);
    });
  }

  private drain(): void {
    for (;;) {
      const newline = this.buffer.indexOf(0x0a);
      if (newline < 0) return;
      const length = Number(this.buffer.subarray(0, newline).toString("ascii"));
      if (this.buffer.length < newline + 1 + length) return;
      const body = this.buffer.subarray(newline + 1, newline + 1 + length);
      this.buffer = this.buffer.subarray(newline + 1 + length);
      const frame = JSON.parse(body.toString("utf-8")) as ServerFrame;
      const waiter = this.waiters.shift();
      if (waiter) waiter(frame);
      else this.frames.push(frame);
    }
  }

  next(): Promise<ServerFrame> {
    const queued = this.frames.shift();
    if (queued) return Promise.resolve(queued);
    return new Promise((resolve) => this.waiters.push(resolve));
  }

  send(request: WireRequest): void {
    const body = Buffer.from(JSON.stringify(request), "utf-8");
    this.socket.write(Buffer.concat([
      Buffer.from(`${body.length}\n`, "ascii"),
      body,
    ]));
  }

  close(): void {
    this.socket.destroy();
  }
}
