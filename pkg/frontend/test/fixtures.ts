import { readFileSync } from "node:fs";
import { fileURLToPath } from "node:url";
import { dirname, join } from "node:path";
import type {
  HandshakeFrame,
  PatchFrame,
  SnapshotFrame,
  WireRequest,
} from "../src/protocol";

const here = dirname(fileURLToPath(import.meta.url));

function load<T>(name: string): T {
  return JSON.parse(
    readFileSync(join(here, "..", "fixtures", name), "utf-8"),
  ) as T;
}

export interface TranscriptEntry {
  request: WireRequest;
  response: PatchFrame & { chartId?: string };
}

export const handshake = (): HandshakeFrame => load("handshake.json");
export const snapshot = (): SnapshotFrame => load("snapshot.json");
export const transcript = (): TranscriptEntry[] => load("transcript.json");
