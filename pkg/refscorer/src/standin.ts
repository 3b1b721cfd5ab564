/**
 * The deterministic stand-in backend.
 *
 * Every answer derives from h = first 8 bytes (big-endian) of
 * SHA-256(task + ":" + seed_le8 + payload), with payload = media file bytes
 * followed by UTF-8 text (whichever are present). u = h / 2^64 maps numeric
 * tasks affinely onto their range; captions answer
 * "mock caption <first 8 hex digits of h>" with tags ["mock"]; embeddings
 * are 16 u-values from successive digests (one counter byte appended),
 * L2-normalized. All arithmetic is IEEE float64, matching the Python
 * reference bit-for-bit.
 */

import { createHash } from "node:crypto";

import {
  CAPTION_TASKS,
  EMBED_DIM,
  MOCK_RANGES,
  ScoreResponse,
  TASKS,
  Task,
  errorResponse,
} from "./protocol";

export function mockPayload(media: Buffer | null, text: string | null | undefined): Buffer {
  const parts: Buffer[] = [];
  if (media !== null) parts.push(media);
  if (text !== null && text !== undefined) parts.push(Buffer.from(text, "utf8"));
  return Buffer.concat(parts);
}

function digest(task: string, seed: bigint, payload: Buffer, counter?: number): Buffer {
  const seedBuf = Buffer.alloc(8);
  seedBuf.writeBigUInt64LE(seed);
  const hash = createHash("sha256");
  hash.update(Buffer.from(task, "utf8"));
  hash.update(Buffer.from(":", "utf8"));
  hash.update(seedBuf);
  hash.update(payload);
  if (counter !== undefined) hash.update(Buffer.from([counter]));
  return hash.digest();
}

function uValue(d: Buffer): number {
  // Number(h) rounds the 64-bit integer once; dividing by 2^64 is exact,
  // so this equals the correctly rounded h / 2^64.
  return Number(d.readBigUInt64BE(0)) / 2 ** 64;
}

export function mockValue(task: string, payload: Buffer, seed: bigint | number): ScoreResponse {
  const seedBig = typeof seed === "bigint" ? seed : BigInt(seed);
  if (!TASKS.includes(task as Task)) {
    return errorResponse("unknown_task", `unknown task '${task}'`);
  }
  const d = digest(task, seedBig, payload);
  if (task in MOCK_RANGES) {
    const [lo, hi] = MOCK_RANGES[task];
    return { ok: true, value: lo + uValue(d) * (hi - lo) };
  }
  if (CAPTION_TASKS.includes(task)) {
    const hex8 = d.subarray(0, 4).toString("hex");
    return { ok: true, text: `mock caption ${hex8}`, tags: ["mock"] };
  }
  const values: number[] = [];
  for (let i = 0; i < EMBED_DIM; i++) {
    values.push(uValue(digest(task, seedBig, payload, i)));
  }
  let norm = Math.sqrt(values.reduce((acc, v) => acc + v * v, 0));
  let components = values;
  if (norm === 0) {
    components = [1, ...new Array(EMBED_DIM - 1).fill(0)];
    norm = 1;
  }
  return { ok: true, embedding: components.map((v) => v / norm) };
}
