/**
 * Protocol conformance suite: exercises every task, the schema edge cases,
 * and the error paths against any /v1/score endpoint, and reports each
 * check individually.
 */

import { mkdtemp, rm, writeFile } from "node:fs/promises";
import { tmpdir } from "node:os";
import * as path from "node:path";

import {
  CAPTION_TASKS,
  EMBED_DIM,
  EMBED_TASKS,
  MOCK_RANGES,
  SCORE_PATH,
  ScoreRequest,
  ScoreResponse,
  canonicalityProblem,
  canonicalStringify,
  payloadFamilyProblem,
} from "./protocol";

export interface CheckResult {
  name: string;
  pass: boolean;
  detail: string;
}

export interface ConformanceReport {
  endpoint: string;
  checks: CheckResult[];
  passed: number;
  failed: number;
}

interface RawReply {
  status: number;
  contentType: string;
  raw: string;
  body: ScoreResponse;
}

async function post(endpoint: string, request: unknown): Promise<RawReply> {
  const reply = await fetch(endpoint.replace(/\/$/, "") + SCORE_PATH, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: typeof request === "string" ? request : canonicalStringify(request),
  });
  const raw = await reply.text();
  let body: ScoreResponse = { ok: false };
  try {
    body = JSON.parse(raw) as ScoreResponse;
  } catch {
    // left to the individual checks to flag
  }
  return {
    status: reply.status,
    contentType: reply.headers.get("content-type") ?? "",
    raw,
    body,
  };
}

export async function runConformance(endpoint: string): Promise<ConformanceReport> {
  const checks: CheckResult[] = [];
  const check = (name: string, pass: boolean, detail = "") => {
    checks.push({ name, pass, detail: pass ? "" : detail });
  };

  const dir = await mkdtemp(path.join(tmpdir(), "refscorer-conf-"));
  try {
    const mediaPath = path.join(dir, "media.bin");
    await writeFile(mediaPath, Buffer.from("conformance media payload \x00\x01\x02", "latin1"));

    const requestFor = (task: string): ScoreRequest => {
      if (task === "embed_text") return { task, text: "conformance text" };
      if (task === "caption_fine") {
        return { task, media: { kind: "video", path: mediaPath }, text: "context" };
      }
      const kind = ["dover", "lpips_consistency", "unimatch_motion"].includes(task)
        ? "video"
        : "image";
      return { task, media: { kind, path: mediaPath } };
    };

    const allTasks = [...Object.keys(MOCK_RANGES), ...CAPTION_TASKS, ...EMBED_TASKS];
    for (const task of allTasks) {
      const reply = await post(endpoint, requestFor(task));
      check(
        `${task}: HTTP 200 with application/json`,
        reply.status === 200 && reply.contentType.includes("application/json"),
        `status ${reply.status}, content-type '${reply.contentType}'`,
      );
      check(`${task}: ok response`, reply.body.ok === true, reply.raw.slice(0, 200));
      const familyProblem = payloadFamilyProblem(task, reply.body);
      check(`${task}: payload family`, familyProblem === null, familyProblem ?? "");
      const canonicalProblem = canonicalityProblem(reply.raw);
      check(`${task}: canonical JSON`, canonicalProblem === null, canonicalProblem ?? "");
      if (task in MOCK_RANGES) {
        const [lo, hi] = MOCK_RANGES[task];
        const v = reply.body.value;
        check(
          `${task}: value within [${lo}, ${hi}]`,
          v !== undefined && v >= lo && v <= hi,
          `value ${v}`,
        );
      }
      if (EMBED_TASKS.includes(task)) {
        const e = reply.body.embedding ?? [];
        const norm = Math.sqrt(e.reduce((acc, v) => acc + v * v, 0));
        check(
          `${task}: ${EMBED_DIM}-dim unit embedding`,
          e.length === EMBED_DIM && Math.abs(norm - 1) <= 1e-9,
          `dim ${e.length}, norm ${norm}`,
        );
      }
      if (CAPTION_TASKS.includes(task)) {
        check(
          `${task}: text and tags present`,
          typeof reply.body.text === "string" && Array.isArray(reply.body.tags),
          reply.raw.slice(0, 200),
        );
      }
      const again = await post(endpoint, requestFor(task));
      check(`${task}: deterministic bytes`, again.raw === reply.raw, "responses differ");
    }

    const unknown = await post(endpoint, { task: "frobnicate" });
    check(
      "unknown task reported as unknown_task",
      unknown.status === 200 && !unknown.body.ok && unknown.body.error?.code === "unknown_task",
      unknown.raw.slice(0, 200),
    );

    const missingMedia = await post(endpoint, {
      task: "aesthetic",
      media: { kind: "image", path: path.join(dir, "does-not-exist.bin") },
    });
    check(
      "unreadable media reported as media_unreadable",
      missingMedia.status === 200 &&
        !missingMedia.body.ok &&
        missingMedia.body.error?.code === "media_unreadable",
      missingMedia.raw.slice(0, 200),
    );

    const noText = await post(endpoint, { task: "embed_text" });
    check(
      "embed_text without text rejected",
      noText.status === 200 && !noText.body.ok && !!noText.body.error?.code,
      noText.raw.slice(0, 200),
    );

    const noMedia = await post(endpoint, { task: "dover" });
    check(
      "media task without media rejected",
      noMedia.status === 200 && !noMedia.body.ok && !!noMedia.body.error?.code,
      noMedia.raw.slice(0, 200),
    );

    const garbage = await post(endpoint, "{not json");
    check(
      "malformed body answered with ok=false",
      garbage.status === 200 && !garbage.body.ok && !!garbage.body.error?.code,
      garbage.raw.slice(0, 200),
    );
  } finally {
    await rm(dir, { recursive: true, force: true });
  }

  const failed = checks.filter((c) => !c.pass).length;
  return { endpoint, checks, passed: checks.length - failed, failed };
}
