/**
 * Wire types and helpers for the /v1/score protocol.
 *
 * Responses are canonical JSON: object keys sorted at every level, no
 * whitespace outside strings, UTF-8. HTTP 200 carries both successes and
 * application errors ({ok:false, error:{code, message}}); non-200 statuses
 * are reserved for transport and server faults.
 */

export const TASKS = [
  "aesthetic",
  "dover",
  "lpips_consistency",
  "unimatch_motion",
  "text_area",
  "watermark_area",
  "caption_coarse",
  "caption_fine",
  "embed_text",
  "embed_image",
] as const;

export type Task = (typeof TASKS)[number];

export const MOCK_RANGES: Record<string, [number, number]> = {
  aesthetic: [3.0, 7.0],
  dover: [0.0, 0.2],
  lpips_consistency: [0.0, 0.3],
  unimatch_motion: [0.0, 150.0],
  text_area: [0.0, 0.2],
  watermark_area: [0.0, 0.2],
};

export const VALUE_TASKS = Object.keys(MOCK_RANGES);
export const CAPTION_TASKS = ["caption_coarse", "caption_fine"];
export const EMBED_TASKS = ["embed_text", "embed_image"];
export const EMBED_DIM = 16;
export const SCORE_PATH = "/v1/score";

export interface MediaRef {
  kind: string; // "image" | "video"
  path: string; // frame container on shared storage
}

export interface ScoreRequest {
  task: string;
  media?: MediaRef;
  text?: string;
  params?: Record<string, string>;
}

export interface ScoreError {
  code: string;
  message: string;
}

export interface ScoreResponse {
  ok: boolean;
  value?: number;
  text?: string;
  tags?: string[];
  embedding?: number[];
  error?: ScoreError;
}

export function errorResponse(code: string, message: string): ScoreResponse {
  return { ok: false, error: { code, message } };
}

/** Returns a problem description, or null for a well-formed request. */
export function validateRequest(req: ScoreRequest): string | null {
  if (!TASKS.includes(req.task as Task)) {
    return `unknown task '${req.task}'`;
  }
  if (req.task === "embed_text") {
    if (!req.text) return "embed_text requires text";
  } else if (req.task === "caption_fine") {
    if (!req.media || req.text === undefined || req.text === null) {
      return "caption_fine requires both media and text";
    }
  } else if (!req.media) {
    return `${req.task} requires media`;
  }
  if (req.media && req.media.kind !== "image" && req.media.kind !== "video") {
    return `bad media kind '${req.media.kind}'`;
  }
  return null;
}

/** Checks the one-payload-family invariant of an ok response. */
export function payloadFamilyProblem(task: string, resp: ScoreResponse): string | null {
  if (!resp.ok) {
    if (!resp.error || !resp.error.code) return "ok=false response is missing error.code";
    return null;
  }
  const present: string[] = [];
  if (resp.value !== undefined) present.push("value");
  if (resp.text !== undefined || resp.tags !== undefined) present.push("caption");
  if (resp.embedding !== undefined) present.push("embedding");
  const expected = VALUE_TASKS.includes(task)
    ? "value"
    : CAPTION_TASKS.includes(task)
      ? "caption"
      : "embedding";
  if (present.length !== 1 || present[0] !== expected) {
    return `task '${task}' expects the ${expected} payload family, got [${present.join(", ")}]`;
  }
  if (expected === "caption" && (resp.text === undefined || resp.tags === undefined)) {
    return "caption responses require both text and tags";
  }
  return null;
}

function sortKeysDeep(value: unknown): unknown {
  if (Array.isArray(value)) return value.map(sortKeysDeep);
  if (value !== null && typeof value === "object") {
    const out: Record<string, unknown> = {};
    for (const key of Object.keys(value as Record<string, unknown>).sort()) {
      out[key] = sortKeysDeep((value as Record<string, unknown>)[key]);
    }
    return out;
  }
  return value;
}

/** Sorted keys at every level, no insignificant whitespace. */
export function canonicalStringify(value: unknown): string {
  return JSON.stringify(sortKeysDeep(value));
}

/**
 * Structural canonicality of raw response bytes: no whitespace outside
 * strings and keys sorted at every level. Number formatting is left to the
 * producer (shortest round-trip in both reference implementations).
 */
export function canonicalityProblem(raw: string): string | null {
  let inString = false;
  let escaped = false;
  for (const ch of raw) {
    if (inString) {
      if (escaped) escaped = false;
      else if (ch === "\\") escaped = true;
      else if (ch === '"') inString = false;
      continue;
    }
    if (ch === '"') inString = true;
    else if (ch === " " || ch === "\n" || ch === "\t" || ch === "\r") {
      return "whitespace outside strings";
    }
  }
  let parsed: unknown;
  try {
    parsed = JSON.parse(raw);
  } catch {
    return "not valid JSON";
  }
  const unsorted = (value: unknown): boolean => {
    if (Array.isArray(value)) return value.some(unsorted);
    if (value !== null && typeof value === "object") {
      const keys = Object.keys(value as Record<string, unknown>);
      const sorted = [...keys].sort();
      if (keys.some((k, i) => k !== sorted[i])) return true;
      return Object.values(value as Record<string, unknown>).some(unsorted);
    }
    return false;
  };
  return unsorted(parsed) ? "keys not sorted" : null;
}
