/**
 * The scoring service: POST /v1/score, canonical-JSON responses, stateless
 * per-request handling (safe under concurrency), media read from shared
 * storage by path.
 */

import * as http from "node:http";
import { readFile } from "node:fs/promises";

import { BackendRegistry } from "./backends";
import {
  SCORE_PATH,
  ScoreRequest,
  ScoreResponse,
  Task,
  canonicalStringify,
  errorResponse,
  validateRequest,
} from "./protocol";

async function answer(registry: BackendRegistry, request: ScoreRequest): Promise<ScoreResponse> {
  const problem = validateRequest(request);
  if (problem) {
    const code = problem.startsWith("unknown task") ? "unknown_task" : "invalid_request";
    return errorResponse(code, problem);
  }
  let media: Buffer | null = null;
  if (request.media) {
    try {
      media = await readFile(request.media.path);
    } catch (err) {
      return errorResponse("media_unreadable", `cannot read ${request.media.path}: ${err}`);
    }
  }
  try {
    return await registry.get(request.task as Task)(request, media);
  } catch (err) {
    return errorResponse("backend_error", String(err));
  }
}

export function createApp(registry: BackendRegistry): http.Server {
  return http.createServer((req, res) => {
    if (req.method !== "POST" || req.url !== SCORE_PATH) {
      res.writeHead(404, { "Content-Type": "application/json" });
      res.end(canonicalStringify(errorResponse("not_found", "unknown path")));
      return;
    }
    const chunks: Buffer[] = [];
    req.on("data", (chunk) => chunks.push(chunk));
    req.on("end", () => {
      void (async () => {
        let response: ScoreResponse;
        try {
          const parsed = JSON.parse(Buffer.concat(chunks).toString("utf8"));
          if (typeof parsed !== "object" || parsed === null || Array.isArray(parsed)) {
            response = errorResponse("invalid_request", "body must be a JSON object");
          } else {
            response = await answer(registry, parsed as ScoreRequest);
          }
        } catch {
          response = errorResponse("invalid_request", "body is not valid JSON");
        }
        const body = Buffer.from(canonicalStringify(response), "utf8");
        res.writeHead(200, {
          "Content-Type": "application/json",
          "Content-Length": body.length,
        });
        res.end(body);
      })();
    });
  });
}

export interface ServiceHandle {
  port: number;
  url: string;
  close: () => Promise<void>;
}

export function serve(
  port: number,
  seed: number | bigint,
  registry?: BackendRegistry,
): Promise<ServiceHandle> {
  const app = createApp(registry ?? BackendRegistry.standin(seed));
  return new Promise((resolve, reject) => {
    app.once("error", reject);
    app.listen(port, "127.0.0.1", () => {
      const address = app.address();
      if (address === null || typeof address === "string") {
        reject(new Error("unexpected server address"));
        return;
      }
      resolve({
        port: address.port,
        url: `http://127.0.0.1:${address.port}`,
        close: () =>
          new Promise<void>((done, fail) =>
            app.close((err) => (err ? fail(err) : done())),
          ),
      });
    });
  });
}
