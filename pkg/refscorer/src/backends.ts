/**
 * Task-to-backend bindings.
 *
 * A backend answers one scoring task from the raw media bytes and/or text.
 * The default registry binds every task to the deterministic stand-in; real
 * model backends (an aesthetic predictor, a perceptual-similarity scorer,
 * embedding models, captioners) plug in through the same interface by
 * registering a Backend per task, keeping the wire contract unchanged.
 * The default install carries only the stand-in, so the service runs
 * anywhere the tests run.
 */

import { ScoreRequest, ScoreResponse, TASKS, Task } from "./protocol";
import { mockPayload, mockValue } from "./standin";

export type Backend = (
  request: ScoreRequest,
  media: Buffer | null,
) => ScoreResponse | Promise<ScoreResponse>;

export class BackendRegistry {
  private bindings = new Map<Task, Backend>();

  bind(task: Task, backend: Backend): void {
    this.bindings.set(task, backend);
  }

  get(task: Task): Backend {
    const backend = this.bindings.get(task);
    if (!backend) {
      throw new Error(`no backend bound for task '${task}'`);
    }
    return backend;
  }

  /** Every task answered by the seeded stand-in. */
  static standin(seed: number | bigint): BackendRegistry {
    const registry = new BackendRegistry();
    for (const task of TASKS) {
      registry.bind(task, (request, media) =>
        mockValue(request.task, mockPayload(media, request.text), seed),
      );
    }
    return registry;
  }
}
