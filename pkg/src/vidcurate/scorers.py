"""Client and deterministic mock for the scoring service protocol.

Wire protocol: ``POST {endpoint}/v1/score`` with a JSON body; the response is
canonical JSON (sorted keys, no insignificant whitespace, UTF-8). HTTP 200
carries both successes and application errors (``ok=false`` with an error
code); non-200 statuses are reserved for transport and server faults.

Request fields::

    task    one of TASKS
    media   {"kind": "image"|"video", "path": "<framepack on shared storage>"}
    text    string (embed_text input; coarse-caption context for caption_fine)
    params  optional string-keyed map

Response fields: ``ok`` plus exactly one payload family matching the task
(``value`` | ``text``+``tags`` | ``embedding``), or ``error: {code, message}``.

The mock backend is content-hashed and bit-deterministic. For a request it
derives ``h`` as the first 8 bytes (big-endian) of
``SHA-256(task ":" seed_le8 payload)`` where ``seed_le8`` is the seed as 8
little-endian bytes and ``payload`` is the media file bytes followed by the
UTF-8 text (whichever are present, in that order). With ``u = h / 2**64``:

* numeric tasks map u affinely onto the task's range (see MOCK_RANGES);
* caption tasks return ``mock caption <first 8 hex digits of h>`` with
  tags ``["mock"]``;
* embed tasks return a 16-dim vector of u values from successive digests
  (one counter byte 0..15 appended to the hash input), L2-normalized.

Any implementation reproducing this construction byte-for-byte can stand in
for the mock, which is what the protocol conformance suite checks.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import threading
import time
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import requests

from .errors import ProtocolError, ScorerError, ValidationError

logger = logging.getLogger(__name__)

TASKS = (
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
)

# Affine output ranges for the numeric tasks, scaled for plausibility
# against the stage thresholds (not calibrated to any real model).
MOCK_RANGES = {
    "aesthetic": (3.0, 7.0),
    "dover": (0.0, 0.2),
    "lpips_consistency": (0.0, 0.3),
    "unimatch_motion": (0.0, 150.0),
    "text_area": (0.0, 0.2),
    "watermark_area": (0.0, 0.2),
}
VALUE_TASKS = tuple(MOCK_RANGES)
CAPTION_TASKS = ("caption_coarse", "caption_fine")
EMBED_TASKS = ("embed_text", "embed_image")
EMBED_DIM = 16

SCORE_PATH = "/v1/score"


@dataclass(frozen=True)
class MediaRef:
    kind: str  # "image" | "video"
    path: str


@dataclass
class ScoreRequest:
    task: str
    media: MediaRef | None = None
    text: str | None = None
    params: dict[str, str] | None = None

    def validate(self) -> str | None:
        """Return a problem description, or None if the request is well-formed."""
        if self.task not in TASKS:
            return f"unknown task {self.task!r}"
        if self.task == "embed_text":
            if not self.text:
                return "embed_text requires text"
        elif self.task == "caption_fine":
            if self.media is None or self.text is None:
                return "caption_fine requires both media and text"
        elif self.media is None:
            return f"{self.task} requires media"
        if self.media is not None and self.media.kind not in ("image", "video"):
            return f"bad media kind {self.media.kind!r}"
        return None

    def to_json(self) -> dict:
        d: dict = {"task": self.task}
        if self.media is not None:
            d["media"] = {"kind": self.media.kind, "path": self.media.path}
        if self.text is not None:
            d["text"] = self.text
        if self.params:
            d["params"] = dict(self.params)
        return d

    @classmethod
    def from_json(cls, d: dict) -> "ScoreRequest":
        media = None
        if "media" in d and d["media"] is not None:
            media = MediaRef(kind=d["media"].get("kind", ""), path=d["media"].get("path", ""))
        return cls(
            task=d.get("task", ""),
            media=media,
            text=d.get("text"),
            params=d.get("params"),
        )


@dataclass
class ScoreResponse:
    ok: bool
    value: float | None = None
    text: str | None = None
    tags: list[str] | None = None
    embedding: list[float] | None = None
    error: dict | None = None  # {"code": ..., "message": ...}

    def to_json(self) -> dict:
        d: dict = {"ok": self.ok}
        if self.value is not None:
            d["value"] = self.value
        if self.text is not None:
            d["text"] = self.text
        if self.tags is not None:
            d["tags"] = list(self.tags)
        if self.embedding is not None:
            d["embedding"] = list(self.embedding)
        if self.error is not None:
            d["error"] = dict(self.error)
        return d

    @classmethod
    def from_json(cls, d: dict) -> "ScoreResponse":
        return cls(
            ok=d.get("ok", False),
            value=d.get("value"),
            text=d.get("text"),
            tags=d.get("tags"),
            embedding=d.get("embedding"),
            error=d.get("error"),
        )

    def schema_problem(self, task: str) -> str | None:
        """Check the one-payload-family invariant against the task."""
        if not self.ok:
            if not self.error or "code" not in self.error:
                return "ok=false response is missing error.code"
            return None
        families = {
            "value": self.value is not None,
            "caption": self.text is not None or self.tags is not None,
            "embedding": self.embedding is not None,
        }
        present = [name for name, p in families.items() if p]
        if task in VALUE_TASKS:
            expected = "value"
        elif task in CAPTION_TASKS:
            expected = "caption"
        else:
            expected = "embedding"
        if present != [expected]:
            return f"task {task!r} expects the {expected} payload family, got {present or 'none'}"
        if expected == "caption" and (self.text is None or self.tags is None):
            return "caption responses require both text and tags"
        return None


def canonical_json(obj: dict) -> bytes:
    """Sorted keys, no insignificant whitespace, UTF-8."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode(
        "utf-8"
    )


def error_response(code: str, message: str) -> ScoreResponse:
    return ScoreResponse(ok=False, error={"code": code, "message": message})


def mock_payload(media_bytes: bytes | None, text: str | None) -> bytes:
    """Bytes hashed by the mock: media file bytes, then UTF-8 text."""
    payload = b""
    if media_bytes is not None:
        payload += media_bytes
    if text is not None:
        payload += text.encode("utf-8")
    return payload


def _mock_u(task: str, payload: bytes, seed: int, counter: int | None = None) -> tuple[int, float]:
    base = task.encode("utf-8") + b":" + seed.to_bytes(8, "little") + payload
    if counter is not None:
        base += bytes([counter])
    h = int.from_bytes(hashlib.sha256(base).digest()[:8], "big")
    return h, h / 2**64


def mock_value(task: str, payload: bytes, seed: int) -> ScoreResponse:
    """Deterministic response for (task, payload bytes, seed)."""
    if task not in TASKS:
        return error_response("unknown_task", f"unknown task {task!r}")
    h, u = _mock_u(task, payload, seed)
    if task in VALUE_TASKS:
        lo, hi = MOCK_RANGES[task]
        return ScoreResponse(ok=True, value=lo + u * (hi - lo))
    if task in CAPTION_TASKS:
        hex8 = f"{h:016x}"[:8]
        return ScoreResponse(ok=True, text=f"mock caption {hex8}", tags=["mock"])
    values = []
    for i in range(EMBED_DIM):
        _, ui = _mock_u(task, payload, seed, counter=i)
        values.append(ui)
    # math.sqrt is correctly rounded (pow 0.5 need not be), which keeps
    # independent implementations of this construction bit-identical.
    norm = math.sqrt(sum(v * v for v in values))
    if norm == 0.0:
        values = [1.0] + [0.0] * (EMBED_DIM - 1)
        norm = 1.0
    return ScoreResponse(ok=True, embedding=[v / norm for v in values])


class ScorerClient:
    """HTTP client for score endpoints; safe for concurrent use.

    ``endpoints`` maps task names to base URLs; ``default_endpoint`` covers
    the rest (tasks may share one URL). Transport failures and non-200
    statuses are retried with exponential backoff, then raised as
    :class:`ScorerError`. Server-reported errors (ok=false) raise
    :class:`ScorerError` with the server's code; schema violations raise
    :class:`ProtocolError`.
    """

    def __init__(
        self,
        default_endpoint: str | None = None,
        endpoints: dict[str, str] | None = None,
        retries: int = 2,
        backoff_ms: int = 50,
        timeout_s: float = 10.0,
    ):
        self.default_endpoint = default_endpoint
        self.endpoints = dict(endpoints or {})
        self.retries = retries
        self.backoff_ms = backoff_ms
        self.timeout_s = timeout_s
        self._session = requests.Session()
        self._lock = threading.Lock()
        self.request_count = 0

    def endpoint_for(self, task: str) -> str:
        url = self.endpoints.get(task, self.default_endpoint)
        if not url:
            raise ScorerError(f"no endpoint configured for task {task!r}", code="config")
        return url.rstrip("/")

    def score(self, request: ScoreRequest) -> ScoreResponse:
        problem = request.validate()
        if problem:
            raise ValidationError(f"invalid score request: {problem}")
        url = self.endpoint_for(request.task) + SCORE_PATH
        body = canonical_json(request.to_json())
        with self._lock:
            self.request_count += 1
        last_exc: Exception | None = None
        for attempt in range(self.retries + 1):
            if attempt:
                time.sleep(self.backoff_ms / 1000.0 * 2 ** (attempt - 1))
            try:
                resp = self._session.post(
                    url,
                    data=body,
                    headers={"Content-Type": "application/json"},
                    timeout=self.timeout_s,
                )
            except requests.RequestException as exc:
                last_exc = exc
                logger.debug("scorer transport failure (attempt %d): %s", attempt + 1, exc)
                continue
            if resp.status_code != 200:
                last_exc = ScorerError(
                    f"scorer returned HTTP {resp.status_code}", code="transport"
                )
                continue
            try:
                payload = resp.json()
            except ValueError as exc:
                raise ProtocolError(f"scorer response is not JSON: {exc}") from exc
            parsed = ScoreResponse.from_json(payload)
            problem = parsed.schema_problem(request.task)
            if problem:
                raise ProtocolError(problem)
            if not parsed.ok:
                assert parsed.error is not None
                raise ScorerError(
                    parsed.error.get("message", "scorer error"),
                    code=parsed.error.get("code", "unknown"),
                )
            return parsed
        raise ScorerError(
            f"scorer unreachable after {self.retries + 1} attempts: {last_exc}",
            code="transport",
        )


def evaluate_mock_request(request: ScoreRequest, seed: int) -> ScoreResponse:
    """What the mock server answers for a parsed request."""
    problem = request.validate()
    if problem:
        if request.task not in TASKS:
            return error_response("unknown_task", problem)
        return error_response("invalid_request", problem)
    media_bytes = None
    if request.media is not None:
        try:
            with open(request.media.path, "rb") as fh:
                media_bytes = fh.read()
        except OSError as exc:
            return error_response("media_unreadable", f"cannot read {request.media.path}: {exc}")
    return mock_value(request.task, mock_payload(media_bytes, request.text), seed)


class _MockServer(ThreadingHTTPServer):
    daemon_threads = True
    # A small listen backlog drops bursts of concurrent connections.
    request_queue_size = 128


class _MockHandler(BaseHTTPRequestHandler):
    server_version = "vidcurate-mock/0.1"
    protocol_version = "HTTP/1.1"

    def do_POST(self):  # noqa: N802 (http.server API)
        if self.path != SCORE_PATH:
            self.send_error(404, "unknown path")
            return
        length = int(self.headers.get("Content-Length", 0))
        raw = self.rfile.read(length)
        try:
            request = ScoreRequest.from_json(json.loads(raw))
        except (ValueError, AttributeError):
            response = error_response("invalid_request", "body is not a JSON request object")
        else:
            handle: MockScorerHandle = self.server.vidcurate_handle  # type: ignore[attr-defined]
            handle.log_request(request)
            response = evaluate_mock_request(request, handle.seed)
        body = canonical_json(response.to_json())
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, format, *args):  # silence default stderr chatter
        logger.debug("mock scorer: " + format, *args)


@dataclass
class MockScorerHandle:
    """A running mock scorer; stop() shuts it down."""

    server: "_MockServer"
    thread: threading.Thread
    seed: int
    record_requests: bool = False
    requests: list[ScoreRequest] = field(default_factory=list)
    _lock: threading.Lock = field(default_factory=threading.Lock)

    @property
    def port(self) -> int:
        return self.server.server_address[1]

    @property
    def url(self) -> str:
        return f"http://127.0.0.1:{self.port}"

    def log_request(self, request: ScoreRequest) -> None:
        if self.record_requests:
            with self._lock:
                self.requests.append(request)

    def stop(self) -> None:
        self.server.shutdown()
        self.thread.join()
        self.server.server_close()


def serve_mock(port: int, seed: int, record_requests: bool = False) -> MockScorerHandle:
    """Start the deterministic mock scorer on 127.0.0.1; port 0 picks a free one."""
    try:
        server = _MockServer(("127.0.0.1", port), _MockHandler)
    except OSError as exc:
        raise ScorerError(f"cannot bind mock scorer to port {port}: {exc}", code="bind") from exc
    thread = threading.Thread(target=server.serve_forever, name="mock-scorer", daemon=True)
    handle = MockScorerHandle(
        server=server, thread=thread, seed=seed, record_requests=record_requests
    )
    server.vidcurate_handle = handle  # type: ignore[attr-defined]
    thread.start()
    return handle
