import concurrent.futures
import json
import math

import pytest
import requests

from vidcurate.errors import ProtocolError, ScorerError, ValidationError
from vidcurate.scorers import (
    EMBED_DIM,
    MOCK_RANGES,
    TASKS,
    MediaRef,
    ScoreRequest,
    ScoreResponse,
    ScorerClient,
    canonical_json,
    mock_payload,
    mock_value,
    serve_mock,
)


class TestMockValue:
    def test_deterministic(self):
        a = mock_value("aesthetic", b"payload", 7)
        b = mock_value("aesthetic", b"payload", 7)
        assert a == b

    def test_ranges_hold_over_corpus(self):
        for task, (lo, hi) in MOCK_RANGES.items():
            for i in range(100):
                value = mock_value(task, f"payload-{i}".encode(), 3).value
                assert lo <= value <= hi

    def test_affine_endpoint_mapping(self):
        # u = 0 maps to the low endpoint; u -> 1 approaches the high one
        # (the float supremum rounds onto the endpoint itself).
        lo, hi = MOCK_RANGES["aesthetic"]
        assert lo + 0.0 * (hi - lo) == 3.0
        u_max = (2**64 - 1) / 2**64
        assert lo + u_max * (hi - lo) <= 7.0

    def test_caption_format(self):
        resp = mock_value("caption_coarse", b"img", 0)
        assert resp.tags == ["mock"]
        assert resp.text.startswith("mock caption ")
        suffix = resp.text.removeprefix("mock caption ")
        assert len(suffix) == 8 and int(suffix, 16) >= 0

    def test_embedding_unit_norm(self):
        resp = mock_value("embed_image", b"img", 5)
        assert len(resp.embedding) == EMBED_DIM
        norm = math.sqrt(sum(v * v for v in resp.embedding))
        assert norm == pytest.approx(1.0, abs=1e-9)

    def test_seed_changes_values(self):
        payloads = [f"p{i}".encode() for i in range(100)]
        a = [mock_value("dover", p, 1).value for p in payloads]
        b = [mock_value("dover", p, 2).value for p in payloads]
        assert a != b

    def test_payload_concatenation_order(self):
        both = mock_payload(b"media", "text")
        assert both == b"media" + "text".encode()
        assert mock_payload(None, "text") == b"text"
        assert mock_payload(b"media", None) == b"media"

    def test_unknown_task_error(self):
        resp = mock_value("nope", b"", 0)
        assert not resp.ok and resp.error["code"] == "unknown_task"


class TestRequestValidation:
    def test_media_task_requires_media(self):
        assert ScoreRequest(task="aesthetic").validate() is not None

    def test_embed_text_requires_text(self):
        assert ScoreRequest(task="embed_text").validate() is not None
        assert ScoreRequest(task="embed_text", text="hi").validate() is None

    def test_caption_fine_requires_both(self):
        ref = MediaRef(kind="video", path="x.fpk")
        assert ScoreRequest(task="caption_fine", media=ref).validate() is not None
        assert ScoreRequest(task="caption_fine", media=ref, text="ctx").validate() is None


class TestMockServer:
    def test_wire_equals_in_process(self, mock_scorer, tmp_path):
        media = tmp_path / "m.bin"
        media.write_bytes(b"\x01\x02\x03frames")
        body = canonical_json(
            ScoreRequest(
                task="aesthetic", media=MediaRef(kind="image", path=str(media))
            ).to_json()
        )
        resp = requests.post(
            mock_scorer.url + "/v1/score", data=body,
            headers={"Content-Type": "application/json"}, timeout=5,
        )
        direct = mock_value("aesthetic", media.read_bytes(), mock_scorer.seed)
        assert resp.content == canonical_json(direct.to_json())

    def test_all_tasks_over_the_wire_match(self, mock_scorer, tmp_path):
        media = tmp_path / "m.bin"
        media.write_bytes(b"media-bytes")
        for task in TASKS:
            req = ScoreRequest(task=task)
            if task == "embed_text":
                req.text = "some text"
            elif task == "caption_fine":
                req.media = MediaRef(kind="video", path=str(media))
                req.text = "context"
            else:
                req.media = MediaRef(kind="image", path=str(media))
            wire = requests.post(
                mock_scorer.url + "/v1/score", data=canonical_json(req.to_json()), timeout=5
            )
            payload = mock_payload(
                media.read_bytes() if req.media else None, req.text
            )
            direct = mock_value(task, payload, mock_scorer.seed)
            assert wire.content == canonical_json(direct.to_json()), task

    def test_canonical_json_shape(self, mock_scorer, tmp_path):
        media = tmp_path / "m.bin"
        media.write_bytes(b"x")
        resp = requests.post(
            mock_scorer.url + "/v1/score",
            data=canonical_json(
                ScoreRequest(task="dover", media=MediaRef(kind="video", path=str(media))).to_json()
            ),
            timeout=5,
        )
        parsed = json.loads(resp.content)
        assert resp.content == canonical_json(parsed)

    def test_unreadable_media(self, mock_scorer):
        resp = requests.post(
            mock_scorer.url + "/v1/score",
            data=canonical_json(
                ScoreRequest(
                    task="aesthetic", media=MediaRef(kind="image", path="/no/such/file")
                ).to_json()
            ),
            timeout=5,
        )
        body = json.loads(resp.content)
        assert resp.status_code == 200
        assert body["ok"] is False and body["error"]["code"] == "media_unreadable"

    def test_concurrent_identical_requests(self, mock_scorer, tmp_path):
        media = tmp_path / "m.bin"
        media.write_bytes(b"concurrency")
        body = canonical_json(
            ScoreRequest(task="unimatch_motion", media=MediaRef(kind="video", path=str(media))).to_json()
        )

        def post(_):
            return requests.post(mock_scorer.url + "/v1/score", data=body, timeout=10).content

        with concurrent.futures.ThreadPoolExecutor(max_workers=16) as pool:
            results = list(pool.map(post, range(64)))
        assert len(set(results)) == 1

    def test_unknown_path_404(self, mock_scorer):
        resp = requests.post(mock_scorer.url + "/v1/nope", data=b"{}", timeout=5)
        assert resp.status_code == 404


class TestClient:
    def test_pass_through_value(self, mock_scorer, tmp_path):
        media = tmp_path / "m.bin"
        media.write_bytes(b"abc")
        client = ScorerClient(default_endpoint=mock_scorer.url)
        resp = client.score(
            ScoreRequest(task="aesthetic", media=MediaRef(kind="image", path=str(media)))
        )
        lo, hi = MOCK_RANGES["aesthetic"]
        assert lo <= resp.value <= hi

    def test_server_error_surfaced_with_code(self, mock_scorer):
        client = ScorerClient(default_endpoint=mock_scorer.url)
        with pytest.raises(ScorerError) as err:
            client.score(
                ScoreRequest(task="aesthetic", media=MediaRef(kind="image", path="/missing"))
            )
        assert err.value.code == "media_unreadable"

    def test_invalid_request_rejected_client_side(self, mock_scorer):
        client = ScorerClient(default_endpoint=mock_scorer.url)
        with pytest.raises(ValidationError):
            client.score(ScoreRequest(task="embed_text"))

    def test_transport_failure_after_retries(self):
        client = ScorerClient(
            default_endpoint="http://127.0.0.1:1", retries=1, backoff_ms=1, timeout_s=0.2
        )
        with pytest.raises(ScorerError) as err:
            client.score(ScoreRequest(task="embed_text", text="x"))
        assert err.value.code == "transport"

    def test_schema_violation_detected(self, tmp_path):
        # A server returning the wrong payload family trips the client.
        import threading
        from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

        class BadHandler(BaseHTTPRequestHandler):
            def do_POST(self):
                self.rfile.read(int(self.headers.get("Content-Length", 0)))
                body = b'{"ok":true}'
                self.send_response(200)
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

            def log_message(self, *args):
                pass

        server = ThreadingHTTPServer(("127.0.0.1", 0), BadHandler)
        thread = threading.Thread(target=server.serve_forever, daemon=True)
        thread.start()
        try:
            client = ScorerClient(default_endpoint=f"http://127.0.0.1:{server.server_address[1]}")
            with pytest.raises(ProtocolError):
                client.score(ScoreRequest(task="embed_text", text="x"))
        finally:
            server.shutdown()
            thread.join()
            server.server_close()


class TestResponseSchema:
    def test_ok_needs_exactly_one_family(self):
        assert ScoreResponse(ok=True).schema_problem("aesthetic") is not None
        assert ScoreResponse(ok=True, value=1.0, text="x", tags=[]).schema_problem("aesthetic")
        assert ScoreResponse(ok=True, value=1.0).schema_problem("aesthetic") is None

    def test_caption_needs_text_and_tags(self):
        assert ScoreResponse(ok=True, text="x").schema_problem("caption_coarse") is not None
        assert ScoreResponse(ok=True, text="x", tags=["a"]).schema_problem("caption_coarse") is None

    def test_error_needs_code(self):
        assert ScoreResponse(ok=False).schema_problem("aesthetic") is not None
        assert ScoreResponse(ok=False, error={"code": "x", "message": ""}).schema_problem("aesthetic") is None
