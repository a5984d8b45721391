import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from sumgate.backends import (
    BackendSpec,
    BackendUnavailableError,
    CompletionRequest,
    MockExhaustedError,
    RequestRejectedError,
    ScriptedMock,
    complete,
    generate_summary,
)
from sumgate.prompts import PromptConfig, compose_generation_prompt


class _StubHandler(BaseHTTPRequestHandler):
    """Plays a chat-completion endpoint; behavior driven by class state."""

    responses: list[tuple[int, str]] = []
    requests_seen: list[dict] = []

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        body = json.loads(self.rfile.read(length)) if length else {}
        type(self).requests_seen.append(
            {"path": self.path, "body": body, "auth": self.headers.get("Authorization")}
        )
        status, payload = (
            self.responses.pop(0) if self.responses else (200, chat_body("default"))
        )
        data = payload.encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args):
        pass


def chat_body(content: str) -> str:
    return json.dumps({"choices": [{"message": {"role": "assistant", "content": content}}]})


@pytest.fixture
def stub_server():
    server = ThreadingHTTPServer(("127.0.0.1", 0), _StubHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    _StubHandler.responses = []
    _StubHandler.requests_seen = []
    yield f"http://127.0.0.1:{server.server_address[1]}/v1/chat/completions"
    server.shutdown()
    server.server_close()


def http_spec(url: str, **overrides) -> BackendSpec:
    defaults = dict(
        kind="http_chat",
        endpoint_url=url,
        model_name="stub-model",
        timeout=5.0,
        max_retries=2,
        backoff_base=0.01,
    )
    defaults.update(overrides)
    return BackendSpec(**defaults)


class TestScriptedMock:
    def test_single_response(self):
        spec = BackendSpec(kind="scripted_mock", mock=ScriptedMock(["A"]))
        assert complete(spec, CompletionRequest(system_text="s", user_text="u")) == "A"
        assert len(spec.mock.call_log) == 1

    def test_fifo_order(self):
        spec = BackendSpec(kind="scripted_mock", mock=ScriptedMock(["A", "B"]))
        request = CompletionRequest(system_text="", user_text="u")
        assert complete(spec, request) == "A"
        assert complete(spec, request) == "B"

    def test_empty_queue_errors(self):
        spec = BackendSpec(kind="scripted_mock", mock=ScriptedMock([]))
        with pytest.raises(MockExhaustedError):
            complete(spec, CompletionRequest(system_text="", user_text="u"))

    def test_missing_script_rejected(self):
        spec = BackendSpec(kind="scripted_mock")
        with pytest.raises(ValueError):
            complete(spec, CompletionRequest(system_text="", user_text="u"))

    def test_deterministic_replay(self):
        queue = ["x", "y", "z"]
        logs = []
        outputs = []
        for _ in range(2):
            spec = BackendSpec(kind="scripted_mock", mock=ScriptedMock(queue))
            outs = [
                complete(spec, CompletionRequest(system_text=str(i), user_text="u"))
                for i in range(3)
            ]
            outputs.append(outs)
            logs.append([r.system_text for r in spec.mock.call_log])
        assert outputs[0] == outputs[1]
        assert logs[0] == logs[1]


class TestHttpChat:
    def test_extracts_message_content(self, stub_server):
        _StubHandler.responses = [(200, chat_body("hello from stub"))]
        spec = http_spec(stub_server)
        result = complete(spec, CompletionRequest(system_text="sys", user_text="usr"))
        assert result == "hello from stub"
        body = _StubHandler.requests_seen[0]["body"]
        assert body["model"] == "stub-model"
        assert body["messages"] == [
            {"role": "system", "content": "sys"},
            {"role": "user", "content": "usr"},
        ]

    def test_system_message_omitted_when_empty(self, stub_server):
        _StubHandler.responses = [(200, chat_body("ok"))]
        complete(http_spec(stub_server), CompletionRequest(system_text="", user_text="u"))
        assert _StubHandler.requests_seen[0]["body"]["messages"] == [
            {"role": "user", "content": "u"}
        ]

    def test_bearer_token_from_env(self, stub_server, monkeypatch):
        monkeypatch.setenv("CHALLENGE_API_KEY", "sekret")
        _StubHandler.responses = [(200, chat_body("ok"))]
        complete(http_spec(stub_server), CompletionRequest(system_text="", user_text="u"))
        assert _StubHandler.requests_seen[0]["auth"] == "Bearer sekret"

    def test_retries_transient_5xx_then_succeeds(self, stub_server):
        _StubHandler.responses = [(503, "busy"), (500, "oops"), (200, chat_body("ok"))]
        spec = http_spec(stub_server, max_retries=2)
        result = complete(spec, CompletionRequest(system_text="", user_text="u"))
        assert result == "ok"
        assert len(_StubHandler.requests_seen) == 3

    def test_retries_exhausted_reports_last_status(self, stub_server):
        _StubHandler.responses = [(503, "busy")] * 3
        spec = http_spec(stub_server, max_retries=1)
        with pytest.raises(BackendUnavailableError) as excinfo:
            complete(spec, CompletionRequest(system_text="", user_text="u"))
        assert excinfo.value.last_status == 503
        assert len(_StubHandler.requests_seen) == 2  # 1 + max_retries

    def test_4xx_rejected_without_retry(self, stub_server):
        _StubHandler.responses = [(400, '{"error": "bad request"}')]
        spec = http_spec(stub_server, max_retries=3)
        with pytest.raises(RequestRejectedError) as excinfo:
            complete(spec, CompletionRequest(system_text="", user_text="u"))
        assert excinfo.value.status == 400
        assert "bad request" in excinfo.value.body
        assert len(_StubHandler.requests_seen) == 1

    def test_unusable_body_rejected(self, stub_server):
        _StubHandler.responses = [(200, '{"unexpected": true}')]
        with pytest.raises(RequestRejectedError):
            complete(http_spec(stub_server), CompletionRequest(system_text="", user_text="u"))

    def test_unreachable_endpoint(self):
        spec = http_spec("http://127.0.0.1:9/nothing", max_retries=0, timeout=0.5)
        with pytest.raises(BackendUnavailableError):
            complete(spec, CompletionRequest(system_text="", user_text="u"))


class TestGenerateSummary:
    def test_passthrough(self):
        spec = BackendSpec(kind="scripted_mock", mock=ScriptedMock(["the summary"]))
        bundle = compose_generation_prompt(PromptConfig())
        assert generate_summary(spec, bundle, "source text") == "the summary"

    def test_trims_whitespace(self):
        spec = BackendSpec(kind="scripted_mock", mock=ScriptedMock(["  s  "]))
        bundle = compose_generation_prompt(PromptConfig())
        assert generate_summary(spec, bundle, "source text") == "s"

    def test_prompt_passed_byte_exact_as_system_text(self):
        spec = BackendSpec(kind="scripted_mock", mock=ScriptedMock(["x"]))
        bundle = compose_generation_prompt(PromptConfig(max_summary_words=42))
        generate_summary(spec, bundle, "source text")
        assert spec.mock.call_log[0].system_text == bundle.composed
        assert spec.mock.call_log[0].user_text == "source text"

    def test_empty_source_rejected(self):
        spec = BackendSpec(kind="scripted_mock", mock=ScriptedMock(["x"]))
        bundle = compose_generation_prompt(PromptConfig())
        with pytest.raises(ValueError):
            generate_summary(spec, bundle, "")


class TestSpecValidation:
    def test_http_requires_endpoint_and_model(self):
        with pytest.raises(ValueError):
            BackendSpec(kind="http_chat", endpoint_url="", model_name="m")
        with pytest.raises(ValueError):
            BackendSpec(kind="http_chat", endpoint_url="http://x", model_name="")

    def test_positive_timeout(self):
        with pytest.raises(ValueError):
            BackendSpec(kind="scripted_mock", timeout=0)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            BackendSpec(kind="carrier_pigeon")

    def test_request_validation(self):
        with pytest.raises(ValueError):
            CompletionRequest(system_text="s", user_text="")
        with pytest.raises(ValueError):
            CompletionRequest(system_text="s", user_text="u", max_output_tokens=0)
