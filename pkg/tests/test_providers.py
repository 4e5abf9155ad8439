import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from lexiforge.exceptions import ProviderError
from lexiforge.generation import GenerationConfig, LemmaRecord, build_prompt
from lexiforge.providers import HttpChatProvider, ProviderRequest, StubProvider


class ChatHandler(BaseHTTPRequestHandler):
    """Scriptable chat-completions endpoint for wire-contract tests."""

    script: list[dict] = []  # each: {"status": int, "body": dict|str}
    requests_seen: list[dict] = []

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        payload = json.loads(self.rfile.read(length))
        ChatHandler.requests_seen.append({"body": payload, "auth": self.headers.get("Authorization")})
        step = ChatHandler.script.pop(0) if ChatHandler.script else {"status": 200, "body": _ok_body("hola")}
        body = step["body"]
        data = (body if isinstance(body, str) else json.dumps(body)).encode("utf-8")
        self.send_response(step["status"])
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args):
        pass


def _ok_body(text: str) -> dict:
    return {
        "choices": [{"message": {"content": text}, "finish_reason": "stop"}],
        "usage": {"prompt_tokens": 11, "completion_tokens": 7},
    }


@pytest.fixture
def chat_server():
    server = ThreadingHTTPServer(("127.0.0.1", 0), ChatHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    ChatHandler.script = []
    ChatHandler.requests_seen = []
    yield f"http://127.0.0.1:{server.server_address[1]}/v1/chat/completions"
    server.shutdown()


REQUEST = ProviderRequest(prompt="define: casa", model="gpt-4-turbo", temperature=0.0, max_tokens=256)


class TestHttpChatProvider:
    def test_success_parses_text_and_usage(self, chat_server):
        ChatHandler.script = [{"status": 200, "body": _ok_body("casa: Nombre femenino: Edificio.")}]
        provider = HttpChatProvider(chat_server, model="gpt-4-turbo")
        response = provider.complete(REQUEST)
        assert response.text == "casa: Nombre femenino: Edificio."
        assert response.prompt_tokens == 11 and response.completion_tokens == 7
        sent = ChatHandler.requests_seen[0]["body"]
        assert sent["model"] == "gpt-4-turbo"
        assert sent["messages"] == [{"role": "user", "content": "define: casa"}]
        assert sent["temperature"] == 0.0 and sent["max_tokens"] == 256

    def test_credential_env_sets_bearer_header(self, chat_server, monkeypatch):
        monkeypatch.setenv("TEST_PROVIDER_KEY", "sk-secreto")
        provider = HttpChatProvider(chat_server, model="m", credential_env="TEST_PROVIDER_KEY")
        provider.complete(REQUEST)
        assert ChatHandler.requests_seen[0]["auth"] == "Bearer sk-secreto"

    def test_server_error_is_retryable(self, chat_server):
        ChatHandler.script = [{"status": 503, "body": {}}]
        provider = HttpChatProvider(chat_server, model="m")
        with pytest.raises(ProviderError) as exc:
            provider.complete(REQUEST)
        assert exc.value.retryable

    def test_rate_limit_is_retryable(self, chat_server):
        ChatHandler.script = [{"status": 429, "body": {}}]
        with pytest.raises(ProviderError) as exc:
            HttpChatProvider(chat_server, model="m").complete(REQUEST)
        assert exc.value.retryable

    def test_client_error_is_not_retryable(self, chat_server):
        ChatHandler.script = [{"status": 400, "body": {}}]
        with pytest.raises(ProviderError) as exc:
            HttpChatProvider(chat_server, model="m").complete(REQUEST)
        assert not exc.value.retryable

    def test_malformed_body_is_not_retryable(self, chat_server):
        ChatHandler.script = [{"status": 200, "body": {"unexpected": True}}]
        with pytest.raises(ProviderError) as exc:
            HttpChatProvider(chat_server, model="m").complete(REQUEST)
        assert not exc.value.retryable

    def test_connection_failure_is_retryable(self):
        provider = HttpChatProvider("http://127.0.0.1:1/none", model="m", timeout=0.2)
        with pytest.raises(ProviderError) as exc:
            provider.complete(REQUEST)
        assert exc.value.retryable


class TestStubProvider:
    def test_extracts_batch_lemmas_from_default_prompt(self):
        batch = [
            LemmaRecord("casa", None),
            LemmaRecord("limitar", None),
        ]
        prompt = build_prompt(batch, GenerationConfig())
        assert StubProvider.batch_lemmas(prompt) == ["casa", "limitar"]

    def test_extracts_lemma_from_tagged_line(self):
        from lexiforge.model import PosTag

        batch = [LemmaRecord("gato", PosTag.from_label("Nombre masculino"))]
        prompt = build_prompt(batch, GenerationConfig())
        assert StubProvider.batch_lemmas(prompt) == ["gato"]

    def test_lookup_concatenates_known_replies(self):
        provider = StubProvider({"casa": "casa: Nombre femenino: Edificio para habitar."})
        prompt = build_prompt([LemmaRecord("casa"), LemmaRecord("perdido")], GenerationConfig())
        response = provider.complete(ProviderRequest(prompt=prompt, model="stub"))
        assert response.text == "casa: Nombre femenino: Edificio para habitar."
        assert provider.calls == 1

    def test_from_file(self, data_dir):
        provider = StubProvider.from_file(data_dir / "stub_replies.json")
        assert "limitar" in provider.replies
