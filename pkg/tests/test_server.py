"""HTTP service over a bundle: endpoints, 404s, pass-through fidelity."""

import json
import threading
import urllib.error
import urllib.request

import pytest

from striae.bundle import build_bundle
from striae.config import PipelineConfig
from striae.server import make_server

from test_bundle import build_two_bullet_state


@pytest.fixture(scope="module")
def service():
    records, cset, analysis = build_two_bullet_state(seed=55)
    bundle = build_bundle(records, cset, analysis, PipelineConfig())
    request_log = []
    srv = make_server(bundle, port=0, request_log=request_log)
    thread = threading.Thread(target=srv.serve_forever, daemon=True)
    thread.start()
    base = f"http://127.0.0.1:{srv.server_address[1]}"
    yield base, bundle, request_log
    srv.shutdown()
    srv.server_close()


def get_json(base, path):
    with urllib.request.urlopen(base + path, timeout=10) as resp:
        assert resp.headers["Content-Type"].startswith("application/json")
        return resp.status, json.loads(resp.read())


def get_error(base, path):
    try:
        urllib.request.urlopen(base + path, timeout=10)
    except urllib.error.HTTPError as exc:
        return exc.code, json.loads(exc.read())
    raise AssertionError(f"{path} did not fail")


class TestEndpoints:
    def test_manifest_verbatim(self, service):
        base, bundle, _ = service
        status, data = get_json(base, "/api/manifest")
        assert status == 200
        assert data == bundle.data["manifest"]

    def test_scores(self, service):
        base, bundle, _ = service
        _, data = get_json(base, "/api/scores")
        assert data == bundle.scores_payload()
        assert len(data["scores"]) == 3

    def test_analysis(self, service):
        base, bundle, _ = service
        _, data = get_json(base, "/api/analysis")
        assert data == bundle.data["analysis"]

    def test_pair_pass_through(self, service):
        base, bundle, _ = service
        _, data = get_json(base, "/api/pair/B11/B12")
        stored = next(p for p in bundle.data["pairs"]
                      if (p["bullet1"], p["bullet2"]) == ("B11", "B12"))
        assert len(data["lands"]) == 36
        got = {(e["i"], e["j"]): e["ccf"] for e in data["lands"]}
        want = {(e["i"], e["j"]): e["ccf"] for e in stored["lands"]}
        assert got == want

    def test_pair_mirrored_route(self, service):
        base, bundle, _ = service
        _, fwd = get_json(base, "/api/pair/B11/B12")
        _, rev = get_json(base, "/api/pair/B12/B11")
        assert rev["score"]["ccf_diff"] == fwd["score"]["ccf_diff"]

    def test_land(self, service):
        base, bundle, _ = service
        _, data = get_json(base, "/api/land/B11/4")
        assert data == bundle.land_payload("B11", 4)
        assert data["signal"]["values"]


class TestErrors:
    def test_unknown_pair_404(self, service):
        base, _, _ = service
        code, body = get_error(base, "/api/pair/B11/NOPE")
        assert code == 404
        assert "error" in body

    def test_unknown_land_404(self, service):
        base, _, _ = service
        code, _ = get_error(base, "/api/land/B11/9")
        assert code == 404
        code, _ = get_error(base, "/api/land/B11/notanumber")
        assert code == 404

    def test_unknown_route_404_json(self, service):
        base, _, _ = service
        code, body = get_error(base, "/api/nothing/here")
        assert code == 404
        assert isinstance(body["error"], str)


class TestStatic:
    def test_placeholder_root(self, service):
        base, _, _ = service
        with urllib.request.urlopen(base + "/", timeout=10) as resp:
            assert resp.status == 200
            assert b"<" in resp.read()

    def test_static_dir_and_traversal_guard(self, tmp_path):
        records, cset, analysis = build_two_bullet_state(seed=56)
        bundle = build_bundle(records, cset, analysis)
        (tmp_path / "index.html").write_text("<h1>explorer</h1>")
        (tmp_path / "app.js").write_text("console.log(1)")
        srv = make_server(bundle, port=0, static_dir=tmp_path)
        thread = threading.Thread(target=srv.serve_forever, daemon=True)
        thread.start()
        base = f"http://127.0.0.1:{srv.server_address[1]}"
        try:
            with urllib.request.urlopen(base + "/", timeout=10) as resp:
                assert b"explorer" in resp.read()
            with urllib.request.urlopen(base + "/app.js", timeout=10) as r:
                assert r.headers["Content-Type"].startswith(
                    ("text/javascript", "application/javascript"))
            code, _ = get_error(base, "/../etc/passwd")
            assert code == 404
        finally:
            srv.shutdown()
            srv.server_close()


class TestRequestLog:
    def test_paths_recorded(self, service):
        base, _, log = service
        before = len(log)
        get_json(base, "/api/manifest")
        assert log[before:] == ["/api/manifest"]
