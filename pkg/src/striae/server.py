"""Read-only HTTP service over one bundle.

Five JSON endpoints plus static assets for the explorer page. The bundle
is loaded once and never mutated, so the threading server needs no locks;
every response is a pure function of the bundle and the request path.
"""

import json
import os
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from .bundle import Bundle, read_bundle

DEFAULT_PORT = 8077
DEFAULT_BIND = "127.0.0.1"

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".mjs": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".json": "application/json",
    ".map": "application/json",
    ".svg": "image/svg+xml",
    ".png": "image/png",
    ".ico": "image/x-icon",
}

_PLACEHOLDER_PAGE = b"""<!doctype html>
<html><head><meta charset="utf-8"><title>striae bundle service</title></head>
<body><h1>striae bundle service</h1>
<p>No explorer assets are installed. The JSON API is live:</p>
<ul>
<li><a href="/api/manifest">/api/manifest</a></li>
<li><a href="/api/scores">/api/scores</a></li>
<li>/api/pair/{bullet1}/{bullet2}</li>
<li>/api/land/{bullet}/{land}</li>
<li><a href="/api/analysis">/api/analysis</a></li>
</ul></body></html>
"""


def _make_handler(bundle: Bundle, static_dir, request_log):
    static_root = Path(static_dir).resolve() if static_dir else None

    class BundleHandler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt, *args):  # quiet by default
            pass

        def _send_json(self, payload, status=200):
            body = json.dumps(payload, allow_nan=False).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def _send_404(self, message):
            self._send_json({"error": message}, status=404)

        def _serve_static(self, rel: str):
            if static_root is None:
                if rel in ("", "index.html"):
                    self.send_response(200)
                    self.send_header("Content-Type",
                                     "text/html; charset=utf-8")
                    self.send_header("Content-Length",
                                     str(len(_PLACEHOLDER_PAGE)))
                    self.end_headers()
                    self.wfile.write(_PLACEHOLDER_PAGE)
                    return
                self._send_404(f"no static asset {rel!r}")
                return
            target = (static_root / (rel or "index.html")).resolve()
            if not target.is_relative_to(static_root) or not target.is_file():
                self._send_404(f"no static asset {rel!r}")
                return
            body = target.read_bytes()
            ctype = _CONTENT_TYPES.get(target.suffix.lower(),
                                       "application/octet-stream")
            self.send_response(200)
            self.send_header("Content-Type", ctype)
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def do_GET(self):
            path = self.path.split("?", 1)[0]
            if request_log is not None:
                request_log.append(path)
            parts = [p for p in path.split("/") if p]

            if not parts or parts[0] != "api":
                self._serve_static("/".join(parts))
                return
            route = parts[1:]
            if route == ["manifest"]:
                self._send_json(bundle.manifest)
            elif route == ["scores"]:
                self._send_json(bundle.scores_payload())
            elif route == ["analysis"]:
                self._send_json(bundle.analysis_payload())
            elif len(route) == 3 and route[0] == "pair":
                payload = bundle.pair_payload(route[1], route[2])
                if payload is None:
                    self._send_404(f"no pair {route[1]} vs {route[2]}")
                else:
                    self._send_json(payload)
            elif len(route) == 3 and route[0] == "land":
                try:
                    land_index = int(route[2])
                except ValueError:
                    self._send_404(f"land index {route[2]!r} is not an integer")
                    return
                payload = bundle.land_payload(route[1], land_index)
                if payload is None:
                    self._send_404(f"no land {land_index} for bullet {route[1]}")
                else:
                    self._send_json(payload)
            else:
                self._send_404(f"no route {path}")

    return BundleHandler


def make_server(bundle: Bundle, port: int = DEFAULT_PORT,
                bind: str = DEFAULT_BIND, static_dir=None,
                request_log: list | None = None) -> ThreadingHTTPServer:
    """Bound, unstarted server; callers drive serve_forever()/shutdown()."""
    handler = _make_handler(bundle, static_dir, request_log)
    server = ThreadingHTTPServer((bind, port), handler)
    server.daemon_threads = True
    return server


def serve(bundle_path, port: int = DEFAULT_PORT, bind: str = DEFAULT_BIND,
          static_dir=None) -> None:
    """Load a bundle and serve until interrupted.

    Environment overrides: STRIAE_PORT and STRIAE_BIND take precedence
    over the arguments when set.
    """
    port = int(os.environ.get("STRIAE_PORT", port))
    bind = os.environ.get("STRIAE_BIND", bind)
    bundle = read_bundle(bundle_path)
    server = make_server(bundle, port=port, bind=bind, static_dir=static_dir)
    host = f"http://{bind}:{server.server_address[1]}"
    print(f"serving bundle {bundle_path} at {host} "
          f"({len(bundle.bullet_ids)} bullets)")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
