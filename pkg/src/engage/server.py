"""HTTP front end tying the collection endpoint to queue, workers and store.

Endpoints:

* ``POST /v1/events`` — submit one or more wire-format records; answers
  202 accepted / 400 malformed / 403 bot / 429 backpressure.
* ``GET /v1/collector.js`` — the browser collector script, served with
  headers suitable for asynchronous embedding.
* ``GET /v1/health`` — liveness plus queue/counter gauges.

Submissions coming through the collector script mark themselves with the
``X-Engage-Collector: 1`` header; requests without it are classified as
non-collector traffic (crawlers never execute the script).
"""

from __future__ import annotations

import json
import logging
import threading
import time
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from engage.ingest import (
    DEFAULT_QUEUE_CAPACITY,
    DEFAULT_RATE_PER_SECOND,
    DEFAULT_RATE_WINDOW_SECONDS,
    Denylist,
    DrainWorker,
    EventQueue,
    IngestPipeline,
    IngestStats,
    RateCounter,
    RequestMeta,
)
from engage.store import EventStore

logger = logging.getLogger(__name__)

COLLECTOR_HEADER = "X-Engage-Collector"
MAX_BODY_BYTES = 1 << 20

FALLBACK_COLLECTOR_JS = (
    "/* engage collector: script bundle not installed on this server.\n"
    " * Build the frontend package and start the server with\n"
    " * --collector-script pointing at its dist/collector.js. */\n"
)


class BindFailure(RuntimeError):
    """The configured port could not be bound."""


@dataclass
class ServiceConfig:
    data_dir: Path | str
    host: str = "127.0.0.1"
    port: int = 8080
    queue_capacity: int = DEFAULT_QUEUE_CAPACITY
    workers: int = 2
    denylist_path: Path | str | None = None
    rate_limit_per_second: float = DEFAULT_RATE_PER_SECOND
    rate_window_seconds: float = DEFAULT_RATE_WINDOW_SECONDS
    collector_script: Path | str | None = None


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    timeout = 10  # idle keep-alive connections release their thread
    server: "_HttpServer"

    def log_message(self, format: str, *args) -> None:  # noqa: A002
        logger.debug("%s %s", self.address_string(), format % args)

    def _respond(self, status: int, payload: dict, content_type: str = "application/json") -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _request_meta(self, query: str) -> RequestMeta:
        forwarded = self.headers.get("X-Forwarded-For", "")
        source_ip = forwarded.split(",")[0].strip() if forwarded else self.client_address[0]
        # sendBeacon cannot set headers, so the unload path marks itself
        # with a query parameter instead.
        marked = self.headers.get(COLLECTOR_HEADER, "") in ("1", "true") or (
            "collector=1" in query.split("&") if query else False
        )
        return RequestMeta(
            source_ip=source_ip,
            user_agent=self.headers.get("User-Agent", ""),
            executed_collector=marked,
            arrival_time=time.time(),
        )

    def do_POST(self) -> None:
        path, _, query = self.path.partition("?")
        if path != "/v1/events":
            self._respond(404, {"error": "not found"})
            return
        length = int(self.headers.get("Content-Length", 0) or 0)
        if length > MAX_BODY_BYTES:
            self._respond(400, {"status": "malformed", "detail": "body too large"})
            return
        body = self.rfile.read(length) if length else b""
        outcome = self.server.owner.pipeline.handle_submit(body, self._request_meta(query))
        payload = {"status": outcome.disposition.label}
        if outcome.detail:
            payload["detail"] = outcome.detail
        if outcome.accepted:
            payload["accepted"] = outcome.accepted
        self._respond(outcome.disposition.http_status, payload)

    def do_GET(self) -> None:
        owner = self.server.owner
        if self.path == "/v1/health":
            self._respond(
                200,
                {
                    "status": "ok",
                    "queue_depth": owner.queue.depth,
                    "queue_capacity": owner.queue.capacity,
                    "counters": owner.stats.snapshot(),
                },
            )
        elif self.path == "/v1/collector.js":
            script = FALLBACK_COLLECTOR_JS.encode("utf-8")
            path = owner.config.collector_script
            if path is not None and Path(path).is_file():
                script = Path(path).read_bytes()
            self.send_response(200)
            self.send_header("Content-Type", "application/javascript; charset=utf-8")
            # The embed uses <script async src=...>; let clients cache it.
            self.send_header("Cache-Control", "public, max-age=3600")
            self.send_header("Content-Length", str(len(script)))
            self.end_headers()
            self.wfile.write(script)
        else:
            self._respond(404, {"error": "not found"})


class _HttpServer(ThreadingHTTPServer):
    daemon_threads = True
    # Handler threads for lingering keep-alive connections must not block
    # shutdown; the queue drain below is the part that matters.
    block_on_close = False
    owner: "IngestionServer"


class IngestionServer:
    """Queue/worker collection service over one data directory."""

    def __init__(self, config: ServiceConfig, *, store: EventStore | None = None):
        self.config = config
        self.store = store or EventStore(config.data_dir)
        self.queue = EventQueue(config.queue_capacity)
        self.stats = IngestStats()
        denylist = None
        if config.denylist_path is not None:
            denylist = Denylist.from_file(config.denylist_path)
        rate_counter = None
        if config.rate_limit_per_second > 0:
            rate_counter = RateCounter(config.rate_limit_per_second, config.rate_window_seconds)
        self.pipeline = IngestPipeline(
            self.queue, denylist=denylist, rate_counter=rate_counter, stats=self.stats
        )
        self._workers = [
            DrainWorker(self.queue, self.store, stats=self.stats)
            for _ in range(max(1, config.workers))
        ]
        try:
            self._httpd = _HttpServer((config.host, config.port), _Handler)
        except OSError as exc:
            raise BindFailure(f"cannot bind {config.host}:{config.port}: {exc}") from exc
        self._httpd.owner = self
        self._serve_thread: threading.Thread | None = None

    @property
    def port(self) -> int:
        return self._httpd.server_address[1]

    @property
    def endpoint(self) -> str:
        return f"http://{self.config.host}:{self.port}"

    def start(self) -> None:
        for worker in self._workers:
            worker.start()
        self._serve_thread = threading.Thread(
            target=self._httpd.serve_forever, name="engage-http", daemon=True
        )
        self._serve_thread.start()
        logger.info("listening on %s", self.endpoint)

    def stop(self, *, drain: bool = True, timeout: float = 30.0) -> None:
        """Stop accepting, optionally drain the queue to the store, join workers."""
        self._httpd.shutdown()
        self._httpd.server_close()
        if self._serve_thread is not None:
            self._serve_thread.join(timeout=5.0)
        if drain:
            deadline = time.monotonic() + timeout
            while self.queue.depth > 0 and time.monotonic() < deadline:
                time.sleep(0.01)
            # A worker may still hold a dequeued batch; entering the drain
            # lock guarantees any in-flight append has finished.
            with self.queue.drain_lock:
                pass
        for worker in self._workers:
            worker.stop()
        for worker in self._workers:
            worker.join(timeout=5.0)
