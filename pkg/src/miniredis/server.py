"""TCP front end: session lifecycle, configuration, and the server binary.

Concurrency model: any number of connections, one logical executor. All
command dispatch runs on the event loop with no awaits in between, so
commands from different sessions serialize naturally and each one sees a
consistent keyspace. Per session, replies are written by a dedicated
writer task fed from a bounded queue; a session that stops draining its
queue gets disconnected rather than stalling everyone else.
"""

from __future__ import annotations

import argparse
import asyncio
import itertools
import logging
import signal
import sys
import threading
from dataclasses import dataclass, fields

from .errors import InlineCommandError, ProtocolError
from .protocol import DecodeLimits, Error, RequestDecoder, encode
from .router import Router

log = logging.getLogger("miniredis.server")

LOG_LEVELS = {
    "debug": logging.DEBUG,
    "verbose": logging.INFO,
    "notice": logging.INFO,
    "warning": logging.WARNING,
}


@dataclass
class ServerConfig:
    """Everything the server can be told at startup.

    ``port=0`` binds an ephemeral port (handy for tests); real deployments
    use 1..65535.
    """

    bind: str = "127.0.0.1"
    port: int = 6379
    maxclients: int = 10000
    loglevel: str = "notice"
    output_queue_limit: int = 32 * 1024 * 1024
    max_bulk_length: int = 512 * 1024 * 1024
    max_array_length: int = 1024 * 1024
    max_depth: int = 32

    def __post_init__(self) -> None:
        if not 0 <= self.port <= 65535:
            raise ValueError(f"port out of range: {self.port}")
        if self.maxclients < 1:
            raise ValueError(f"maxclients must be positive: {self.maxclients}")
        if self.loglevel not in LOG_LEVELS:
            allowed = ", ".join(sorted(LOG_LEVELS))
            raise ValueError(f"unknown loglevel {self.loglevel!r} (use one of {allowed})")
        for name in (
            "output_queue_limit",
            "max_bulk_length",
            "max_array_length",
            "max_depth",
        ):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")

    def decode_limits(self) -> DecodeLimits:
        return DecodeLimits(
            max_bulk_length=self.max_bulk_length,
            max_array_length=self.max_array_length,
            max_depth=self.max_depth,
        )


def load_config_file(path: str) -> dict[str, str]:
    """Parse a ``key value`` per line config file, '#' starts a comment."""
    pairs: dict[str, str] = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition(" ")
            value = value.strip()
            if not value:
                raise ValueError(f"{path}:{lineno}: expected 'key value', got {line!r}")
            pairs[key.lower()] = value
    return pairs


def build_config(
    file_pairs: dict[str, str] | None = None, **overrides
) -> ServerConfig:
    """Defaults, then config file pairs, then explicit overrides."""
    known = {f.name: f.type for f in fields(ServerConfig)}
    kwargs: dict[str, object] = {}
    for key, text in (file_pairs or {}).items():
        name = key.replace("-", "_")
        if name not in known:
            raise ValueError(f"unknown configuration key: {key}")
        kwargs[name] = text if name in ("bind", "loglevel") else _parse_config_int(key, text)
    for name, value in overrides.items():
        if value is not None:
            kwargs[name] = value
    return ServerConfig(**kwargs)


def _parse_config_int(key: str, text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ValueError(f"configuration key {key} expects an integer, got {text!r}") from None


class Session:
    """One client connection and its outbound queue."""

    _ids = itertools.count(1)

    def __init__(
        self,
        reader: asyncio.StreamReader,
        writer: asyncio.StreamWriter,
        limits: DecodeLimits,
        queue_limit: int,
    ):
        self.id = next(self._ids)
        self.reader = reader
        self.writer = writer
        self.peer = writer.get_extra_info("peername")
        self.decoder = RequestDecoder(limits)
        self.queue: asyncio.Queue[bytes | None] = asyncio.Queue()
        self.queue_limit = queue_limit
        self.queued_bytes = 0
        self.close_requested = False  # set by QUIT
        self.closing = False

    def deliver_frame(self, value) -> None:
        self.send_bytes(encode(value))

    def send_bytes(self, data: bytes) -> None:
        """Queue one complete reply; overflow disconnects the session."""
        if self.closing:
            return
        self.queued_bytes += len(data)
        if self.queued_bytes > self.queue_limit:
            log.warning(
                "session %d from %s: output queue over %d bytes, disconnecting",
                self.id,
                self.peer,
                self.queue_limit,
            )
            self.request_close()
            return
        self.queue.put_nowait(data)

    def request_close(self) -> None:
        if not self.closing:
            self.closing = True
            self.queue.put_nowait(None)


class Server:
    """Accepts connections and funnels every command through one Router."""

    def __init__(self, config: ServerConfig | None = None):
        self.config = config or ServerConfig()
        self.router = Router()
        self.store = self.router.store
        self.broker = self.router.broker
        self._sessions: set[Session] = set()
        self._handlers: set[asyncio.Task] = set()
        self._listener: asyncio.base_events.Server | None = None

    @property
    def address(self) -> tuple[str, int]:
        """The actually bound (host, port); resolves port 0."""
        assert self._listener is not None, "server is not started"
        sockname = self._listener.sockets[0].getsockname()
        return sockname[0], sockname[1]

    @property
    def client_count(self) -> int:
        return len(self._sessions)

    async def start(self) -> None:
        self._listener = await asyncio.start_server(
            self._on_client, self.config.bind, self.config.port
        )
        log.info("listening on %s:%d", *self.address)

    async def serve_forever(self) -> None:
        assert self._listener is not None, "call start() first"
        await self._listener.serve_forever()

    async def stop(self) -> None:
        """Stop accepting, flush queued replies, close every session."""
        if self._listener is not None:
            self._listener.close()
            await self._listener.wait_closed()
            self._listener = None
        for session in list(self._sessions):
            session.request_close()
        if self._handlers:
            done, pending = await asyncio.wait(list(self._handlers), timeout=5)
            for task in pending:
                task.cancel()
            if pending:
                await asyncio.gather(*pending, return_exceptions=True)
        log.info("server stopped")

    async def _on_client(
        self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter
    ) -> None:
        if len(self._sessions) >= self.config.maxclients:
            writer.write(b"-ERR max number of clients reached\r\n")
            try:
                await writer.drain()
            except (ConnectionError, OSError):
                pass
            writer.close()
            return
        session = Session(
            reader, writer, self.config.decode_limits(), self.config.output_queue_limit
        )
        self._sessions.add(session)
        task = asyncio.current_task()
        assert task is not None
        self._handlers.add(task)
        log.info("session %d connected from %s", session.id, session.peer)
        writer_task = asyncio.create_task(self._writer_loop(session))
        try:
            await self._reader_loop(session)
        finally:
            self.broker.drop_session(session)
            session.request_close()
            try:
                await writer_task
            except asyncio.CancelledError:
                pass
            self._sessions.discard(session)
            self._handlers.discard(task)
            log.info("session %d closed", session.id)

    async def _reader_loop(self, session: Session) -> None:
        while not session.closing:
            try:
                data = await session.reader.read(65536)
            except (ConnectionError, OSError):
                return
            if not data:
                return
            for item in session.decoder.feed(data):
                if isinstance(item, InlineCommandError):
                    session.send_bytes(encode(Error(f"ERR Protocol error: {item}")))
                    continue
                if isinstance(item, ProtocolError):
                    # Fatal framing error: tell the client, then hang up.
                    log.info("session %d protocol error: %s", session.id, item)
                    session.send_bytes(
                        encode(Error(f"ERR Protocol error: {item.reason}"))
                    )
                    return
                for reply in self.router.dispatch(session, item):
                    session.send_bytes(encode(reply))
                if session.close_requested:
                    return

    async def _writer_loop(self, session: Session) -> None:
        writer = session.writer
        try:
            while True:
                data = await session.queue.get()
                if data is None:
                    break
                writer.write(data)
                await writer.drain()
                session.queued_bytes -= len(data)
        except (ConnectionError, OSError):
            pass
        finally:
            session.closing = True
            writer.close()
            try:
                await writer.wait_closed()
            except (ConnectionError, OSError):
                pass


async def _serve_until_signalled(config: ServerConfig) -> None:
    server = Server(config)
    await server.start()
    loop = asyncio.get_running_loop()
    stop = asyncio.Event()
    for sig in (signal.SIGINT, signal.SIGTERM):
        loop.add_signal_handler(sig, stop.set)
    try:
        await stop.wait()
    finally:
        log.info("shutting down")
        await server.stop()


def serve(config: ServerConfig) -> None:
    """Run until SIGINT or SIGTERM, then drain sessions and return."""
    asyncio.run(_serve_until_signalled(config))


class ServerThread:
    """A Server on its own event-loop thread; for tests and embedding.

    Usage::

        with ServerThread() as srv:
            ... connect to (srv.host, srv.port) ...
    """

    def __init__(self, config: ServerConfig | None = None):
        self.config = config or ServerConfig(port=0)
        self.server: Server | None = None
        self.host = ""
        self.port = 0
        self._thread: threading.Thread | None = None
        self._loop: asyncio.AbstractEventLoop | None = None
        self._stop: asyncio.Event | None = None
        self._ready = threading.Event()
        self._startup_error: BaseException | None = None

    def start(self) -> "ServerThread":
        self._thread = threading.Thread(
            target=lambda: asyncio.run(self._run()),
            name="miniredis-server",
            daemon=True,
        )
        self._thread.start()
        if not self._ready.wait(timeout=10):
            raise RuntimeError("server thread did not start in time")
        if self._startup_error is not None:
            self._thread.join(timeout=10)
            raise self._startup_error
        return self

    async def _run(self) -> None:
        self._loop = asyncio.get_running_loop()
        self._stop = asyncio.Event()
        server = Server(self.config)
        try:
            await server.start()
        except OSError as exc:
            self._startup_error = exc
            self._ready.set()
            return
        self.server = server
        self.host, self.port = server.address
        self._ready.set()
        try:
            await self._stop.wait()
        finally:
            await server.stop()

    def stop(self) -> None:
        loop, stop = self._loop, self._stop
        if loop is not None and stop is not None and self._thread and self._thread.is_alive():
            loop.call_soon_threadsafe(stop.set)
        if self._thread is not None:
            self._thread.join(timeout=10)

    def __enter__(self) -> "ServerThread":
        return self.start()

    def __exit__(self, *exc_info) -> None:
        self.stop()


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="miniredis-server",
        description="In-memory data-structure server speaking RESP2.",
    )
    parser.add_argument("--bind", metavar="ADDR", help="address to listen on")
    parser.add_argument("--port", type=int, metavar="PORT", help="port to listen on")
    parser.add_argument(
        "--maxclients", type=int, metavar="N", help="maximum simultaneous connections"
    )
    parser.add_argument(
        "--loglevel", choices=sorted(LOG_LEVELS), help="logging verbosity"
    )
    parser.add_argument(
        "--config", metavar="FILE", help="'key value' per line; flags win over it"
    )
    args = parser.parse_args(argv)
    try:
        pairs = load_config_file(args.config) if args.config else {}
        config = build_config(
            pairs,
            bind=args.bind,
            port=args.port,
            maxclients=args.maxclients,
            loglevel=args.loglevel,
        )
    except (OSError, ValueError) as exc:
        print(f"miniredis-server: {exc}", file=sys.stderr)
        return 1
    logging.basicConfig(
        level=LOG_LEVELS[config.loglevel],
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        serve(config)
    except OSError as exc:
        print(
            f"miniredis-server: cannot listen on {config.bind}:{config.port}: {exc}",
            file=sys.stderr,
        )
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
