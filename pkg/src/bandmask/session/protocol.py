"""Newline-delimited JSON wire protocol for observers.

Any language can implement an observer: read one JSON object per line on
stdin (or a TCP stream), write one per line on stdout. Message flow:

    observer -> driver   hello {observer_id, kind, tags?}
    driver -> observer   stimulus {stimulus_id, labels[16], png_path? | png_base64?}
    observer -> driver   response {stimulus_id, category}
    ...                  (one response per stimulus, strictly in order)
    driver -> observer   bye {}

Either side may send error {reason}; the driver treats it as a protocol
failure for the current trial.
"""

import json
import queue
import shlex
import socket
import subprocess
import threading

from bandmask.errors import ProtocolError

MSG_HELLO = "hello"
MSG_STIMULUS = "stimulus"
MSG_RESPONSE = "response"
MSG_BYE = "bye"
MSG_ERROR = "error"

OBSERVER_KINDS = ("human", "network")

_REQUIRED = {
    MSG_HELLO: ("observer_id", "kind"),
    MSG_STIMULUS: ("stimulus_id", "labels"),
    MSG_RESPONSE: ("stimulus_id", "category"),
    MSG_BYE: (),
    MSG_ERROR: ("reason",),
}


def validate(msg):
    if not isinstance(msg, dict) or "type" not in msg:
        raise ProtocolError(f"message is not an object with a type: {msg!r}")
    mtype = msg["type"]
    if mtype not in _REQUIRED:
        raise ProtocolError(f"unknown message type {mtype!r}")
    for field in _REQUIRED[mtype]:
        if field not in msg:
            raise ProtocolError(f"{mtype} message missing field {field!r}")
    if mtype == MSG_HELLO and msg["kind"] not in OBSERVER_KINDS:
        raise ProtocolError(f"observer kind {msg['kind']!r} not in {OBSERVER_KINDS}")
    if mtype == MSG_STIMULUS and len(msg["labels"]) != 16:
        raise ProtocolError("stimulus message must carry exactly 16 labels")
    return msg


def encode(msg):
    validate(msg)
    return json.dumps(msg, sort_keys=True) + "\n"


def decode(line):
    try:
        msg = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"invalid JSON on wire: {exc}") from exc
    return validate(msg)


class _LineEndpoint:
    """Line-oriented duplex channel with a reader thread for timeouts."""

    def __init__(self):
        self._queue = queue.Queue()
        self._reader = None

    def _start_reader(self, readline):
        def pump():
            while True:
                try:
                    line = readline()
                except (OSError, ValueError):
                    break
                if not line:
                    break
                self._queue.put(line)
            self._queue.put(None)  # EOF sentinel

        self._reader = threading.Thread(target=pump, daemon=True)
        self._reader.start()

    def send(self, msg):
        raise NotImplementedError

    def recv(self, timeout=None):
        try:
            line = self._queue.get(timeout=timeout)
        except queue.Empty:
            raise ProtocolError(f"observer did not answer within {timeout}s") from None
        if line is None:
            raise ProtocolError("observer closed the connection")
        return decode(line)


class SubprocessObserver(_LineEndpoint):
    """Observer running as a child process, protocol over stdin/stdout."""

    def __init__(self, cmd):
        super().__init__()
        self.cmd = shlex.split(cmd) if isinstance(cmd, str) else list(cmd)
        self._proc = None

    def __enter__(self):
        self._proc = subprocess.Popen(
            self.cmd,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )
        self._start_reader(self._proc.stdout.readline)
        return self

    def send(self, msg):
        if self._proc.poll() is not None:
            raise ProtocolError("observer process exited")
        try:
            self._proc.stdin.write(encode(msg))
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise ProtocolError(f"observer pipe closed: {exc}") from exc

    def __exit__(self, *exc):
        if self._proc is not None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()


class TcpObserver(_LineEndpoint):
    """Observer reachable over TCP, protocol over the socket stream."""

    def __init__(self, host, port):
        super().__init__()
        self.address = (host, port)
        self._sock = None
        self._wfile = None

    def __enter__(self):
        self._sock = socket.create_connection(self.address, timeout=30)
        rfile = self._sock.makefile("r", encoding="utf-8", newline="\n")
        self._wfile = self._sock.makefile("w", encoding="utf-8", newline="\n")
        self._start_reader(rfile.readline)
        return self

    def send(self, msg):
        try:
            self._wfile.write(encode(msg))
            self._wfile.flush()
        except OSError as exc:
            raise ProtocolError(f"observer socket closed: {exc}") from exc

    def __exit__(self, *exc):
        if self._sock is not None:
            try:
                self._sock.close()
            except OSError:
                pass
