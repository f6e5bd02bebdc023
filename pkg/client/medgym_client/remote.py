from __future__ import annotations

import json
import socket
import subprocess
import sys

import numpy as np

SUPPORTED_VERSION = "1"


class ProtocolError(RuntimeError):
    """Server answered with an error payload; carries the server's text."""


class VersionError(RuntimeError):
    """Server speaks a protocol version this client does not."""


class _StdioTransport:
    def __init__(self, command: list[str]):
        self.proc = subprocess.Popen(
            command, stdin=subprocess.PIPE, stdout=subprocess.PIPE, text=True, bufsize=1
        )

    def request(self, payload: dict) -> str:
        if self.proc.poll() is not None:
            raise ProtocolError("server process exited")
        self.proc.stdin.write(json.dumps(payload) + "\n")
        self.proc.stdin.flush()
        line = self.proc.stdout.readline()
        if not line:
            raise ProtocolError("server closed the connection")
        return line

    def close(self) -> None:
        if self.proc.poll() is None:
            try:
                self.proc.stdin.close()
            except OSError:
                pass
            self.proc.wait(timeout=5)


class _TcpTransport:
    def __init__(self, host: str, port: int):
        self.sock = socket.create_connection((host, port), timeout=30)
        self.fh = self.sock.makefile("rw")

    def request(self, payload: dict) -> str:
        self.fh.write(json.dumps(payload) + "\n")
        self.fh.flush()
        line = self.fh.readline()
        if not line:
            raise ProtocolError("server closed the connection")
        return line

    def close(self) -> None:
        try:
            self.fh.close()
        finally:
            self.sock.close()


class RemoteEnv:
    """reset/step facade over one protocol session.

    Observations come back as numpy arrays of the shape announced by hello;
    step returns (observation, reward, terminated, truncated, info) in the
    convention RL frameworks expect.
    """

    def __init__(self, transport, config: dict | None = None):
        self._transport = transport
        self._config = dict(config or {})
        self._closed = False
        meta = self._call({"op": "hello"})
        if meta.get("version") != SUPPORTED_VERSION:
            self.close()
            raise VersionError(
                f"server protocol version {meta.get('version')!r}, need {SUPPORTED_VERSION!r}"
            )
        self.env_name: str = meta["env"]
        self.action_shape: list[int] = meta["action_shape"]
        self.obs_shape: list[int] = meta["obs_shape"]

    def _call(self, payload: dict) -> dict:
        reply = json.loads(self._transport.request(payload))
        if "error" in reply:
            raise ProtocolError(reply["error"])
        return reply

    def reset(self, seed: int | None = None) -> np.ndarray:
        payload = {"op": "reset"}
        if seed is not None:
            payload["seed"] = seed
        if self._config:
            payload["config"] = self._config
        reply = self._call(payload)
        return np.asarray(reply["observation"], dtype=np.float64)

    def step(self, action):
        reply = self._call({"op": "step", "action": _plain(action)})
        obs = np.asarray(reply["observation"], dtype=np.float64)
        info = {k: v for k, v in reply.items() if k not in ("observation", "reward", "terminated")}
        return obs, reply["reward"], reply["terminated"], reply.get("truncated", False), info

    def close(self) -> None:
        if self._closed:
            return
        self._closed = True
        try:
            self._transport.request({"op": "close"})
        except ProtocolError:
            pass
        self._transport.close()

    def __enter__(self) -> "RemoteEnv":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def _plain(action):
    if isinstance(action, np.ndarray):
        return action.tolist()
    if isinstance(action, (np.integer, np.floating)):
        return action.item()
    return action


def make(
    env: str,
    resource: str,
    config: dict | None = None,
    address: tuple[str, int] | None = None,
    server_command: list[str] | None = None,
) -> RemoteEnv:
    """Connect to (or spawn) a server and return a ready RemoteEnv.

    By default spawns `python -m medgym serve` on stdio; pass `address` to use
    a running TCP server instead, or `server_command` to override the spawn
    line (resource flags are appended).
    """
    if address is not None:
        return RemoteEnv(_TcpTransport(*address), config)
    base = server_command or [sys.executable, "-m", "medgym", "serve"]
    flag = "--volume" if env == "imagym" else "--scenario"
    return RemoteEnv(_StdioTransport(base + ["--env", env, flag, str(resource)]), config)
