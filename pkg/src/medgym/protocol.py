"""Wire protocol v1: newline-delimited JSON over stdio or TCP.

One request line yields exactly one response line.  Requests are objects with
an "op" of hello/reset/step/close; malformed input produces an {"error": ...}
response and the session continues.  Each session owns one environment
instance; the TCP server runs one session per connection.
"""

from __future__ import annotations

import json
import socketserver
import sys

import numpy as np

from .errors import EpisodeError, MedgymError
from .events import N_ACTIONS, OBS_DIM
from .geometry import SampleGrid
from .imagym import ACTION_DIM, ImagymConfig, ImagymEnv
from .resus import ResusConfig, ResusEnv, get_scenario
from .volume import Volume, load_volume

PROTOCOL_VERSION = "1"
ENV_NAMES = ("imagym", "resus")


def build_imagym_config(overrides: dict | None) -> ImagymConfig:
    overrides = dict(overrides or {})
    grid_raw = overrides.pop("grid", None)
    grid = SampleGrid() if grid_raw is None else SampleGrid(
        rows=int(grid_raw.get("rows", 128)),
        cols=int(grid_raw.get("cols", 128)),
        extent=tuple(grid_raw.get("extent", (80.0, 80.0))),
    )
    return ImagymConfig(grid=grid, **overrides)


def build_resus_config(overrides: dict | None) -> ResusConfig:
    return ResusConfig(**(overrides or {}))


class NativeEnv:
    """Uniform in-process adapter shared by the server and the rollout runner."""

    name: str
    action_shape: list[int]
    obs_shape: list[int]

    def reset(self, seed=None) -> np.ndarray:
        raise NotImplementedError

    def step(self, action) -> tuple[np.ndarray, float, bool, bool]:
        raise NotImplementedError

    def episode_success(self):
        """Terminal success flag where the environment defines one, else None."""
        return None

    def sample_action(self, rng: np.random.Generator):
        raise NotImplementedError

    def zero_action(self):
        raise NotImplementedError

    def extra_info(self) -> dict:
        return {}


class ImagymAdapter(NativeEnv):
    name = "imagym"

    def __init__(self, volume: Volume, config: ImagymConfig | None = None):
        self.env = ImagymEnv(volume, config)
        g = self.env.config.grid
        self.action_shape = [ACTION_DIM]
        self.obs_shape = [g.rows, g.cols]
        self._last_obs = None

    def reset(self, seed=None):
        obs, _ = self.env.reset(seed)
        self._last_obs = obs
        return obs.pixels

    def step(self, action):
        obs, reward, terminated = self.env.step(action)
        self._last_obs = obs
        return obs.pixels, reward, terminated, self.env.state.truncated

    def sample_action(self, rng):
        clip = self.env.config.action_clip
        return rng.uniform(-clip, clip, ACTION_DIM).tolist()

    def zero_action(self):
        return [0.0] * ACTION_DIM

    def extra_info(self):
        if self._last_obs is None:
            return {}
        return {"organ_area": {k: v for k, v in self._last_obs.organ_area.items()}}


class ResusAdapter(NativeEnv):
    name = "resus"
    action_shape = [1]
    obs_shape = [OBS_DIM]

    def __init__(self, scenario, config: ResusConfig | None = None):
        self.env = ResusEnv(scenario, config)

    def reset(self, seed=None):
        return self.env.reset(seed)

    def step(self, action):
        if isinstance(action, (list, tuple)):
            if len(action) != 1:
                raise EpisodeError("resus action must be a single integer in [0, 48]")
            action = action[0]
        if isinstance(action, float) and not action.is_integer():
            raise EpisodeError("resus action must be a single integer in [0, 48]")
        obs, reward, terminated = self.env.step(int(action))
        return obs, reward, terminated, self.env.truncated

    def episode_success(self):
        from .resus import success

        return success(self.env.patient) if self.env.patient is not None else None

    def sample_action(self, rng):
        return int(rng.integers(0, N_ACTIONS))

    def zero_action(self):
        return 0


def make_env(env_name: str, resource, config_overrides: dict | None = None) -> NativeEnv:
    """Build a native environment from its name and resource path.

    imagym wants a PHV1 volume path (or a Volume); resus a scenario file path
    or bundled scenario name (or a ScenarioSpec).
    """
    if env_name == "imagym":
        volume = resource if isinstance(resource, Volume) else load_volume(resource)
        return ImagymAdapter(volume, build_imagym_config(config_overrides))
    if env_name == "resus":
        scenario = resource if not isinstance(resource, (str, bytes)) and hasattr(resource, "effects") else get_scenario(resource)
        return ResusAdapter(scenario, build_resus_config(config_overrides))
    raise MedgymError(f"unknown environment: {env_name}")


class Session:
    """State machine mapping one request dict to one response dict."""

    def __init__(self, env_name: str, resource, config_overrides: dict | None = None):
        self.env_name = env_name
        self.resource = resource
        self.base_overrides = dict(config_overrides or {})
        self.env = make_env(env_name, resource, self.base_overrides)
        self.active = False
        self.closed = False

    def handle_line(self, line: str) -> str:
        try:
            request = json.loads(line)
        except json.JSONDecodeError as exc:
            return json.dumps({"error": f"malformed request: {exc.msg}"})
        if not isinstance(request, dict):
            return json.dumps({"error": "malformed request: expected an object"})
        return json.dumps(self.handle(request))

    def handle(self, request: dict) -> dict:
        op = request.get("op")
        try:
            if op == "hello":
                return {
                    "version": PROTOCOL_VERSION,
                    "env": self.env.name,
                    "action_shape": self.env.action_shape,
                    "obs_shape": self.env.obs_shape,
                }
            if op == "reset":
                overrides = request.get("config")
                if overrides:
                    merged = {**self.base_overrides, **overrides}
                    self.env = make_env(self.env_name, self.resource, merged)
                obs = self.env.reset(request.get("seed"))
                self.active = True
                return {"observation": obs.tolist(), **self.env.extra_info()}
            if op == "step":
                if not self.active:
                    raise EpisodeError("no active episode")
                if "action" not in request:
                    raise EpisodeError("step request lacks an action")
                obs, reward, terminated, truncated = self.env.step(request["action"])
                if terminated:
                    self.active = False
                response = {
                    "observation": obs.tolist(),
                    "reward": reward,
                    "terminated": terminated,
                    "truncated": truncated,
                    **self.env.extra_info(),
                }
                s = self.env.episode_success()
                if terminated and s is not None:
                    response["success"] = bool(s)
                return response
            if op == "close":
                self.closed = True
                return {"ok": True}
            raise EpisodeError(f"unknown op: {op!r}")
        except MedgymError as exc:
            return {"error": str(exc)}
        except (TypeError, ValueError, KeyError) as exc:
            return {"error": f"bad request: {exc}"}


def serve_stdio(env_name, resource, config_overrides=None, stdin=None, stdout=None) -> None:
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    session = Session(env_name, resource, config_overrides)
    for line in stdin:
        if not line.strip():
            continue
        try:
            stdout.write(session.handle_line(line) + "\n")
            stdout.flush()
        except BrokenPipeError:
            return
        if session.closed:
            break


def serve_tcp(env_name, resource, port: int, config_overrides=None, ready_callback=None):
    """Blocking TCP server; one protocol session per connection."""

    class Handler(socketserver.StreamRequestHandler):
        def handle(self):
            session = Session(env_name, resource, config_overrides)
            for raw in self.rfile:
                line = raw.decode("utf-8", errors="replace")
                if not line.strip():
                    continue
                self.wfile.write((session.handle_line(line) + "\n").encode())
                self.wfile.flush()
                if session.closed:
                    break

    class Server(socketserver.ThreadingTCPServer):
        allow_reuse_address = True
        daemon_threads = True

    server = Server(("127.0.0.1", port), Handler)
    if ready_callback is not None:
        ready_callback(server)
    try:
        server.serve_forever()
    finally:
        server.server_close()
