"""Heterogeneous compute networks: machine speeds, link bandwidths, interface caps."""

from __future__ import annotations

import json
import math

import numpy as np

from .errors import ValidationError

INF = math.inf

DEFAULT_SPEED_RANGE = (1.0, 10.0)
DEFAULT_BW_RANGE = (1.0, 10.0)
DEFAULT_CAP_RANGE = (5.0, 50.0)


class ComputeNetwork:
    """Machines with execution speeds and a directional bandwidth matrix.

    ``bandwidth[q, r]`` is the link rate from machine ``q`` to ``r``; zero means
    the pair is not connected. The diagonal is ignored: a transfer between a
    machine and itself is free.
    """

    def __init__(self, speeds, bandwidth, bw_out, bw_in):
        self.speeds = np.array(speeds, dtype=np.float64)
        self.bandwidth = np.array(bandwidth, dtype=np.float64)
        self.bw_out = np.array(bw_out, dtype=np.float64)
        self.bw_in = np.array(bw_in, dtype=np.float64)
        n = len(self.speeds)
        if self.speeds.ndim != 1 or n < 1:
            raise ValidationError("network needs at least one machine")
        if self.bandwidth.shape != (n, n):
            raise ValidationError(f"bandwidth must be {n}x{n}, got {self.bandwidth.shape}")
        if self.bw_out.shape != (n,) or self.bw_in.shape != (n,):
            raise ValidationError("bw_out and bw_in need one entry per machine")
        if not np.all(self.speeds > 0) or not np.all(np.isfinite(self.speeds)):
            raise ValidationError("machine speeds must be positive and finite")
        if np.any(self.bandwidth < 0) or np.any(np.isnan(self.bandwidth)):
            raise ValidationError("bandwidths must be nonnegative")
        if not (np.all(self.bw_out > 0) and np.all(self.bw_in > 0)):
            raise ValidationError("interface caps must be positive")
        for a in (self.speeds, self.bandwidth, self.bw_out, self.bw_in):
            a.setflags(write=False)

    @property
    def n_machines(self) -> int:
        return len(self.speeds)

    def comm_time(self, data: float, q: int, r: int) -> float:
        """Time to move ``data`` from machine ``q`` to ``r`` (``inf`` if unconnected)."""
        if q == r or data == 0:
            return 0.0
        b = self.bandwidth[q, r]
        if b > 0:
            return float(data / b)
        return INF

    def scaled(self, k: float) -> "ComputeNetwork":
        """Copy with every speed, bandwidth and cap multiplied by ``k``."""
        return ComputeNetwork(self.speeds * k, self.bandwidth * k, self.bw_out * k, self.bw_in * k)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ComputeNetwork):
            return NotImplemented
        return all(
            np.array_equal(a, b)
            for a, b in zip(
                (self.speeds, self.bandwidth, self.bw_out, self.bw_in),
                (other.speeds, other.bandwidth, other.bw_out, other.bw_in),
            )
        )

    def __repr__(self) -> str:
        return f"ComputeNetwork(n_machines={self.n_machines})"

    def to_dict(self) -> dict:
        return {
            "speeds": self.speeds.tolist(),
            "bandwidth": self.bandwidth.tolist(),
            "bw_out": self.bw_out.tolist(),
            "bw_in": self.bw_in.tolist(),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "ComputeNetwork":
        try:
            return cls(obj["speeds"], obj["bandwidth"], obj["bw_out"], obj["bw_in"])
        except KeyError as exc:
            raise ValidationError(f"malformed network: missing field {exc}") from None
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f"malformed network: {exc}") from None

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_json(cls, text: str) -> "ComputeNetwork":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"invalid JSON at line {exc.lineno} col {exc.colno}: {exc.msg}") from None
        return cls.from_dict(obj)


def _check_range(name: str, rng: tuple[float, float]) -> None:
    lo, hi = rng
    if not (0 < lo <= hi and math.isfinite(hi)):
        raise ValidationError(f"{name} must satisfy 0 < lo <= hi, got {rng}")


def generate_network(
    n_machines: int,
    speed_range: tuple[float, float] = DEFAULT_SPEED_RANGE,
    bw_range: tuple[float, float] = DEFAULT_BW_RANGE,
    cap_range: tuple[float, float] = DEFAULT_CAP_RANGE,
    seed: int = 0,
    symmetric: bool = True,
) -> ComputeNetwork:
    """Draw a random network with uniform speeds, bandwidths and interface caps."""
    if n_machines < 1:
        raise ValidationError("n_machines must be >= 1")
    for name, r in (("speed_range", speed_range), ("bw_range", bw_range), ("cap_range", cap_range)):
        _check_range(name, r)
    rng = np.random.default_rng(int(seed) & 0xFFFFFFFFFFFFFFFF)
    speeds = rng.uniform(*speed_range, size=n_machines)
    bw = rng.uniform(*bw_range, size=(n_machines, n_machines))
    if symmetric:
        bw = np.triu(bw, 1)
        bw = bw + bw.T
    np.fill_diagonal(bw, 0.0)
    bw_out = rng.uniform(*cap_range, size=n_machines)
    bw_in = rng.uniform(*cap_range, size=n_machines)
    return ComputeNetwork(speeds, bw, bw_out, bw_in)


def comm_time(net: ComputeNetwork, data: float, q: int, r: int) -> float:
    return net.comm_time(data, q, r)
