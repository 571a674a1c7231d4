"""Multicast beamforming instances.

A raw instance carries channels ``h_k``, SNR targets ``gamma_k`` and noise
variances ``sigma2_k``. Normalizing by ``sqrt(gamma_k * sigma2_k)`` turns
every QoS constraint into ``|h_k^H w| >= 1``; the solvers only ever see the
normalized :class:`Problem`.

Beamformers are plain complex numpy vectors of length ``N``.

Complex vectors map to reals as ``x = (Re w, Im w)``. Under that map

    Re(h^H w) = (Re h, Im h) . x
    Im(h^H w) = (-Im h, Re h) . x

which :meth:`Problem.real_rows` exposes for building QPs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "RawInstance",
    "Problem",
    "normalize",
    "generate_raw_instance",
    "generate_instance",
    "objective",
    "feasibility_margin",
    "is_feasible",
    "to_maxmin",
    "complex_to_real",
    "real_to_complex",
    "load_instance",
    "dump_instance",
    "instance_to_json",
    "instance_from_json",
]

FEASIBILITY_TOL = 1e-9


def _channel_array(channels) -> np.ndarray:
    h = np.array(channels, dtype=complex)
    if h.ndim == 1:
        h = h.reshape(1, -1)
    if h.ndim != 2 or h.shape[0] < 1 or h.shape[1] < 1:
        raise ValueError(f"channels must be an M x N array, got shape {h.shape}")
    if not np.all(np.isfinite(h)):
        raise ValueError("channels must be finite")
    zero = ~np.any(h != 0, axis=1)
    if zero.any():
        raise ValueError(
            f"user(s) {np.flatnonzero(zero).tolist()} have an all-zero channel"
        )
    h.setflags(write=False)
    return h


@dataclass(frozen=True)
class RawInstance:
    """Channels ``h`` (M x N), SNR targets and noise variances (length M)."""

    channels: np.ndarray
    gamma: np.ndarray
    sigma2: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        h = _channel_array(self.channels)
        m = h.shape[0]
        gamma = np.broadcast_to(np.asarray(self.gamma, dtype=float), (m,)).copy()
        sigma2 = np.broadcast_to(np.asarray(self.sigma2, dtype=float), (m,)).copy()
        if not np.all(gamma > 0):
            raise ValueError("SNR targets gamma must be positive")
        if not np.all(sigma2 > 0):
            raise ValueError("noise variances sigma2 must be positive")
        gamma.setflags(write=False)
        sigma2.setflags(write=False)
        object.__setattr__(self, "channels", h)
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "sigma2", sigma2)

    @property
    def n(self) -> int:
        return self.channels.shape[1]

    @property
    def m(self) -> int:
        return self.channels.shape[0]

    def snr(self, w) -> np.ndarray:
        return np.abs(self.channels.conj() @ np.asarray(w)) ** 2 / self.sigma2


@dataclass(frozen=True)
class Problem:
    """Normalized instance: minimize |w|^2 s.t. |h_k^H w| >= 1 for all k.

    The last user (index ``m - 1``) is the phase-anchored one in the
    branch-and-bound relaxation.
    """

    channels: np.ndarray
    _rows: tuple[np.ndarray, np.ndarray] = field(
        init=False, repr=False, compare=False
    )

    def __post_init__(self):
        h = _channel_array(self.channels)
        object.__setattr__(self, "channels", h)
        re_rows = np.hstack([h.real, h.imag])
        im_rows = np.hstack([-h.imag, h.real])
        re_rows.setflags(write=False)
        im_rows.setflags(write=False)
        object.__setattr__(self, "_rows", (re_rows, im_rows))

    def __eq__(self, other):
        if not isinstance(other, Problem):
            return NotImplemented
        return np.array_equal(self.channels, other.channels)

    def __hash__(self):
        return hash(self.channels.tobytes())

    @property
    def n(self) -> int:
        return self.channels.shape[1]

    @property
    def m(self) -> int:
        return self.channels.shape[0]

    def responses(self, w) -> np.ndarray:
        """``h_k^H w`` for every user."""
        w = np.asarray(w, dtype=complex)
        if w.shape != (self.n,):
            raise ValueError(f"beamformer must have length {self.n}, got {w.shape}")
        return self.channels.conj() @ w

    def real_rows(self) -> tuple[np.ndarray, np.ndarray]:
        """Matrices ``R, I`` (M x 2N) with ``R x = Re(h^H w)``, ``I x = Im(h^H w)``."""
        return self._rows


def normalize(raw: RawInstance) -> Problem:
    scale = np.sqrt(raw.gamma * raw.sigma2)
    return Problem(raw.channels / scale[:, None])


def generate_raw_instance(n: int, m: int, seed: int) -> RawInstance:
    """I.i.d. CN(0, 1) channels with unit SNR targets and noise.

    Uses numpy's PCG64 generator seeded with ``seed`` and its ziggurat
    normal sampler. A (M, N, 2) block of standard normals is drawn in C
    order; ``[..., 0]`` and ``[..., 1]`` scaled by ``1/sqrt(2)`` are the real
    and imaginary parts, so each entry has total variance one.
    """
    if n < 1 or m < 1:
        raise ValueError(f"need n >= 1 and m >= 1, got n={n}, m={m}")
    rng = np.random.Generator(np.random.PCG64(seed))
    g = rng.standard_normal((m, n, 2)) / math.sqrt(2.0)
    h = g[..., 0] + 1j * g[..., 1]
    return RawInstance(h, np.ones(m), np.ones(m), seed=seed)


def generate_instance(n: int, m: int, seed: int) -> Problem:
    return normalize(generate_raw_instance(n, m, seed))


def objective(w) -> float:
    w = np.asarray(w)
    return float(np.vdot(w, w).real)


def feasibility_margin(p: Problem, w) -> float:
    """``min_k |h_k^H w| - 1``; nonnegative exactly when ``w`` is feasible."""
    return float(np.abs(p.responses(w)).min() - 1.0)


def is_feasible(p: Problem, w, tol: float = FEASIBILITY_TOL) -> bool:
    return feasibility_margin(p, w) >= -tol


def to_maxmin(w_star, power_budget: float) -> np.ndarray:
    """Rescale a power-minimizing beamformer to the power budget.

    The result solves the max-min fair SNR problem with ``|w|^2 <= P`` when
    ``w_star`` is optimal for the QoS problem; its min SNR is
    ``P / |w_star|^2``.
    """
    w = np.asarray(w_star, dtype=complex)
    nrm = np.linalg.norm(w)
    if nrm == 0:
        raise ValueError("cannot rescale the zero beamformer")
    if power_budget <= 0:
        raise ValueError("power budget must be positive")
    return math.sqrt(power_budget) * w / nrm


def complex_to_real(w) -> np.ndarray:
    w = np.asarray(w, dtype=complex)
    return np.concatenate([w.real, w.imag])


def real_to_complex(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    n = x.shape[0] // 2
    return x[:n] + 1j * x[n:]


# JSON instance format. Complex numbers are [re, im] pairs.

def instance_to_json(raw: RawInstance) -> dict:
    out = {
        "n": raw.n,
        "m": raw.m,
        "channels": [[[float(c.real), float(c.imag)] for c in row] for row in raw.channels],
        "gamma": [float(g) for g in raw.gamma],
        "sigma2": [float(s) for s in raw.sigma2],
    }
    if raw.seed is not None:
        out["seed"] = int(raw.seed)
    return out


def instance_from_json(obj: dict) -> RawInstance:
    try:
        n, m = int(obj["n"]), int(obj["m"])
        chans = obj["channels"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed instance: {exc}") from None
    if len(chans) != m or any(len(row) != n for row in chans):
        raise ValueError(f"channels must be {m} rows of {n} [re, im] pairs")
    try:
        h = np.array(
            [[complex(float(re), float(im)) for re, im in row] for row in chans]
        ).reshape(m, n)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"malformed channel entry: {exc}") from None
    gamma = obj.get("gamma", [1.0] * m)
    sigma2 = obj.get("sigma2", [1.0] * m)
    if len(gamma) != m or len(sigma2) != m:
        raise ValueError("gamma and sigma2 need one entry per user")
    return RawInstance(h, gamma, sigma2, seed=obj.get("seed"))


def load_instance(path) -> RawInstance:
    with open(path, encoding="utf-8") as f:
        try:
            obj = json.load(f)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: invalid JSON ({exc})") from None
    return instance_from_json(obj)


def dump_instance(raw: RawInstance, path) -> None:
    Path(path).write_text(json.dumps(instance_to_json(raw), indent=1), encoding="utf-8")
