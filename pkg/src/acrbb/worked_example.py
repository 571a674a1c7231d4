"""Regression fixture: a hand-traced three-user, two-antenna run.

The reference trace was produced with responses written as ``h_k^T w``;
under the ``h_k^H w`` convention used here the same instance has the
conjugated channels, which is what :func:`fixture_problem` returns. With
that, every reference quantity is reproduced to the 4 printed decimals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bb import BbResult, solve_global
from .problem import Problem, RawInstance

__all__ = [
    "PRINTED_CHANNELS",
    "FIXTURE_EPS",
    "FIXTURE_TOL",
    "REFERENCE",
    "Check",
    "fixture_problem",
    "fixture_raw_instance",
    "run_fixture",
    "check_trace",
]

# Channels exactly as printed, rows are users 1..3.
PRINTED_CHANNELS = np.array(
    [
        [1.3514 + 2.5260j, -0.2938 - 1.2571j],
        [-0.2248 + 1.6555j, -0.8479 - 0.8655j],
        [-0.7145 - 1.1201j, -0.5890 + 0.3075j],
    ]
)
PRINTED_CHANNELS.setflags(write=False)

FIXTURE_EPS = 0.1
FIXTURE_TOL = 5e-4

# Reference values keyed by name; k_star is 1-based as printed.
REFERENCE = {
    "L0": 0.4532,
    "U0": 0.8573,
    "k_star_1": 2,
    "k_star_2": 2,
    "k_star_3": 2,
    "L_left_1": 0.4825,
    "L_right_1": 0.4532,
    "L_left_2": 0.4534,
    "L_right_2": 0.7526,
    "U_2": 0.7811,
    "L_left_3": 0.4658,
    "L_right_3": 0.5072,
    "U_3": 0.5072,
    "iterations": 4,
    "final_gap": 0.0889,
    "U_star": 0.5072,
    "split_1": math.pi,
    "split_2": 1.5 * math.pi,
    "split_3": 1.25 * math.pi,
}


@dataclass(frozen=True)
class Check:
    name: str
    expected: float
    actual: float | None
    tol: float

    @property
    def ok(self) -> bool:
        return self.actual is not None and abs(self.actual - self.expected) <= self.tol

    def __str__(self):
        got = "missing" if self.actual is None else f"{self.actual:.6g}"
        return f"{'ok  ' if self.ok else 'FAIL'} {self.name}: expected {self.expected:.6g}, got {got}"


def fixture_problem(channels=None) -> Problem:
    """The fixture instance; ``channels`` overrides the printed values."""
    h = PRINTED_CHANNELS if channels is None else np.asarray(channels, dtype=complex)
    return Problem(h.conj())


def fixture_raw_instance() -> RawInstance:
    """Same instance as a raw (already normalized) instance, for JSON export."""
    return RawInstance(PRINTED_CHANNELS.conj(), 1.0, 1.0)


def run_fixture(eps: float = FIXTURE_EPS, channels=None) -> BbResult:
    return solve_global(fixture_problem(channels), eps=eps)


def check_trace(res: BbResult, tol: float = FIXTURE_TOL) -> list[Check]:
    """Compare a run against :data:`REFERENCE`."""
    tr = res.trace

    def row(t, attr):
        if len(tr) < t:
            return None
        v = getattr(tr[t - 1], attr)
        return None if v is None else float(v)

    def k_star(t):
        k = row(t, "k_star")
        return None if k is None else k + 1

    actual = {
        "L0": res.L0,
        "U0": res.U0,
        "k_star_1": k_star(1),
        "k_star_2": k_star(2),
        "k_star_3": k_star(3),
        "L_left_1": row(1, "left_L"),
        "L_right_1": row(1, "right_L"),
        "L_left_2": row(2, "left_L"),
        "L_right_2": row(2, "right_L"),
        "U_2": row(2, "upper"),
        "L_left_3": row(3, "left_L"),
        "L_right_3": row(3, "right_L"),
        "U_3": row(3, "upper"),
        "iterations": float(res.iterations),
        "final_gap": res.gap,
        "U_star": res.U_star,
        "split_1": row(1, "split"),
        "split_2": row(2, "split"),
        "split_3": row(3, "split"),
    }
    exact = {"k_star_1", "k_star_2", "k_star_3", "iterations"}
    return [
        Check(k, float(v), actual[k], 0.0 if k in exact else tol)
        for k, v in REFERENCE.items()
    ]
