"""Decision variables, solutions and the weighted sum-rate objective."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .physics import Instance

BUDGET_TOL = 1e-9


class Mode(str, enum.Enum):
    """PAPER caps the number of offloading HUEs at one; RELAXED does not."""

    PAPER = "paper"
    RELAXED = "relaxed"


class Scheme(str, enum.Enum):
    BENDERS = "benders"
    ORACLE = "oracle"
    RANDOM = "random"


@dataclass(frozen=True)
class TaskDecision:
    """Binary offloading vector; bit i of :attr:`bitmask` is y[i]."""

    y: tuple

    def __post_init__(self):
        y = tuple(int(v) for v in self.y)
        if any(v not in (0, 1) for v in y):
            raise ValueError(f"offloading decisions must be 0/1, got {self.y!r}")
        object.__setattr__(self, "y", y)

    @classmethod
    def zeros(cls, m: int) -> "TaskDecision":
        return cls((0,) * m)

    @classmethod
    def unit(cls, m: int, k: int) -> "TaskDecision":
        return cls(tuple(int(i == k) for i in range(m)))

    @classmethod
    def from_bitmask(cls, mask: int, m: int) -> "TaskDecision":
        return cls(tuple((mask >> i) & 1 for i in range(m)))

    @property
    def bitmask(self) -> int:
        return sum(v << i for i, v in enumerate(self.y))

    @property
    def array(self) -> np.ndarray:
        return np.array(self.y, dtype=float)

    @property
    def num_offloading(self) -> int:
        return sum(self.y)

    def __len__(self) -> int:
        return len(self.y)

    def allowed(self, mode: Mode) -> bool:
        return Mode(mode) is Mode.RELAXED or self.num_offloading <= 1


def enumerate_decisions(m: int, mode: Mode) -> Iterable[TaskDecision]:
    """All mode-feasible decisions in increasing bitmask order."""
    if Mode(mode) is Mode.PAPER:
        yield TaskDecision.zeros(m)
        for k in range(m):
            yield TaskDecision.unit(m, k)
    else:
        for mask in range(1 << m):
            yield TaskDecision.from_bitmask(mask, m)


@dataclass(frozen=True)
class TimeAllocation:
    tau_u: float
    tau: tuple

    def __post_init__(self):
        object.__setattr__(self, "tau", tuple(float(t) for t in self.tau))
        object.__setattr__(self, "tau_u", float(self.tau_u))

    @property
    def total(self) -> float:
        return self.tau_u + sum(self.tau)

    def check(self, instance: Instance, tol: float = BUDGET_TOL) -> None:
        """Raise ValueError unless the allocation meets the frame budget and bounds."""
        p = instance.params
        if len(self.tau) != instance.num_hues:
            raise ValueError("allocation length does not match instance")
        if self.tau_u < p.epsilon_tau_s - tol or self.tau_u > p.frame_duration_s + tol:
            raise ValueError(f"tau_u={self.tau_u} outside [{p.epsilon_tau_s}, {p.frame_duration_s}]")
        if min(self.tau, default=0.0) < -tol:
            raise ValueError("negative HUE airtime")
        if self.total > p.frame_duration_s + tol:
            raise ValueError(f"airtime {self.total} exceeds frame {p.frame_duration_s}")


def _check_dims(instance: Instance, y: TaskDecision, alloc: TimeAllocation) -> None:
    m = instance.num_hues
    if len(y) != m or len(alloc.tau) != m:
        raise ValueError(f"decision/allocation length must be {m}")


def rate_breakdown(instance: Instance, y: TaskDecision, alloc: TimeAllocation) -> tuple:
    """Weighted (local, offload, backhaul) contributions in bits/s."""
    _check_dims(instance, y, alloc)
    ya = y.array
    tau = np.asarray(alloc.tau)
    local = float(np.sum(instance.weights * (1.0 - ya) * instance.local_rate_bps))
    offload = float(np.sum(instance.weights * ya * instance.leo_rate_coeff_bps * tau))
    backhaul = instance.uav_rate_coeff_bps * alloc.tau_u
    return local, offload, backhaul


def objective_value(instance: Instance, y: TaskDecision, alloc: TimeAllocation) -> float:
    """Weighted computation plus communication sum-rate."""
    local, offload, backhaul = rate_breakdown(instance, y, alloc)
    return local + offload + backhaul


@dataclass
class Solution:
    y: TaskDecision
    alloc: TimeAllocation
    objective_bps: float
    breakdown: tuple
    scheme: Scheme
    iterations: int = 0
    trace: list = field(default_factory=list)
    gap: Optional[float] = None

    @classmethod
    def evaluate(cls, instance: Instance, y: TaskDecision, alloc: TimeAllocation,
                 scheme: Scheme, **kw) -> "Solution":
        bd = rate_breakdown(instance, y, alloc)
        return cls(y, alloc, sum(bd), bd, Scheme(scheme), **kw)

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme.value,
            "y": list(self.y.y),
            "tau_u": self.alloc.tau_u,
            "tau": list(self.alloc.tau),
            "objective_bps": self.objective_bps,
            "local_bps": self.breakdown[0],
            "offload_bps": self.breakdown[1],
            "backhaul_bps": self.breakdown[2],
            "iterations": self.iterations,
            "gap": self.gap,
        }


class ConvergenceError(RuntimeError):
    """An iterative solver hit its iteration cap.

    ``best`` holds the best iterate found and ``gap`` the last bound gap when
    the solver tracks one.
    """

    def __init__(self, msg: str, best=None, gap: Optional[float] = None, state=None):
        super().__init__(msg)
        self.best = best
        self.gap = gap
        self.state = state
