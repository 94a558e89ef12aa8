"""Connection strength between two machines and exponential link decay.

Everything here is a pure function of its arguments. The vectorised engine in
:mod:`msnsim.network` evaluates the same formulas over whole populations and
is tested against these scalar versions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Hashable

WEIGHT_TOLERANCE = 1e-9


@dataclass(frozen=True)
class MachineProfile:
    """Public record of one machine: where it is, what it wants, whom it follows."""

    id: Hashable
    location: int
    interests: frozenset = field(default_factory=frozenset)
    followees: frozenset = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        object.__setattr__(self, "interests", frozenset(self.interests))
        object.__setattr__(self, "followees", frozenset(self.followees))
        if self.id in self.followees:
            raise ValueError(f"machine {self.id!r} cannot follow itself")
        if self.location < 0:
            raise ValueError(f"location must be >= 0, got {self.location}")


@dataclass(frozen=True)
class Weights:
    interest: float = 1 / 3
    spatial: float = 1 / 3
    neighbor: float = 1 / 3

    def __post_init__(self) -> None:
        for name in ("interest", "spatial", "neighbor"):
            value = getattr(self, name)
            if not value >= 0:
                raise ValueError(f"Weights: {name} weight must be >= 0, got {value}")
        total = self.interest + self.spatial + self.neighbor
        if abs(total - 1.0) > WEIGHT_TOLERANCE:
            raise ValueError(f"Weights: interest + spatial + neighbor must equal 1, got {total!r}")


@dataclass(frozen=True)
class DecayParams:
    rate: float = 0.1
    threshold: float = 0.45

    def __post_init__(self) -> None:
        if not self.rate > 0:
            raise ValueError(f"DecayParams: decay rate must be > 0, got {self.rate}")
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError(f"DecayParams: threshold must lie in [0, 1], got {self.threshold}")


@dataclass(frozen=True)
class StrengthBreakdown:
    interest: float
    spatial: float
    neighbor: float
    total: float


def _overlap_fraction(mine: frozenset, theirs: frozenset) -> float:
    if not mine:
        return 0.0
    return len(mine & theirs) / len(mine)


def interest_similarity(i: MachineProfile, j: MachineProfile) -> float:
    """Fraction of ``i``'s interests that ``j`` shares (0 when ``i`` has none)."""
    return _overlap_fraction(i.interests, j.interests)


def spatial_similarity(i: MachineProfile, j: MachineProfile, max_dist: float) -> float:
    """``1 - |x(i) - x(j)| / max_dist`` on the 1-D subspace line."""
    if not max_dist > 0:
        raise ValueError(f"max_dist must be > 0, got {max_dist}")
    dist = abs(i.location - j.location)
    if dist > max_dist:
        raise ValueError(
            f"distance {dist} between machines {i.id!r} and {j.id!r} exceeds max_dist {max_dist}"
        )
    return 1 - dist / max_dist


def neighbor_similarity(i: MachineProfile, j: MachineProfile) -> float:
    """Fraction of ``i``'s followees that ``j`` also follows (0 when ``i`` follows nobody)."""
    return _overlap_fraction(i.followees, j.followees)


def connection_strength(
    i: MachineProfile, j: MachineProfile, w: Weights, max_dist: float
) -> StrengthBreakdown:
    interest = interest_similarity(i, j)
    spatial = spatial_similarity(i, j, max_dist)
    neighbor = neighbor_similarity(i, j)
    # Same operation order as the vectorised engine so both agree bit for bit.
    total = w.interest * interest + w.spatial * spatial + w.neighbor * neighbor
    return StrengthBreakdown(interest, spatial, neighbor, total)


def should_connect(c_ij: float, c_th: float) -> bool:
    return c_ij >= c_th


def decayed_strength(delta_t: int, a: float, initial: float = 1.0) -> float:
    """Strength of a link ``delta_t`` steps after it formed.

    ``initial`` scales the curve; the default of 1 is the unscaled model where
    every link restarts at full strength regardless of how it formed.
    """
    if delta_t < 0:
        raise ValueError(f"delta_t must be >= 0, got {delta_t}")
    if not a > 0:
        raise ValueError(f"decay rate must be > 0, got {a}")
    return initial * math.exp(-a * delta_t)


@lru_cache(maxsize=4096)
def link_expiry_step(a: float, c_th: float, initial: float = 1.0) -> float:
    """Smallest whole ``delta_t >= 1`` at which the decayed strength is strictly below ``c_th``.

    Returns ``math.inf`` when the link never expires (``c_th == 0``). Equality
    with the threshold keeps the link alive.
    """
    if not a > 0:
        raise ValueError(f"decay rate must be > 0, got {a}")
    if not 0.0 <= c_th <= 1.0:
        raise ValueError(f"threshold must lie in [0, 1], got {c_th}")
    if c_th == 0.0 or initial <= 0.0:
        return math.inf
    if initial < c_th:
        return 1
    # Analytic guess, then settle against the exact predicate used for decay.
    t = max(1, math.floor(math.log(initial / c_th) / a) + 1)
    while t > 1 and decayed_strength(t - 1, a, initial) < c_th:
        t -= 1
    while not decayed_strength(t, a, initial) < c_th:
        t += 1
    return t
