"""Discrete-time machine social network.

State lives in dense numpy arrays indexed by machine id (``0..M-1``):
``follows[i, j]`` is True while ``i`` follows ``j``. Profiles and links are
views derived from those arrays, so the two can never disagree.

Each :func:`step` runs three phases in a fixed order:

1. expiry of links whose decayed strength fell below the threshold,
2. churn (random relocation and interest swaps),
3. discovery: every visible unlinked ordered pair whose connection strength
   reaches the threshold forms a link. All formations of a step are applied
   together after every pair has been scored.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Iterable

import numpy as np

from .social import DecayParams, MachineProfile, Weights, link_expiry_step

INFRASTRUCTURE = "infrastructure"
ADHOC = "adhoc"

_NEVER = np.iinfo(np.int64).max


@dataclass(frozen=True)
class SimConfig:
    machine_count: int = 100
    subspace_count: int = 10
    interest_universe: int = 10
    interests_per_machine: int = 5
    weights: Weights = field(default_factory=Weights)
    decay: DecayParams = field(default_factory=DecayParams)
    visibility: str = INFRASTRUCTURE
    adhoc_range: int = 0
    p_move: float = 0.05
    p_interest: float = 0.05
    steps: int = 200
    seed: int = 0
    decay_scaled: bool = False
    refractory: int = 0

    def __post_init__(self) -> None:
        if self.machine_count <= 0:
            raise ValueError(f"SimConfig: machine_count must be > 0, got {self.machine_count}")
        if self.subspace_count <= 0:
            raise ValueError(f"SimConfig: subspace_count must be > 0, got {self.subspace_count}")
        if self.interest_universe <= 0:
            raise ValueError(f"SimConfig: interest_universe must be > 0, got {self.interest_universe}")
        if not 0 < self.interests_per_machine <= self.interest_universe:
            raise ValueError(
                "SimConfig: interests_per_machine must be in (0, interest_universe], "
                f"got {self.interests_per_machine}"
            )
        if self.visibility not in (INFRASTRUCTURE, ADHOC):
            raise ValueError(f"SimConfig: unknown visibility mode {self.visibility!r}")
        if not 0 <= self.adhoc_range < self.subspace_count:
            raise ValueError(
                f"SimConfig: adhoc_range must be in [0, subspace_count), got {self.adhoc_range}"
            )
        for name in ("p_move", "p_interest"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"SimConfig: {name} must be a probability, got {p}")
        if self.steps <= 0:
            raise ValueError(f"SimConfig: steps must be > 0, got {self.steps}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"SimConfig: seed must be an unsigned 64-bit integer, got {self.seed}")
        if self.refractory < 0:
            raise ValueError(f"SimConfig: refractory must be >= 0, got {self.refractory}")

    @property
    def max_dist(self) -> int:
        # A single subspace has no spread; 1 keeps the spatial axis defined (always 1).
        return max(self.subspace_count - 1, 1)

    def with_threshold(self, c_th: float) -> "SimConfig":
        return replace(self, decay=replace(self.decay, threshold=c_th))


@dataclass(frozen=True)
class Link:
    follower: int
    followee: int
    created_at: int
    strength_at_formation: float


@dataclass(frozen=True)
class Post:
    origin: int
    payload: bytes = b""
    hop_limit: int | None = None  # None: unlimited

    def __post_init__(self) -> None:
        if self.hop_limit is not None and self.hop_limit < 0:
            raise ValueError(f"hop_limit must be >= 0, got {self.hop_limit}")


@dataclass(frozen=True)
class StepReport:
    step: int
    formed: int
    expired: int
    live: int


@dataclass
class RunTrace:
    reports: list[StepReport]
    network: "Network"

    @property
    def live_links(self) -> list[int]:
        return [r.live for r in self.reports]


@dataclass(eq=False)
class Network:
    config: SimConfig
    locations: np.ndarray  # (M,) int64 subspace index
    interests: np.ndarray  # (M, K) bool
    follows: np.ndarray  # (M, M) bool, row follows column
    created_at: np.ndarray  # (M, M) int64, valid where follows
    formed_strength: np.ndarray  # (M, M) float64, valid where follows
    expires_at: np.ndarray  # (M, M) int64 absolute step of removal
    blocked_until: np.ndarray  # (M, M) int64, refractory window after expiry
    rng: np.random.Generator
    step: int = 0

    @property
    def machine_count(self) -> int:
        return self.config.machine_count

    @property
    def link_count(self) -> int:
        return int(self.follows.sum())

    def profile(self, i: int) -> MachineProfile:
        return MachineProfile(
            id=i,
            location=int(self.locations[i]),
            interests=frozenset(np.flatnonzero(self.interests[i]).tolist()),
            followees=frozenset(np.flatnonzero(self.follows[i]).tolist()),
        )

    def profiles(self) -> list[MachineProfile]:
        return [self.profile(i) for i in range(self.machine_count)]

    def links(self) -> list[Link]:
        rows, cols = np.nonzero(self.follows)
        return [
            Link(int(i), int(j), int(self.created_at[i, j]), float(self.formed_strength[i, j]))
            for i, j in zip(rows, cols)
        ]

    def followers(self, j: int) -> list[int]:
        return np.flatnonzero(self.follows[:, j]).tolist()

    def state_digest(self) -> bytes:
        """Bytes that pin the full simulation state; equal digests mean equal states."""
        parts = [
            np.int64(self.step).tobytes(),
            self.locations.tobytes(),
            self.interests.tobytes(),
            self.follows.tobytes(),
            np.where(self.follows, self.created_at, -1).tobytes(),
        ]
        return b"".join(parts)


def init_network(config: SimConfig) -> Network:
    """Place machines uniformly on the subspaces and give each a random interest subset."""
    rng = np.random.default_rng(config.seed)
    m, k = config.machine_count, config.interest_universe
    locations = rng.integers(0, config.subspace_count, size=m).astype(np.int64)
    interests = np.zeros((m, k), dtype=bool)
    for i in range(m):
        interests[i, rng.choice(k, size=config.interests_per_machine, replace=False)] = True
    return Network(
        config=config,
        locations=locations,
        interests=interests,
        follows=np.zeros((m, m), dtype=bool),
        created_at=np.zeros((m, m), dtype=np.int64),
        formed_strength=np.zeros((m, m), dtype=np.float64),
        expires_at=np.full((m, m), _NEVER, dtype=np.int64),
        blocked_until=np.zeros((m, m), dtype=np.int64),
        rng=rng,
    )


def visibility_mask(net: Network) -> np.ndarray:
    m = net.machine_count
    mask = ~np.eye(m, dtype=bool)
    if net.config.visibility == ADHOC:
        dist = np.abs(net.locations[:, None] - net.locations[None, :])
        mask &= dist <= net.config.adhoc_range
    return mask


def visible_pairs(net: Network) -> set[tuple[int, int]]:
    rows, cols = np.nonzero(visibility_mask(net))
    return set(zip(rows.tolist(), cols.tolist()))


def strength_matrix(net: Network) -> np.ndarray:
    """Connection strength of every ordered pair from the current profiles.

    The diagonal is meaningless and left as computed.
    """
    cfg = net.config
    w = cfg.weights
    inter = net.interests.astype(np.float64)
    n_interests = inter.sum(axis=1)
    interest = _fraction(inter @ inter.T, n_interests)

    dist = np.abs(net.locations[:, None] - net.locations[None, :])
    spatial = 1 - dist / cfg.max_dist

    fol = net.follows.astype(np.float64)
    neighbor = _fraction(fol @ fol.T, fol.sum(axis=1))

    return w.interest * interest + w.spatial * spatial + w.neighbor * neighbor


def _fraction(overlap: np.ndarray, sizes: np.ndarray) -> np.ndarray:
    out = np.zeros_like(overlap)
    nonempty = sizes > 0
    out[nonempty] = overlap[nonempty] / sizes[nonempty, None]
    return out


def _expire(net: Network) -> int:
    dead = net.follows & (net.expires_at <= net.step)
    count = int(dead.sum())
    if count:
        net.follows[dead] = False
        net.expires_at[dead] = _NEVER
        net.blocked_until[dead] = net.step + net.config.refractory
    return count


def _churn(net: Network) -> None:
    cfg = net.config
    m = cfg.machine_count
    if cfg.p_move > 0:
        moving = net.rng.random(m) < cfg.p_move
        targets = net.rng.integers(0, cfg.subspace_count, size=m)
        net.locations[moving] = targets[moving]
    if cfg.p_interest > 0 and cfg.interests_per_machine < cfg.interest_universe:
        swapping = np.flatnonzero(net.rng.random(m) < cfg.p_interest)
        for i in swapping:
            held = np.flatnonzero(net.interests[i])
            free = np.flatnonzero(~net.interests[i])
            net.interests[i, held[net.rng.integers(len(held))]] = False
            net.interests[i, free[net.rng.integers(len(free))]] = True


def _discover(net: Network) -> int:
    cfg = net.config
    c_th = cfg.decay.threshold
    strength = strength_matrix(net)
    new = (
        visibility_mask(net)
        & ~net.follows
        & (net.blocked_until <= net.step)
        & (strength >= c_th)
    )
    count = int(new.sum())
    if not count:
        return 0
    net.follows[new] = True
    net.created_at[new] = net.step
    net.formed_strength[new] = strength[new]
    if cfg.decay_scaled:
        life = np.array(
            [_lifetime(cfg.decay.rate, c_th, s) for s in strength[new].tolist()], dtype=np.float64
        )
    else:
        life = np.full(count, _lifetime(cfg.decay.rate, c_th, 1.0), dtype=np.float64)
    finite = np.isfinite(life)
    expires = np.full(count, _NEVER, dtype=np.int64)
    expires[finite] = net.step + life[finite].astype(np.int64)
    net.expires_at[new] = expires
    return count


def _lifetime(a: float, c_th: float, initial: float) -> float:
    return link_expiry_step(a, c_th, min(initial, 1.0))


def step(net: Network, discover: bool = True) -> StepReport:
    """Advance the network by one step (expiry, churn, discovery).

    With ``discover=False`` no links form; used to watch an existing link set
    age out.
    """
    expired = _expire(net)
    _churn(net)
    formed = _discover(net) if discover else 0
    report = StepReport(step=net.step, formed=formed, expired=expired, live=net.link_count)
    net.step += 1
    return report


def run(net: Network, steps: int) -> RunTrace:
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    reports = [step(net) for _ in range(steps)]
    return RunTrace(reports=reports, network=net)


def disseminate(net: Network, post: Post) -> set[int]:
    """Machines reached when ``post`` flows from followees to their followers.

    Breadth-first from the origin; every hop adds all followers of the
    machines reached so far, up to ``post.hop_limit`` hops.
    """
    if not 0 <= post.origin < net.machine_count:
        raise KeyError(f"unknown origin machine {post.origin!r}")
    limit = math.inf if post.hop_limit is None else post.hop_limit
    reached = {post.origin}
    frontier = deque([(post.origin, 0)])
    while frontier:
        node, hops = frontier.popleft()
        if hops >= limit:
            continue
        for follower in net.followers(node):
            if follower not in reached:
                reached.add(follower)
                frontier.append((follower, hops + 1))
    return reached


def set_links(net: Network, pairs: Iterable[tuple[int, int]]) -> None:
    """Replace the live link set with ``pairs``, all created at the current step.

    Convenience for building fixtures; links made this way never expire.
    """
    net.follows[:] = False
    net.expires_at[:] = _NEVER
    for i, j in pairs:
        if i == j:
            raise ValueError(f"machine {i} cannot follow itself")
        net.follows[i, j] = True
        net.created_at[i, j] = net.step
        net.formed_strength[i, j] = 1.0
