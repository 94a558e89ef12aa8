"""Cooperative maze exploration with map sharing and an optional archive.

Agents sense the four cells around them, meet peers within radio range,
merge what they know, and walk toward the exit once a known road path to it
exists; until then they head for the nearest frontier. Coordinates are
``(x, y)`` with ``y`` growing southward.

Frontier selection uses each agent's own observations by default
(``explore="own"``); shared knowledge is used to route to the exit. On a
perfect maze this makes cooperation never slower than going alone: the
agent walks its solo trajectory until a known exit path appears, then takes
the unique path. ``explore="merged"`` plans frontiers on the shared map too.
"""

from __future__ import annotations

import json
import random
from collections import deque
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

UNKNOWN, ROAD, WALL = 0, 1, 2

DIRECTIONS = (("N", (0, -1)), ("E", (1, 0)), ("S", (0, 1)), ("W", (-1, 0)))
_OFFSETS = dict(DIRECTIONS)

MAZE_INTEREST = "maze"
ARCHIVE, NON_ARCHIVE = "archive", "non-archive"

Coord = tuple[int, int]


class MazeError(ValueError):
    pass


class TrappedError(MazeError):
    pass


class MapConflictError(MazeError):
    pass


def step_towards(pos: Coord, direction: str) -> Coord:
    dx, dy = _OFFSETS[direction]
    return (pos[0] + dx, pos[1] + dy)


@dataclass(eq=False)
class MazeWorld:
    walls: np.ndarray  # (height, width) bool
    entry: Coord
    exit: Coord

    def __post_init__(self) -> None:
        self.walls = np.asarray(self.walls, dtype=bool)
        if self.walls.ndim != 2 or 0 in self.walls.shape:
            raise MazeError("maze grid must be a nonempty 2-D array")
        if self.entry == self.exit:
            raise MazeError("entry and exit must differ")
        for name, cell in (("entry", self.entry), ("exit", self.exit)):
            if not self.is_road(cell):
                raise MazeError(f"{name} {cell} is not a road cell")
        if road_distance(self, self.entry, self.exit) is None:
            raise MazeError("unsolvable maze: no road path from entry to exit")

    @property
    def width(self) -> int:
        return self.walls.shape[1]

    @property
    def height(self) -> int:
        return self.walls.shape[0]

    def in_bounds(self, cell: Coord) -> bool:
        return 0 <= cell[0] < self.width and 0 <= cell[1] < self.height

    def is_road(self, cell: Coord) -> bool:
        return self.in_bounds(cell) and not self.walls[cell[1], cell[0]]

    def road_cells(self) -> list[Coord]:
        ys, xs = np.nonzero(~self.walls)
        return sorted(zip(xs.tolist(), ys.tolist()), key=lambda c: (c[1], c[0]))

    def to_text(self) -> str:
        lines = [f"{self.width} {self.height}"]
        for y in range(self.height):
            row = []
            for x in range(self.width):
                if (x, y) == self.entry:
                    row.append("S")
                elif (x, y) == self.exit:
                    row.append("E")
                else:
                    row.append("#" if self.walls[y, x] else ".")
            lines.append("".join(row))
        return "\n".join(lines) + "\n"


def road_distance(world: MazeWorld, start: Coord, goal: Coord) -> int | None:
    """Length of the shortest road path, or None when unreachable."""
    seen = {start: 0}
    queue = deque([start])
    while queue:
        cell = queue.popleft()
        if cell == goal:
            return seen[cell]
        for _, (dx, dy) in DIRECTIONS:
            nxt = (cell[0] + dx, cell[1] + dy)
            if nxt not in seen and world.is_road(nxt):
                seen[nxt] = seen[cell] + 1
                queue.append(nxt)
    return None


def parse_maze(text: str) -> MazeWorld:
    lines = text.splitlines()
    if not lines:
        raise MazeError("empty maze file")
    try:
        width, height = (int(tok) for tok in lines[0].split())
    except ValueError:
        raise MazeError(f"line 1: expected 'WIDTH HEIGHT', got {lines[0]!r}") from None
    if width <= 0 or height <= 0:
        raise MazeError(f"line 1: dimensions must be positive, got {width}x{height}")
    rows = lines[1:]
    while rows and not rows[-1].strip():
        rows.pop()
    if len(rows) != height:
        raise MazeError(f"expected {height} grid rows, found {len(rows)}")
    walls = np.zeros((height, width), dtype=bool)
    entries, exits = [], []
    for y, row in enumerate(rows):
        if len(row) != width:
            raise MazeError(f"line {y + 2}: expected {width} characters, found {len(row)}")
        for x, ch in enumerate(row):
            if ch == "#":
                walls[y, x] = True
            elif ch == "S":
                entries.append((x, y))
            elif ch == "E":
                exits.append((x, y))
            elif ch != ".":
                raise MazeError(f"line {y + 2}: unexpected character {ch!r}")
    if len(entries) != 1 or len(exits) != 1:
        raise MazeError(
            f"maze needs exactly one 'S' and one 'E', found {len(entries)} and {len(exits)}"
        )
    return MazeWorld(walls, entries[0], exits[0])


def load_maze(path: str | Path) -> MazeWorld:
    return parse_maze(Path(path).read_text(encoding="utf-8"))


def bundled_maze() -> MazeWorld:
    """The 9x9 two-machine scenario shipped with the package."""
    text = resources.files("msnsim").joinpath("data/maze9.txt").read_text(encoding="utf-8")
    return parse_maze(text)


def generate_maze(width: int, height: int, seed: int) -> MazeWorld:
    """Perfect maze (exactly one path between any two roads) by randomized depth-first carving.

    Dimensions must be odd and at least 5; entry is the top-left room, exit the
    bottom-right one.
    """
    if width < 5 or height < 5 or width % 2 == 0 or height % 2 == 0:
        raise MazeError(f"generated mazes need odd dimensions >= 5, got {width}x{height}")
    rng = random.Random(seed)
    walls = np.ones((height, width), dtype=bool)
    start = (1, 1)
    walls[1, 1] = False
    stack = [start]
    while stack:
        x, y = stack[-1]
        options = []
        for _, (dx, dy) in DIRECTIONS:
            nx, ny = x + 2 * dx, y + 2 * dy
            if 0 < nx < width - 1 and 0 < ny < height - 1 and walls[ny, nx]:
                options.append((nx, ny, dx, dy))
        if not options:
            stack.pop()
            continue
        nx, ny, dx, dy = rng.choice(options)
        walls[y + dy, x + dx] = False
        walls[ny, nx] = False
        stack.append((nx, ny))
    return MazeWorld(walls, start, (width - 2, height - 2))


@dataclass(eq=False)
class KnownMap:
    cells: np.ndarray  # (height, width) int8 of UNKNOWN / ROAD / WALL
    exit: Coord | None = None

    @classmethod
    def blank(cls, width: int, height: int) -> "KnownMap":
        return cls(np.zeros((height, width), dtype=np.int8))

    @property
    def shape(self) -> tuple[int, int]:
        return self.cells.shape

    def at(self, cell: Coord) -> int:
        """Knowledge of ``cell``; the grid boundary counts as known wall."""
        x, y = cell
        h, w = self.cells.shape
        if not (0 <= x < w and 0 <= y < h):
            return WALL
        return int(self.cells[y, x])

    def mark(self, cell: Coord, state: int) -> bool:
        current = self.at(cell)
        if current == state:
            return False
        if current != UNKNOWN:
            raise MapConflictError(f"cell {cell} already known as {current}, cannot set {state}")
        self.cells[cell[1], cell[0]] = state
        return True

    def known_count(self) -> int:
        return int(np.count_nonzero(self.cells))

    def copy(self) -> "KnownMap":
        return KnownMap(self.cells.copy(), self.exit)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, KnownMap):
            return NotImplemented
        return self.exit == other.exit and np.array_equal(self.cells, other.cells)


def _check_compatible(a: KnownMap, b: KnownMap) -> None:
    if a.shape != b.shape:
        raise MazeError(f"cannot merge maps of shapes {a.shape} and {b.shape}")
    clash = (a.cells != UNKNOWN) & (b.cells != UNKNOWN) & (a.cells != b.cells)
    if clash.any():
        y, x = (int(v) for v in np.argwhere(clash)[0])
        raise MapConflictError(f"maps disagree at cell {(x, y)}")
    if a.exit is not None and b.exit is not None and a.exit != b.exit:
        raise MapConflictError(f"maps disagree on the exit: {a.exit} vs {b.exit}")


def merge_maps(a: KnownMap, b: KnownMap) -> KnownMap:
    """Cell-wise union; known beats unknown, contradicting knowledge is an error."""
    _check_compatible(a, b)
    cells = np.where(a.cells != UNKNOWN, a.cells, b.cells)
    return KnownMap(cells, a.exit if a.exit is not None else b.exit)


def _absorb(dst: KnownMap, src: KnownMap, cap: int | None) -> KnownMap:
    if cap is None:
        return merge_maps(dst, src)
    _check_compatible(dst, src)
    out = dst.copy()
    fresh = np.argwhere((dst.cells == UNKNOWN) & (src.cells != UNKNOWN))[:cap]
    for y, x in fresh:
        out.cells[y, x] = src.cells[y, x]
    if out.exit is None and src.exit is not None and out.at(src.exit) == ROAD:
        out.exit = src.exit
    return out


@dataclass
class Archive:
    mode: str = ARCHIVE
    stored: KnownMap | None = None

    def __post_init__(self) -> None:
        if self.mode not in (ARCHIVE, NON_ARCHIVE):
            raise ValueError(f"unknown archive mode {self.mode!r}")
        if self.mode == NON_ARCHIVE:
            self.stored = None


def archive_put(archive: Archive, known: KnownMap) -> None:
    if archive.mode == NON_ARCHIVE:
        return
    archive.stored = known.copy() if archive.stored is None else merge_maps(archive.stored, known)


def archive_get(archive: Archive) -> KnownMap | None:
    return None if archive.stored is None else archive.stored.copy()


@dataclass(eq=False)
class AgentState:
    id: int
    position: Coord
    known: KnownMap
    sensed: KnownMap  # own observations only
    interests: frozenset = frozenset({MAZE_INTEREST})
    radio_range: int = 2
    entry_step: int = 0
    steps_taken: int = 0
    escaped: bool = False
    escape_step: int | None = None
    entered: bool = False

    def __post_init__(self) -> None:
        if self.radio_range < 0:
            raise ValueError(f"radio_range must be >= 0, got {self.radio_range}")


def make_agent(
    world: MazeWorld,
    agent_id: int,
    start: Coord | None = None,
    *,
    radio_range: int = 2,
    entry_step: int = 0,
    interests: Iterable[str] = (MAZE_INTEREST,),
) -> AgentState:
    start = world.entry if start is None else start
    if not world.is_road(start):
        raise MazeError(f"agent {agent_id} cannot start on non-road cell {start}")
    known = KnownMap.blank(world.width, world.height)
    known.mark(start, ROAD)
    if start == world.exit:
        raise MazeError(f"agent {agent_id} cannot start on the exit")
    return AgentState(
        id=agent_id,
        position=start,
        known=known,
        sensed=known.copy(),
        interests=frozenset(interests),
        radio_range=radio_range,
        entry_step=entry_step,
    )


def sense(world: MazeWorld, agent: AgentState) -> dict[Coord, int]:
    """Reveal the agent's cell and its four neighbours; returns only what was new.

    Off-grid neighbours are walls by construction of :meth:`KnownMap.at` and
    never appear in the delta.
    """
    delta = {}
    cells = [agent.position] + [step_towards(agent.position, d) for d, _ in DIRECTIONS]
    for cell in cells:
        if not world.in_bounds(cell):
            continue
        state = ROAD if world.is_road(cell) else WALL
        if agent.known.mark(cell, state):
            delta[cell] = state
        agent.sensed.mark(cell, state)
        if cell == world.exit:
            agent.known.exit = agent.sensed.exit = cell
    return delta


def chebyshev(a: Coord, b: Coord) -> int:
    return max(abs(a[0] - b[0]), abs(a[1] - b[1]))


def broadcast_discover(agents: Sequence[AgentState]) -> set[tuple[int, int]]:
    """Pairs ``(lower id, higher id)`` in mutual radio range that both care about the maze."""
    pairs = set()
    keen = [a for a in agents if MAZE_INTEREST in a.interests]
    for idx, a in enumerate(keen):
        for b in keen[idx + 1 :]:
            if a.id != b.id and chebyshev(a.position, b.position) <= min(a.radio_range, b.radio_range):
                pairs.add((min(a.id, b.id), max(a.id, b.id)))
    return pairs


def _first_move(parents: dict, target: Coord) -> str:
    cell = target
    while True:
        prev, move = parents[cell]
        if parents[prev] is None:
            return move
        cell = prev


def _bfs_first_move(known: KnownMap, start: Coord, goal: Coord | None) -> str | None:
    """First move of a shortest known-road route, ties broken N, E, S, W.

    With ``goal`` the route ends there; without it the route ends at the
    nearest unknown cell bordering known road.
    """
    parents: dict = {start: None}
    queue = deque([start])
    while queue:
        cell = queue.popleft()
        for move, (dx, dy) in DIRECTIONS:
            nxt = (cell[0] + dx, cell[1] + dy)
            if nxt in parents:
                continue
            state = known.at(nxt)
            if goal is None and state == UNKNOWN:
                parents[nxt] = (cell, move)
                return _first_move(parents, nxt)
            if state == ROAD:
                parents[nxt] = (cell, move)
                if nxt == goal:
                    return _first_move(parents, nxt)
                queue.append(nxt)
    return None


def plan_step(agent: AgentState, exit_hint: Coord | None = None, explore: str = "own") -> str:
    """Direction of the agent's next move."""
    if agent.escaped:
        raise MazeError(f"agent {agent.id} has already escaped")
    target = exit_hint if exit_hint is not None else agent.known.exit
    if target is not None:
        move = _bfs_first_move(agent.known, agent.position, target)
        if move is not None:
            return move
    frontier_map = agent.sensed if explore == "own" else agent.known
    move = _bfs_first_move(frontier_map, agent.position, None)
    if move is None:
        raise TrappedError(f"agent {agent.id} is trapped at {agent.position}: no frontier and no exit path")
    return move


@dataclass(frozen=True)
class AgentReport:
    id: int
    entry_step: int
    steps_taken: int
    escaped: bool
    escape_step: int | None


@dataclass
class MazeReport:
    agents: list[AgentReport]
    escape_order: list[int]
    final_maps: dict[int, KnownMap] = field(default_factory=dict)

    def agent(self, agent_id: int) -> AgentReport:
        for a in self.agents:
            if a.id == agent_id:
                return a
        raise KeyError(agent_id)

    def to_json_dict(self) -> dict:
        return {
            "agents": [
                {"id": a.id, "entry_step": a.entry_step, "steps_taken": a.steps_taken, "escaped": a.escaped}
                for a in self.agents
            ],
            "escape_order": list(self.escape_order),
        }


def run_maze(
    world: MazeWorld,
    agents: Sequence[AgentState],
    archive: Archive,
    max_steps: int,
    *,
    share: bool = True,
    share_mode: str = "continuous",
    share_cap: int | None = None,
    explore: str = "own",
    observer: Callable[[int, Sequence[AgentState]], None] | None = None,
) -> MazeReport:
    """Run the scenario until every agent escapes or ``max_steps`` elapse.

    Each step visits agents in id order: archive read on entry, sense, share
    with peers in range, move one cell, and on reaching the exit write the
    map to the archive and leave. ``share_mode="on_discovery"`` only merges
    when a pair first comes into range; ``share_cap`` limits the cells
    passed per contact.
    """
    if max_steps < 1:
        raise ValueError(f"max_steps must be >= 1, got {max_steps}")
    if share_mode not in ("continuous", "on_discovery"):
        raise ValueError(f"unknown share_mode {share_mode!r}")
    if explore not in ("own", "merged"):
        raise ValueError(f"unknown explore policy {explore!r}")
    order = sorted(agents, key=lambda a: a.id)
    by_id = {a.id: a for a in order}
    if len(by_id) != len(order):
        raise ValueError("agent ids must be unique")
    escape_order: list[int] = []
    previous_contacts: set[tuple[int, int]] = set()

    for t in range(max_steps):
        contacts: set[tuple[int, int]] = set()
        for agent in order:
            if agent.escaped or agent.entry_step > t:
                continue
            if not agent.entered:
                agent.entered = True
                stored = archive_get(archive)
                if stored is not None:
                    agent.known = merge_maps(agent.known, stored)
            sense(world, agent)
            if share:
                active = [a for a in order if a.entry_step <= t and not a.escaped]
                for pair in sorted(broadcast_discover(active)):
                    if agent.id not in pair:
                        continue
                    contacts.add(pair)
                    if share_mode == "on_discovery" and pair in previous_contacts:
                        continue
                    other = by_id[pair[0] if pair[1] == agent.id else pair[1]]
                    mine = _absorb(agent.known, other.known, share_cap)
                    theirs = _absorb(other.known, agent.known, share_cap)
                    agent.known, other.known = mine, theirs
            move = plan_step(agent, explore=explore)
            nxt = step_towards(agent.position, move)
            if not world.is_road(nxt):
                raise MazeError(f"agent {agent.id} tried to walk into a wall at {nxt}")
            agent.position = nxt
            agent.steps_taken += 1
            if nxt == world.exit:
                agent.escaped = True
                agent.escape_step = t
                escape_order.append(agent.id)
                archive_put(archive, agent.known)
        previous_contacts = contacts
        if observer is not None:
            observer(t, order)
        if all(a.escaped for a in order):
            break

    return MazeReport(
        agents=[AgentReport(a.id, a.entry_step, a.steps_taken, a.escaped, a.escape_step) for a in order],
        escape_order=escape_order,
        final_maps={a.id: a.known.copy() for a in order},
    )


@dataclass(frozen=True)
class MazeScenarioConfig:
    maze: str | None = None  # None: bundled fixture
    radio_range: int = 2
    max_steps: int = 1000
    seed: int = 0
    share_mode: str = "continuous"
    share_cap: int | None = None
    explore: str = "own"

    def __post_init__(self) -> None:
        if self.radio_range < 0:
            raise ValueError(f"MazeScenarioConfig: radio_range must be >= 0, got {self.radio_range}")
        if self.max_steps < 1:
            raise ValueError(f"MazeScenarioConfig: max_steps must be >= 1, got {self.max_steps}")
        if self.share_mode not in ("continuous", "on_discovery"):
            raise ValueError(f"MazeScenarioConfig: unknown share_mode {self.share_mode!r}")
        if self.explore not in ("own", "merged"):
            raise ValueError(f"MazeScenarioConfig: unknown explore policy {self.explore!r}")
        if self.share_cap is not None and self.share_cap < 0:
            raise ValueError(f"MazeScenarioConfig: share_cap must be >= 0, got {self.share_cap}")


def second_start(world: MazeWorld, seed: int) -> Coord:
    """Seeded start cell for the second machine: any road other than entry and exit."""
    candidates = [c for c in world.road_cells() if c not in (world.entry, world.exit)]
    if not candidates:
        return world.entry
    return random.Random(seed).choice(candidates)


def run_scenarios(
    world: MazeWorld,
    cfg: MazeScenarioConfig,
    observer: Callable[[int, Sequence[AgentState]], None] | None = None,
) -> dict[str, MazeReport]:
    """Solo, cooperative, and cooperative-with-archive runs on one maze.

    Machine 1 starts at the entry, machine 2 at a seeded road cell. In the
    archive run machine 3 enters at the entry one step after the last
    cooperative escape.
    """
    start2 = second_start(world, cfg.seed)
    kw = dict(share_mode=cfg.share_mode, share_cap=cfg.share_cap, explore=cfg.explore, observer=observer)

    def pair() -> list[AgentState]:
        return [
            make_agent(world, 1, world.entry, radio_range=cfg.radio_range),
            make_agent(world, 2, start2, radio_range=cfg.radio_range),
        ]

    solo_reports = []
    for agent in pair():
        rep = run_maze(world, [agent], Archive(NON_ARCHIVE), cfg.max_steps, share=False, **kw)
        solo_reports.extend(rep.agents)
    solo_order = [
        a.id for a in sorted((a for a in solo_reports if a.escaped), key=lambda a: (a.escape_step, a.id))
    ]
    solo = MazeReport(agents=solo_reports, escape_order=solo_order)

    coop = run_maze(world, pair(), Archive(NON_ARCHIVE), cfg.max_steps, **kw)

    escapes = [a.escape_step for a in coop.agents if a.escape_step is not None]
    late_entry = max(escapes) + 1 if escapes else 0
    third = make_agent(world, 3, world.entry, radio_range=cfg.radio_range, entry_step=late_entry)
    archived = run_maze(
        world, pair() + [third], Archive(ARCHIVE), late_entry + cfg.max_steps, **kw
    )
    return {"solo": solo, "cooperative": coop, "archive": archived}


def scenario_json(reports: dict[str, MazeReport]) -> str:
    payload = {name: rep.to_json_dict() for name, rep in reports.items()}
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"
