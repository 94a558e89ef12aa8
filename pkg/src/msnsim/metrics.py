"""Population metrics, the threshold sweep and its tabular export."""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .network import Network, SimConfig, init_network, step

CSV_FIELDS = ("c_th", "mean_connections", "std_connections", "seeds", "baseline_connections")


class ExportError(OSError):
    pass


@dataclass(frozen=True)
class SweepResult:
    c_th: float
    mean_connections: float
    std_connections: float
    seeds: int
    baseline_connections: float

    @property
    def std_error(self) -> float:
        return self.std_connections / math.sqrt(self.seeds)


@dataclass(frozen=True)
class FixedBaseline:
    """Non-social reference: every machine keeps ``degree`` links forever."""

    degree: int = 50

    def __post_init__(self) -> None:
        if self.degree < 0:
            raise ValueError(f"FixedBaseline: degree must be >= 0, got {self.degree}")

    def build(self, machine_count: int, seed: int = 0) -> np.ndarray:
        """Adjacency of a fixed network with ``degree`` distinct random followees per machine."""
        if self.degree > machine_count - 1:
            raise ValueError(
                f"FixedBaseline: degree {self.degree} exceeds machine_count - 1 = {machine_count - 1}"
            )
        rng = np.random.default_rng(seed)
        adj = np.zeros((machine_count, machine_count), dtype=bool)
        for i in range(machine_count):
            others = np.delete(np.arange(machine_count), i)
            adj[i, rng.choice(others, size=self.degree, replace=False)] = True
        return adj


def average_connections(net: Network | np.ndarray) -> float:
    """Live directed links per machine."""
    follows = net.follows if isinstance(net, Network) else np.asarray(net, dtype=bool)
    return float(follows.sum()) / follows.shape[0]


def component_count(net: Network | np.ndarray) -> int:
    """Weakly connected components, links taken as undirected."""
    follows = net.follows if isinstance(net, Network) else np.asarray(net, dtype=bool)
    n, _ = connected_components(csr_matrix(follows), directed=True, connection="weak")
    return int(n)


def _sweep_cell(config: SimConfig, time_average: bool) -> float:
    net = init_network(config)
    tail_start = config.steps // 2
    samples = []
    for t in range(config.steps):
        step(net)
        if time_average and t >= tail_start:
            samples.append(average_connections(net))
    if time_average:
        return float(np.mean(samples))
    return average_connections(net)


def threshold_sweep(
    base_config: SimConfig,
    thresholds: Sequence[float],
    seeds: Sequence[int],
    baseline: FixedBaseline,
    *,
    time_average: bool = False,
    workers: int = 1,
) -> list[SweepResult]:
    """Run every (threshold, seed) cell to the horizon and aggregate per threshold.

    The statistic is end-of-horizon average connections, or its mean over the
    final half of the horizon with ``time_average``. ``std_connections`` is the
    sample standard deviation across seeds (0 for a single seed).
    """
    if not thresholds:
        raise ValueError("thresholds must be nonempty")
    if not seeds:
        raise ValueError("seeds must be nonempty")
    for c_th in thresholds:
        if not 0.0 <= c_th <= 1.0:
            raise ValueError(f"threshold {c_th} outside [0, 1]")
    if baseline.degree > base_config.machine_count - 1:
        raise ValueError(
            f"baseline degree {baseline.degree} exceeds machine_count - 1 = {base_config.machine_count - 1}"
        )

    ordered = sorted(thresholds)
    cells = [
        replace(base_config.with_threshold(c_th), seed=seed) for c_th in ordered for seed in seeds
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(_sweep_cell, cells, [time_average] * len(cells)))
    else:
        values = [_sweep_cell(cfg, time_average) for cfg in cells]

    results = []
    per = len(seeds)
    for idx, c_th in enumerate(ordered):
        row = np.array(values[idx * per : (idx + 1) * per])
        std = float(row.std(ddof=1)) if per > 1 else 0.0
        results.append(
            SweepResult(
                c_th=float(c_th),
                mean_connections=float(row.mean()),
                std_connections=std,
                seeds=per,
                baseline_connections=float(baseline.degree),
            )
        )
    return results


def crossover_threshold(sweep: Sequence[SweepResult]) -> float | None:
    """Smallest threshold where the social curve drops below the fixed baseline.

    Linearly interpolated between the last point at or above the baseline and
    the first point below it.
    """
    for prev, cur in zip(sweep, sweep[1:]):
        if cur.c_th < prev.c_th:
            raise ValueError("sweep must be sorted by c_th")
    for idx, cur in enumerate(sweep):
        if cur.mean_connections < cur.baseline_connections:
            if idx == 0:
                return cur.c_th
            prev = sweep[idx - 1]
            gap_prev = prev.mean_connections - prev.baseline_connections
            gap_cur = cur.mean_connections - cur.baseline_connections
            frac = gap_prev / (gap_prev - gap_cur)
            return prev.c_th + frac * (cur.c_th - prev.c_th)
    return None


def _fmt(value: float) -> str:
    return format(value, ".6g")


def _rounded(result: SweepResult) -> dict:
    row = asdict(result)
    for key in ("c_th", "mean_connections", "std_connections", "baseline_connections"):
        row[key] = float(_fmt(row[key]))
    return row


def export_table(results: Sequence[SweepResult], path: str | Path) -> None:
    """Write the sweep as CSV, one row per threshold in ascending order."""
    path = Path(path)
    rows = sorted(results, key=lambda r: r.c_th)
    try:
        with path.open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_FIELDS)
            for r in rows:
                writer.writerow(
                    [
                        _fmt(r.c_th),
                        _fmt(r.mean_connections),
                        _fmt(r.std_connections),
                        str(r.seeds),
                        _fmt(r.baseline_connections),
                    ]
                )
    except OSError as exc:
        raise ExportError(f"cannot write sweep table to {path}: {exc}") from exc


def export_json(results: Sequence[SweepResult], path: str | Path) -> None:
    path = Path(path)
    rows = [_rounded(r) for r in sorted(results, key=lambda r: r.c_th)]
    try:
        path.write_text(json.dumps(rows, indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        raise ExportError(f"cannot write sweep json to {path}: {exc}") from exc


def read_table(path: str | Path) -> list[SweepResult]:
    with Path(path).open(encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_FIELDS:
            raise ValueError(f"unexpected header in {path}: {reader.fieldnames}")
        return [
            SweepResult(
                c_th=float(row["c_th"]),
                mean_connections=float(row["mean_connections"]),
                std_connections=float(row["std_connections"]),
                seeds=int(row["seeds"]),
                baseline_connections=float(row["baseline_connections"]),
            )
            for row in reader
        ]
