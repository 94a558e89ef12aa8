"""``msnsim`` command line: threshold sweeps, single runs, and the maze scenario."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import maze as mz
from .config import Config, ConfigError, parse_config, parse_float_list, parse_seed_list
from .metrics import (
    average_connections,
    component_count,
    crossover_threshold,
    export_json,
    export_table,
    threshold_sweep,
)
from .network import Post, disseminate, init_network, run


@dataclass
class RunManifest:
    command: str
    config_path: Path | None
    output_dir: Path
    seed_override: int | None = None
    emitted_files: list[Path] = field(default_factory=list)

    def emit(self, name: str) -> Path:
        path = self.output_dir / name
        self.emitted_files.append(path)
        return path


def _load(manifest: RunManifest) -> Config:
    return Config() if manifest.config_path is None else parse_config(manifest.config_path)


def _prepare_out(manifest: RunManifest) -> None:
    out = manifest.output_dir
    if out.is_dir():
        return
    if not out.parent.is_dir():
        raise FileNotFoundError(f"output directory {out} cannot be created: parent {out.parent} does not exist")
    out.mkdir()


def cmd_sweep(manifest: RunManifest, thresholds=None, seeds=None, time_average: bool = False) -> int:
    cfg = _load(manifest)
    sweep_cfg = cfg.sweep
    if seeds is None and manifest.seed_override is not None:
        seeds = (manifest.seed_override,)
    results = threshold_sweep(
        cfg.sim,
        list(thresholds or sweep_cfg.thresholds),
        list(seeds or sweep_cfg.seeds),
        sweep_cfg.baseline,
        time_average=time_average or sweep_cfg.time_average,
        workers=sweep_cfg.workers,
    )
    _prepare_out(manifest)
    export_table(results, manifest.emit("sweep.csv"))
    export_json(results, manifest.emit("sweep.json"))
    cross = crossover_threshold(results)
    if cross is None:
        print("crossover threshold: none (social curve never falls below the fixed baseline)")
    else:
        print(f"crossover threshold: {cross:.6g}")
    return 0


def cmd_run(manifest: RunManifest, thresholds=None) -> int:
    cfg = _load(manifest)
    sim = cfg.sim
    if manifest.seed_override is not None:
        sim = replace(sim, seed=manifest.seed_override)
    if thresholds:
        if len(thresholds) != 1:
            raise ValueError("run takes a single --thresholds value")
        sim = sim.with_threshold(thresholds[0])
    net = init_network(sim)
    m = sim.machine_count
    rows = []
    for report in run(net, sim.steps).reports:
        rows.append((report.step, report.formed, report.expired, report.live, report.live / m))
    reach = [len(disseminate(net, Post(origin=i))) for i in range(m)]
    summary = {
        "seed": sim.seed,
        "threshold": sim.decay.threshold,
        "steps": sim.steps,
        "live_links": net.link_count,
        "mean_connections": float(format(average_connections(net), ".6g")),
        "components": component_count(net),
        "mean_reach": float(format(sum(reach) / m, ".6g")),
    }
    _prepare_out(manifest)
    with manifest.emit("run.csv").open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("step", "formed", "expired", "live_links", "mean_connections"))
        for s, formed, expired, live, mean in rows:
            writer.writerow((s, formed, expired, live, format(mean, ".6g")))
    manifest.emit("run.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"final mean connections: {summary['mean_connections']}, components: {summary['components']}")
    return 0


def cmd_maze(manifest: RunManifest) -> int:
    cfg = _load(manifest)
    scen = cfg.maze
    if manifest.seed_override is not None:
        scen = replace(scen, seed=manifest.seed_override)
    world = mz.bundled_maze() if scen.maze is None else mz.load_maze(_resolve(manifest, scen.maze))
    reports = mz.run_scenarios(world, scen)
    _prepare_out(manifest)
    manifest.emit("maze_report.json").write_text(mz.scenario_json(reports), encoding="utf-8")
    for name, rep in reports.items():
        steps = ", ".join(f"machine {a.id}: {a.steps_taken}" for a in rep.agents)
        print(f"{name}: {steps}")
    return 0


def _resolve(manifest: RunManifest, maze_path: str) -> Path:
    path = Path(maze_path)
    if not path.is_absolute() and manifest.config_path is not None:
        path = manifest.config_path.parent / path
    return path


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="msnsim", description="Machine social network simulator and maze scenario."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", type=Path, help="key = value configuration file (defaults if omitted)")
        p.add_argument("--out", type=Path, default=Path("out"), help="output directory (default: out)")
        p.add_argument("--seed", type=int, help="override the configured seed (u64)")

    sweep = sub.add_parser("sweep", help="average connections across connection thresholds")
    common(sweep)
    sweep.add_argument("--seeds", type=parse_seed_list, help="seed list, e.g. 1,2,3 or 1..20")
    sweep.add_argument("--thresholds", type=parse_float_list, help="threshold list, e.g. 0.3,0.45")
    sweep.add_argument(
        "--time-average", action="store_true", help="average over the final half of the horizon"
    )

    run_p = sub.add_parser("run", help="single simulation with a per-step trace")
    common(run_p)
    run_p.add_argument("--thresholds", type=parse_float_list, help="single connection threshold override")

    maze_p = sub.add_parser("maze", help="solo, cooperative and archive maze runs")
    common(maze_p)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.seed is not None and not 0 <= args.seed < 2**64:
        print(f"msnsim: error: seed {args.seed} is not an unsigned 64-bit integer", file=sys.stderr)
        return 2
    manifest = RunManifest(args.command, args.config, args.out, args.seed)
    try:
        if args.command == "sweep":
            if args.seeds is not None and args.seed is not None:
                raise ValueError("use either --seed or --seeds, not both")
            return cmd_sweep(manifest, args.thresholds, args.seeds, args.time_average)
        if args.command == "run":
            return cmd_run(manifest, args.thresholds)
        return cmd_maze(manifest)
    except (ConfigError, mz.MazeError, ValueError, OSError) as exc:
        print(f"msnsim {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
