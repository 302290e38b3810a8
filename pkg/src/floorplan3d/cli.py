"""Command-line entry point.

JSON goes to stdout (or ``--out``); human-readable text goes to stderr.
Exit codes: 0 success, 1 usage, 2 input error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import statistics
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

from . import dist, references
from .eo import EOParams, GridPlacement, GridShape, default_grid, run_eo
from .hypergraph import EmptyNetlist, from_netlist, stats
from .pipeline import PipelineJob, RunResult, best_result, result_key
from .render import plot_bench, plot_layout, plot_trace, write_svg
from .squeeze import (
    GeometricPlacement,
    OverlappingInput,
    Squeezer,
    bounding_volume,
    rally_point,
    seed_geometry,
)
from .wirelength import grid_wirelength, total_wirelength
from .yal import YalError, read_yal

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_RUNTIME = 0, 1, 2, 3

DEFAULTS: dict[str, Any] = {
    "grid": None,
    "tau": 1.5,
    "iters": None,
    "rally": "corner",
    "p1": 0.5,
    "seeds": "1",
    "die_height": 1.0,
    "bundles": False,
    "workers": 1,
    "port": 0,
    "hello_period": dist.DEFAULT_HELLO,
    "timeout": None,
}


class InputError(Exception):
    pass


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class PipelineConfig:
    input: Path
    grid: tuple[int, int, int] | None = None
    tau: float = 1.5
    iters: int | None = None
    rally: str | tuple[float, float] = "corner"
    p1: float = 0.5
    seeds: list[int] = field(default_factory=lambda: [0])
    die_height: float = 1.0
    bundles: bool = False
    workers: int = 1

    def __post_init__(self):
        if not self.seeds:
            raise UsageError("at least one seed is required")
        if not self.tau > 1:
            raise UsageError("--tau must be > 1")
        if not 0 <= self.p1 <= 1:
            raise UsageError("--p1 must lie in [0, 1]")
        if self.iters is not None and self.iters < 0:
            raise UsageError("--iters must be >= 0")
        if self.workers < 1:
            raise UsageError("--workers must be >= 1")

    def jobs(self, text: str | None = None) -> list[PipelineJob]:
        src = {"yal": text} if text is not None else {"yal_path": str(self.input)}
        return [
            PipelineJob(grid=self.grid, tau=self.tau, max_iters=self.iters, rally=self.rally, p1=self.p1,
                        seed=s, die_height=self.die_height, bundles=self.bundles, **src)
            for s in self.seeds
        ]


# ---------------------------------------------------------------- parsing helpers


def parse_seeds(text: str | int | Sequence[int]) -> list[int]:
    """'8' -> seeds 0..7; '3,5,9' or '[7]' -> exactly those seeds."""
    if isinstance(text, int):
        return list(range(text))
    if not isinstance(text, str):
        return [int(s) for s in text]
    text = text.strip()
    if text.startswith("["):
        return [int(s) for s in json.loads(text)]
    if "," in text:
        return [int(s) for s in text.split(",") if s.strip()]
    n = int(text)
    if n < 1:
        raise UsageError("--seeds count must be >= 1")
    return list(range(n))


def parse_rally(text: str | Sequence[float]) -> str | tuple[float, float]:
    if not isinstance(text, str):
        return (float(text[0]), float(text[1]))
    if text in ("corner", "center"):
        return text
    try:
        px, py = (float(v) for v in text.split(","))
    except ValueError:
        raise UsageError(f"--rally must be corner, center or X,Y; got {text!r}") from None
    return (px, py)


def _grid(text: str | Sequence[int] | None) -> tuple[int, int, int] | None:
    if text is None:
        return None
    try:
        shape = GridShape.parse(text) if isinstance(text, str) else GridShape(*text)
    except (ValueError, TypeError) as exc:
        raise UsageError(f"bad --grid: {exc}") from None
    return shape.as_tuple()


def _settings(args: argparse.Namespace) -> dict[str, Any]:
    """Flags override the config file, which overrides built-in defaults."""
    merged = dict(DEFAULTS)
    if getattr(args, "config", None):
        try:
            cfg = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise InputError(f"cannot read config: {exc}") from exc
        except ValueError as exc:
            raise InputError(f"config is not valid JSON: {exc}") from exc
        merged.update({k.replace("-", "_"): v for k, v in cfg.items()})
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None and not (key == "bundles" and val is False):
            merged[key] = val
    return merged


def _config(args: argparse.Namespace, path: Path, name: str | None = None) -> PipelineConfig:
    s = _settings(args)
    grid = _grid(s["grid"])
    if grid is None and name is not None:
        grid = references.grid_for(name)
    return PipelineConfig(
        input=path,
        grid=grid,
        tau=float(s["tau"]),
        iters=None if s["iters"] is None else int(s["iters"]),
        rally=parse_rally(s["rally"]),
        p1=float(s["p1"]),
        seeds=parse_seeds(s["seeds"]),
        die_height=float(s["die_height"]),
        bundles=bool(s["bundles"]),
        workers=int(s["workers"]),
    )


def _read(path: str | Path):
    path = Path(path)
    if not path.is_file():
        raise InputError(f"{path}: no such file")
    try:
        return read_yal(path)
    except YalError as exc:
        raise InputError(f"{path}: {exc}") from exc


def _hypergraph(path: str | Path):
    try:
        return from_netlist(_read(path))
    except EmptyNetlist as exc:
        raise InputError(f"{path}: {exc}") from exc


def _load_json(path: str | Path) -> Any:
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    except ValueError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc


def _layout_from(data: Any) -> GeometricPlacement:
    if "best" in data and isinstance(data["best"], dict):
        data = data["best"]
    if "placement" in data:
        data = data["placement"]
    try:
        return GeometricPlacement.from_json(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"not a layout: {exc}") from exc


def _emit(args: argparse.Namespace, payload: Any) -> None:
    text = json.dumps(payload, indent=2) + "\n"
    if getattr(args, "out", None):
        Path(args.out).write_text(text)
        print(f"wrote {args.out}", file=sys.stderr)
    else:
        sys.stdout.write(text)


def _say(msg: str) -> None:
    print(msg, file=sys.stderr)


# ---------------------------------------------------------------- commands


def cmd_stats(args) -> int:
    st = stats(_hypergraph(args.yal))
    _say(
        f"{Path(args.yal).name}: {st.blocks} blocks, {st.nets} nets, neighbours "
        f"{st.neighbor_min}/{st.neighbor_max}/{st.neighbor_avg_rounded} (avg {st.neighbor_avg:.3f})"
    )
    _emit(args, st.to_json())
    return EXIT_OK


def cmd_place(args) -> int:
    h = _hypergraph(args.yal)
    cfg = _config(args, Path(args.yal), Path(args.yal).stem)
    shape = GridShape(*cfg.grid) if cfg.grid else default_grid(h.m)
    best = None
    for seed in cfg.seeds:
        placement, trace = run_eo(h, EOParams(shape, cfg.tau, cfg.iters, seed))
        key = (-trace[-1].best_fitness, grid_wirelength(h, placement), seed)
        if best is None or key < best[0]:
            best = (key, placement, trace, seed)
    assert best is not None
    (negfit, gwl, seed), placement, trace, seed = best
    out = placement.to_json(h, -negfit)
    out["grid_wirelength"] = gwl
    out["seed"] = seed
    _say(f"best seed {seed}: fitness {-negfit:.4f} of {h.m}, grid wire-length {gwl:g}")
    if args.figures:
        Path(args.figures).mkdir(parents=True, exist_ok=True)
        plot_trace(trace, Path(args.figures) / "trace.png", h.m)
    _emit(args, out)
    return EXIT_OK


def cmd_squeeze(args) -> int:
    h = _hypergraph(args.yal)
    cfg = _config(args, Path(args.yal))
    try:
        grid = GridPlacement.from_json(_load_json(args.placement), h)
    except (KeyError, ValueError, TypeError) as exc:
        raise InputError(f"bad grid placement: {exc}") from exc
    seeded = seed_geometry(grid, [(c.label, c.width, c.height) for c in h.component_edges])
    seeded = GeometricPlacement(seeded.boxes, seeded.layers, rally_point(seeded.boxes, cfg.rally))
    best = None
    for seed in cfg.seeds:
        out = Squeezer(seeded, p1=cfg.p1, seed=seed, bundles=cfg.bundles).run()
        wl = total_wirelength(h, out, cfg.die_height).total
        if best is None or (wl, seed) < best[0]:
            best = ((wl, seed), out)
    assert best is not None
    (wl, seed), layout = best
    vx, vy, layers = bounding_volume(layout)
    _say(f"best seed {seed}: volume {vx:g} x {vy:g} x {layers}, wire-length {wl:g}")
    if args.svg:
        write_svg(layout, args.svg)
    _emit(args, layout.to_json())
    return EXIT_OK


def cmd_wirelength(args) -> int:
    h = _hypergraph(args.yal)
    layout = _layout_from(_load_json(args.layout))
    die = float(_settings(args)["die_height"])
    report = total_wirelength(h, layout, die)
    _say(f"total wire-length {report.total:g} over {len(report.per_net)} nets")
    if args.per_net:
        for net, v in report.per_net.items():
            _say(f"  {net}\t{v:g}")
    _emit(args, report.to_json(per_net=args.per_net))
    return EXIT_OK


def _run_config(cfg: PipelineConfig):
    h = _hypergraph(cfg.input)
    text = cfg.input.read_text()
    results = dist.run_all(cfg.jobs(text), cfg.workers)
    ordered = sorted(results.values(), key=lambda r: r.seed)
    return h, ordered, best_result(ordered)


def cmd_pipeline(args) -> int:
    cfg = _config(args, Path(args.yal), Path(args.yal).stem)
    h, runs, best = _run_config(cfg)
    report = total_wirelength(h, best.placement, cfg.die_height)
    vx, vy, layers = best.bounding_volume
    _say(
        f"{cfg.input.name}: {len(runs)} seeds, best seed {best.seed}: wire-length {best.total_wirelength:g}, "
        f"volume {vx:g} x {vy:g} x {layers}"
    )
    out = {
        "instance": cfg.input.stem,
        "grid": list(cfg.grid or default_grid(h.m).as_tuple()),
        "seeds": [r.seed for r in runs],
        "best": best.to_json(),
        "report": report.to_json(per_net=True),
        "runs": [{"seed": r.seed, "total_wirelength": r.total_wirelength, "bounding_volume": list(r.bounding_volume)}
                 for r in runs],
    }
    if args.svg:
        write_svg(best.placement, args.svg)
    if args.figures:
        fig_dir = Path(args.figures)
        fig_dir.mkdir(parents=True, exist_ok=True)
        plot_layout(best.placement, fig_dir / f"{cfg.input.stem}_layout.png", cfg.input.stem)
        _write_runs_csv(runs, fig_dir / f"{cfg.input.stem}_runs.csv")
    _emit(args, out)
    return EXIT_OK


def _write_runs_csv(runs: Sequence[RunResult], path: Path) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["seed", "total_wirelength", "vx", "vy", "layers"])
        for r in runs:
            w.writerow([r.seed, r.total_wirelength, *r.bounding_volume])


BENCH_FIELDS = [
    "name", "grid", "volume", "wirelength_best", "wirelength_mean", "reference_wirelength",
    "reference_volume", "reference_2d", "ratio_to_reference", "below_2d",
]


def cmd_bench(args) -> int:
    paths = [Path(p) for p in args.yal]
    if args.dir:
        paths += sorted(Path(args.dir).glob("*.yal"))
    if not paths:
        raise UsageError("bench needs YAL files or --dir")
    rows, failures = [], []
    for path in paths:
        name = path.stem
        try:
            cfg = _config(args, path, name)
            h, runs, best = _run_config(cfg)
        except (InputError, UsageError, ValueError) as exc:
            failures.append({"name": name, "error": str(exc)})
            _say(f"{name}: FAILED: {exc}")
            continue
        ref = references.RESULTS_3D.get(name)
        wl = [r.total_wirelength for r in runs]
        row = {
            "name": name,
            "grid": "x".join(str(v) for v in (cfg.grid or default_grid(h.m).as_tuple())),
            "volume": "x".join(f"{v:g}" for v in best.bounding_volume),
            "wirelength_best": best.total_wirelength,
            "wirelength_mean": statistics.fmean(wl),
            "reference_wirelength": ref[2] if ref else None,
            "reference_volume": "x".join(str(v) for v in ref[1]) if ref else None,
            "reference_2d": references.WIRELENGTH_2D.get(name),
            "ratio_to_reference": best.total_wirelength / ref[2] if ref else None,
            "below_2d": (best.total_wirelength < references.WIRELENGTH_2D[name]) if name in references.WIRELENGTH_2D else None,
        }
        rows.append(row)
        _say(
            f"{name:8s} grid {row['grid']:7s} volume {row['volume']:>18s}  best {row['wirelength_best']:>12.1f}  "
            f"mean {row['wirelength_mean']:>12.1f}  ref3D {row['reference_wirelength'] or '-'}  "
            f"ref2D {row['reference_2d'] or '-'}"
        )
    if args.csv:
        _write_bench_csv(rows, Path(args.csv))
    report = {"rows": rows, "failures": failures}
    if args.figures and rows:
        fig_dir = Path(args.figures)
        fig_dir.mkdir(parents=True, exist_ok=True)
        _write_bench_csv(rows, fig_dir / "bench.csv")
        (fig_dir / "bench.json").write_text(json.dumps(report, indent=2) + "\n")
        plot_bench(rows, fig_dir / "bench_wirelength.png")
    _emit(args, report)
    return EXIT_OK if rows else EXIT_RUNTIME


def _write_bench_csv(rows: Sequence[dict], path: Path) -> None:
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=BENCH_FIELDS)
        w.writeheader()
        w.writerows(rows)


def cmd_render(args) -> int:
    layout = _layout_from(_load_json(args.layout))
    if not (args.svg or args.png):
        raise UsageError("render needs --svg and/or --png")
    if args.svg:
        write_svg(layout, args.svg)
        _say(f"wrote {args.svg}")
    if args.png:
        plot_layout(layout, args.png)
        _say(f"wrote {args.png}")
    return EXIT_OK


def cmd_serve(args) -> int:
    cfg = _config(args, Path(args.yal), Path(args.yal).stem)
    _hypergraph(cfg.input)  # fail early on bad input
    s = _settings(args)
    text = cfg.input.read_text()
    tasks = {f"t{k:04d}": job.to_json() for k, job in enumerate(cfg.jobs(text))}
    server = dist.Server(tasks, args.host, int(s["port"]), float(s["hello_period"]),
                         None if s["timeout"] is None else float(s["timeout"]))
    host, port = server.address
    _say(f"serving {len(tasks)} tasks on {host}:{port}")
    server.start()
    local = None
    if args.local_worker:
        import threading

        local = threading.Thread(target=dist.work, args=(host, port, "local", float(s["hello_period"])), daemon=True)
        local.start()
    try:
        server.wait()
    finally:
        server.stop()
    report = server.report()
    if report.best:
        _say(f"best task {report.best.task_id} (seed {report.best.seed}): wire-length {report.best.total_wirelength:g}")
    _emit(args, report.to_json())
    return EXIT_OK


def cmd_work(args) -> int:
    host, _, port = args.server.rpartition(":")
    if not host or not port.isdigit():
        raise UsageError("--server must be HOST:PORT")
    s = _settings(args)
    try:
        n = dist.work(host, int(port), args.worker_id, float(s["hello_period"]))
    except dist.ConnectFailure as exc:
        raise InputError(str(exc)) from exc
    _say(f"worker {args.worker_id}: {n} tasks completed")
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="floorplan3d", description="3D floorplanning: EO grid placement, squeezing, wire-length")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = argparse.ArgumentParser(add_help=False)
    run.add_argument("--config", help="JSON file with defaults for any flag")
    run.add_argument("--grid", help="EO grid size NX,NY,NZ")
    run.add_argument("--tau", type=float)
    run.add_argument("--iters", type=int, help="EO iterations (default 100*m^2)")
    run.add_argument("--rally", help="corner, center or X,Y")
    run.add_argument("--p1", type=float, help="probability of requeueing a moved component at the front")
    run.add_argument("--seeds", help="count N (seeds 0..N-1) or list like 3,5,9 / [7]")
    run.add_argument("--die-height", dest="die_height", type=float)
    run.add_argument("--bundles", action="store_true", default=None, help="enable bundle moves")
    run.add_argument("--workers", type=int, help="in-process worker threads")

    out = argparse.ArgumentParser(add_help=False)
    out.add_argument("--out", help="write JSON here instead of stdout")

    p = sub.add_parser("stats", parents=[out], help="netlist statistics")
    p.add_argument("yal")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("place", parents=[run, out], help="EO grid placement")
    p.add_argument("yal")
    p.add_argument("--figures", help="directory for the fitness trace plot")
    p.set_defaults(func=cmd_place)

    p = sub.add_parser("squeeze", parents=[run, out], help="squeeze a grid placement")
    p.add_argument("yal")
    p.add_argument("placement", help="grid placement JSON from 'place'")
    p.add_argument("--svg")
    p.set_defaults(func=cmd_squeeze)

    p = sub.add_parser("wirelength", parents=[out], help="evaluate a layout")
    p.add_argument("yal")
    p.add_argument("layout", help="layout JSON (squeeze or pipeline output)")
    p.add_argument("--config")
    p.add_argument("--die-height", dest="die_height", type=float)
    p.add_argument("--per-net", action="store_true")
    p.set_defaults(func=cmd_wirelength)

    p = sub.add_parser("pipeline", parents=[run, out], help="place, squeeze and evaluate over several seeds")
    p.add_argument("yal")
    p.add_argument("--svg")
    p.add_argument("--figures", help="directory for layout figure and per-seed CSV")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("bench", parents=[run, out], help="run instances and compare to published numbers")
    p.add_argument("yal", nargs="*")
    p.add_argument("--dir", help="run every *.yal in this directory")
    p.add_argument("--csv", help="write the comparison table as CSV")
    p.add_argument("--figures", help="directory for the comparison chart")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("render", help="draw a layout")
    p.add_argument("layout")
    p.add_argument("--svg")
    p.add_argument("--png")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("serve", parents=[run, out], help="distribute pipeline runs to workers")
    p.add_argument("yal")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int)
    p.add_argument("--hello-period", dest="hello_period", type=float)
    p.add_argument("--timeout", type=float, help="lease timeout in seconds (default 3x hello period)")
    p.add_argument("--local-worker", action="store_true", help="also run a worker inside the server")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("work", help="fetch and execute tasks from a server")
    p.add_argument("--server", required=True, help="HOST:PORT")
    p.add_argument("--worker-id", dest="worker_id", default=None)
    p.add_argument("--hello-period", dest="hello_period", type=float)
    p.set_defaults(func=cmd_work)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr)
    if getattr(args, "worker_id", "") is None:
        import os
        import socket

        args.worker_id = f"{socket.gethostname()}-{os.getpid()}"
    try:
        return args.func(args)
    except UsageError as exc:
        _say(f"error: {exc}")
        return EXIT_USAGE
    except (InputError, OverlappingInput) as exc:
        _say(f"error: {exc}")
        return EXIT_INPUT
    except dist.ConfigInvalid as exc:
        _say(f"error: {exc}")
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001 - top-level guard maps to exit code 3
        _say(f"error: {type(exc).__name__}: {exc}")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
