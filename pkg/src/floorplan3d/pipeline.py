"""One full optimisation run: netlist -> EO grid placement -> squeeze -> wire-length."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Mapping

from .eo import EOParams, GridShape, default_grid, run_eo
from .hypergraph import LayoutHypergraph, from_netlist
from .squeeze import GeometricPlacement, Squeezer, bounding_volume, rally_point, seed_geometry
from .wirelength import total_wirelength
from .yal import parse_yal

__all__ = ["PipelineJob", "RunResult", "run_pipeline", "best_result", "load_hypergraph", "result_key"]


@dataclass(frozen=True)
class PipelineJob:
    yal: str | None = None
    yal_path: str | None = None
    grid: tuple[int, int, int] | None = None
    tau: float = 1.5
    max_iters: int | None = None
    rally: str | tuple[float, float] = "corner"
    p1: float = 0.5
    seed: int = 0
    die_height: float = 1.0
    bundles: bool = False

    def __post_init__(self):
        if (self.yal is None) == (self.yal_path is None):
            raise ValueError("a job needs exactly one of yal text or yal_path")

    def to_json(self) -> dict:
        out = {k: v for k, v in asdict(self).items() if v is not None}
        if self.grid is not None:
            out["grid"] = list(self.grid)
        if not isinstance(self.rally, str):
            out["rally"] = list(self.rally)
        out["kind"] = "pipeline"
        return out

    @classmethod
    def from_json(cls, data: Mapping) -> PipelineJob:
        data = {k: v for k, v in data.items() if k != "kind"}
        if data.get("grid") is not None:
            data["grid"] = tuple(data["grid"])
        if isinstance(data.get("rally"), list):
            data["rally"] = tuple(data["rally"])
        return cls(**data)

    def text(self) -> str:
        return self.yal if self.yal is not None else Path(self.yal_path).read_text()


@dataclass
class RunResult:
    task_id: str
    total_wirelength: float
    bounding_volume: tuple[float, float, int]
    placement: GeometricPlacement
    seed: int = 0
    fitness: float = 0.0
    grid: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "task_id": self.task_id,
            "seed": self.seed,
            "total_wirelength": self.total_wirelength,
            "bounding_volume": list(self.bounding_volume),
            "fitness": self.fitness,
            "grid": self.grid,
            "placement": self.placement.to_json(),
        }

    @classmethod
    def from_json(cls, data: Mapping) -> RunResult:
        vx, vy, layers = data["bounding_volume"]
        return cls(
            task_id=data["task_id"],
            total_wirelength=float(data["total_wirelength"]),
            bounding_volume=(float(vx), float(vy), int(layers)),
            placement=GeometricPlacement.from_json(data["placement"]),
            seed=int(data.get("seed", 0)),
            fitness=float(data.get("fitness", 0.0)),
            grid=dict(data.get("grid", {})),
        )


@lru_cache(maxsize=32)
def _hypergraph_of(text: str) -> LayoutHypergraph:
    return from_netlist(parse_yal(text))


def load_hypergraph(job: PipelineJob) -> LayoutHypergraph:
    return _hypergraph_of(job.text())


def run_pipeline(job: PipelineJob, task_id: str = "") -> RunResult:
    h = load_hypergraph(job)
    shape = GridShape(*job.grid) if job.grid else default_grid(h.m)
    grid, trace = run_eo(h, EOParams(shape, tau=job.tau, max_iters=job.max_iters, seed=job.seed))
    dims = [(c.label, c.width, c.height) for c in h.component_edges]
    g = seed_geometry(grid, dims)
    g = GeometricPlacement(g.boxes, g.layers, rally_point(g.boxes, job.rally))
    squeezed = Squeezer(g, p1=job.p1, seed=job.seed, bundles=job.bundles).run()
    report = total_wirelength(h, squeezed, job.die_height)
    return RunResult(
        task_id=task_id,
        total_wirelength=report.total,
        bounding_volume=bounding_volume(squeezed),
        placement=squeezed,
        seed=job.seed,
        fitness=trace[-1].best_fitness if trace else 0.0,
        grid=grid.to_json(h),
    )


def result_key(r: RunResult) -> tuple:
    vx, vy, layers = r.bounding_volume
    return (r.total_wirelength, vx * vy * layers, r.task_id)


def best_result(results: Iterable[RunResult]) -> RunResult:
    """Lowest wire-length, then smallest volume; task id settles exact ties."""
    results = list(results)
    if not results:
        raise ValueError("no results")
    return min(results, key=result_key)
