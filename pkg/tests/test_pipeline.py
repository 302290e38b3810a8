import pytest

from floorplan3d.pipeline import PipelineJob, RunResult, best_result, run_pipeline
from floorplan3d.squeeze import GeometricPlacement, PlacedBox, RallyPoint, find_overlaps

SINGLE = """
MODULE B; TYPE GENERAL; DIMENSIONS 0 0 7 0 7 3 0 3; IOLIST; a B 0 1; ENDIOLIST; ENDMODULE;
MODULE top; TYPE PARENT; NETWORK; only B n1; ENDNETWORK; ENDMODULE;
"""


def test_single_block():
    r = run_pipeline(PipelineJob(yal=SINGLE), "t")
    assert r.total_wirelength == 0
    assert r.bounding_volume == (7, 3, 1)


def test_fixture_run_is_valid_and_deterministic(fixtures):
    job = PipelineJob(yal_path=str(fixtures / "chain14.yal"), grid=(4, 4, 2), max_iters=2000, seed=4, bundles=True)
    a, b = run_pipeline(job, "x"), run_pipeline(job, "x")
    assert a.to_json() == b.to_json()
    assert not find_overlaps(a.placement.boxes)
    assert a.placement.layers == 2
    assert a.grid["shape"] == [4, 4, 2]
    assert RunResult.from_json(a.to_json()).to_json() == a.to_json()


def test_job_json_round_trip():
    job = PipelineJob(yal=SINGLE, grid=(2, 2, 3), rally=(1.0, 2.0), seed=9, p1=0.25)
    doc = job.to_json()
    assert doc["kind"] == "pipeline" and doc["grid"] == [2, 2, 3] and doc["rally"] == [1.0, 2.0]
    assert PipelineJob.from_json(doc) == job


def test_job_needs_one_source():
    with pytest.raises(ValueError):
        PipelineJob()
    with pytest.raises(ValueError):
        PipelineJob(yal=SINGLE, yal_path="x.yal")


def _result(tid, wl, vol):
    g = GeometricPlacement((PlacedBox("a", 0, 0, 0, 1, 1),), 1, RallyPoint(0, 0))
    return RunResult(tid, wl, vol, g)


def test_best_result_order():
    rs = [_result("c", 5, (2, 2, 1)), _result("b", 5, (1, 2, 1)), _result("a", 6, (1, 1, 1))]
    assert best_result(rs).task_id == "b"
    tie = [_result("z", 5, (1, 2, 1)), _result("y", 5, (2, 1, 1))]
    assert best_result(tie).task_id == best_result(reversed(tie)).task_id == "y"
    with pytest.raises(ValueError):
        best_result([])
