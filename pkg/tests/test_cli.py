import csv
import json
import shutil
import subprocess
import sys
import xml.etree.ElementTree as ET

import pytest

from floorplan3d.cli import PipelineConfig, UsageError, main, parse_rally, parse_seeds

SINGLE = """
MODULE B; TYPE GENERAL; DIMENSIONS 0 0 7 0 7 3 0 3; IOLIST; a B 0 1; ENDIOLIST; ENDMODULE;
MODULE top; TYPE PARENT; NETWORK; only B n1; ENDNETWORK; ENDMODULE;
"""


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_stats(capsys, fixtures):
    code, out, err = run(capsys, "stats", fixtures / "chain14.yal")
    assert code == 0
    assert json.loads(out) == {"blocks": 14, "nets": 12, "neighbors": {"min": 1, "max": 6, "avg": 3, "avg_exact": 36 / 14}}
    assert "14 blocks" in err


def test_exit_codes(capsys, tmp_path):
    assert run(capsys, "stats", tmp_path / "missing.yal")[0] == 2
    bad = tmp_path / "bad.yal"
    bad.write_text("MODULE x; TYPE GENERAL;\nDIMENSIONS 1 2 3;\nENDMODULE;")
    code, _, err = run(capsys, "stats", bad)
    assert code == 2 and "line 2" in err
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 1
    single = tmp_path / "one.yal"
    single.write_text(SINGLE)
    assert run(capsys, "pipeline", single, "--grid", "2,2")[0] == 1
    assert run(capsys, "pipeline", single, "--tau", "0.5")[0] == 1
    assert run(capsys, "pipeline", single, "--seeds", "0")[0] == 1
    # a grid too small for the netlist fails at run time
    two = tmp_path / "two.yal"
    two.write_text(SINGLE.replace("only B n1;", "u1 B n1; u2 B n1;"))
    code, _, err = run(capsys, "pipeline", two, "--grid", "1,1,1")
    assert code == 3 and "GridTooSmall" in err


def test_no_command_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 1


def test_single_block_pipeline(capsys, tmp_path):
    single = tmp_path / "one.yal"
    single.write_text(SINGLE)
    code, out, _ = run(capsys, "pipeline", single)
    doc = json.loads(out)
    assert code == 0
    assert doc["best"]["total_wirelength"] == 0
    assert doc["best"]["bounding_volume"] == [7, 3, 1]


def test_pipeline_deterministic_and_files(capsys, tmp_path, fixtures):
    outs = []
    for k in range(2):
        path = tmp_path / f"run{k}.json"
        code, _, _ = run(capsys, "pipeline", fixtures / "rails9.yal", "--seeds", "[7]", "--iters", "500",
                         "--out", path, "--svg", tmp_path / f"run{k}.svg", "--figures", tmp_path / f"fig{k}")
        assert code == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
    assert (tmp_path / "run0.svg").read_bytes() == (tmp_path / "run1.svg").read_bytes()
    doc = json.loads(outs[0])
    assert doc["seeds"] == [7] and doc["best"]["seed"] == 7
    assert (tmp_path / "fig0" / "rails9_layout.png").exists()
    rows = list(csv.DictReader(open(tmp_path / "fig0" / "rails9_runs.csv")))
    assert rows[0]["seed"] == "7"


def test_place_squeeze_wirelength_render(capsys, tmp_path, fixtures):
    yal = fixtures / "chain14.yal"
    grid, layout = tmp_path / "grid.json", tmp_path / "layout.json"
    assert run(capsys, "place", yal, "--grid", "4,4,1", "--iters", "2000", "--seeds", "2", "--out", grid,
               "--figures", tmp_path)[0] == 0
    gdoc = json.loads(grid.read_text())
    assert gdoc["shape"] == [4, 4, 1] and len(gdoc["cells"]) == 14 and "fitness" in gdoc
    assert (tmp_path / "trace.png").exists()
    assert run(capsys, "squeeze", yal, grid, "--bundles", "--out", layout, "--svg", tmp_path / "s.svg")[0] == 0
    ldoc = json.loads(layout.read_text())
    assert len(ldoc["boxes"]) == 14
    code, out, err = run(capsys, "wirelength", yal, layout, "--per-net", "--die-height", "3")
    rep = json.loads(out)
    assert code == 0 and rep["die_height"] == 3 and len(rep["per_net"]) == 12
    assert rep["total"] == pytest.approx(sum(rep["per_net"].values()))
    assert "n12" in err
    svg = tmp_path / "again.svg"
    assert run(capsys, "render", layout, "--svg", svg, "--png", tmp_path / "r.png")[0] == 0
    root = ET.parse(svg).getroot()
    names = {r.get("data-name") for r in root.iter("{http://www.w3.org/2000/svg}rect") if r.get("data-name")}
    assert names == {b["name"] for b in ldoc["boxes"]}
    assert run(capsys, "render", layout)[0] == 1


def test_config_file_and_flag_precedence(capsys, tmp_path, fixtures):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"grid": "4,4,1", "seeds": "[3, 4]", "iters": 300, "die-height": 2.0}))
    code, out, _ = run(capsys, "pipeline", fixtures / "chain14.yal", "--config", cfg, "--seeds", "[5]")
    doc = json.loads(out)
    assert code == 0
    assert doc["grid"] == [4, 4, 1]
    assert doc["seeds"] == [5]
    assert doc["report"]["die_height"] == 2.0
    cfg.write_text("{not json")
    assert run(capsys, "pipeline", fixtures / "chain14.yal", "--config", cfg)[0] == 2


def test_bench_subset_and_failures(capsys, tmp_path, fixtures):
    shutil.copy(fixtures / "rails9.yal", tmp_path / "apte.yal")
    (tmp_path / "broken.yal").write_text("MODULE")
    code, out, err = run(capsys, "bench", "--dir", tmp_path, "--seeds", "2", "--iters", "300",
                         "--csv", tmp_path / "bench.csv", "--figures", tmp_path / "figs")
    doc = json.loads(out)
    assert code == 0
    assert [r["name"] for r in doc["rows"]] == ["apte"]
    row = doc["rows"][0]
    assert row["grid"] == "2x2x3"
    assert row["reference_2d"] == 513_061 and row["reference_wirelength"] == 137_325
    assert [f["name"] for f in doc["failures"]] == ["broken"]
    assert "broken" in err
    assert list(csv.DictReader(open(tmp_path / "bench.csv")))[0]["name"] == "apte"
    for name in ("bench.csv", "bench.json", "bench_wirelength.png"):
        assert (tmp_path / "figs" / name).exists()
    assert run(capsys, "bench")[0] == 1


def test_serve_with_local_worker(capsys, fixtures):
    code, out, err = run(capsys, "serve", fixtures / "rails9.yal", "--seeds", "3", "--iters", "200",
                         "--hello-period", "0.2", "--timeout", "1", "--local-worker")
    doc = json.loads(out)
    assert code == 0 and doc["tasks"] == 3
    assert "serving 3 tasks" in err
    assert run(capsys, "serve", fixtures / "rails9.yal", "--hello-period", "1", "--timeout", "1")[0] == 1


def test_work_bad_server(capsys):
    assert run(capsys, "work", "--server", "nonsense")[0] == 1


def test_parsers():
    assert parse_seeds("3") == [0, 1, 2]
    assert parse_seeds("4,9") == [4, 9]
    assert parse_seeds("[7]") == [7]
    assert parse_seeds(2) == [0, 1]
    assert parse_rally("center") == "center"
    assert parse_rally("1.5,2") == (1.5, 2.0)
    with pytest.raises(UsageError):
        parse_rally("top")
    with pytest.raises(UsageError):
        PipelineConfig(input="x", seeds=[])
    with pytest.raises(UsageError):
        PipelineConfig(input="x", p1=2)


def test_module_entry_point(fixtures):
    proc = subprocess.run([sys.executable, "-m", "floorplan3d", "stats", str(fixtures / "rails9.yal")],
                          capture_output=True, text=True, timeout=60)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["neighbors"]["min"] == 8
