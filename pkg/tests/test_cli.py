import json

import numpy as np
import pytest

from tetcontour.cli import PipelineConfig, main


@pytest.fixture
def grid_input(tmp_path):
    n = 9
    x = np.linspace(-1.0, 1.0, n)
    X, Y, Z = np.meshgrid(x, x, x, indexing="ij")
    f = (np.exp(-6 * ((X - 0.4) ** 2 + Y ** 2 + Z ** 2))
         + 0.7 * np.exp(-6 * ((X + 0.4) ** 2 + Y ** 2 + Z ** 2)))
    raw = tmp_path / "field.f64"
    np.transpose(f, (2, 1, 0)).ravel().astype("<f8").tofile(raw)
    return ["--dims", str(n), str(n), str(n), "--raw", str(raw)]


@pytest.fixture
def tetgen_input(tmp_path):
    node = tmp_path / "m.node"
    node.write_text("4 3 1 0\n"
                    "1 0 0 0 0.0\n"
                    "2 1 0 0 1.0\n"
                    "3 0 1 0 2.0\n"
                    "4 0 0 1 3.0\n")
    ele = tmp_path / "m.ele"
    ele.write_text("1 4 0\n1 1 2 3 4\n")
    return ["--node", str(node), "--ele", str(ele), "--field-attr", "0"]


def test_config_requires_exactly_one_input():
    with pytest.raises(ValueError):
        PipelineConfig().validate()
    with pytest.raises(ValueError):
        PipelineConfig(node="a", ele="b", dims=(2, 2, 2),
                       raw="c").validate()
    with pytest.raises(ValueError):
        PipelineConfig(node="a").validate()      # .ele missing
    with pytest.raises(ValueError):
        PipelineConfig(dims=(2, 2, 2), raw="c", top=0).validate()


def test_run_grid_artifacts(tmp_path, grid_input, capsys):
    out = tmp_path / "out"
    code = main(["run", *grid_input, "--weights", "volume", "--top", "2",
                 "--out", str(out)])
    assert code == 0
    for name in ("tree.json", "weights.csv", "branches.json",
                 "branch_0.obj", "branch_1.obj", "branches.mtl"):
        assert (out / name).exists(), name

    tree = json.loads((out / "tree.json").read_text())
    assert tree["schema"] == 1
    assert tree["vertexCount"] == 9 ** 3
    assert len(tree["superarcs"]) == len(tree["supernodes"]) - 1
    reg = sum(arc["regularCount"] for arc in tree["superarcs"])
    assert reg == tree["vertexCount"] - len(tree["supernodes"])

    lines = (out / "weights.csv").read_text().splitlines()
    assert lines[0] == "superarc,h_lo,h_hi,a,b,c,d,weight"
    assert len(lines) == 1 + len(tree["superarcs"])

    branches = json.loads((out / "branches.json").read_text())
    assert branches["schema"] == 1
    assert branches["branches"][0]["rank"] == 0
    assert branches["branches"][0]["extraction"] is not None

    summary = capsys.readouterr().out
    assert "supernodes" in summary and "total volume" in summary


def test_run_tetgen_input(tmp_path, tetgen_input):
    out = tmp_path / "out"
    code = main(["run", *tetgen_input, "--weights", "count", "--top", "1",
                 "--out", str(out)])
    assert code == 0
    tree = json.loads((out / "tree.json").read_text())
    assert tree["vertexCount"] == 4
    assert len(tree["superarcs"]) == 1


def test_run_deterministic_across_threads(tmp_path, grid_input):
    outs = []
    for threads in ("1", "8"):
        out = tmp_path / f"t{threads}"
        assert main(["run", *grid_input, "--threads", threads,
                     "--out", str(out)]) == 0
        outs.append(out)
    for name in ("tree.json", "weights.csv", "branches.json",
                 "branch_0.obj"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()


def test_isovalue_override(tmp_path, grid_input):
    out0 = tmp_path / "a"
    assert main(["run", *grid_input, "--top", "1", "--out", str(out0)]) == 0
    doc = json.loads((out0 / "branches.json").read_text())
    ext = doc["branches"][0]["extraction"]
    arc, h_default = ext["superarc"], ext["isovalue"]

    tree = json.loads((out0 / "tree.json").read_text())
    sn_value = {s["id"]: s["value"] for s in tree["supernodes"]}
    lo = sn_value[tree["superarcs"][arc]["lo"]]
    hi = sn_value[tree["superarcs"][arc]["hi"]]
    h_new = lo + 0.25 * (hi - lo)
    assert h_new != h_default

    out1 = tmp_path / "b"
    assert main(["run", *grid_input, "--top", "1", "--out", str(out1),
                 "--isovalue", f"{arc}={h_new}"]) == 0
    doc = json.loads((out1 / "branches.json").read_text())
    assert doc["branches"][0]["extraction"]["isovalue"] == pytest.approx(h_new)


def test_isovalue_override_out_of_range_fails(tmp_path, grid_input):
    out0 = tmp_path / "a"
    assert main(["run", *grid_input, "--top", "1", "--out", str(out0)]) == 0
    doc = json.loads((out0 / "branches.json").read_text())
    arc = doc["branches"][0]["extraction"]["superarc"]
    out1 = tmp_path / "b"
    code = main(["run", *grid_input, "--top", "1", "--out", str(out1),
                 "--isovalue", f"{arc}=999.0"])
    assert code != 0


def test_missing_file_is_reported(tmp_path, capsys):
    code = main(["run", "--dims", "4", "4", "4",
                 "--raw", str(tmp_path / "nope.f64"),
                 "--out", str(tmp_path / "out")])
    assert code != 0
    assert "error" in capsys.readouterr().err


def test_bench_csv(grid_input, capsys):
    assert main(["bench", *grid_input]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "stage,seconds"
    stages = [line.split(",")[0] for line in lines[1:]]
    assert stages == ["construction", "weights", "branch decomposition"]


def test_verify_passes(capsys):
    assert main(["verify", "--seed", "42", "--tets", "60"]) == 0
    out = capsys.readouterr().out
    assert "PASS spline-vs-clip" in out
    assert "FAIL" not in out
