import json
import math

import pytest

from bergman.cli import main
from bergman.catalog import disk_spec, ball_disk_lift_spec
from bergman.domains import spec_to_dict


@pytest.fixture
def disk_files(tmp_path):
    spec = tmp_path / "disk.json"
    spec.write_text(json.dumps(spec_to_dict(disk_spec())))
    pts = tmp_path / "pts.json"
    pts.write_text(json.dumps([[[0.0, 0.0]]]))
    return spec, pts


@pytest.fixture
def lifted_ball_file(tmp_path):
    spec = tmp_path / "ball_disk_lift.json"
    spec.write_text(json.dumps(spec_to_dict(ball_disk_lift_spec(1, 1))))
    return spec


def test_eval_disk_origin_all_modes(disk_files, tmp_path, capsys):
    spec, pts = disk_files
    out = tmp_path / "eval.csv"
    rc = main(["eval", "--spec", str(spec), "--points", str(pts),
               "--mode", "all", "--out", str(out)])
    assert rc == 0
    header, row = out.read_text().strip().splitlines()
    cols = dict(zip(header.split(","), row.split(",")))
    for mode in ("closed", "lifted", "series"):
        assert float(cols[f"{mode}_re"]) == pytest.approx(1 / math.pi, rel=1e-6)
    assert cols["error"] == ""


def test_eval_closed_vs_lifted_panel(lifted_ball_file, tmp_path):
    pts = [[[0.2, 0.05], [0.1, -0.1], [0.3, 0.1]],
           [[0.1, 0.0], [0.25, 0.1], [0.2, -0.2]],
           [[0.0, 0.0], [0.0, 0.0], [0.0, 0.0]]]
    ptsf = tmp_path / "p.json"
    ptsf.write_text(json.dumps(pts))
    out = tmp_path / "eval.csv"
    rc = main(["eval", "--spec", str(lifted_ball_file), "--points", str(ptsf),
               "--mode", "all", "--out", str(out)])
    assert rc == 0
    lines = out.read_text().strip().splitlines()
    header = lines[0].split(",")
    di = header.index("delta_closed_lifted")
    for line in lines[1:]:
        assert float(line.split(",")[di]) < 1e-10


def test_eval_accepts_point_pairs(disk_files, tmp_path):
    spec, _ = disk_files
    pts = tmp_path / "pairs.json"
    pts.write_text(json.dumps([{"p": [[0.3, 0.0]], "q": [[0.2, 0.1]]}]))
    out = tmp_path / "eval.csv"
    rc = main(["eval", "--spec", str(spec), "--points", str(pts),
               "--mode", "closed", "--out", str(out)])
    assert rc == 0
    header, row = out.read_text().strip().splitlines()
    cols = dict(zip(header.split(","), row.split(",")))
    want = 1 / (math.pi * (1 - 0.3 * complex(0.2, 0.1).conjugate()) ** 2)
    assert complex(float(cols["closed_re"]), float(cols["closed_im"])) \
        == pytest.approx(want, rel=1e-12)


def test_eval_exterior_point_exits_2(disk_files, tmp_path):
    spec, _ = disk_files
    pts = tmp_path / "ext.json"
    pts.write_text(json.dumps([[[2.0, 0.0]]]))
    out = tmp_path / "eval.csv"
    rc = main(["eval", "--spec", str(spec), "--points", str(pts),
               "--mode", "closed", "--out", str(out)])
    assert rc == 2
    assert "exterior" in out.read_text()


def test_eval_deterministic_bytes(lifted_ball_file, tmp_path):
    ptsf = tmp_path / "p.json"
    ptsf.write_text(json.dumps([[[0.2, 0.1], [0.1, 0.0], [0.2, -0.1]]]))
    outs = []
    for name in ("a.csv", "b.csv"):
        out = tmp_path / name
        rc = main(["eval", "--spec", str(lifted_ball_file), "--points", str(ptsf),
                   "--mode", "all", "--out", str(out)])
        assert rc == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_verify_dirichlet_passes(capsys):
    rc = main(["verify", "--suite", "dirichlet"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "30/30 passed" in out
    assert "FAIL" not in out


def test_verify_levi_passes(capsys):
    rc = main(["verify", "--suite", "levi"])
    assert rc == 0
    assert "3/3 passed" in capsys.readouterr().out


def test_verify_symmetry_with_workers(capsys, tmp_path):
    out = tmp_path / "sym.csv"
    rc = main(["verify", "--suite", "symmetry", "--workers", "4",
               "--out", str(out)])
    assert rc == 0
    assert "FAIL" not in capsys.readouterr().out
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "suite,case,measured,tolerance,status"
    assert all(line.endswith("PASS") for line in lines[1:])


def test_verify_worker_count_does_not_change_output(tmp_path):
    outs = []
    for workers, name in ((1, "w1.csv"), (4, "w4.csv")):
        out = tmp_path / name
        rc = main(["verify", "--suite", "lift-equivalence",
                   "--workers", str(workers), "--out", str(out)])
        assert rc == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_verify_workers_default_from_env(monkeypatch):
    monkeypatch.setenv("BERGMAN_WORKERS", "3")
    from bergman.cli import build_parser
    args = build_parser().parse_args(["verify", "--suite", "levi"])
    assert args.workers == 3


def test_verify_unknown_suite_usage_error(capsys):
    with pytest.raises(SystemExit) as e:
        main(["verify", "--suite", "nonsense"])
    assert e.value.code == 2


def test_verify_tightened_tolerance_fails(capsys):
    rc = main(["verify", "--suite", "dirichlet", "--tol", "1e-30"])
    assert rc == 1
    assert "FAIL" in capsys.readouterr().out


def test_boundary_probe_s2(lifted_ball_file, tmp_path, capsys):
    out = tmp_path / "probe.csv"
    rc = main(["boundary", "--spec", str(lifted_ball_file),
               "--target", "[[0,0],[1,0],[0,0]]",
               "--stratum", "S2", "--weight", "r", "--out", str(out)])
    assert rc == 0
    line = capsys.readouterr().out
    assert "predicted=" in line and "converged=True" in line
    rel = float(line.split("rel=")[1].split()[0])
    assert rel < 0.01
    assert out.read_text().startswith("k,t,kernel,weighted,extrapolated")


def test_boundary_probe_v_fixture(tmp_path, capsys):
    from bergman.catalog import ball_exp_lift_spec
    spec = tmp_path / "exp_lift.json"
    spec.write_text(json.dumps(spec_to_dict(ball_exp_lift_spec(1, 1, (1.0,)))))
    rc = main(["boundary", "--spec", str(spec),
               "--target", "[[0,0],[1,0],[0,0]]",
               "--stratum", "S2", "--weight", "rho"])
    assert rc == 0
    line = capsys.readouterr().out
    pred = float(line.split("predicted=")[1].split()[0])
    assert pred == pytest.approx(2 / math.pi ** 3)
    rel = float(line.split("rel=")[1].split()[0])
    assert rel < 0.01


def test_boundary_weight_mismatch_exits_2(lifted_ball_file, capsys):
    rc = main(["boundary", "--spec", str(lifted_ball_file),
               "--target", "[[0,0],[1,0],[0,0]]",
               "--stratum", "S2", "--weight", "w"])
    assert rc == 2


def test_boundary_missing_weight_usage_error(lifted_ball_file):
    with pytest.raises(SystemExit) as e:
        main(["boundary", "--spec", str(lifted_ball_file),
              "--target", "[[0,0],[1,0],[0,0]]", "--stratum", "S2"])
    assert e.value.code == 2


def test_sample_writes_csv(disk_files, tmp_path):
    spec, _ = disk_files
    out = tmp_path / "pts.csv"
    rc = main(["sample", "--spec", str(spec), "--count", "25", "--seed", "5",
               "--out", str(out)])
    assert rc == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0].startswith("# acceptance_ratio=")
    assert lines[1] == "i,c0_re,c0_im"
    assert len(lines) == 27


def test_bad_spec_file_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    pts = tmp_path / "p.json"
    pts.write_text("[]")
    assert main(["eval", "--spec", str(bad), "--points", str(pts)]) == 2
    unknown = tmp_path / "unknown.json"
    unknown.write_text(json.dumps({"base": {"kind": "Polydisk", "n_star": 1,
                                            "m_passive": 0}, "weird": 1}))
    assert main(["eval", "--spec", str(unknown), "--points", str(pts)]) == 2
