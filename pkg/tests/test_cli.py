import json

import numpy as np
import pytest

from qswlab.cli import main

ADMISSIBLE = {
    "nodes": ["a", "b", "c"],
    "coherent": [{"i": "a", "j": "b", "re": 1.0}],
    "incoherent": [
        {"from": "a", "to": "c", "rate": 0.5},
        {"from": "b", "to": "c", "rate": 0.5},
        {"from": "c", "to": "a", "rate": 0.2},
        {"from": "c", "to": "b", "rate": 0.3},
    ],
    "initial": [{"node": "a", "re": 1.0}],
}

MISMATCHED = {
    "nodes": ["a", "b", "c"],
    "coherent": [{"i": "a", "j": "b", "re": 1.0}],
    "incoherent": [
        {"from": "a", "to": "c", "rate": 0.5},
        {"from": "b", "to": "c", "rate": 0.475},
    ],
    "initial": [{"node": "a", "re": 1.0}],
}


@pytest.fixture
def graph_file(tmp_path):
    path = tmp_path / "graph.json"
    path.write_text(json.dumps(ADMISSIBLE))
    return str(path)


@pytest.fixture
def mismatched_file(tmp_path):
    path = tmp_path / "mismatched.json"
    path.write_text(json.dumps(MISMATCHED))
    return str(path)


def read_csv(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# manifest: ")
    manifest = json.loads(lines[0][len("# manifest: "):])
    header = lines[1].split(",")
    rows = [line.split(",") for line in lines[2:]]
    return manifest, header, rows


def test_validate_admissible(graph_file, capsys):
    assert main(["validate", graph_file]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["admissible"] is True
    assert {"command", "graph_sha256", "version", "wall_seconds"} <= set(
        doc["manifest"]
    )


def test_validate_inadmissible_exit_2(mismatched_file, capsys):
    assert main(["validate", mismatched_file]) == 2
    doc = json.loads(capsys.readouterr().out)
    assert doc["admissible"] is False
    assert doc["violations"][0]["i"] == "a"


def test_validate_parse_error_exit_1(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"nodes": ["a"], "bogus": 1}')
    assert main(["validate", str(bad)]) == 1
    assert "unknown key" in capsys.readouterr().err


def test_missing_file_exit_1(tmp_path, capsys):
    assert main(["validate", str(tmp_path / "nope.json")]) == 1


def test_usage_error_exit_1(graph_file, capsys):
    assert main(["run", graph_file, "--engine", "bogus", "--t-final", "1"]) == 1
    assert main(["frobnicate"]) == 1


def test_run_master_csv(graph_file, tmp_path):
    out = tmp_path / "pops.csv"
    rc = main([
        "run", graph_file, "--engine", "master",
        "--t-final", "1", "--samples", "5", "--out", str(out),
    ])
    assert rc == 0
    manifest, header, rows = read_csv(out)
    assert manifest["engine"] == "master"
    assert manifest["samples"] == 5
    assert header == ["t", "p_a", "p_b", "p_c"]
    assert rows[0] == ["0", "1", "0", "0"]
    assert len(rows) == 5
    assert float(rows[-1][0]) == 1.0
    # 12 significant digits
    assert all(len(cell.replace("-", "").replace(".", "").lstrip("0")) <= 13
               for row in rows for cell in row)
    total = sum(float(x) for x in rows[-1][1:])
    assert total == pytest.approx(1.0, abs=1e-9)


def test_run_trajectories_csv_and_log(graph_file, tmp_path):
    out = tmp_path / "ens.csv"
    log = tmp_path / "jumps.jsonl"
    rc = main([
        "run", graph_file, "--engine", "trajectories",
        "--t-final", "2", "--samples", "5", "--num-traj", "40",
        "--seed", "7", "--out", str(out), "--log-trajectories", str(log),
    ])
    assert rc == 0
    manifest, header, rows = read_csv(out)
    assert manifest["seed"] == 7
    assert manifest["num_traj"] == 40
    assert header == ["t", "p_a", "p_b", "p_c", "se_a", "se_b", "se_c"]
    entries = [json.loads(line) for line in log.read_text().splitlines()]
    assert [e["idx"] for e in entries] == list(range(40))
    for e in entries:
        for t, src, dst in e["jumps"]:
            assert 0.0 < t <= 2.0
            assert src in ADMISSIBLE["nodes"] and dst in ADMISSIBLE["nodes"]


def test_run_qtqc_inadmissible_exit_2(mismatched_file, capsys):
    rc = main([
        "run", mismatched_file, "--engine", "qtqc",
        "--t-final", "1", "--num-traj", "10",
    ])
    assert rc == 2
    assert "equal-rate" in capsys.readouterr().err


def test_run_qtqc_trotter_fallback(mismatched_file, tmp_path):
    out = tmp_path / "approx.csv"
    rc = main([
        "run", mismatched_file, "--engine", "qtqc", "--t-final", "1",
        "--samples", "3", "--num-traj", "20", "--seed", "1",
        "--trotter-threshold", "0.1", "--out", str(out),
    ])
    assert rc == 0
    manifest, _, _ = read_csv(out)
    assert manifest["approximate"] is True
    # threshold below the actual mismatch still refuses
    rc = main([
        "run", mismatched_file, "--engine", "qtqc", "--t-final", "1",
        "--num-traj", "20", "--trotter-threshold", "0.01",
    ])
    assert rc == 2


def test_run_start_node_overrides_initial(graph_file, tmp_path):
    out = tmp_path / "b.csv"
    rc = main([
        "run", graph_file, "--engine", "master", "--t-final", "0.5",
        "--samples", "2", "--start-node", "b", "--out", str(out),
    ])
    assert rc == 0
    _, _, rows = read_csv(out)
    assert rows[0] == ["0", "0", "1", "0"]
    assert main([
        "run", graph_file, "--engine", "master", "--t-final", "0.5",
        "--start-node", "zzz",
    ]) == 1


def test_run_requires_some_initial_state(tmp_path, capsys):
    doc = {k: v for k, v in ADMISSIBLE.items() if k != "initial"}
    path = tmp_path / "noinit.json"
    path.write_text(json.dumps(doc))
    assert main(["run", str(path), "--engine", "master", "--t-final", "1"]) == 1
    assert "--start-node" in capsys.readouterr().err


def test_dump_operators(graph_file, tmp_path):
    prefix = str(tmp_path / "ops")
    rc = main([
        "run", graph_file, "--engine", "master", "--t-final", "0.1",
        "--samples", "2", "--out", str(tmp_path / "x.csv"),
        "--dump-operators", prefix,
    ])
    assert rc == 0
    h_rows = (tmp_path / "ops_h.csv").read_text().splitlines()
    cells = [cell.split() for cell in h_rows[0].split(",")]
    assert [float(c[0]) for c in cells] == [0.0, 1.0, 0.0]
    k_rows = (tmp_path / "ops_k.csv").read_text().splitlines()
    diag = [float(row.split(",")[i].split()[0]) for i, row in enumerate(k_rows)]
    assert diag == [0.25, 0.25, 0.25]


def test_seed_env_fallback(graph_file, tmp_path, monkeypatch):
    args = [
        "run", graph_file, "--engine", "trajectories", "--t-final", "1",
        "--samples", "3", "--num-traj", "25",
    ]
    out1, out2 = tmp_path / "env.csv", tmp_path / "flag.csv"
    monkeypatch.setenv("QSWLAB_SEED", "99")
    assert main(args + ["--out", str(out1)]) == 0
    monkeypatch.delenv("QSWLAB_SEED")
    assert main(args + ["--seed", "99", "--out", str(out2)]) == 0
    m1, h1, r1 = read_csv(out1)
    m2, h2, r2 = read_csv(out2)
    assert m1["seed"] == m2["seed"] == 99
    assert (h1, r1) == (h2, r2)
    monkeypatch.setenv("QSWLAB_SEED", "not-a-number")
    assert main(args + ["--out", str(out1)]) == 1


def test_compare_passes_on_admissible_graph(graph_file, tmp_path):
    out = tmp_path / "cmp.json"
    rc = main([
        "compare", graph_file, "--t-final", "1.5", "--samples", "5",
        "--num-traj", "800", "--seed", "13", "--out", str(out),
    ])
    doc = json.loads(out.read_text())
    assert rc == 0
    assert doc["overall_pass"] is True
    assert doc["engines"]["trajectories"]["pass"] is True
    assert doc["engines"]["qtqc"]["pass"] is True
    assert doc["qtqc_vs_trajectories"]["max_sigma"] < 6.0
    assert doc["tolerance"] == pytest.approx(4 / np.sqrt(800))


def test_compare_skips_qtqc_when_inadmissible(mismatched_file, tmp_path):
    out = tmp_path / "cmp2.json"
    rc = main([
        "compare", mismatched_file, "--t-final", "1", "--samples", "4",
        "--num-traj", "600", "--seed", "3", "--out", str(out),
    ])
    doc = json.loads(out.read_text())
    assert "qtqc" not in doc["engines"]
    assert "qtqc_skipped" in doc
    assert rc == 0 and doc["overall_pass"] is True


def test_resources_json(graph_file, capsys):
    assert main(["resources", graph_file, "--t-final", "10"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["worst_case_measurements"] == pytest.approx(
        10 / (np.log(2) / 0.5)
    )
    subs = {tuple(s["nodes"]): s["lambda"] for s in doc["subgraphs"]}
    assert subs == {("a", "b"): 0.5, ("c",): 0.5}


def test_resources_inadmissible_exit_2(mismatched_file):
    assert main(["resources", mismatched_file, "--t-final", "10"]) == 2


def test_ancilla_json(graph_file, capsys):
    assert main(["ancilla", graph_file, "--t-final", "2"]) == 0
    doc = json.loads(capsys.readouterr().out)
    # resting on node a: success = exp(-lambda t) = exp(-1)
    assert doc["success_probability"] == pytest.approx(np.exp(-1.0), abs=1e-10)
    assert doc["post_state"][0]["re"] == pytest.approx(1.0, abs=1e-10)
    assert doc["decay_rates"] == [0.25, 0.25, 0.25]


def test_ancilla_oversize_exit_1(tmp_path):
    doc = {"nodes": [f"n{k}" for k in range(65)]}
    path = tmp_path / "big.json"
    path.write_text(json.dumps(doc))
    assert main(["ancilla", str(path), "--t-final", "1", "--start-node", "n0"]) == 1


def test_jobs_do_not_change_payload(graph_file, tmp_path):
    outs = []
    for jobs in ("1", "2"):
        out = tmp_path / f"jobs{jobs}.csv"
        rc = main([
            "run", graph_file, "--engine", "trajectories", "--t-final", "1",
            "--samples", "4", "--num-traj", "60", "--seed", "11",
            "--jobs", jobs, "--out", str(out),
        ])
        assert rc == 0
        outs.append(read_csv(out))
    (m1, h1, r1), (m2, h2, r2) = outs
    assert (h1, r1) == (h2, r2)
    m1.pop("wall_seconds"), m2.pop("wall_seconds")
    assert m1 == m2
