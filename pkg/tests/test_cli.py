import json

import broken_descriptors
import sample_catalog as sc
from nsscale.cli import main


def write_json(path, data):
    path.write_text(json.dumps(data))
    return str(path)


def catalog_file(tmp_path, documents=None):
    return write_json(tmp_path / "catalog.json",
                      documents or sc.sample_documents())


def scenario_file(tmp_path, scenario=None):
    return write_json(tmp_path / "scenario.json",
                      scenario or sc.sample_scenario(
                          workload=sc.jump_workload()))


def test_validate_clean_catalog(tmp_path, capsys):
    assert main(["validate", catalog_file(tmp_path)]) == 0
    assert capsys.readouterr().out == ""


def test_validate_broken_catalog(tmp_path, capsys):
    _, documents, kind, path, message = broken_descriptors.broken_corpus()[0]
    assert main(["validate", catalog_file(tmp_path, documents)]) == 1
    out = capsys.readouterr().out.strip().splitlines()
    assert len(out) == 1
    assert kind in out[0] and path in out[0]


def test_validate_missing_path_is_io_error(tmp_path, capsys):
    assert main(["validate", str(tmp_path / "nope.json")]) == 2


def test_validate_malformed_json_is_io_error(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert main(["validate", str(bad)]) == 2


def test_run_writes_trace_and_state(tmp_path, capsys):
    trace = tmp_path / "trace.txt"
    state = tmp_path / "state.json"
    code = main(["run", scenario_file(tmp_path),
                 "--trace", str(trace), "--state", str(state)])
    assert code == 0
    out = capsys.readouterr().out
    assert "status: completed" in out
    assert "final ns-il: level-3" in out
    assert trace.read_text().splitlines()
    final = json.loads(state.read_text())
    assert final["ns_info"]["current_ns_il"] == "level-3"


def test_run_is_reproducible(tmp_path):
    scenario = scenario_file(tmp_path)
    t1, t2 = tmp_path / "a.txt", tmp_path / "b.txt"
    assert main(["run", scenario, "--seed", "7", "--trace", str(t1)]) == 0
    assert main(["run", scenario, "--seed", "7", "--trace", str(t2)]) == 0
    assert t1.read_bytes() == t2.read_bytes()


def test_run_no_reservation_flag(tmp_path):
    trace = tmp_path / "trace.txt"
    assert main(["run", scenario_file(tmp_path), "--no-reservation",
                 "--trace", str(trace)]) == 0
    assert "Reserve" not in trace.read_text()


def test_run_invalid_scenario_exits_one(tmp_path, capsys):
    scenario = sc.sample_scenario()
    scenario["initial_instance"]["ns_il_ref"] = "level-99"
    assert main(["run", scenario_file(tmp_path, scenario)]) == 1
    assert "level-99" in capsys.readouterr().out


def test_run_operation_failure_exits_three(tmp_path, capsys):
    scenario = sc.sample_scenario(workload=sc.jump_workload(), topology={
        "vims": [{"id": "vim-1"}],
        "pops": [{"id": "pop-1", "vim_ref": "vim-1", "zones": [
            {"id": "zone-a", "total": {"vcpu": 7, "memory": 40,
                                       "storage": 60, "bandwidth": 1000}},
            {"id": "zone-b", "total": {"vcpu": 7, "memory": 40,
                                       "storage": 60, "bandwidth": 1000}},
        ]}]})
    assert main(["run", scenario_file(tmp_path, scenario)]) == 3
    assert "failure" in capsys.readouterr().out


def test_graph_emits_all_edges(tmp_path, capsys):
    out_doc = tmp_path / "graph.json"
    code = main(["graph", catalog_file(tmp_path), "--flavor", "df-1",
                 "--out", str(out_doc)])
    assert code == 0
    lines = [l for l in capsys.readouterr().out.splitlines() if "->" in l]
    assert len(lines) == 12  # 4 levels, every ordered pair
    doc = json.loads(out_doc.read_text())
    assert doc["nodes"] == ["level-1", "level-2", "level-3", "level-4"]
    edges = {(e["from"], e["to"]): e["classification"] for e in doc["edges"]}
    assert edges[("level-3", "level-4")] == "add-vnf"
    assert edges[("level-4", "level-3")] == "remove-vnf"
    assert edges[("level-1", "level-2")] == "vnf-scaling"


def test_graph_single_level_flavor(tmp_path, capsys):
    documents = sc.sample_documents()
    nsd = [d for d in documents if d["kind"] == "nsd"][0]
    nsd["flavors"][0]["ns_ils"] = nsd["flavors"][0]["ns_ils"][:1]
    out_doc = tmp_path / "graph.json"
    assert main(["graph", catalog_file(tmp_path, documents),
                 "--flavor", "df-1", "--out", str(out_doc)]) == 0
    doc = json.loads(out_doc.read_text())
    assert len(doc["nodes"]) == 1 and doc["edges"] == []


def test_graph_unknown_flavor(tmp_path, capsys):
    assert main(["graph", catalog_file(tmp_path), "--flavor", "df-9"]) == 1


def test_graph_output_is_byte_stable(tmp_path):
    catalog = catalog_file(tmp_path)
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    main(["graph", catalog, "--flavor", "df-1", "--out", str(a)])
    main(["graph", catalog, "--flavor", "df-1", "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_explain_at_decision_tick(tmp_path, capsys):
    assert main(["explain", scenario_file(tmp_path), "--at", "10"]) == 0
    out = capsys.readouterr().out
    assert "action: scale" in out
    assert "chosen: level-3" in out
    assert "candidate level-3" in out and "candidate level-4" in out
    assert "rule r-out: violated" in out


def test_explain_quiet_tick(tmp_path, capsys):
    assert main(["explain", scenario_file(tmp_path), "--at", "5"]) == 0
    assert "action: none" in capsys.readouterr().out


def test_explain_beyond_horizon(tmp_path, capsys):
    assert main(["explain", scenario_file(tmp_path), "--at", "9999"]) == 1
    assert "horizon" in capsys.readouterr().out
