import csv
import hashlib
import json
import re

import pytest

from planar_kmedian import instance as inst_io
from planar_kmedian.cli import main
from planar_kmedian.generate import GeneratorError, GeneratorSpec, generate
from planar_kmedian.render import RenderError, render_instance, render_svg
from planar_kmedian.suite import run_suite

from conftest import small_instance


def run(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def write_instance(path, **kw):
    inst_io.dump(small_instance(**kw), path)
    return str(path)


def test_generate_small_grid(capsys):
    code, out, _ = run(["generate", "--rows", "3", "--cols", "3", "--seed", "0"], capsys)
    data = json.loads(out)
    inst = inst_io.from_json(data)
    assert code == 0
    assert inst.graph.n == 9 and inst.graph.m == 12


def test_generate_is_deterministic(tmp_path, capsys):
    args = ["generate", "--kind", "grid-with-deletions", "--rows", "6", "--cols", "6",
            "--deletion-fraction", "0.2", "--client-fraction", "0.3", "--k", "2", "--seed", "9"]
    run(args + ["--out", str(tmp_path / "a.json")], capsys)
    run(args + ["--out", str(tmp_path / "b.json")], capsys)
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_client_fraction_fixture():
    inst = generate(GeneratorSpec(rows=8, cols=8, client_fraction=0.2, seed=1))
    # Binomial(64, 0.2): mean 12.8, sd 3.2
    assert 3 <= len(inst.clients) <= 23
    assert len(inst.clients) == 13  # frozen


def test_deletions_keep_graph_connected():
    inst = generate(GeneratorSpec(kind="grid-with-deletions", rows=7, cols=7,
                                  deletion_fraction=0.3, seed=3))
    assert len(inst.graph.components()) == 1
    assert inst.graph.m < 84


def test_generator_errors():
    with pytest.raises(GeneratorError):
        generate(GeneratorSpec(kind="hexagons"))
    with pytest.raises(GeneratorError):
        generate(GeneratorSpec(rows=1, cols=1))


def test_instance_round_trip(tmp_path):
    inst = small_instance(seed=8, open_cost=2.5)
    inst_io.dump(inst, tmp_path / "i.json")
    back = inst_io.load(tmp_path / "i.json")
    assert back == inst and back.digest() == inst.digest()
    weighted = inst.with_weights({c: 2.0 for c in inst.clients})
    assert inst_io.from_json(inst_io.to_json(weighted)) == weighted


@pytest.mark.parametrize("cmd", ["oracle", "solve-fpt", "solve-bicriteria"])
def test_solver_commands(tmp_path, capsys, cmd):
    path = write_instance(tmp_path / "i.json", seed=2, k=2)
    out = tmp_path / "r.json"
    code, _, _ = run([cmd, "--input", path, "--epsilon", "0.25", "--out", str(out)], capsys)
    assert code == 0
    data = json.loads(out.read_text())
    assert {"open", "size", "connection_cost", "total_cost", "stats", "timings"} <= set(data)
    assert data["size"] == len(data["open"])
    assert "timings" not in data["stats"]


def test_solver_output_is_deterministic(tmp_path, capsys):
    path = write_instance(tmp_path / "i.json", seed=4, rows=7, cols=7, clients=10,
                          facilities=14, k=3)
    outs = []
    for _ in range(2):
        _, out, _ = run(["solve-bicriteria", "--input", path, "--seed", "1"], capsys)
        data = json.loads(out)
        data.pop("timings")
        outs.append(json.dumps(data, sort_keys=True))
    assert outs[0] == outs[1]


def test_ufl_command(tmp_path, capsys):
    path = write_instance(tmp_path / "i.json", seed=1, facilities=6)
    code, _, err = run(["solve-ufl", "--input", path], capsys)
    assert code == 2 and "opening cost" in err
    code, out, _ = run(["solve-ufl", "--input", path, "--open-cost", "3", "--reuse-coreset"], capsys)
    data = json.loads(out)
    assert code == 0
    assert data["total_cost"] == pytest.approx(data["connection_cost"] + 3 * data["size"])


def test_coreset_command(tmp_path, capsys):
    path = write_instance(tmp_path / "i.json", seed=1, rows=6, cols=6, clients=8, facilities=12)
    code, out, _ = run(["coreset-facilities", "--input", path, "--coreset", "passthrough"], capsys)
    data = json.loads(out)
    assert code == 0
    assert data["size"] == len(data["F0"]) <= 12
    assert data["support"] == 8


def test_invalid_inputs_exit_two(tmp_path, capsys):
    assert run(["oracle", "--input", str(tmp_path / "missing.json")], capsys)[0] == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(["oracle", "--input", str(bad)], capsys)[0] == 2
    path = write_instance(tmp_path / "i.json")
    assert run(["solve-fpt", "--input", path, "--epsilon", "0"], capsys)[0] == 2
    assert run(["run-suite", "--solvers", "magic"], capsys)[0] == 2
    with pytest.raises(SystemExit) as exc:
        main(["solve-fpt"])
    assert exc.value.code == 2


def test_budget_exceeded_exits_one(tmp_path, capsys):
    path = write_instance(tmp_path / "i.json", facilities=20, k=3)
    code, _, err = run(["oracle", "--input", path, "--budget", "5"], capsys)
    assert code == 1 and "budget" in err


def test_empty_suite(capsys, tmp_path):
    code, out, _ = run(["run-suite", "--corpus", str(tmp_path)], capsys)
    assert code == 0 and json.loads(out) == []


def test_suite_single_oracle_row(tmp_path, capsys):
    write_instance(tmp_path / "a.json")
    jpath, cpath = tmp_path / "out.json", tmp_path / "out.csv"
    code, _, _ = run(["run-suite", "--corpus", str(tmp_path), "--solvers", "oracle",
                      "--out-json", str(jpath), "--out-csv", str(cpath)], capsys)
    assert code == 0
    rows = list(csv.DictReader(cpath.open()))
    assert len(rows) == 1 and float(rows[0]["ratio"]) == 1.0
    assert json.loads(jpath.read_text())[0]["status"] == "ok"


def test_suite_grid_and_failures(tmp_path):
    write_instance(tmp_path / "a.json", seed=1, open_cost=2.0)
    (tmp_path / "broken.json").write_text("[]")
    reports = run_suite(sorted(tmp_path.glob("*.json")), ["oracle", "fpt", "ufl"], [0.25, 0.5])
    assert len(reports) == 2 * 3 * 2
    assert {r.status for r in reports if r.instance == "broken"} == {"error"}
    good = [r for r in reports if r.instance == "a"]
    assert all(r.status == "ok" and r.ratio >= 1.0 - 1e-12 for r in good)


def test_render_structure(tmp_path):
    inst = small_instance(seed=3, rows=5, cols=5, clients=6, facilities=6, k=2)
    svg = render_instance(inst, open_facilities=inst.facilities[:2], highlight=0)
    n_diamonds = 3 * 6 - 6
    assert len(re.findall(r'class="spoke"', svg)) == 4 * n_diamonds
    assert len(re.findall(r'class="facility open"', svg)) == 2
    assert svg.count('class="diamond-highlight"') == 1
    assert svg == render_instance(inst, open_facilities=inst.facilities[:2], highlight=0)


def test_render_hash_is_stable():
    inst = generate(GeneratorSpec(rows=3, cols=3, clients=3, facilities=2, seed=0))
    digest = hashlib.sha256(render_instance(inst).encode()).hexdigest()
    assert digest == hashlib.sha256(render_instance(inst).encode()).hexdigest()
    assert len(digest) == 64


def test_render_needs_coordinates():
    from planar_kmedian import embed
    g = embed.build(3, [(0, 1, 1), (1, 2, 1), (2, 0, 1)], rotation={0: [0, 2], 1: [1, 0], 2: [2, 1]})
    with pytest.raises(RenderError):
        render_svg(g)


def test_render_command(tmp_path, capsys):
    path = write_instance(tmp_path / "i.json", seed=2, k=2)
    sol = tmp_path / "s.json"
    run(["oracle", "--input", path, "--out", str(sol)], capsys)
    out = tmp_path / "pic.svg"
    code, _, _ = run(["render", "--input", path, "--out", str(out), "--solution", str(sol)], capsys)
    opened = json.loads(sol.read_text())["open"]
    assert code == 0
    assert out.read_text().count('class="facility open"') == len(opened)
