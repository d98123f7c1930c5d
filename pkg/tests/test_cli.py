import json
import math

import numpy as np
import pytest

from delaystab.cli import main
from delaystab.io import SpecError, dump_spec, load_spec, to_json
from delaystab.registry import REGISTRY, builtin, random_system
from delaystab.registry import periodic_bounded_delay


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_examples_listing(capsys):
    code, out, _ = run(capsys, "examples")
    assert code == 0
    assert "ex6.3" in out
    assert "not UES in B^gamma for gamma<=0, (l^p,l^q)-stable for p<=q" in out
    for name in REGISTRY:
        assert name in out


def test_simulate_impulse_rows(capsys):
    code, out, _ = run(capsys, "simulate", "--builtin", "ex6.3", "--forcing", "impulse", "-N", "3")
    assert code == 0
    rows = [line.split(",") for line in out.strip().splitlines()[1:]]
    assert [(int(r[0]), float(r[1])) for r in rows[1:]] == [(1, 1.0), (2, 0.5), (3, 0.25)]


def test_simulate_with_prehistory_and_json_forcing(capsys, tmp_path):
    spec = tmp_path / "s.json"
    spec.write_text(json.dumps({"dimension": 2, "kernel": {"type": "builtin", "name": "ex6.4"}}))
    code, out, _ = run(capsys, "simulate", "--spec", str(spec), "--phi", "0=1,2", "--forcing", "[[1,0],[0,1]]", "-N", "2")
    assert code == 0
    rows = out.strip().splitlines()
    assert rows[-1].split(",")[1:] == ["4", "7"]  # (n+1) phi + partial sums of f


@pytest.mark.parametrize("doc", [
    "{not json",
    json.dumps({"dimension": 0, "kernel": {"type": "table"}}),
    json.dumps({"dimension": 1, "kernel": {"type": "builtin", "name": "ex9.9"}}),
    json.dumps({"dimension": 1, "kernel": {"type": "table", "entries": [{"n": 0, "k": 0, "matrix": [[1, 2]]}]}}),
    json.dumps({"dimension": 1, "kernel": {"type": "bounded_delay", "order": 1}, "tail_certificate": {"C": 1}}),
    json.dumps({"dimension": 1, "kernel": {"type": "spline"}}),
])
def test_malformed_spec_exits_2(capsys, tmp_path, doc):
    spec = tmp_path / "bad.json"
    spec.write_text(doc)
    code, out, err = run(capsys, "gain", "--spec", str(spec), "-N", "8")
    assert code == 2 and out == "" and err.startswith("error:")


def test_missing_system_exits_2(capsys):
    assert run(capsys, "gain", "-N", "8")[0] == 2


def test_gain_json_is_deterministic(capsys):
    a = run(capsys, "gain", "--builtin", "ex6.1", "--param", "a=harmonic", "-p", "1", "-q", "2", "-N", "40", "--seed", "3")[1]
    b = run(capsys, "gain", "--builtin", "ex6.1", "--param", "a=harmonic", "-p", "1", "-q", "2", "-N", "40", "--seed", "3",
            "--workers", "2")[1]
    assert a == b
    doc = json.loads(a)
    assert doc["p"] == 1.0 and doc["q"] == 2.0


def test_profile_and_classify_outputs(capsys, tmp_path):
    out_csv = tmp_path / "p.csv"
    code, _, _ = run(capsys, "profile", "--builtin", "ex6.4", "--gamma", "0", "-N", "20", "-J", "4",
                     "--max-lag", "5", "--out", str(out_csv))
    assert code == 0
    lines = out_csv.read_text().splitlines()
    assert lines[0] == "s,rho,rho_doubled"
    assert lines[1].startswith("1,2,")
    code, out, _ = run(capsys, "classify", "--builtin", "ex6.3", "--gamma", "-1", "-N", "60", "-J", "20")
    doc = json.loads(out)
    assert code == 0 and doc["fading"]["verdict"] == "HOLDS"
    assert any("gamma <= 0" in t for t in doc["theorem_check"])


def test_identify_output(capsys):
    code, out, _ = run(capsys, "identify", "--builtin", "sec7", "--n0", "3", "--k-max", "1")
    doc = json.loads(out)
    assert code == 0
    assert doc["kernel"][0]["matrix"][0][0] == pytest.approx(math.exp(-3) / 2, rel=1e-15)
    assert doc["kernel"][1]["n"] == 4


def test_decay_rate_spec_kernel():
    s = load_spec({"dimension": 1, "kernel": {"type": "builtin", "name": "ex6.5", "params": {"delta": 1}}})
    for n in range(1, 8):
        assert s.L(n, n)[0, 0] == pytest.approx(n * math.exp(-n), rel=1e-15)
        assert s.L(n, n - 1)[0, 0] == 0.0


def test_single_entry_table():
    s = load_spec({"dimension": 1, "kernel": {"type": "table", "entries": [{"n": 0, "k": 0, "matrix": [[1]]}]}})
    assert s.order == 1
    assert s.L(0, 0)[0, 0] == 1.0
    assert not s.L(1, 0).any() and not s.L(0, 3).any()


def test_bounded_delay_spec_with_certificate():
    doc = {
        "dimension": 1,
        "kernel": {"type": "bounded_delay", "order": 2, "entries": [{"k": 0, "matrix": [[0.5]]}, {"k": 1, "matrix": [[0.25]]}]},
        "tail_certificate": {"C": 1.0, "rho": 0.5},
    }
    s = load_spec(doc)
    assert s.L(9, 1)[0, 0] == 0.25
    assert dump_spec(s) == dict(doc, tail_certificate={"C": 1.0, "rho": 0.5, "k0": 0})
    bad = dict(doc, tail_certificate={"C": 0.1, "rho": 0.5})
    with pytest.raises(SpecError):
        load_spec(bad)


@pytest.mark.parametrize("name,params", [("ex6.1", {"a": "power:0.5"}), ("ex6.5", {"delta": 0.5}), ("sec7", {}),
                                         ("ex6.2", {}), ("ex6.4p", {"a": "geometric:0.25"})])
def test_builtin_round_trip(name, params):
    s = builtin(name, **params)
    s2 = load_spec(json.loads(json.dumps(dump_spec(s))))
    assert np.array_equal(s.table(30, 30), s2.table(30, 30))


def test_random_bounded_delay_round_trip():
    rng = np.random.default_rng(21)
    for _ in range(5):
        s = random_system(rng, period=3)
        s2 = load_spec(to_json(dump_spec(s)))
        assert np.array_equal(s.table(20, 20), s2.table(20, 20))


def test_periodic_source_serializes():
    C = np.arange(8.0).reshape(2, 1, 2, 2)
    s = periodic_bounded_delay(C)
    assert load_spec(dump_spec(s)).L(3, 0).tolist() == C[1, 0].tolist()


def test_json_non_finite_values():
    assert json.loads(to_json({"x": math.inf, "y": [1.5, -math.inf]})) == {"x": "inf", "y": [1.5, "-inf"]}
    assert to_json({"b": 1, "a": 0.1}) == '{\n  "a": 0.1,\n  "b": 1\n}\n'
