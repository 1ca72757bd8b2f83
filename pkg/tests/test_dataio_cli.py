import io
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from woldgranger import FitConfig, ModelParams, SimulationConfig, ValidationError, fit, simulate
from woldgranger.cli import main
from woldgranger.dataio import (
    ParseError,
    SchemaError,
    UnsupportedVersionError,
    build_destination_processes,
    load_events,
    load_model,
    load_triples,
    save_events,
    save_model,
    save_triples,
)

from conftest import planted_model


def test_load_triples_examples():
    recs = load_triples(io.StringIO("# header\nalice bob 12.5\n\na,b,1e3\n"))
    assert recs[0][:3] == ("alice", "bob", 12.5)
    assert recs[1][:3] == ("a", "b", 1000.0)
    assert recs[1].line == 4
    with pytest.raises(ParseError, match="line 1: expected 3 fields"):
        load_triples(io.StringIO("a b\n"))
    with pytest.raises(ParseError, match="line 2"):
        load_triples(io.StringIO("a b 1\na b x\n"))
    with pytest.raises(ParseError):
        load_triples(io.StringIO("a b -3\n"))


label = st.text(alphabet="abcxyz019_", min_size=1, max_size=5)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(label, label, st.floats(0, 1e9, allow_nan=False)), max_size=20))
def test_triples_round_trip(records):
    buf = io.StringIO()
    save_triples(records, buf)
    loaded = load_triples(io.StringIO(buf.getvalue()))
    assert [r[:3] for r in loaded] == [(s, d, float(t)) for s, d, t in records]


def test_destination_examples():
    col, id_map, truth = build_destination_processes([("x", "y", 1), ("y", "x", 2)])
    assert col.K == 2 and id_map == {"x": 0, "y": 1}
    np.testing.assert_array_equal(truth.matrix, [[0, 1], [1, 0]])

    col, id_map, _ = build_destination_processes([("x", "y", 1), ("y", "x", 2), ("x", "z", 3)])
    assert "z" not in id_map and col.total_events == 2

    triples = [("x", "y", t) for t in range(5)] + [("y", "x", t) for t in range(3)]
    col, id_map, truth = build_destination_processes(triples, top_k=1)
    assert id_map == {"y": 0} and col.K == 1 and col.total_events == 5
    assert truth.matrix.shape == (1, 1)

    with pytest.raises(ValidationError):
        build_destination_processes([("x", "z", 1)])


def test_destination_full_top_k_is_identity(rng):
    names = list("abcdef")
    triples = [(names[s], names[d], float(t)) for (s, d), t in
               zip(rng.integers(0, 6, (200, 2)), rng.integers(0, 50, 200))]
    full = build_destination_processes(triples)
    capped = build_destination_processes(triples, top_k=full[0].K)
    assert full[1] == capped[1]
    assert full[0].times.tobytes() == capped[0].times.tobytes()
    np.testing.assert_array_equal(full[2].matrix, capped[2].matrix)
    for t in full[0].processes:
        assert np.all(np.diff(t) > 0)


def test_events_round_trip(tmp_path, rng):
    col = simulate(SimulationConfig(planted_model(3, 2, rng), 50.0, seed=1))
    path = tmp_path / "ev.txt"
    save_events(col, path)
    back, id_map = load_events(path)
    assert back.K == 3 and back.horizon == col.horizon
    assert back.times.tobytes() == col.times.tobytes()


def test_events_keep_silent_processes():
    col, _ = load_events(io.StringIO("# processes: 4\n# horizon: 9\n0 1.0\n2 3.0\n"))
    assert col.K == 4 and col.horizon == 9.0
    np.testing.assert_array_equal(col.sizes(), [1, 0, 1, 0])


def test_model_round_trip(tmp_path, rng):
    params = ModelParams(rng.dirichlet(np.ones(4), 4), rng.uniform(1, 2, 4), rng.random(4))
    path = tmp_path / "m.json"
    save_model(params, path, {"a": 0, "b": 1, "c": 2, "d": 3}, {"note": "x"})
    model = load_model(path)
    assert model.params.granger.tobytes() == params.granger.tobytes()
    assert model.params.beta.tobytes() == params.beta.tobytes()
    assert model.params.mu.tobytes() == params.mu.tobytes()
    assert model.id_map["c"] == 2 and model.metadata == {"note": "x"}


def test_fit_result_metadata(tmp_path, rng):
    col = simulate(SimulationConfig(planted_model(3, 2, rng), 60.0, seed=1))
    result = fit(col, FitConfig(iterations=3, seed=5))
    save_model(result, tmp_path / "m.json")
    meta = load_model(tmp_path / "m.json").metadata
    assert meta["iterations"] == 3 and meta["seed"] == 5
    assert meta["alpha_prior"] == pytest.approx(1 / 3) and meta["sampler_mode"] == "mh_fptree"


def _write(tmp_path, doc):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    return path


def test_model_load_errors(tmp_path):
    good = {"format_version": 1, "K": 2, "mu": [0.1, 0.1], "beta": [1, 1],
            "granger": [[0.5, 0.5], [0.9, 0.0]]}
    with pytest.raises(ValidationError, match="row 1"):
        load_model(_write(tmp_path, good))
    missing = {k: v for k, v in good.items() if k != "beta"}
    with pytest.raises(SchemaError, match="beta"):
        load_model(_write(tmp_path, missing))
    with pytest.raises(UnsupportedVersionError):
        load_model(_write(tmp_path, dict(good, format_version=7)))
    (tmp_path / "junk.json").write_text("{not json")
    with pytest.raises(SchemaError):
        load_model(tmp_path / "junk.json")


# --- command line ----------------------------------------------------------


def _lines(capsys):
    return [json.loads(line) for line in capsys.readouterr().out.splitlines()]


@pytest.fixture
def triples_file(tmp_path, rng):
    names = [f"n{i}" for i in range(5)]
    rows = [f"{names[s]} {names[d]} {float(t)!r}" for (s, d), t in
            zip(rng.integers(0, 5, (400, 2)), np.sort(rng.uniform(0, 100, 400)))]
    path = tmp_path / "triples.txt"
    path.write_text("\n".join(rows) + "\n")
    return path


def test_cli_fit_evaluate_loglik_diagnose(tmp_path, triples_file, capsys):
    model = tmp_path / "model.json"
    assert main(["fit", "--input", str(triples_file), "--iters", "5", "--output", str(model)]) == 0
    assert _lines(capsys)[0]["K"] == 5
    assert load_model(model).id_map == {f"n{i}": i for i in range(5)}

    assert main(["evaluate", "--model", str(model), "--ground-truth", str(triples_file),
                 "--metrics", "precision@2,kendall,relerr", "--null-model-seed", "3"]) == 0
    out = _lines(capsys)
    assert [(r["metric"], r["source"]) for r in out] == [
        ("precision@2", "model"), ("precision@2", "null"), ("kendall", "model"),
        ("kendall", "null"), ("relerr", "model"), ("relerr", "null")]

    assert main(["loglik", "--model", str(model), "--input", str(triples_file)]) == 0
    out = _lines(capsys)
    assert len(out) == 6 and 0 < out[-1]["N"] <= 400
    assert all(isinstance(r["loglik"], float) for r in out[:-1])
    assert main(["diagnose", "--input", str(triples_file)]) == 0
    assert "median_pearson" in _lines(capsys)[-1]


def test_cli_simulate_and_events_fit(tmp_path, rng, capsys):
    model = tmp_path / "m.json"
    save_model(planted_model(3, 2, rng), model)
    events = tmp_path / "ev.txt"
    assert main(["simulate", "--model", str(model), "--horizon", "80", "--seed", "4",
                 "--output", str(events)]) == 0
    record = _lines(capsys)[0]
    assert record["K"] == 3 and record["truncated"] is False
    assert main(["fit", "--input", str(events), "--format", "events", "--iters", "3",
                 "--sampler", "gibbs", "--alpha-prior", "0.5", "--mu-floor", "auto",
                 "--output", str(tmp_path / "fit.json")]) == 0
    assert load_model(tmp_path / "fit.json").metadata["alpha_prior"] == 0.5
    assert main(["simulate", "--model", str(model), "--horizon", "1000", "--max-events", "7",
                 "--output", str(events)]) == 0
    assert _lines(capsys)[-1]["truncated"] is True


def test_cli_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("a b\n")
    assert main(["fit", "--input", str(bad), "--output", str(tmp_path / "m.json")]) == 2
    assert "line 1" in capsys.readouterr().err
    assert main(["diagnose", "--input", str(tmp_path / "missing.txt")]) == 2

    zero = tmp_path / "zero.json"
    save_model(ModelParams([[1.0]], [1], [0.0]), zero)
    assert main(["simulate", "--model", str(zero), "--horizon", "5",
                 "--output", str(tmp_path / "o.txt")]) == 3

    truth = tmp_path / "truth.txt"
    truth.write_text("0.5 0.5\n0.5 0.5\n")
    ok = tmp_path / "ok.json"
    save_model(ModelParams(np.full((2, 2), 0.5), [1, 1], [0.1, 0.1]), ok)
    assert main(["evaluate", "--model", str(ok), "--ground-truth", str(truth),
                 "--truth-format", "matrix", "--metrics", "precision@9"]) == 3
    capsys.readouterr()
