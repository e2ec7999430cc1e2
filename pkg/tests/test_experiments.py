import json

import pytest

from batchcode.experiments import (
    FIELDNAMES,
    PRESETS,
    ConfigError,
    expand_policies,
    load_config,
    parse_config,
    preset,
    records_from_csv,
    records_to_csv,
    records_to_json,
    run_config,
    run_sweep,
)
from batchcode.optimizer import feasible_batches, feasible_k
from batchcode.simulator import SystemSpec


def base_doc(**overrides):
    doc = {
        "scenario_id": "t",
        "system": {"n": 6, "j": 12},
        "model": {"type": "shifted_exponential", "delta": 1.0, "w": 1.0},
        "policies": [{"k": 3, "b": 2}],
        "estimators": ["quadrature"],
        "sim": {"samples": 2000, "seed": 9},
    }
    doc.update(overrides)
    return doc


def test_deterministic_bimodal_record():
    cfg = parse_config(base_doc(
        system={"n": 10, "j": 60},
        model={"type": "bimodal", "t_fast": 2.0, "t_slow": 7.0, "eps": 0.0},
        policies=[{"k": 5, "b": 3}],
        estimators=["monte_carlo"],
    ))
    (rec,) = run_sweep(cfg)
    assert rec.mean == 12 * 2.0 and rec.std_err == 0.0
    assert (rec.k, rec.b, rec.g, rec.seed, rec.samples) == (5, 3, 4, 9, 2000)
    assert json.loads(rec.model_params) == {"t_fast": 2.0, "t_slow": 7.0, "eps": 0.0}


def test_all_feasible_expansion():
    spec = SystemSpec(10, 60)
    pols = expand_policies(spec, {"k": "all_feasible", "b": "all_feasible"})
    assert len(pols) == sum(len(feasible_batches(60 // k)) for k in feasible_k(spec)) == 44
    assert {p.k for p in pols} == {1, 2, 3, 4, 5, 6, 10}
    assert [p.b for p in expand_policies(spec, {"k": [4]})] == [1, 3, 5, 15]


@pytest.mark.parametrize(
    "overrides,path",
    [
        ({"model": {"type": "bimodal", "t_fast": 1, "t_slow": 2, "eps": 1.5}}, "model.eps"),
        ({"model": {"type": "shifted_exponential", "delta": -1, "w": 1}}, "model.delta"),
        ({"system": {"n": 6, "j": 12, "m": 1}}, "system.m"),
        ({"bogus": 1}, "bogus"),
        ({"sim": {"samples": 0}}, "sim.samples"),
        ({"policies": [{"k": 5, "b": 1}]}, "policies[0]"),
        ({"policies": [{"k": 3}]}, "policies[0].b"),
        ({"policies": {"k": [7]}}, "policies.k"),
        ({"policies": {"k": [3], "b": [3]}}, "policies.b"),
        ({"estimators": ["magic"]}, "estimators[0]"),
        ({"output": {"format": "xml"}}, "output.format"),
    ],
)
def test_config_errors_name_path(overrides, path):
    with pytest.raises(ConfigError) as info:
        parse_config(base_doc(**overrides))
    assert info.value.path == path
    assert str(info.value).startswith(path)


def test_missing_section():
    doc = base_doc()
    del doc["model"]
    with pytest.raises(ConfigError, match="^model"):
        parse_config(doc)


def test_inapplicable_cells_skipped(caplog):
    cfg = parse_config(base_doc(policies={"k": [6], "b": [1, 2]}, estimators=["asymptotic", "quadrature", "exact"]))
    recs = run_sweep(cfg)
    assert [(r.b, r.estimator) for r in recs] == [(1, "quadrature"), (1, "exact"), (2, "quadrature")]
    assert "skipping" in caplog.text


def test_csv_roundtrip():
    cfg = parse_config(base_doc(policies={"k": [2, 3]}, estimators=["quadrature", "monte_carlo"]))
    recs = run_sweep(cfg)
    text = records_to_csv(recs)
    assert text.splitlines()[0] == ",".join(FIELDNAMES)
    assert records_from_csv(text) == recs
    assert json.loads(records_to_json(recs))[0]["seed"] is None


def test_byte_identical_outputs(tmp_path):
    doc = base_doc(policies={"k": "all_feasible", "b": [1]}, estimators=["monte_carlo", "quadrature"])
    for i in (1, 2):
        (tmp_path / f"c{i}.json").write_text(json.dumps(doc))
        run_config(tmp_path / f"c{i}.json", out=str(tmp_path / f"o{i}.csv"), workers=i)
    assert (tmp_path / "o1.csv").read_bytes() == (tmp_path / "o2.csv").read_bytes()
    run_config(tmp_path / "c1.json", out=str(tmp_path / "o.json"), fmt="json")
    assert len(json.loads((tmp_path / "o.json").read_text())) == 2 * len(feasible_k(SystemSpec(6, 12)))


def test_load_config_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(bad)
    good = tmp_path / "named.json"
    doc = base_doc()
    del doc["scenario_id"]
    good.write_text(json.dumps(doc))
    assert load_config(good).scenario_id == "named"


class TestPresets:
    def test_fig2c(self):
        res = preset("fig2c")
        assert res.verdict == "b* = 1 at k=7" and res.matches
        assert {r.b for r in res.records} == {1, 2, 4, 8}

    def test_fig2a(self):
        res = preset("fig2a")
        assert res.verdict == "b* = 1 at k=4; b* = 14 at k=8" and res.matches

    def test_fig3a_mismatch_is_flagged(self):
        res = preset("fig3a")
        assert res.verdict == "(k,b)* = (4,1)"
        assert res.expected == "(k,b)* = (1,1)"
        assert not res.matches

    def test_fig3b_note(self):
        res = preset("fig3b")
        assert res.verdict == "(k,b)* = (10,6)" and res.matches
        assert "caption" in res.note

    def test_threshold(self):
        res = preset("table_rprime")
        assert res.verdict == "m1 = 1.256431, R' = 0.715332" and res.matches and res.records == []

    def test_unknown(self):
        with pytest.raises(ValueError):
            preset("fig9")
        assert set(PRESETS) >= {"fig2a", "fig2b", "fig2c", "fig3a", "fig3b", "fig3c", "fig3d", "table_rprime"}
