import copy
import csv
import json
import random
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from probid.experiment import (
    CSV_COLUMNS, ConfigError, ExperimentConfig, bundled_scenarios, dump_report, report_rows, run_experiment,
    validate_report, validate_report_detail, write_csv,
)

FAST = ["positive_mixture.cfg", "adversary_stubborn.cfg", "diagonal_null.cfg", "diagonal_stubborn.cfg",
        "frequency_amplify.cfg"]


@pytest.fixture(scope="module")
def reports():
    return {name: run_experiment(ExperimentConfig.load(name)) for name in FAST}


def _run_name(name):
    return dump_report(run_experiment(ExperimentConfig.load(name)))


def test_bundled_scenarios_present():
    assert set(FAST) | {"positive_rational.cfg"} <= set(bundled_scenarios())


def test_expected_verdicts(reports):
    assert reports["positive_mixture.cfg"]["results"][0]["success"] == "1/1"
    assert all(r["success"] == "1/1" for r in reports["positive_mixture.cfg"]["results"])
    assert reports["adversary_stubborn.cfg"]["verdict"] == "stage-witness"
    assert reports["diagonal_null.cfg"]["verdict"] == "nullity-overflow"
    assert reports["diagonal_stubborn.cfg"]["verdict"] == "stage-witness"
    assert reports["frequency_amplify.cfg"]["verdict"] == "null-amplified"


@pytest.mark.parametrize("name", FAST)
def test_bundled_reports_validate(reports, name):
    ok, problems = validate_report_detail(reports[name])
    assert ok, problems


def test_reports_deterministic_across_processes(reports):
    names = ["adversary_stubborn.cfg", "diagonal_null.cfg", "positive_mixture.cfg"]
    with ProcessPoolExecutor(max_workers=3) as ex:
        got = list(ex.map(_run_name, names))
    for n, text in zip(names, got):
        assert text == dump_report(reports[n])


def test_report_json_has_no_floats_in_exact_fields(reports):
    r = reports["adversary_stubborn.cfg"]
    for k, v in r["masses"].items():
        assert isinstance(v, str) and "/" in v
    assert "time" not in json.dumps(r["environment"])


# tampering --------------------------------------------------------------


def test_tamper_beta(reports):
    t = copy.deepcopy(reports["adversary_stubborn.cfg"])
    t["pigeonhole"]["beta"] = "1/32"
    assert not validate_report(t)


def test_tamper_certificate_weight(reports):
    base = reports["adversary_stubborn.cfg"]
    rng = random.Random(0)
    for _ in range(5):
        t = copy.deepcopy(base)
        atoms = t["certificates"][0]["atoms"]
        atoms[rng.randrange(len(atoms))]["weight"] -= 1
        assert not validate_report(t, rederive=False)


@pytest.mark.parametrize("path,value", [
    (("masses", "inconsistent"), "1/2"),
    (("succ_upper_bound",), "1/64"),
    (("schedule", "f"), "1/2"),
    (("schedule", "eps"), "1/8"),
    (("verdict",), "no-witness"),
    (("inconsistent",), []),
    (("family", "guarantees", 0), "1/2"),
])
def test_tamper_fields(reports, path, value):
    t = copy.deepcopy(reports["adversary_stubborn.cfg"])
    node = t
    for k in path[:-1]:
        node = node[k]
    node[path[-1]] = value
    assert not validate_report(t)


def test_tamper_certificate_m(reports):
    t = copy.deepcopy(reports["adversary_stubborn.cfg"])
    t["certificates"][0]["m"] = 7
    assert not validate_report(t, rederive=False)


def test_tamper_diagonal_eta(reports):
    t = copy.deepcopy(reports["diagonal_null.cfg"])
    t["diagonal"]["rounds"][1]["eta"] = "1/8"
    assert not validate_report(t, rederive=False)
    t = copy.deepcopy(reports["diagonal_null.cfg"])
    t["diagonal"]["eta"] = "1/4"
    assert not validate_report(t, rederive=False)


def test_tamper_amplify_null_check(reports):
    t = copy.deepcopy(reports["frequency_amplify.cfg"])
    t["amplify"]["null_check"][0]["prec"] = "9/10"
    assert not validate_report(t, rederive=False)


def test_schema_violation_is_false():
    assert not validate_report({"kind": "stage"})
    ok, problems = validate_report_detail({"scenario": "x", "kind": "stage", "config": {}, "verdict": "?"})
    assert not ok and problems


# configs ------------------------------------------------------------------


specs = st.sampled_from(["null", "first_bit", "frequency:radius=2/1", "stubborn:bernoulli:p=1/3"])


@settings(max_examples=30, deadline=None)
@given(specs, st.integers(1, 8), st.fractions(min_value=Fraction(1, 64), max_value=1),
       st.one_of(st.none(), st.integers(0, 6)), st.integers(0, 2**64 - 1))
def test_config_roundtrip(learner, n, delta, s, seed):
    cfg = ExperimentConfig(name="t", kind="stage", learner=learner, delta=delta, n=n, s_override=s, seed=seed)
    again = ExperimentConfig.parse(cfg.serialize())
    assert again == cfg and again.serialize() == cfg.serialize()


@pytest.mark.parametrize("text,needle", [
    ('{"name": "x", "kind": "stage"}', "'learner'"),
    ('{"name": "x", "kind": "stage", "learner": "null", "delta": "3/2"}', "'delta'"),
    ('{"name": "x", "kind": "stage", "learner": "psychic"}', "'learner'"),
    ('{"name": "x", "kind": "stage", "learner": "null", "bogus": 1}', "bogus"),
    ('{"name": "x", "kind": "stage", "learner": "null", "n": "six"}', "'n'"),
    ('{"name": "x", "kind": "empirical", "learner": "null"}', "'measures'"),
    ('{"name": "x",\n "kind": }', "line 2"),
])
def test_config_errors_have_locations(text, needle):
    with pytest.raises(ConfigError) as e:
        ExperimentConfig.parse(text, "cfg.json")
    assert needle in str(e.value) and "cfg.json" in str(e.value)


def test_missing_config_file():
    with pytest.raises(ConfigError):
        ExperimentConfig.load("/nonexistent/none.cfg")


def test_bundled_name_without_suffix():
    assert ExperimentConfig.load("diagonal_null") == ExperimentConfig.load("diagonal_null.cfg")


# CSV ------------------------------------------------------------------------


def test_csv_trace(reports, tmp_path):
    r = reports["adversary_stubborn.cfg"]
    p = tmp_path / "trace.csv"
    write_csv(r, p)
    rows = list(csv.DictReader(p.open()))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert len(rows) == 64 and {x["label"] for x in rows} == {"inconsistent"}
    assert {x["ed_hat"] for x in rows} == {"3"} and {x["emitted_radius"] for x in rows} == {"0/1"}


def test_csv_rows_for_diagonal(reports):
    rows = report_rows(reports["diagonal_null.cfg"])
    assert {r["label"] for r in rows} == {"null"}
    assert sum(1 for r in rows if r["stage"] == 1) == 2


def test_figures_for_every_kind(reports, tmp_path):
    from probid.plotting import render_figures

    diag = render_figures(reports["diagonal_null.cfg"], tmp_path)
    assert any(p.name.endswith("_eta.png") for p in diag)
    emp = render_figures(reports["positive_mixture.cfg"], tmp_path)
    assert [p.name for p in emp] == ["positive_mixture_success.png"]
    assert all(p.stat().st_size > 0 for p in diag + emp)
