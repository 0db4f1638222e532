"""Истинные значения ρ_L и ρ_L,l"""

import json
from pathlib import Path

import pytest

from app.exceptions import MissingTrueValueError
from app.modules.inference import EstimatorKind
from app.modules.samplers import parse_distribution
from app.services.truth_service import (
    ANALYTIC,
    MONTE_CARLO,
    TruthService,
    analytic_true_value,
)


@pytest.mark.parametrize("label,estimator,expected", [
    ("BVN(-0.5)", EstimatorKind.RANK, 0.5),
    ("BVN(0.95)", EstimatorKind.LINEAR, 0.95),
    ("NM1", EstimatorKind.RANK, 0.25),
    ("NM3", EstimatorKind.LINEAR, 0.25),
    ("MN", EstimatorKind.RANK, 0.0),
    ("UnifRhomb", EstimatorKind.LINEAR, 3.0 / 7.0),
    ("UnifTriangle", EstimatorKind.LINEAR, 0.5),
])
def test_analytic_values(label, estimator, expected):
    assert analytic_true_value(parse_distribution(label), estimator) == pytest.approx(expected)


def test_no_closed_form_for_rank_on_uniform_shapes():
    assert analytic_true_value(parse_distribution("UnifDisc"), EstimatorKind.RANK) is None


async def test_heavy_tails_have_no_linear_value(config):
    with pytest.raises(MissingTrueValueError):
        await TruthService(config).get(parse_distribution("BVT5(0)"), EstimatorKind.LINEAR)


async def test_missing_value_without_compute(config):
    with pytest.raises(MissingTrueValueError):
        await TruthService(config).get(parse_distribution("RegLin1"), EstimatorKind.RANK, allow_compute=False)


async def test_shipped_file_is_used(config):
    payload = {"version": 1, "values": [{"distribution": "RegQuad1", "estimator": "rank", "value": 0.61,
                                         "provenance": MONTE_CARLO, "n": 10, "seed": 1}]}
    with open(config.true_values_path, "w", encoding="utf-8") as f:
        json.dump(payload, f)
    value = await TruthService(config).get(parse_distribution("RegQuad1"), EstimatorKind.RANK, allow_compute=False)
    assert value.value == 0.61


async def test_monte_carlo_value_is_persisted(config, database):
    spec = parse_distribution("RegTrig1")
    computed = await TruthService(config, database).get(spec, EstimatorKind.RANK)
    assert computed.provenance == MONTE_CARLO
    assert (computed.n, computed.seed) == (config.study.truth_n, config.study.truth_seed)
    assert 0.0 < computed.value <= 1.0

    again = await TruthService(config, database).get(spec, EstimatorKind.RANK, allow_compute=False)
    assert again == computed


async def test_regenerate_writes_file(config, database, tmp_path):
    target = tmp_path / "out" / "truth.json"
    values = await TruthService(config, database).regenerate(["BVN(0.5)", "BVT2(0)"], target)
    assert [(v.distribution, v.estimator) for v in values] == [
        ("BVN(0.5)", "rank"), ("BVN(0.5)", "linear"), ("BVT2(0)", "rank")]
    payload = json.loads(target.read_text(encoding="utf-8"))
    assert payload["values"][0]["provenance"] == ANALYTIC


async def test_repository_values_load(config):
    shipped = Path(__file__).resolve().parent.parent / "data" / "true_values.json"
    config.true_values_path = str(shipped)
    rows = json.loads(shipped.read_text(encoding="utf-8"))["values"]
    assert rows
    service = TruthService(config)
    for row in rows:
        assert row["provenance"] in (ANALYTIC, MONTE_CARLO)
        if row["provenance"] == MONTE_CARLO:
            assert row["seed"] is not None and row["n"] >= 10_000_000
        value = await service.get(parse_distribution(row["distribution"]), EstimatorKind(row["estimator"]),
                                  allow_compute=False)
        assert value.value == pytest.approx(row["value"], abs=1e-12)


async def test_regenerate_replaces_smaller_runs(config, database):
    payload = {"version": 1, "values": [
        {"distribution": "RegTrig1", "estimator": "rank", "value": 0.5, "provenance": MONTE_CARLO, "n": 10, "seed": 1},
        {"distribution": "RegLin2", "estimator": "rank", "value": 0.7, "provenance": MONTE_CARLO,
         "n": 10_000_000, "seed": 1},
    ]}
    with open(config.true_values_path, "w", encoding="utf-8") as f:
        json.dump(payload, f)
    values = await TruthService(config, database).regenerate(["RegTrig1"])
    rank = next(v for v in values if v.estimator == "rank")
    assert rank.n == config.study.truth_n and rank.value != 0.5

    written = json.loads(Path(config.true_values_path).read_text(encoding="utf-8"))["values"]
    assert {(v["distribution"], v["estimator"]) for v in written} == {
        ("RegTrig1", "rank"), ("RegTrig1", "linear"), ("RegLin2", "rank")}
