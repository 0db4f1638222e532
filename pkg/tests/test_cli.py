"""Командная строка: estimate, test, ci, study, truth"""

import json
import logging

import numpy as np
import pytest

from main import main


@pytest.fixture(autouse=True)
def detach_log_handlers():
    yield
    root = logging.getLogger()
    for handler in [h for h in root.handlers if getattr(h, "_lancaster", False)]:
        root.removeHandler(handler)
        handler.close()


@pytest.fixture
def pair_csv(cli_env):
    rng = np.random.default_rng(3)
    x = rng.standard_normal(60)
    y = 0.8 * x + 0.6 * rng.standard_normal(60)
    path = cli_env / "pair.csv"
    lines = ["left,right"] + [f"{a:.17g},{b:.17g}" for a, b in zip(x, y)]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def twin_csv(cli_env):
    x = np.random.default_rng(4).standard_normal(50)
    path = cli_env / "twin.csv"
    path.write_text("\n".join(f"{v:.17g},{v:.17g}" for v in x) + "\n", encoding="utf-8")
    return path


async def _run(capsys, *argv):
    code = await main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestEstimate:

    async def test_columns_by_name_or_index(self, pair_csv, capsys):
        args = ("--format", "json", "--coefficients", "lancaster_rank", "lancaster_linear", "pearson")
        code, by_name, _ = await _run(capsys, "estimate", str(pair_csv), "--x", "left", "--y", "right", *args)
        assert code == 0
        _, by_index, _ = await _run(capsys, "estimate", str(pair_csv), "--x", "0", "--y", "1", *args)
        assert by_name == by_index
        payload = json.loads(by_name)
        assert payload["n"] == 60
        assert payload["estimates"][0]["value"] > 0.5

    async def test_table_output(self, pair_csv, capsys):
        code, out, _ = await _run(capsys, "estimate", str(pair_csv), "--coefficients", "spearman", "xi",
                                  "--seed", "1")
        assert code == 0
        assert "spearman" in out and "xi" in out

    async def test_single_column(self, cli_env, capsys):
        path = cli_env / "one.csv"
        path.write_text("1\n2\n3\n", encoding="utf-8")
        code, _, err = await _run(capsys, "estimate", str(path))
        assert code == 2
        assert "две колонки" in err

    async def test_non_numeric_value(self, cli_env, capsys):
        path = cli_env / "bad.csv"
        path.write_text("a,b\n1,2\n3,x\n4,5\n", encoding="utf-8")
        code, _, err = await _run(capsys, "estimate", str(path))
        assert code == 3
        assert "строка 3" in err

    async def test_unknown_column(self, pair_csv, capsys):
        code, _, _ = await _run(capsys, "estimate", str(pair_csv), "--x", "missing")
        assert code == 2

    async def test_dump_sample(self, capsys):
        code, out, _ = await _run(capsys, "estimate", "--dump-sample", "BVN(0.5)", "--n", "20", "--seed", "3")
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "x,y"
        assert len(lines) == 21

    async def test_dump_sample_needs_seed(self, capsys):
        code, _, _ = await _run(capsys, "estimate", "--dump-sample", "BVN(0.5)")
        assert code == 2


class TestIndependence:

    async def test_identical_columns_are_dependent(self, twin_csv, capsys):
        code, out, _ = await _run(capsys, "test", str(twin_csv), "--seed", "1")
        assert code == 0
        payload = json.loads(out)
        assert payload["p_value"] < 0.001
        assert payload["method"] == "rank_asymptotic"

    async def test_permutation_output_is_reproducible(self, pair_csv, capsys):
        argv = ("test", str(pair_csv), "--method", "linear_permutation", "--permutations", "99", "--seed", "5")
        _, first, _ = await _run(capsys, *argv)
        _, second, _ = await _run(capsys, *argv)
        assert first == second
        assert json.loads(first)["n_permutations"] == 99

    async def test_exact_permutation(self, cli_env, capsys):
        path = cli_env / "small.csv"
        path.write_text("1,2\n2,1\n3,4\n4,3\n5,6\n", encoding="utf-8")
        code, out, _ = await _run(capsys, "test", str(path), "--method", "exact_permutation", "--seed", "0")
        assert code == 0
        assert json.loads(out)["n_permutations"] == 120

    async def test_unknown_method(self, pair_csv):
        with pytest.raises(SystemExit) as excinfo:
            await main(["test", str(pair_csv), "--method", "kendall", "--seed", "1"])
        assert excinfo.value.code == 2

    async def test_seed_is_required(self, pair_csv):
        with pytest.raises(SystemExit) as excinfo:
            await main(["test", str(pair_csv)])
        assert excinfo.value.code == 2


class TestInterval:

    async def test_interval(self, pair_csv, capsys):
        code, out, _ = await _run(capsys, "ci", str(pair_csv), "--method", "boot_rank", "--bootstrap", "50",
                                  "--seed", "2")
        assert code == 0
        payload = json.loads(out)
        assert 0.0 <= payload["lower"] <= payload["estimate"] <= payload["upper"] <= 1.0
        assert payload["level"] == 0.95

    async def test_invalid_level(self, pair_csv, capsys):
        code, _, _ = await _run(capsys, "ci", str(pair_csv), "--level", "1.5", "--seed", "2")
        assert code == 4


class TestStudy:

    async def test_study_writes_reports(self, cli_env, capsys):
        config = cli_env / "tiny.toml"
        config.write_text(
            'name = "tiny"\nkind = "power"\nn = 25\nseed = 9\nreplications = 5\n'
            'distributions = ["BVN(0)", "MN1"]\nmethods = ["rank_asymptotic", "spearman"]\nn_permutations = 9\n',
            encoding="utf-8",
        )
        out_dir = cli_env / "reports"
        code, out, _ = await _run(capsys, "study", str(config), "--out", str(out_dir))
        assert code == 0
        assert (out_dir / "tiny.csv").exists()
        assert json.loads((out_dir / "tiny.json").read_text(encoding="utf-8"))["replications"] == 5
        assert "MN1" in out

    @pytest.mark.parametrize("override", [["--replications", "0"], ["--seed", "-1"]])
    async def test_invalid_overrides(self, cli_env, capsys, override):
        config = cli_env / "tiny.toml"
        config.write_text(
            'name = "tiny"\nkind = "power"\nn = 25\nseed = 9\nreplications = 5\n'
            'distributions = ["BVN(0)"]\nmethods = ["spearman"]\n',
            encoding="utf-8",
        )
        code, _, _ = await _run(capsys, "study", str(config), "--out", str(cli_env / "reports"), *override)
        assert code == 2
        assert not (cli_env / "reports").exists()

    async def test_bad_study_config(self, cli_env, capsys):
        config = cli_env / "bad.toml"
        config.write_text('kind = "power"\nn = 25\nseed = 1\ndistributions = ["BVN(0)"]\nmethods = ["nope"]\n',
                          encoding="utf-8")
        code, _, _ = await _run(capsys, "study", str(config))
        assert code == 2

    async def test_truth(self, cli_env, capsys):
        target = cli_env / "truth.json"
        code, out, _ = await _run(capsys, "truth", "BVN(0.3)", "--out", str(target))
        assert code == 0
        assert "analytic" in out
        assert target.exists()
