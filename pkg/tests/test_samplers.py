"""Генераторы выборок и разбор меток законов"""

import numpy as np
import pytest
from scipy import stats

from app.exceptions import ConfigurationError
from app.modules.estimators import lancaster_rank, pearson, spearman
from app.modules.samplers import (
    DistributionKind,
    draw,
    garch_series,
    parse_distribution,
    sample,
    stream_rng,
)


class TestLabels:

    @pytest.mark.parametrize("label,kind", [
        ("BVN(0.5)", DistributionKind.BVN),
        ("BVT5(0.2)", DistributionKind.BVT),
        ("BVC", DistributionKind.BVT),
        ("NM3", DistributionKind.NORMAL_MIXTURE),
        ("MN", DistributionKind.MN4),
        ("UnifDrhomb", DistributionKind.UNIF_RHOMB),
        ("GARCH(2,1)", DistributionKind.GARCH21),
        ("RegTrig2", DistributionKind.REG_TRIG),
    ])
    def test_known_labels(self, label, kind):
        spec = parse_distribution(label)
        assert spec.kind is kind
        assert spec.label == label

    def test_parameters(self):
        assert parse_distribution("BVT1(0.5)").nu == 1.0
        assert parse_distribution("BVC").rho == 0.0
        assert parse_distribution("NM2").p == pytest.approx(1.0 / 3.0)
        assert parse_distribution("RegQuad2").sigma == 0.3
        assert parse_distribution(" BVN( -0.25 ) ").rho == -0.25

    def test_aliases_share_kind(self):
        assert parse_distribution("MN1").kind is DistributionKind.NORMAL_MIXTURE
        assert parse_distribution("GARCH").kind is parse_distribution("GARCH(2,1)").kind

    def test_heavy_tails(self):
        assert parse_distribution("BVT3(0)").heavy_tailed
        assert not parse_distribution("BVN(0)").heavy_tailed

    @pytest.mark.parametrize("label", ["BVN(1.5)", "BVN(1)", "NM7", "Cauchy", "BVT0(0.1)", ""])
    def test_invalid_labels(self, label):
        with pytest.raises(ConfigurationError):
            parse_distribution(label)


class TestReproducibility:

    @pytest.mark.parametrize("label", ["BVN(0.3)", "BVT3(0.5)", "UnifTriangle", "GARCH(2,1)", "RegLin1"])
    def test_same_seed_same_sample(self, label):
        spec = parse_distribution(label)
        a, b = draw(spec, 300, 42), draw(spec, 300, 42)
        np.testing.assert_array_equal(a[0], b[0])
        np.testing.assert_array_equal(a[1], b[1])

    def test_streams_are_distinct(self):
        first = stream_rng(1, "BVN(0)", 0).standard_normal(5)
        assert not np.array_equal(first, stream_rng(1, "BVN(0)", 1).standard_normal(5))
        assert not np.array_equal(first, stream_rng(1, "BVN(0.5)", 0).standard_normal(5))
        np.testing.assert_array_equal(first, stream_rng(1, "BVN(0)", 0).standard_normal(5))

    def test_sample_size(self):
        assert sample(parse_distribution("UnifDisc"), 1234, 0).n == 1234

    def test_size_must_be_positive(self):
        with pytest.raises(ConfigurationError):
            draw(parse_distribution("BVN(0)"), 0, 1)


class TestMoments:

    def test_normal_correlation(self):
        assert pearson(sample(parse_distribution("BVN(-0.7)"), 50_000, 1)) == pytest.approx(-0.7, abs=0.01)

    def test_mixture_correlation(self):
        assert pearson(sample(parse_distribution("NM2"), 100_000, 2)) == pytest.approx(1.0 / 6.0, abs=0.015)

    def test_student_rank_correlation(self):
        assert spearman(sample(parse_distribution("BVT5(0.2)"), 100_000, 3)) == pytest.approx(0.186, abs=0.02)

    def test_four_component_mixture_is_independent(self):
        assert abs(pearson(sample(parse_distribution("MN"), 50_000, 4))) < 0.02

    def test_disc(self):
        x, y = draw(parse_distribution("UnifDisc"), 50_000, 5)
        assert np.all(x * x + y * y <= 1.0)
        assert np.var(x) == pytest.approx(0.25, abs=0.01)

    def test_rhombus(self):
        x, y = draw(parse_distribution("UnifRhomb"), 50_000, 6)
        assert np.all(np.abs(x) + np.abs(y) <= 1.0)
        assert np.mean(x * x) == pytest.approx(1.0 / 6.0, abs=0.01)

    def test_triangle(self):
        x, y = draw(parse_distribution("UnifTriangle"), 50_000, 7)
        assert np.all((x >= 0.0) & (y >= 0.0) & (x + y <= 1.0))
        assert np.mean(x) == pytest.approx(1.0 / 3.0, abs=0.01)
        assert np.corrcoef(x, y)[0, 1] == pytest.approx(-0.5, abs=0.02)

    def test_quadratic_regression_is_uncorrelated(self):
        assert abs(pearson(sample(parse_distribution("RegQuad1"), 100_000, 8))) < 0.01


class TestHeavyTailsAndVolatility:

    def test_garch_volatility_clustering(self):
        r = garch_series(np.random.default_rng(9), 20_000)
        assert np.all(np.isfinite(r))
        assert stats.spearmanr(np.abs(r[1:]), np.abs(r[:-1]))[0] > 0.1

    def test_garch_pairs_are_lagged(self):
        xs, ys = draw(parse_distribution("GARCH(2,1)"), 100, 10)
        np.testing.assert_array_equal(xs[:-1], ys[1:])

    def test_cauchy_dependence_is_detected(self):
        assert lancaster_rank(sample(parse_distribution("BVC"), 10_000, 11)).value > 0.6

    def test_garch_dependence_is_detected(self):
        assert lancaster_rank(sample(parse_distribution("GARCH(2,1)"), 10_000, 12)).value > 0.4
