"""Unit tests for McNemar and the paired Hotelling test."""

import json

import numpy as np
import pytest

from matchstat.classic import (
    DiscordantCounts,
    discordant_counts,
    hotelling_paired,
    mcnemar,
)
from matchstat.classic import TestResult as Outcome
from matchstat.data import (
    DataError,
    MatchedDataset,
    Observation,
    PairedDifferences,
    Stratum,
)
from matchstat.numerics import SingularMatrixError, chi2_sf, f_sf


def _binary_pairs(b, c, a=0, d=0):
    """Dataset of 1:1 pairs with a binary predictor filling the 2x2 cells."""
    strata = []
    cells = [(1.0, 0.0)] * b + [(0.0, 1.0)] * c + [(0.0, 0.0)] * a + [(1.0, 1.0)] * d
    for i, (xc, xk) in enumerate(cells):
        strata.append(
            Stratum(
                id=f"s{i}",
                members=(Observation(y=1, x=[xc]), Observation(y=0, x=[xk])),
            )
        )
    return MatchedDataset(strata=tuple(strata), p=1)


class TestDiscordantCounts:
    def test_direct_counting(self):
        counts = discordant_counts(_binary_pairs(b=10, c=2, a=3, d=5))
        assert (counts.a, counts.b, counts.c, counts.d) == (3, 10, 2, 5)
        assert counts.n == 20

    def test_empty_dataset_all_zero(self):
        counts = discordant_counts(MatchedDataset(strata=(), p=1))
        assert (counts.a, counts.b, counts.c, counts.d) == (0, 0, 0, 0)

    def test_non_binary_predictor_rejected(self):
        st = Stratum(
            id="s", members=(Observation(y=1, x=[0.5]), Observation(y=0, x=[0.0]))
        )
        with pytest.raises(DataError, match="must be 0 or 1"):
            discordant_counts(MatchedDataset(strata=(st,), p=1))

    def test_negative_count_rejected(self):
        with pytest.raises(DataError):
            DiscordantCounts(a=-1, b=0, c=0, d=0)


class TestMcNemar:
    def test_symmetric_discordance(self):
        result = mcnemar(DiscordantCounts(a=0, b=5, c=5, d=0))
        assert result.statistic == 0.0
        assert result.p_value == 1.0

    def test_hand_value(self):
        result = mcnemar(DiscordantCounts(a=0, b=10, c=2, d=0))
        assert result.statistic == pytest.approx(16.0 / 3.0, rel=1e-15)
        assert result.df == 1
        assert result.p_value == pytest.approx(chi2_sf(16.0 / 3.0, 1))

    def test_no_discordant_pairs(self):
        with pytest.raises(DataError, match="no discordant pairs"):
            mcnemar(DiscordantCounts(a=4, b=0, c=0, d=6))

    def test_concordant_cells_never_matter(self):
        base = mcnemar(DiscordantCounts(a=0, b=7, c=3, d=0)).statistic
        for a, d in ((1, 0), (5, 5), (100, 2)):
            assert mcnemar(DiscordantCounts(a=a, b=7, c=3, d=d)).statistic == base

    def test_symmetric_in_b_and_c(self):
        x = mcnemar(DiscordantCounts(a=0, b=9, c=4, d=0)).statistic
        y = mcnemar(DiscordantCounts(a=0, b=4, c=9, d=0)).statistic
        assert x == y


class TestHotellingPaired:
    def test_hand_value(self):
        result = hotelling_paired(PairedDifferences([1.0, 2.0, 3.0]))
        assert result.statistic == pytest.approx(12.0, rel=1e-12)
        assert result.df == 1
        assert result.n == 3

    def test_zero_mean_statistic_zero(self):
        result = hotelling_paired(PairedDifferences([1.0, -1.0]))
        assert result.statistic == 0.0
        assert result.p_value == 1.0

    def test_constant_differences_singular(self):
        with pytest.raises(SingularMatrixError, match="covariance singular"):
            hotelling_paired(PairedDifferences([5.0, 5.0, 5.0]))

    def test_too_few_pairs(self):
        with pytest.raises(DataError, match="two pairs"):
            hotelling_paired(PairedDifferences([1.0]))

    def test_more_dimensions_than_pairs_singular(self):
        z = PairedDifferences(np.array([[1.0, 0.0], [0.0, 1.0]]))
        with pytest.raises(SingularMatrixError, match="covariance singular"):
            hotelling_paired(z)

    def test_exact_f_mode(self):
        z = PairedDifferences(np.random.default_rng(1).normal(size=(20, 2)))
        chisq = hotelling_paired(z, pvalue_mode="chisq")
        exact = hotelling_paired(z, pvalue_mode="exact_f")
        assert chisq.statistic == exact.statistic
        n, p, stat = 20, 2, exact.statistic
        assert exact.p_value == pytest.approx(
            f_sf(stat * (n - p) / (p * (n - 1)), p, n - p)
        )
        assert exact.p_value != chisq.p_value

    def test_unknown_pvalue_mode(self):
        with pytest.raises(ValueError, match="pvalue_mode"):
            hotelling_paired(PairedDifferences([1.0, 2.0]), pvalue_mode="boot")

    def test_linear_reparametrization_invariant(self):
        # zbar' C^{-1} zbar is unchanged by any invertible linear map of the
        # predictors.
        rng = np.random.default_rng(23)
        for _ in range(20):
            p = int(rng.integers(1, 4))
            z = rng.normal(size=(30, p)) + rng.normal(size=p)
            base = hotelling_paired(PairedDifferences(z)).statistic
            a = rng.normal(size=(p, p)) + 2 * np.eye(p)
            mapped = hotelling_paired(PairedDifferences(z @ a.T)).statistic
            assert mapped == pytest.approx(base, rel=1e-8)

    def test_sign_flip_invariant(self):
        rng = np.random.default_rng(7)
        z = rng.normal(size=(25, 3)) + 0.3
        plus = hotelling_paired(PairedDifferences(z)).statistic
        minus = hotelling_paired(PairedDifferences(-z)).statistic
        assert minus == pytest.approx(plus, rel=1e-12)

    def test_p1_equals_squared_paired_student(self):
        rng = np.random.default_rng(40)
        z = rng.normal(size=12) + 0.5
        stat = hotelling_paired(PairedDifferences(z)).statistic
        n = 12
        student_sq = n * z.mean() ** 2 / z.var(ddof=1)
        assert stat == pytest.approx(student_sq, rel=1e-12)


class TestResultSerialization:
    def test_schema(self):
        result = Outcome(
            method="mcnemar", statistic=1.5, df=1, p_value=0.22, n=30
        )
        d = json.loads(result.to_json())
        assert d == {
            "method": "mcnemar",
            "statistic": 1.5,
            "df": 1,
            "p_value": 0.22,
            "n": 30,
        }

    def test_warning_included_when_set(self):
        result = Outcome(
            method="clr_score", statistic=0.0, df=1, p_value=1.0, n=3, warning="w"
        )
        assert json.loads(result.to_json())["warning"] == "w"
