"""Closed-form tests for 1:1 matched pairs.

McNemar's test for a binary predictor, built from the 2x2 table of pair
outcomes, and the paired Hotelling T-squared test for real predictor
vectors (its p = 1 case is the squared paired Student t).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .data import DataError, MatchedDataset, PairedDifferences, summarize
from .numerics import SingularMatrixError, chi2_sf, f_sf, quad_form_inv, spd_factor

__all__ = [
    "DiscordantCounts",
    "TestResult",
    "discordant_counts",
    "mcnemar",
    "hotelling_paired",
]


@dataclass(frozen=True)
class TestResult:
    """Outcome of a hypothesis test.

    method is one of mcnemar, hotelling, clr_score, clr_wald, clr_lr.
    A warning is attached when the sample is small relative to the
    dimension and the asymptotic reference may be unreliable.
    """

    method: str
    statistic: float
    df: int
    p_value: float
    n: int
    warning: str | None = None

    def to_dict(self) -> dict:
        d = {
            "method": self.method,
            "statistic": self.statistic,
            "df": self.df,
            "p_value": self.p_value,
            "n": self.n,
        }
        if self.warning is not None:
            d["warning"] = self.warning
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


@dataclass(frozen=True)
class DiscordantCounts:
    """Pair counts for a binary predictor.

    a: both members have X=0; b: case X=1, control X=0; c: case X=0,
    control X=1; d: both have X=1.  b and c are the discordant cells.
    """

    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        for name in ("a", "b", "c", "d"):
            v = getattr(self, name)
            if int(v) != v or v < 0:
                raise DataError(f"count {name} must be a nonnegative integer")
            object.__setattr__(self, name, int(v))

    @property
    def n(self) -> int:
        return self.a + self.b + self.c + self.d


def discordant_counts(dataset: MatchedDataset) -> DiscordantCounts:
    """Tabulate 1:1 pairs of a single binary predictor into the 2x2 cells."""
    if dataset.p != 1:
        raise DataError("discordant counts require a single predictor column")
    a = b = c = d = 0
    for st in dataset.strata:
        if st.size != 2 or st.case_count != 1:
            raise DataError(f"stratum {st.id} is not a 1:1 discordant pair")
        first, second = st.members
        case, control = (first, second) if first.y == 1 else (second, first)
        xc = case.x[0]
        xk = control.x[0]
        if xc not in (0.0, 1.0) or xk not in (0.0, 1.0):
            raise DataError(f"predictor must be 0 or 1 in stratum {st.id}")
        if xc == 1.0 and xk == 0.0:
            b += 1
        elif xc == 0.0 and xk == 1.0:
            c += 1
        elif xc == 1.0:
            d += 1
        else:
            a += 1
    return DiscordantCounts(a=a, b=b, c=c, d=d)


def mcnemar(counts: DiscordantCounts) -> TestResult:
    """McNemar's test statistic (b - c)^2 / (b + c), uncorrected, with a
    1-df chi-square p-value."""
    b, c = counts.b, counts.c
    if b + c == 0:
        raise DataError("no discordant pairs: statistic undefined")
    statistic = (b - c) ** 2 / (b + c)
    return TestResult(
        method="mcnemar",
        statistic=float(statistic),
        df=1,
        p_value=chi2_sf(statistic, 1),
        n=counts.n,
    )


def hotelling_paired(z: PairedDifferences, pvalue_mode: str = "chisq") -> TestResult:
    """Paired Hotelling test: n zbar^T C^{-1} zbar on the difference vectors.

    pvalue_mode selects the reference distribution: "chisq" (default) uses
    the asymptotic chi-square tail with p degrees of freedom; "exact_f" uses
    the finite-sample transform statistic * (n-p) / (p*(n-1)) against
    F(p, n-p).
    """
    if pvalue_mode not in ("chisq", "exact_f"):
        raise ValueError("pvalue_mode must be 'chisq' or 'exact_f'")
    n, p = z.n, z.p
    if n < 2:
        raise DataError("need at least two pairs")
    summary = summarize(z)
    try:
        factor = spd_factor(summary.cov_unbiased)
    except SingularMatrixError as exc:
        raise SingularMatrixError("covariance singular") from exc
    statistic = n * quad_form_inv(summary.mean, factor)
    if pvalue_mode == "chisq":
        p_value = chi2_sf(statistic, p)
    else:
        p_value = f_sf(statistic * (n - p) / (p * (n - 1)), p, n - p)
    return TestResult(
        method="hotelling", statistic=statistic, df=p, p_value=p_value, n=n
    )
