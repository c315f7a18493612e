"""Monte Carlo comparison of the score and paired Hotelling statistics.

Data are simulated from a triangular array of local alternatives: row i of a
replicate is delta/sqrt(n) plus an iid mean-zero noise vector with covariance
Sigma.  For each replicate the scaled statistic difference
n (xi_score - xi_hotelling) is recorded; it is compared against direct draws
of the limit variable K = q - q^2 with q = (delta+V)' Sigma^{-1} (delta+V)
and V ~ N(0, Sigma), via a two-sample Kolmogorov-Smirnov distance and paired
quantiles.

Everything is deterministic given the experiment seed: replicate r uses the
substream derive_seed(seed, r), and the K draws use a reserved substream
index, so serial and parallel runs produce bit-identical reports.
"""

from __future__ import annotations

import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .classic import hotelling_paired
from .clr import score_test
from .data import DataError, PairedDifferences
from .numerics import (
    RandomStream,
    SingularMatrixError,
    derive_seed,
    draw_mvn,
    quad_form_inv,
    spd_factor,
)

__all__ = [
    "NOISE_FAMILIES",
    "LocalAlternativeSpec",
    "ExperimentReport",
    "HistogramData",
    "generate_local_alternative",
    "scaled_difference",
    "sample_k",
    "run_equivalence_experiment",
    "ks_statistic",
    "histogram",
]

NOISE_FAMILIES = ("gaussian", "uniform_scaled", "rademacher_mix")

QUANTILE_PROBS = (0.01, 0.05, 0.25, 0.50, 0.75, 0.95, 0.99)

# Substream index reserved for the direct K draws inside an experiment;
# replicate indices stay far below it.
_K_STREAM_INDEX = 2 ** 62

_MAX_DEGENERATE_FRACTION = 0.10


@dataclass(frozen=True, eq=False)
class LocalAlternativeSpec:
    """Settings for one simulated panel.

    delta: deviation direction (the per-row mean is delta/sqrt(n));
    sigma: SPD noise covariance; noise_family: one of NOISE_FAMILIES, each
    built as Sigma^{1/2} times iid standardized scalars; n: pairs per
    replicate; reps: replicate count; seed: 64-bit experiment seed.
    """

    delta: np.ndarray
    sigma: np.ndarray
    noise_family: str
    n: int
    reps: int
    seed: int

    def __post_init__(self):
        delta = np.atleast_1d(np.asarray(self.delta, dtype=float))
        sigma = np.asarray(self.sigma, dtype=float)
        if delta.ndim != 1 or sigma.shape != (delta.size, delta.size):
            raise DataError("delta must be a p-vector and sigma a p-by-p matrix")
        if not np.all(np.isfinite(delta)):
            raise DataError("delta must be finite")
        spd_factor(sigma)  # rejects non-SPD covariances early
        if self.noise_family not in NOISE_FAMILIES:
            raise DataError(f"unknown noise family {self.noise_family!r}")
        if int(self.n) < 2:
            raise DataError("need n >= 2 pairs per replicate")
        if int(self.reps) < 1:
            raise DataError("need at least one replicate")
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "reps", int(self.reps))
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def p(self) -> int:
        return self.delta.size


def _standardized_draws(stream: RandomStream, family: str, count: int) -> np.ndarray:
    """iid scalars with mean 0 and variance 1 from the chosen family."""
    if family == "gaussian":
        return stream.normal(count)
    if family == "uniform_scaled":
        return (2.0 * stream.uniform(count) - 1.0) * math.sqrt(3.0)
    if family == "rademacher_mix":
        return np.where(stream.uniform(count) < 0.5, 1.0, -1.0)
    raise DataError(f"unknown noise family {family!r}")


def generate_local_alternative(
    spec: LocalAlternativeSpec, replicate_index: int
) -> PairedDifferences:
    """One replicate of n rows delta/sqrt(n) + W_i, deterministic in
    (spec.seed, replicate_index)."""
    stream = RandomStream(derive_seed(spec.seed, replicate_index))
    chol = spd_factor(spec.sigma)
    g = _standardized_draws(stream, spec.noise_family, spec.n * spec.p)
    noise = g.reshape(spec.n, spec.p) @ chol.lower.T
    rows = spec.delta / math.sqrt(spec.n) + noise
    return PairedDifferences(z=rows)


def scaled_difference(z: PairedDifferences) -> float:
    """n times (score statistic minus Hotelling statistic), computed from the
    two test implementations."""
    return z.n * (score_test(z).statistic - hotelling_paired(z).statistic)


def sample_k(delta, sigma, reps: int, seed: int) -> np.ndarray:
    """Direct draws of the limit variable K.

    K = u' Sigma^{-1} (Sigma - u u') Sigma^{-1} u with u = delta + V and
    V ~ N(0, Sigma); evaluated as q - q^2 with q = u' Sigma^{-1} u, which is
    the same scalar.
    """
    delta = np.atleast_1d(np.asarray(delta, dtype=float))
    sigma = np.asarray(sigma, dtype=float)
    reps = int(reps)
    if reps < 1:
        raise DataError("need at least one draw")
    chol = spd_factor(sigma)
    stream = RandomStream(seed)
    u = draw_mvn(stream, delta, chol, count=reps)
    q = np.array([quad_form_inv(u[r], chol) for r in range(reps)])
    return q - q * q


@dataclass(frozen=True, eq=False)
class ExperimentReport:
    """Outcome of one panel: paired samples, KS distance, and quantiles."""

    spec: LocalAlternativeSpec
    empirical: np.ndarray
    k_samples: np.ndarray
    ks_distance: float
    quantile_probs: tuple
    empirical_quantiles: np.ndarray
    k_quantiles: np.ndarray
    degenerate_count: int

    def to_dict(self) -> dict:
        return {
            "n": self.spec.n,
            "reps": self.spec.reps,
            "delta": [float(v) for v in self.spec.delta],
            "sigma": [[float(v) for v in row] for row in self.spec.sigma],
            "noise_family": self.spec.noise_family,
            "seed": self.spec.seed,
            "ks_distance": self.ks_distance,
            "degenerate_count": self.degenerate_count,
            "quantiles": {
                "probs": list(self.quantile_probs),
                "empirical": [float(v) for v in self.empirical_quantiles],
                "k": [float(v) for v in self.k_quantiles],
            },
            "empirical": [float(v) for v in self.empirical],
            "k_samples": [float(v) for v in self.k_samples],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _worker_count() -> int:
    raw = os.environ.get("MATCHSTAT_THREADS", "")
    try:
        workers = int(raw) if raw else 1
    except ValueError:
        workers = 1
    return max(1, workers)


def run_equivalence_experiment(spec: LocalAlternativeSpec) -> ExperimentReport:
    """Run one panel: simulate replicates, collect n (xi_sc - xi_hot), draw
    K directly, and compare the two samples.

    Replicates whose covariance or second-moment matrix is singular (small n
    with discrete noise) are skipped and counted; more than 10% of them is an
    error.  Replicates are independent and may run on a thread pool capped by
    MATCHSTAT_THREADS; results are ordered by replicate index either way.
    """

    def one_replicate(r: int) -> float | None:
        z = generate_local_alternative(spec, r)
        try:
            return scaled_difference(z)
        except SingularMatrixError:
            return None

    workers = _worker_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(one_replicate, range(spec.reps)))
    else:
        values = [one_replicate(r) for r in range(spec.reps)]
    empirical = np.array([v for v in values if v is not None])
    degenerate = spec.reps - empirical.size
    if degenerate > _MAX_DEGENERATE_FRACTION * spec.reps:
        raise DataError(
            f"{degenerate} of {spec.reps} replicates degenerate; "
            "experiment settings look pathological"
        )
    k_samples = sample_k(
        spec.delta, spec.sigma, spec.reps, derive_seed(spec.seed, _K_STREAM_INDEX)
    )
    probs = np.array(QUANTILE_PROBS)
    return ExperimentReport(
        spec=spec,
        empirical=empirical,
        k_samples=k_samples,
        ks_distance=ks_statistic(empirical, k_samples),
        quantile_probs=QUANTILE_PROBS,
        empirical_quantiles=np.quantile(empirical, probs),
        k_quantiles=np.quantile(k_samples, probs),
        degenerate_count=degenerate,
    )


def ks_statistic(a, b) -> float:
    """Two-sample Kolmogorov-Smirnov distance: sup |F_a - F_b| over the
    pooled sample points."""
    a = np.sort(np.asarray(a, dtype=float).ravel())
    b = np.sort(np.asarray(b, dtype=float).ravel())
    if a.size == 0 or b.size == 0:
        raise DataError("samples must be nonempty")
    pooled = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, pooled, side="right") / a.size
    cdf_b = np.searchsorted(b, pooled, side="right") / b.size
    return float(np.max(np.abs(cdf_a - cdf_b)))


@dataclass(frozen=True, eq=False)
class HistogramData:
    """Equal-width histogram: edges, counts, and densities normalized by the
    total sample count (densities integrate to the in-range fraction)."""

    edges: np.ndarray
    counts: np.ndarray
    densities: np.ndarray

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("bin_left,bin_right,count,density\n")
        for i in range(self.counts.size):
            buf.write(
                f"{float(self.edges[i])!r},{float(self.edges[i + 1])!r},"
                f"{int(self.counts[i])},{float(self.densities[i])!r}\n"
            )
        return buf.getvalue()


def histogram(samples, bin_count: int, value_range=None) -> HistogramData:
    """Bin samples into bin_count equal-width bins over value_range
    (default: the sample min/max span)."""
    samples = np.asarray(samples, dtype=float).ravel()
    if int(bin_count) < 1:
        raise DataError("bin_count must be at least 1")
    if value_range is None:
        if samples.size == 0:
            raise DataError("cannot infer a range from an empty sample")
        lo, hi = float(samples.min()), float(samples.max())
    else:
        lo, hi = float(value_range[0]), float(value_range[1])
    if not (hi > lo):
        raise DataError("zero-width range")
    edges = np.linspace(lo, hi, int(bin_count) + 1)
    counts, _ = np.histogram(samples, bins=edges)
    width = edges[1] - edges[0]
    total = max(samples.size, 1)
    densities = counts / (total * width)
    return HistogramData(edges=edges, counts=counts, densities=densities)
