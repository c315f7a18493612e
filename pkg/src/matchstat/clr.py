"""Conditional logistic regression for matched strata.

For a 1:1 discordant pair with predictor difference z (case minus control)
the conditional likelihood is 1 / (1 + exp(-beta' z)); the per-stratum
intercepts cancel out of the conditioning on the case count.  For a general
stratum with k cases among m members the likelihood conditions on k, summing
exp of the within-subset linear predictor totals over all size-k subsets in
the denominator.

Provided here: log-likelihood, score and Fisher information for the pair
form; the score test (which needs no fit); Newton maximum likelihood with
step halving; Wald and likelihood ratio tests; and two evaluators for the
general-strata likelihood, brute-force subset enumeration and an
elementary-symmetric-polynomial recursion with O(m k) cost per stratum.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass

import numpy as np

from .classic import TestResult
from .data import DataError, MatchedDataset, PairedDifferences, Stratum, summarize
from .numerics import SingularMatrixError, chi2_sf, quad_form_inv, spd_factor

__all__ = [
    "FitResult",
    "pair_loglik",
    "pair_score",
    "pair_fisher_info",
    "score_test",
    "fit_mle",
    "wald_test",
    "lr_test",
    "strata_loglik_bruteforce",
    "strata_score_bruteforce",
    "strata_loglik_recursive",
    "strata_score_recursive",
    "strata_fisher_info_recursive",
    "fit_mle_strata",
]

_BRUTEFORCE_MAX_M = 20


def _as_beta(beta, p: int) -> np.ndarray:
    b = np.atleast_1d(np.asarray(beta, dtype=float))
    if b.shape != (p,):
        raise ValueError(f"beta must have shape ({p},)")
    if not np.all(np.isfinite(b)):
        raise ValueError("beta must be finite")
    return b


def _sigmoid(t: np.ndarray) -> np.ndarray:
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    e = np.exp(t[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _small_sample_warning(n: int, p: int) -> str | None:
    if n < 10 * p:
        return f"n={n} is small relative to p={p}; asymptotic p-value may be unreliable"
    return None


# ---------------------------------------------------------------------------
# Pair-form likelihood
# ---------------------------------------------------------------------------


def pair_loglik(beta, z: PairedDifferences) -> float:
    """Conditional log-likelihood -sum_i log(1 + exp(-beta' z_i)).

    Evaluated through logaddexp, the overflow-safe form
    max(0, -t) + log1p(exp(-|t|)).
    """
    b = _as_beta(beta, z.p)
    t = z.z @ b
    return float(-np.logaddexp(0.0, -t).sum())


def pair_score(beta, z: PairedDifferences) -> np.ndarray:
    """Gradient of pair_loglik: sum_i z_i / (exp(beta' z_i) + 1)."""
    b = _as_beta(beta, z.p)
    t = z.z @ b
    return z.z.T @ _sigmoid(-t)


def pair_fisher_info(beta, z: PairedDifferences) -> np.ndarray:
    """Fisher information sum_i z_i z_i^T exp(t_i) / (exp(t_i) + 1)^2 with
    t_i = beta' z_i; equals the negative Hessian of pair_loglik and is
    positive semidefinite (a sum of weighted rank-one terms)."""
    b = _as_beta(beta, z.p)
    t = z.z @ b
    s = _sigmoid(t)
    weights = s * (1.0 - s)
    info = (z.z * weights[:, None]).T @ z.z
    return (info + info.T) / 2.0


def score_test(z: PairedDifferences) -> TestResult:
    """Score test at beta = 0: n zbar^T Itilde^{-1} zbar against chi-square
    with p degrees of freedom, where Itilde is the raw second moment of the
    differences.  No fit is required."""
    summary = summarize(z)
    try:
        factor = spd_factor(summary.second_moment)
    except SingularMatrixError as exc:
        raise SingularMatrixError("second-moment matrix singular") from exc
    statistic = z.n * quad_form_inv(summary.mean, factor)
    return TestResult(
        method="clr_score",
        statistic=statistic,
        df=z.p,
        p_value=chi2_sf(statistic, z.p),
        n=z.n,
        warning=_small_sample_warning(z.n, z.p),
    )


# ---------------------------------------------------------------------------
# Maximum likelihood
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FitResult:
    """Newton fit outcome: estimate, observed information at the estimate,
    log-likelihood, and convergence diagnostics."""

    beta_hat: np.ndarray
    info_at_hat: np.ndarray
    loglik: float
    iterations: int
    converged: bool
    max_grad_norm: float
    n: int
    diagnostic: str | None = None

    def standard_errors(self) -> np.ndarray | None:
        """sqrt of the diagonal of the inverse information, or None when the
        information matrix is singular."""
        try:
            inv = spd_factor(self.info_at_hat).inverse()
        except SingularMatrixError:
            return None
        return np.sqrt(np.diag(inv))

    def to_dict(self) -> dict:
        se = self.standard_errors()
        d = {
            "beta": [float(v) for v in self.beta_hat],
            "se": None if se is None else [float(v) for v in se],
            "loglik": self.loglik,
            "iterations": self.iterations,
            "converged": self.converged,
        }
        if self.diagnostic is not None:
            d["diagnostic"] = self.diagnostic
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _newton_ascent(p, loglik, score, info, grad_tol, max_iter, norm_bound):
    """Maximize a concave log-likelihood by damped Newton ascent from zero.

    Full Newton step first, halved (at most 30 times) until the
    log-likelihood strictly increases.  Stops on a small gradient, on the
    iteration cap, or when the iterate norm crosses norm_bound (divergence
    guard).  Returns (beta, ll, updates, converged, gnorm, diagnostic).
    """
    beta = np.zeros(p)
    ll = loglik(beta)
    updates = 0
    converged = False
    diagnostic = None
    for _ in range(max_iter):
        s = score(beta)
        if float(np.max(np.abs(s))) < grad_tol:
            converged = True
            break
        fisher = info(beta)
        try:
            step = spd_factor(fisher).solve(s)
        except SingularMatrixError as exc:
            raise SingularMatrixError("information matrix singular") from exc
        accepted = None
        scale = 1.0
        for _ in range(31):
            cand = beta + scale * step
            cand_ll = loglik(cand)
            if cand_ll > ll:
                accepted = (cand, cand_ll)
                break
            scale *= 0.5
        if accepted is None:
            break  # no ascent at the smallest step: numerical plateau
        beta, ll = accepted
        updates += 1
        if float(np.linalg.norm(beta)) > norm_bound:
            diagnostic = "possible separation"
            break
    gnorm = float(np.max(np.abs(score(beta)))) if p else 0.0
    if not converged and diagnostic is None and gnorm < grad_tol:
        converged = True
    if not converged and diagnostic is None:
        diagnostic = "possible separation"
    return beta, ll, updates, converged, gnorm, diagnostic


def fit_mle(z: PairedDifferences, max_iter: int = 50, grad_tol: float | None = None) -> FitResult:
    """Newton maximum likelihood for the pair-form conditional likelihood.

    Starts at beta = 0 and converges when the max-norm of the score falls
    below grad_tol (default 1e-8 * n).  Separation (all informative
    differences on one side of a hyperplane, so the supremum is unattained)
    is detected heuristically: the iterate norm crossing 30 / max row norm,
    the iteration cap, or a "converged" point whose nonzero margins
    beta' z_i all share one strict sign.  Such fits return converged=False
    with diagnostic "possible separation".
    """
    n, p = z.n, z.p
    tol = 1e-8 * n if grad_tol is None else float(grad_tol)
    row_norms = np.linalg.norm(z.z, axis=1)
    max_row = float(row_norms.max())
    bound = 30.0 / max_row if max_row > 0 else math.inf
    beta, ll, updates, converged, gnorm, diagnostic = _newton_ascent(
        p,
        lambda b: pair_loglik(b, z),
        lambda b: pair_score(b, z),
        lambda b: pair_fisher_info(b, z),
        tol,
        max_iter,
        bound,
    )
    if converged:
        margins = z.z @ beta
        has_pos = bool(np.any(margins > 0))
        has_neg = bool(np.any(margins < 0))
        if has_pos != has_neg:
            # A true stationary point needs margins of both signs (or all
            # zero); one-signed margins mean the score merely decayed along a
            # separating direction.
            converged = False
            diagnostic = "possible separation"
    return FitResult(
        beta_hat=beta,
        info_at_hat=pair_fisher_info(beta, z),
        loglik=ll,
        iterations=updates,
        converged=converged,
        max_grad_norm=gnorm,
        n=n,
        diagnostic=diagnostic,
    )


def wald_test(fit: FitResult) -> TestResult:
    """Wald test: beta_hat^T I(beta_hat) beta_hat against chi-square."""
    if not fit.converged:
        raise DataError("MLE unavailable")
    p = fit.beta_hat.size
    statistic = float(fit.beta_hat @ fit.info_at_hat @ fit.beta_hat)
    return TestResult(
        method="clr_wald",
        statistic=statistic,
        df=p,
        p_value=chi2_sf(statistic, p),
        n=fit.n,
        warning=_small_sample_warning(fit.n, p),
    )


def lr_test(fit: FitResult, z: PairedDifferences) -> TestResult:
    """Likelihood ratio test: 2 (L(beta_hat) - L(0)) with L(0) = -n log 2."""
    if not fit.converged:
        raise DataError("MLE unavailable")
    statistic = 2.0 * pair_loglik(fit.beta_hat, z) + 2.0 * z.n * math.log(2.0)
    return TestResult(
        method="clr_lr",
        statistic=statistic,
        df=z.p,
        p_value=chi2_sf(max(statistic, 0.0), z.p),
        n=z.n,
        warning=_small_sample_warning(z.n, z.p),
    )


# ---------------------------------------------------------------------------
# General strata likelihood
# ---------------------------------------------------------------------------


def _check_stratum(st: Stratum) -> int:
    k = st.case_count
    if k == 0 or k == st.size:
        raise DataError(
            f"stratum {st.id} carries no information (k={k} of m={st.size})"
        )
    return k


def _stratum_bruteforce(beta: np.ndarray, st: Stratum, want_grad: bool):
    k = _check_stratum(st)
    if st.size > _BRUTEFORCE_MAX_M:
        raise DataError(
            f"stratum {st.id} too large for enumeration (m={st.size} > {_BRUTEFORCE_MAX_M})"
        )
    x = st.predictor_matrix()
    t = x @ beta
    subsets = list(itertools.combinations(range(st.size), k))
    sums = np.array([t[list(j)].sum() for j in subsets])
    smax = sums.max()
    weights = np.exp(sums - smax)
    total = weights.sum()
    logden = smax + math.log(total)
    case_idx = [i for i, ob in enumerate(st.members) if ob.y == 1]
    contrib = float(t[case_idx].sum() - logden)
    if not want_grad:
        return contrib, None
    subset_sums_x = np.array([x[list(j)].sum(axis=0) for j in subsets])
    grad_logden = (weights / total) @ subset_sums_x
    return contrib, x[case_idx].sum(axis=0) - grad_logden


def strata_loglik_bruteforce(beta, dataset: MatchedDataset) -> float:
    """General-strata conditional log-likelihood by enumerating all size-k
    subsets of each stratum (log-sum-exp stabilized, m capped at 20)."""
    b = _as_beta(beta, dataset.p)
    return sum(_stratum_bruteforce(b, st, False)[0] for st in dataset.strata)


def strata_score_bruteforce(beta, dataset: MatchedDataset) -> np.ndarray:
    """Gradient of strata_loglik_bruteforce, by direct enumeration."""
    b = _as_beta(beta, dataset.p)
    grad = np.zeros(dataset.p)
    for st in dataset.strata:
        grad += _stratum_bruteforce(b, st, True)[1]
    return grad


def _stratum_recursive(beta: np.ndarray, st: Stratum, order: int):
    """Per-stratum log-likelihood contribution via the elementary symmetric
    polynomial recursion, with derivatives carried alongside.

    With weights w_j = exp(t_j - tmax), the subset-sum denominator equals
    exp(k tmax) e_k(w), and e_k obeys B_r <- B_r + w_j B_{r-1} item by item.
    First (order >= 1) and second (order >= 2) derivatives in beta ride the
    same recursion; the tmax shift cancels in the ratios.
    Returns (loglik_contrib, grad_contrib, hess_of_logden).
    """
    k = _check_stratum(st)
    x = st.predictor_matrix()
    m, p = x.shape
    t = x @ beta
    tmax = float(t.max())
    w = np.exp(t - tmax)
    B = np.zeros(k + 1)
    B[0] = 1.0
    G = np.zeros((k + 1, p)) if order >= 1 else None
    H = np.zeros((k + 1, p, p)) if order >= 2 else None
    for j in range(m):
        wj = w[j]
        xj = x[j]
        for r in range(min(j + 1, k), 0, -1):
            if order >= 2:
                H[r] += wj * (
                    H[r - 1]
                    + np.outer(xj, G[r - 1])
                    + np.outer(G[r - 1], xj)
                    + np.outer(xj, xj) * B[r - 1]
                )
            if order >= 1:
                G[r] += wj * (G[r - 1] + xj * B[r - 1])
            B[r] += wj * B[r - 1]
    ek = B[k]
    case_idx = [i for i, ob in enumerate(st.members) if ob.y == 1]
    if ek <= 0.0:
        return -math.inf, None, None
    logden = k * tmax + math.log(ek)
    contrib = float(t[case_idx].sum() - logden)
    if order == 0:
        return contrib, None, None
    mu = G[k] / ek
    grad = x[case_idx].sum(axis=0) - mu
    if order == 1:
        return contrib, grad, None
    hess_logden = H[k] / ek - np.outer(mu, mu)
    return contrib, grad, hess_logden


def strata_loglik_recursive(beta, dataset: MatchedDataset) -> float:
    """General-strata conditional log-likelihood via the elementary symmetric
    polynomial recursion; O(m k) per stratum, no size cap."""
    b = _as_beta(beta, dataset.p)
    return sum(_stratum_recursive(b, st, 0)[0] for st in dataset.strata)


def strata_score_recursive(beta, dataset: MatchedDataset) -> np.ndarray:
    """Gradient of strata_loglik_recursive, carried through the recursion."""
    b = _as_beta(beta, dataset.p)
    grad = np.zeros(dataset.p)
    for st in dataset.strata:
        contrib, g, _ = _stratum_recursive(b, st, 1)
        if g is None:
            raise ValueError("log-likelihood underflow; beta too extreme")
        grad += g
    return grad


def strata_fisher_info_recursive(beta, dataset: MatchedDataset) -> np.ndarray:
    """Observed information of the general-strata likelihood: the sum over
    strata of the covariance of the size-k subset feature totals.  Positive
    semidefinite; equals the negative Hessian of strata_loglik_recursive."""
    b = _as_beta(beta, dataset.p)
    info = np.zeros((dataset.p, dataset.p))
    for st in dataset.strata:
        contrib, _, h = _stratum_recursive(b, st, 2)
        if h is None:
            raise ValueError("log-likelihood underflow; beta too extreme")
        info += h
    return (info + info.T) / 2.0


def fit_mle_strata(
    dataset: MatchedDataset, max_iter: int = 50, grad_tol: float | None = None
) -> FitResult:
    """Newton maximum likelihood for the general-strata conditional
    likelihood (recursion-based evaluators), starting at beta = 0.

    Convergence and divergence guards mirror fit_mle; the norm bound scales
    with the largest within-stratum centered predictor norm, since the
    likelihood only sees within-stratum contrasts.
    """
    n = dataset.n_strata
    if n == 0:
        raise DataError("dataset has no strata")
    p = dataset.p
    tol = 1e-8 * n if grad_tol is None else float(grad_tol)
    spread = 0.0
    for st in dataset.strata:
        x = st.predictor_matrix()
        centered = x - x.mean(axis=0)
        spread = max(spread, float(np.linalg.norm(centered, axis=1).max()))
    bound = 30.0 / spread if spread > 0 else math.inf
    beta, ll, updates, converged, gnorm, diagnostic = _newton_ascent(
        p,
        lambda b: strata_loglik_recursive(b, dataset),
        lambda b: strata_score_recursive(b, dataset),
        lambda b: strata_fisher_info_recursive(b, dataset),
        tol,
        max_iter,
        bound,
    )
    return FitResult(
        beta_hat=beta,
        info_at_hat=strata_fisher_info_recursive(beta, dataset),
        loglik=ll,
        iterations=updates,
        converged=converged,
        max_grad_norm=gnorm,
        n=n,
        diagnostic=diagnostic,
    )
