"""Numerical kernels: dense SPD factorization and solves, chi-square and F
tail probabilities, finite differences, and a reproducible random stream.

Self-contained on top of numpy arrays.  Every matrix inverted anywhere in
this package (covariances, second-moment matrices, information matrices) is
symmetric positive definite by contract, so Cholesky is the only
factorization provided; near-singular input raises
:class:`SingularMatrixError` instead of being silently regularized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SingularMatrixError",
    "SpdFactor",
    "spd_factor",
    "quad_form_inv",
    "chi2_sf",
    "f_sf",
    "finite_diff_grad",
    "RandomStream",
    "normal_stream",
    "draw_std_normal",
    "draw_mvn",
    "derive_seed",
]


class SingularMatrixError(ValueError):
    """A matrix that must be positive definite is (numerically) not."""


# ---------------------------------------------------------------------------
# SPD factorization and solves
# ---------------------------------------------------------------------------

_SYMMETRY_RTOL = 1e-12
_PIVOT_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class SpdFactor:
    """Lower-triangular Cholesky factor L of a symmetric positive-definite
    matrix M = L L^T, with strictly positive diagonal."""

    lower: np.ndarray
    dim: int

    def solve(self, b) -> np.ndarray:
        """Return M^{-1} b via forward and back substitution."""
        b = np.asarray(b, dtype=float)
        if b.shape != (self.dim,):
            raise ValueError("dimension mismatch")
        w = _forward_sub(self.lower, b)
        return _back_sub(self.lower, w)

    def inverse(self) -> np.ndarray:
        """Dense M^{-1} (column-by-column solve; dimensions here are small)."""
        cols = [self.solve(e) for e in np.eye(self.dim)]
        inv = np.column_stack(cols) if self.dim else np.zeros((0, 0))
        return (inv + inv.T) / 2.0


def _forward_sub(lower: np.ndarray, b: np.ndarray) -> np.ndarray:
    w = np.empty_like(b)
    for i in range(b.shape[0]):
        w[i] = (b[i] - lower[i, :i] @ w[:i]) / lower[i, i]
    return w


def _back_sub(lower: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = b.shape[0]
    x = np.empty_like(b)
    for i in range(n - 1, -1, -1):
        x[i] = (b[i] - lower[i + 1 :, i] @ x[i + 1 :]) / lower[i, i]
    return x


def spd_factor(m) -> SpdFactor:
    """Cholesky-factor a symmetric positive-definite matrix.

    Raises ValueError if `m` is not square-symmetric (within 1e-12 relative)
    and SingularMatrixError if any pivot falls at or below
    p * 1e-12 * max(diag), which signals a singular or indefinite input
    (for example constant differences, or fewer observations than
    dimensions).
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("matrix must be square")
    scale = 1.0 + (np.max(np.abs(m)) if m.size else 0.0)
    if m.size and np.max(np.abs(m - m.T)) > _SYMMETRY_RTOL * scale:
        raise ValueError("matrix not symmetric")
    p = m.shape[0]
    pivot_floor = p * _PIVOT_RTOL * (np.max(np.diag(m)) if p else 0.0)
    lower = np.zeros_like(m)
    for j in range(p):
        pivot = m[j, j] - lower[j, :j] @ lower[j, :j]
        if not pivot > pivot_floor:
            raise SingularMatrixError("matrix not positive definite")
        lower[j, j] = math.sqrt(pivot)
        for i in range(j + 1, p):
            lower[i, j] = (m[i, j] - lower[i, :j] @ lower[j, :j]) / lower[j, j]
    return SpdFactor(lower=lower, dim=p)


def quad_form_inv(v, factor: SpdFactor) -> float:
    """v^T M^{-1} v for the factored SPD matrix M.

    Computed as the squared norm of the forward-substitution solve
    L w = v, which is nonnegative by construction and exactly zero for
    v = 0.
    """
    v = np.asarray(v, dtype=float)
    if v.shape != (factor.dim,):
        raise ValueError("dimension mismatch")
    w = _forward_sub(factor.lower, v)
    return float(w @ w)


# ---------------------------------------------------------------------------
# Tail probabilities via incomplete gamma / beta
# ---------------------------------------------------------------------------
# Regularized incomplete gamma: series expansion below the a+1 crossover,
# Lentz continued fraction above it.  Regularized incomplete beta: Lentz
# continued fraction with the symmetry transform.  Both converge to relative
# machine precision well inside the iteration caps for the degrees of
# freedom that occur here.

_CONVERGENCE_EPS = 1e-16
_MAX_ITER = 500
_TINY = 1e-300


def _lower_gamma_series(a: float, x: float) -> float:
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _CONVERGENCE_EPS:
            return total * math.exp(-x + a * math.log(x) - math.lgamma(a))
    raise RuntimeError("incomplete gamma series did not converge")


def _upper_gamma_contfrac(a: float, x: float) -> float:
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CONVERGENCE_EPS:
            return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h
    raise RuntimeError("incomplete gamma continued fraction did not converge")


def _reg_gamma_q(a: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(a, x)."""
    if x == 0.0:
        return 1.0
    if x < a + 1.0:
        return min(1.0, max(0.0, 1.0 - _lower_gamma_series(a, x)))
    return min(1.0, max(0.0, _upper_gamma_contfrac(a, x)))


def _beta_contfrac(a: float, b: float, x: float) -> float:
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_ITER):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CONVERGENCE_EPS:
            return h
    raise RuntimeError("incomplete beta continued fraction did not converge")


def _reg_beta(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        value = front * _beta_contfrac(a, b, x) / a
    else:
        value = 1.0 - front * _beta_contfrac(b, a, 1.0 - x) / b
    return min(1.0, max(0.0, value))


def _check_df(df, name: str) -> int:
    d = int(df)
    if d != df or d < 1:
        raise ValueError(f"{name} must be a positive integer")
    return d


def chi2_sf(x, df) -> float:
    """Upper tail P(X > x) of the chi-square distribution with df degrees
    of freedom."""
    d = _check_df(df, "df")
    x = float(x)
    if x < 0.0:
        raise ValueError("x must be nonnegative")
    return _reg_gamma_q(0.5 * d, 0.5 * x)


def f_sf(x, d1, d2) -> float:
    """Upper tail P(X > x) of the F distribution with (d1, d2) degrees of
    freedom."""
    d1 = _check_df(d1, "d1")
    d2 = _check_df(d2, "d2")
    x = float(x)
    if x < 0.0:
        raise ValueError("x must be nonnegative")
    return _reg_beta(0.5 * d2, 0.5 * d1, d2 / (d2 + d1 * x))


# ---------------------------------------------------------------------------
# Finite differences
# ---------------------------------------------------------------------------


def finite_diff_grad(f, x0, h: float = 1e-6) -> np.ndarray:
    """Central-difference gradient of a scalar function of a vector."""
    x0 = np.asarray(x0, dtype=float)
    grad = np.empty_like(x0)
    for j in range(x0.size):
        xp = x0.copy()
        xp[j] += h
        xm = x0.copy()
        xm[j] -= h
        fp = float(f(xp))
        fm = float(f(xm))
        if not (math.isfinite(fp) and math.isfinite(fm)):
            raise ValueError(f"non-finite function value near coordinate {j}")
        grad[j] = (fp - fm) / (2.0 * h)
    return grad


# ---------------------------------------------------------------------------
# Reproducible random stream
# ---------------------------------------------------------------------------

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_INV_2_53 = 2.0 ** -53


def _mix64(z: int) -> int:
    """splitmix64 avalanche mix of one 64-bit value (python ints)."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return z ^ (z >> 31)


def derive_seed(base_seed: int, index: int) -> int:
    """Independent substream seed: base_seed XOR hash(index).

    Used to give parallel consumers (one per replicate index) their own
    streams without sharing state.
    """
    return (int(base_seed) ^ _mix64(((int(index) + 1) * _GAMMA) & _MASK64)) & _MASK64


class RandomStream:
    """Deterministic random stream over a 64-bit additive-state generator.

    The raw stream is the splitmix64 sequence: the state advances by a fixed
    odd constant per draw and each output applies a strong avalanche mix to
    the state.  Uniforms take the top 53 bits.  Standard normals use the
    trigonometric Box-Muller transform, consuming exactly two uniforms per
    pair; the spare variate is cached, so scalar and batched draws walk the
    same sequence.  Because the state advance is additive, a whole block of
    raw outputs can be formed in one vectorized step without changing the
    sequence.

    Identical seeds give bit-identical raw streams everywhere; float variates
    are bit-identical given the same numpy/libm build.  A stream is
    single-owner: share seeds (see :func:`derive_seed`), not instances.
    """

    def __init__(self, seed: int):
        self._seed = int(seed) & _MASK64
        self._state = self._seed
        self._spare: float | None = None

    @property
    def seed(self) -> int:
        return self._seed

    def _raw(self, count: int) -> np.ndarray:
        steps = np.arange(1, count + 1, dtype=np.uint64)
        z = np.uint64(self._state) + np.uint64(_GAMMA) * steps
        self._state = (self._state + _GAMMA * count) & _MASK64
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
        return z ^ (z >> np.uint64(31))

    def uniform(self, count: int | None = None):
        """U[0, 1) variates; scalar when count is None, else ndarray."""
        u = (self._raw(1 if count is None else int(count)) >> np.uint64(11)).astype(
            np.float64
        ) * _INV_2_53
        return float(u[0]) if count is None else u

    def normal(self, count: int | None = None):
        """Standard normal variates; scalar when count is None, else ndarray."""
        m = 1 if count is None else int(count)
        out = np.empty(m)
        filled = 0
        if self._spare is not None and m > 0:
            out[0] = self._spare
            self._spare = None
            filled = 1
        need = m - filled
        if need > 0:
            pairs = (need + 1) // 2
            raw = self._raw(2 * pairs)
            # u1 in (0, 1] keeps the log finite; u2 in [0, 1).
            u1 = ((raw[0::2] >> np.uint64(11)).astype(np.float64) + 1.0) * _INV_2_53
            u2 = (raw[1::2] >> np.uint64(11)).astype(np.float64) * _INV_2_53
            radius = np.sqrt(-2.0 * np.log(u1))
            angle = (2.0 * math.pi) * u2
            block = np.empty(2 * pairs)
            block[0::2] = radius * np.cos(angle)
            block[1::2] = radius * np.sin(angle)
            out[filled:] = block[:need]
            self._spare = float(block[need]) if need < 2 * pairs else None
        return float(out[0]) if count is None else out


def normal_stream(seed: int) -> RandomStream:
    """Create a RandomStream from a 64-bit seed."""
    return RandomStream(seed)


def draw_std_normal(stream: RandomStream) -> float:
    """One standard normal variate."""
    return stream.normal()


def draw_mvn(stream: RandomStream, mean, chol: SpdFactor, count: int | None = None):
    """Multivariate normal draw(s) mean + L g with g standard normal.

    `chol` is the factor of the target covariance.  Returns a (p,) vector
    when count is None, else a (count, p) array.
    """
    mean = np.asarray(mean, dtype=float)
    if mean.shape != (chol.dim,):
        raise ValueError("dimension mismatch")
    if count is None:
        g = stream.normal(chol.dim)
        return mean + chol.lower @ g
    g = stream.normal(int(count) * chol.dim).reshape(int(count), chol.dim)
    return mean + g @ chol.lower.T
