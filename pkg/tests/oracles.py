"""Independent reference implementations used only by the tests.

High-precision tail probabilities via mpmath, a pure-python Gauss-Jordan
linear solver, and scalar bisection.  Nothing here shares code with the
package's own numerics.
"""

import mpmath as mp


def chi2_sf_oracle(x, df, dps=50):
    """Upper chi-square tail at 50 decimal digits."""
    with mp.workdps(dps):
        return float(
            mp.gammainc(mp.mpf(df) / 2, a=mp.mpf(x) / 2, b=mp.inf, regularized=True)
        )


def f_sf_oracle(x, d1, d2, dps=50):
    """Upper F tail at 50 decimal digits."""
    with mp.workdps(dps):
        t = mp.mpf(d2) / (mp.mpf(d2) + mp.mpf(d1) * mp.mpf(x))
        return float(
            mp.betainc(mp.mpf(d2) / 2, mp.mpf(d1) / 2, 0, t, regularized=True)
        )


def gauss_jordan_solve(matrix, rhs):
    """Solve M x = b by Gauss-Jordan elimination with partial pivoting.

    Pure python lists; deliberately shares nothing with the package's
    Cholesky solves.
    """
    n = len(rhs)
    aug = [
        [float(matrix[i][j]) for j in range(n)] + [float(rhs[i])] for i in range(n)
    ]
    for col in range(n):
        pivot_row = max(range(col, n), key=lambda r: abs(aug[r][col]))
        if aug[pivot_row][col] == 0.0:
            raise ZeroDivisionError("singular matrix")
        aug[col], aug[pivot_row] = aug[pivot_row], aug[col]
        scale = aug[col][col]
        aug[col] = [v / scale for v in aug[col]]
        for row in range(n):
            if row != col and aug[row][col] != 0.0:
                factor = aug[row][col]
                aug[row] = [a - factor * b for a, b in zip(aug[row], aug[col])]
    return [aug[i][n] for i in range(n)]


def bisect_root(f, lo, hi, iterations=200):
    """Bisection for a sign change of f on [lo, hi]."""
    flo = f(lo)
    fhi = f(hi)
    if not (flo > 0) != (fhi > 0):
        raise ValueError("no sign change on the bracket")
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if (f(mid) > 0) == (flo > 0):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
