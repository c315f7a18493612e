"""Data model for stratified case-control observations.

CSV parsing and serialization, reduction of 1:1 discordant pairs to
case-minus-control difference vectors, and moment summaries of the
differences.  All types are immutable after construction and safe to share
across threads.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DataError",
    "Observation",
    "Stratum",
    "MatchedDataset",
    "PairedDifferences",
    "PairSummary",
    "parse_dataset",
    "load_dataset",
    "serialize_dataset",
    "pair_differences",
    "summarize",
]


class DataError(ValueError):
    """Malformed input data or a violated data contract."""


def _frozen(a) -> np.ndarray:
    # own a copy before locking, so a caller's array is never made read-only
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Observation:
    """One labeled observation: case/control label y and predictor vector x."""

    y: int
    x: np.ndarray

    def __post_init__(self):
        if self.y not in (0, 1):
            raise DataError("label must be 0 or 1")
        x = np.atleast_1d(np.asarray(self.x, dtype=float))
        if x.ndim != 1 or x.size == 0:
            raise DataError("predictor vector must be one-dimensional and nonempty")
        if not np.all(np.isfinite(x)):
            raise DataError("predictor values must be finite")
        object.__setattr__(self, "y", int(self.y))
        object.__setattr__(self, "x", _frozen(x))

    @property
    def p(self) -> int:
        return self.x.size


@dataclass(frozen=True, eq=False)
class Stratum:
    """A group of observations analyzed jointly (for example a case and its
    matched controls)."""

    id: str
    members: tuple[Observation, ...]

    def __post_init__(self):
        members = tuple(self.members)
        if not members:
            raise DataError(f"stratum {self.id} has no members")
        p = members[0].p
        if any(ob.p != p for ob in members):
            raise DataError(f"stratum {self.id} mixes predictor dimensions")
        object.__setattr__(self, "members", members)

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def case_count(self) -> int:
        return sum(ob.y for ob in self.members)

    @property
    def p(self) -> int:
        return self.members[0].p

    def predictor_matrix(self) -> np.ndarray:
        """Member predictors stacked as an (m, p) array, in member order."""
        return np.array([ob.x for ob in self.members])

    def labels(self) -> np.ndarray:
        return np.array([ob.y for ob in self.members])


@dataclass(frozen=True, eq=False)
class MatchedDataset:
    """Strata of labeled observations sharing predictor dimension p."""

    strata: tuple[Stratum, ...]
    p: int

    def __post_init__(self):
        strata = tuple(self.strata)
        ids = [st.id for st in strata]
        if len(set(ids)) != len(ids):
            raise DataError("stratum ids must be unique")
        if any(st.p != self.p for st in strata):
            raise DataError("all strata must share the dataset predictor dimension")
        object.__setattr__(self, "strata", strata)

    @property
    def n_strata(self) -> int:
        return len(self.strata)


@dataclass(frozen=True, eq=False)
class PairedDifferences:
    """Case-minus-control predictor differences, one row per pair."""

    z: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.z, dtype=float)
        if z.ndim == 1:
            z = z.reshape(-1, 1)
        if z.ndim != 2 or z.shape[0] < 1 or z.shape[1] < 1:
            raise DataError("differences must form a nonempty n-by-p array")
        if not np.all(np.isfinite(z)):
            raise DataError("differences must be finite")
        object.__setattr__(self, "z", _frozen(z))

    @property
    def n(self) -> int:
        return self.z.shape[0]

    @property
    def p(self) -> int:
        return self.z.shape[1]


@dataclass(frozen=True, eq=False)
class PairSummary:
    """Moment summaries of paired differences.

    mean is the average difference, cov_unbiased the n-1 normalized sample
    covariance (None when only one pair is available), and second_moment the
    n-normalized raw second moment.  The three are tied together by
    second_moment = ((n-1)/n) cov_unbiased + mean mean^T.
    """

    mean: np.ndarray
    cov_unbiased: np.ndarray | None
    second_moment: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mean", _frozen(np.asarray(self.mean, dtype=float)))
        if self.cov_unbiased is not None:
            object.__setattr__(
                self, "cov_unbiased", _frozen(np.asarray(self.cov_unbiased, dtype=float))
            )
        object.__setattr__(
            self, "second_moment", _frozen(np.asarray(self.second_moment, dtype=float))
        )


# ---------------------------------------------------------------------------
# CSV input / output
# ---------------------------------------------------------------------------
# Format: header `stratum,y,x1,...,xp`; `stratum` is an opaque string key,
# y is 0 or 1, predictors are decimal floats.  Lines starting with `#` and
# blank lines are ignored.  Errors carry 1-based physical line numbers.


def parse_dataset(source) -> MatchedDataset:
    """Parse a matched dataset from CSV text or a readable file object.

    Rows are grouped by stratum id in order of first appearance; row order
    within a stratum follows the file.
    """
    text = source.read() if hasattr(source, "read") else source
    header: list[str] | None = None
    p = 0
    groups: dict[str, list[Observation]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        fields = next(csv.reader([line]))
        if header is None:
            if len(fields) < 3 or fields[0].strip() != "stratum" or fields[1].strip() != "y":
                raise DataError(
                    f"expected header 'stratum,y,x1,...,xp' (line {lineno})"
                )
            header = fields
            p = len(fields) - 2
            continue
        if len(fields) != p + 2:
            raise DataError(
                f"expected {p + 2} columns, got {len(fields)} (line {lineno})"
            )
        stratum_id = fields[0].strip()
        label_text = fields[1].strip()
        try:
            label = int(label_text)
        except ValueError:
            raise DataError(f"label must be 0 or 1 (line {lineno})") from None
        if label not in (0, 1):
            raise DataError(f"label must be 0 or 1 (line {lineno})")
        values = np.empty(p)
        for j, cell in enumerate(fields[2:]):
            try:
                values[j] = float(cell)
            except ValueError:
                raise DataError(
                    f"predictor value {cell.strip()!r} is not a number (line {lineno})"
                ) from None
        if not np.all(np.isfinite(values)):
            raise DataError(f"predictor value must be finite (line {lineno})")
        groups.setdefault(stratum_id, []).append(Observation(y=label, x=values))
    if not groups:
        raise DataError("no data rows")
    strata = tuple(Stratum(id=sid, members=tuple(obs)) for sid, obs in groups.items())
    return MatchedDataset(strata=strata, p=p)


def load_dataset(path) -> MatchedDataset:
    """Read and parse a matched dataset from a CSV file (UTF-8)."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return parse_dataset(fh)


def serialize_dataset(dataset: MatchedDataset) -> str:
    """Render a dataset back to its CSV form (parse round-trips exactly)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["stratum", "y"] + [f"x{j + 1}" for j in range(dataset.p)])
    for st in dataset.strata:
        for ob in st.members:
            writer.writerow([st.id, ob.y] + [repr(float(v)) for v in ob.x])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Pair reduction and summaries
# ---------------------------------------------------------------------------


def pair_differences(dataset: MatchedDataset) -> PairedDifferences:
    """Reduce 1:1 discordant pairs to case-minus-control differences.

    Every stratum must hold exactly two observations with exactly one case;
    the orientation is fixed by the labels, not by row order.  Output rows
    follow the dataset's stratum order.
    """
    rows = np.empty((dataset.n_strata, dataset.p))
    for i, st in enumerate(dataset.strata):
        if st.size != 2 or st.case_count != 1:
            raise DataError(f"stratum {st.id} is not a 1:1 discordant pair")
        first, second = st.members
        case, control = (first, second) if first.y == 1 else (second, first)
        rows[i] = case.x - control.x
    if rows.shape[0] == 0:
        raise DataError("no pairs")
    return PairedDifferences(z=rows)


def summarize(z: PairedDifferences) -> PairSummary:
    """Mean, unbiased covariance, and raw second moment of the differences.

    The covariance needs at least two pairs and is None for n = 1.
    """
    zz = z.z
    n = z.n
    mean = zz.mean(axis=0)
    second = zz.T @ zz / n
    second = (second + second.T) / 2.0
    if n >= 2:
        centered = zz - mean
        cov = centered.T @ centered / (n - 1)
        cov = (cov + cov.T) / 2.0
    else:
        cov = None
    return PairSummary(mean=mean, cov_unbiased=cov, second_moment=second)
