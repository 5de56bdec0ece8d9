"""Hourly nuclear outage samples and the uncertainty budgets derived from them.

Monthly unplanned outage hours observed on real plants are turned into hourly
on/off indicator rows: every non-zero month holds one contiguous incident whose
start hour is uniform over all positions that keep it inside the month.  The
annual (AOP) and simultaneous (MOP) budgets are Monte Carlo quantiles over
fleets of ``n`` such rows.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .case import HOURS_PER_YEAR, MONTH_HOURS, MONTH_STARTS
from .errors import DataValidationError, InvalidParameterError
from .rng import stream

_HOURS = np.array(MONTH_HOURS, dtype=np.int64)
_STARTS = np.array(MONTH_STARTS, dtype=np.int64)

# trials per RNG sub-stream in ``percentiles``; part of the reproducibility contract
TRIAL_BLOCK = 1000


@dataclass(frozen=True, eq=False)
class MonthlyOutageData:
    """``samples[i, m]``: unplanned outage hours of record ``i`` in month ``m``."""

    samples: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.samples)
        if arr.ndim != 2 or arr.shape[1] != 12 or arr.shape[0] < 1:
            raise DataValidationError(f"monthly outage data must be NM x 12 with NM >= 1, got {arr.shape}")
        if not np.all(np.isfinite(arr)) or np.any(arr != np.round(arr)):
            raise DataValidationError("monthly outage hours must be whole numbers")
        arr = arr.astype(np.int64)
        if np.any(arr < 0) or np.any(arr > _HOURS):
            bad = np.argwhere((arr < 0) | (arr > _HOURS))[0]
            raise DataValidationError(
                f"record {bad[0]}, month {bad[1] + 1}: {arr[tuple(bad)]} h outside [0, {MONTH_HOURS[bad[1]]}]"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    @property
    def n_records(self) -> int:
        return self.samples.shape[0]

    @classmethod
    def from_csv(cls, path) -> "MonthlyOutageData":
        text = Path(path).read_text(encoding="utf-8").splitlines()
        rows = [ln for ln in text if ln.strip()]
        if rows and not _is_numeric_row(rows[0]):
            rows = rows[1:]
        return cls(np.array([[float(v) for v in ln.split(",")] for ln in rows]))

    def to_csv(self, path) -> None:
        header = "jan,feb,mar,apr,may,jun,jul,aug,sep,oct,nov,dec"
        lines = [header] + [",".join(str(int(v)) for v in row) for row in self.samples]
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _is_numeric_row(line: str) -> bool:
    try:
        [float(v) for v in line.split(",")]
    except ValueError:
        return False
    return True


@dataclass(frozen=True, eq=False)
class OutageMatrix:
    """Hourly outage indicators, one row per simulated unit.

    ``rows`` is an (N, 8760) uint8 array; ``source`` records which data record
    each row was drawn from.
    """

    rows: np.ndarray
    source: np.ndarray

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.uint8)
        if rows.ndim != 2 or rows.shape[1] != HOURS_PER_YEAR:
            raise DataValidationError(f"outage matrix must be N x {HOURS_PER_YEAR}")
        src = np.asarray(self.source, dtype=np.int64)
        rows.setflags(write=False)
        src.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "source", src)

    def __len__(self) -> int:
        return self.rows.shape[0]

    def at_steps(self, ts: int) -> np.ndarray:
        """Indicator of each row at the first hour of every ``ts``-hour step."""
        n_steps = HOURS_PER_YEAR // ts
        return self.rows[:, : n_steps * ts : ts]

    def annual_hours(self) -> np.ndarray:
        return self.rows.sum(axis=1, dtype=np.int64)


@dataclass(frozen=True)
class Budgets:
    n: int
    alpha: float
    aop: float  # unit-hours per year
    mop: float  # simultaneous units
    seed: int | None = None

    def __post_init__(self):
        if not 0 <= self.mop <= self.n:
            raise DataValidationError("MOP must lie in [0, n]")
        if not 0 <= self.aop <= HOURS_PER_YEAR * self.n:
            raise DataValidationError("AOP must lie in [0, 8760 n]")

    def to_json(self) -> str:
        return json.dumps({"n": self.n, "alpha": self.alpha, "aop": self.aop, "mop": self.mop, "seed": self.seed})


def quantile(values, alpha: float, method: str = "inclusive"):
    """Empirical ``alpha``-quantile.

    ``inclusive`` (default) returns the ``ceil(alpha * len)``-th smallest
    value.  Any other ``method`` is forwarded to :func:`numpy.quantile`.
    """
    arr = np.asarray(values)
    if arr.size == 0:
        raise InvalidParameterError("quantile of an empty collection")
    if not 0 < alpha <= 1:
        raise InvalidParameterError("alpha must lie in (0, 1]")
    if method != "inclusive":
        return np.quantile(arr, alpha, method=method)
    # guard against alpha*len landing a hair above an integer
    k = max(1, math.ceil(alpha * arr.size - 1e-9))
    return np.partition(arr.ravel(), k - 1)[k - 1]


def _draw_incidents(rng: np.random.Generator, shape: tuple, data: MonthlyOutageData):
    """Source ids (shape) and per-month (start hour, duration) of each incident."""
    ids = rng.integers(0, data.n_records, size=shape)
    dur = data.samples[ids]  # shape + (12,)
    offset = rng.integers(0, _HOURS - dur + 1)  # inclusive of the last admissible start
    start = _STARTS + offset
    return ids, start, dur


def generate_outage_samples(n: int, data: MonthlyOutageData, rng: np.random.Generator) -> OutageMatrix:
    """Draw ``n`` hourly outage rows from monthly records."""
    if n < 0:
        raise InvalidParameterError("n must be >= 0")
    ids, start, dur = _draw_incidents(rng, (n,), data)
    rows = np.zeros((n, HOURS_PER_YEAR), dtype=np.uint8)
    if n:
        # +1 at incident start, -1 one past its end, then a running sum
        diff = np.zeros((n, HOURS_PER_YEAR + 1), dtype=np.int16)
        r = np.repeat(np.arange(n), 12)
        s, d = start.ravel(), dur.ravel()
        live = d > 0
        np.add.at(diff, (r[live], s[live]), 1)
        np.add.at(diff, (r[live], s[live] + d[live]), -1)
        rows = np.cumsum(diff[:, :HOURS_PER_YEAR], axis=1).astype(np.uint8)
    return OutageMatrix(rows, ids)


def outage_statistics(n: int, n_trials: int, data: MonthlyOutageData, seed: int, key=()) -> tuple[np.ndarray, np.ndarray]:
    """Per trial: total outage unit-hours and the peak number of units out at once.

    Trials are processed in blocks of :data:`TRIAL_BLOCK`; block ``k`` uses
    sub-stream ``(*key, k)`` of ``seed`` so results do not depend on how
    blocks are scheduled.
    """
    totals = np.empty(n_trials, dtype=np.int64)
    peaks = np.empty(n_trials, dtype=np.int64)
    for k, lo in enumerate(range(0, n_trials, TRIAL_BLOCK)):
        b = min(TRIAL_BLOCK, n_trials - lo)
        rng = stream(seed, *key, k)
        _, start, dur = _draw_incidents(rng, (b, n), data)
        totals[lo : lo + b] = dur.sum(axis=(1, 2))
        diff = np.zeros((b, HOURS_PER_YEAR + 1), dtype=np.int32)
        trial = np.broadcast_to(np.arange(b)[:, None, None], start.shape).ravel()
        s, d = start.ravel(), dur.ravel()
        live = d > 0
        np.add.at(diff, (trial[live], s[live]), 1)
        np.add.at(diff, (trial[live], s[live] + d[live]), -1)
        peaks[lo : lo + b] = np.cumsum(diff, axis=1).max(axis=1)
    return totals, peaks


def percentiles(
    n: int,
    alpha: float,
    n_trials: int,
    data: MonthlyOutageData,
    seed: int,
    key=("percentiles",),
    method: str = "inclusive",
) -> Budgets:
    """Monte Carlo estimate of the annual (AOP) and simultaneous (MOP) outage budgets."""
    if n < 1:
        raise InvalidParameterError("n must be >= 1")
    if n_trials < 1:
        raise InvalidParameterError("number of trials must be >= 1")
    totals, peaks = outage_statistics(n, n_trials, data, seed, key=(*key, n))
    return Budgets(
        n=n,
        alpha=float(alpha),
        aop=float(quantile(totals, alpha, method)),
        mop=float(quantile(peaks, alpha, method)),
        seed=seed,
    )
