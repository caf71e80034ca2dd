"""Nonparametric two-sample tests and pool balancing.

The web-structure analysis compares cited pages against visited-but-uncited
pages with a two-sided Mann-Whitney U test and a two-sided two-sample
Kolmogorov-Smirnov test.  Both are implemented here directly so the exact
small-sample regime is under our control:

* Mann-Whitney switches to an exact p-value (full enumeration of rank
  assignments, computed with a counting recurrence) when the smaller sample
  has at most ``EXACT_MAX_N`` values and the pooled values are tie-free;
  otherwise it uses the normal approximation with tie-corrected variance
  and a continuity correction.
* KS uses the asymptotic Kolmogorov distribution with effective sample size
  ``n1 * n2 / (n1 + n2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

EXACT_MAX_N = 12

MW_EXACT = "mw_exact"
MW_NORMAL_APPROX = "mw_normal_approx"
KS_ASYMPTOTIC = "ks_asymptotic"


class StatError(ValueError):
    pass


@dataclass(frozen=True)
class Sample:
    """A labeled pool of finite real values."""

    label: str
    values: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        for v in vals:
            if not math.isfinite(v):
                raise StatError(f"sample {self.label!r}: non-finite value {v!r}")
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    method: str
    n1: int
    n2: int
    degenerate: bool = False

    def __post_init__(self):
        if not (0.0 <= self.p_value <= 1.0):
            raise StatError(f"p-value out of range: {self.p_value}")

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "p_value": self.p_value,
            "method": self.method,
            "n1": self.n1,
            "n2": self.n2,
            "degenerate": self.degenerate,
            "stars": significance_stars(self.p_value),
        }


def significance_stars(p: float) -> str:
    """Footnote stars: *** p<0.001, ** p<0.01, * p<0.05."""
    if p < 0.001:
        return "***"
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    return ""


def balance_downsample(larger: Sample, target_n: int, seed: int) -> Sample:
    """Uniform sample without replacement, deterministic under (seed, order).

    Selected values keep their input order; the input sample is untouched.
    """
    if target_n > len(larger):
        raise StatError(
            f"target_n {target_n} exceeds sample size {len(larger)}"
        )
    rng = np.random.Generator(np.random.PCG64(seed))
    idx = rng.choice(len(larger), size=target_n, replace=False)
    idx.sort()
    return Sample(label=larger.label, values=tuple(larger.values[i] for i in idx))


def _midranks(pooled: np.ndarray) -> np.ndarray:
    """Fractional (mid) ranks, 1-based; ties share the mean rank."""
    order = np.argsort(pooled, kind="mergesort")
    ranks = np.empty(len(pooled), dtype=float)
    sorted_vals = pooled[order]
    i = 0
    while i < len(sorted_vals):
        j = i
        while j + 1 < len(sorted_vals) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        mid = (i + j) / 2.0 + 1.0
        ranks[order[i : j + 1]] = mid
        i = j + 1
    return ranks


def _u_statistics(a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    n1, n2 = len(a), len(b)
    ranks = _midranks(np.concatenate([a, b]))
    r_a = float(ranks[:n1].sum())
    u_a = r_a - n1 * (n1 + 1) / 2.0
    return u_a, n1 * n2 - u_a


def _u_count_distribution(m: int, n: int) -> list[int]:
    """Number of rank assignments with each U value, for group sizes m, n.

    Counting recurrence c(m, n, u) = c(m-1, n, u-n) + c(m, n-1, u); the
    result has length m*n + 1 and sums to C(m+n, m).
    """
    row: list[list[int]] = [[1] for _ in range(n + 1)]  # m' = 0
    for mi in range(1, m + 1):
        new_row: list[list[int]] = [[1]]  # n' = 0 forces U = 0
        for ni in range(1, n + 1):
            size = mi * ni + 1
            counts = [0] * size
            shifted = row[ni]  # c(mi-1, ni, u - ni)
            for u, c in enumerate(shifted):
                counts[u + ni] += c
            for u, c in enumerate(new_row[ni - 1]):  # c(mi, ni-1, u)
                counts[u] += c
            new_row.append(counts)
        row = new_row
    return row[n]


def _normal_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def mann_whitney_u(a: Sample, b: Sample) -> TestResult:
    """Two-sided Mann-Whitney U test; U is reported for sample ``a``.

    Exact enumeration p-value when min(n1, n2) <= EXACT_MAX_N and the pooled
    values carry no ties; otherwise the normal approximation with
    tie-corrected variance and continuity correction.  When every pooled
    value is identical the result degenerates to p = 1 at the central U.
    """
    if len(a) == 0 or len(b) == 0:
        raise StatError("mann_whitney_u requires non-empty samples")
    x = np.asarray(a.values, dtype=float)
    y = np.asarray(b.values, dtype=float)
    n1, n2 = len(x), len(y)
    u_a, u_b = _u_statistics(x, y)
    pooled = np.concatenate([x, y])
    has_ties = len(np.unique(pooled)) < len(pooled)

    if not has_ties and min(n1, n2) <= EXACT_MAX_N:
        counts = _u_count_distribution(n1, n2)
        total = sum(counts)
        u_min = min(u_a, u_b)
        cum = sum(counts[u] for u in range(int(u_min) + 1))
        p = min(1.0, (2 * cum) / total)
        return TestResult(u_a, p, MW_EXACT, n1, n2)

    # tie-corrected variance for the normal approximation
    n = n1 + n2
    _, tie_counts = np.unique(pooled, return_counts=True)
    tie_term = float(((tie_counts**3) - tie_counts).sum())
    var = n1 * n2 / 12.0 * ((n + 1) - tie_term / (n * (n - 1)))
    mean = n1 * n2 / 2.0
    if var <= 0:
        return TestResult(mean, 1.0, MW_NORMAL_APPROX, n1, n2, degenerate=True)
    z = max(0.0, abs(u_a - mean) - 0.5) / math.sqrt(var)
    p = min(1.0, 2.0 * _normal_sf(z))
    return TestResult(u_a, p, MW_NORMAL_APPROX, n1, n2)


def _kolmogorov_sf(lam: float) -> float:
    """Asymptotic Kolmogorov survival function Q(lam) = 2*sum (-1)^(k-1) exp(-2 k^2 lam^2)."""
    if lam <= 0:
        return 1.0
    total = 0.0
    sign = 1.0
    prev_term = 0.0
    for k in range(1, 101):
        term = 2.0 * math.exp(-2.0 * k * k * lam * lam)
        total += sign * term
        if term <= 1e-3 * prev_term or term < 1e-12 * abs(total):
            return min(1.0, max(0.0, total))
        prev_term = term
        sign = -sign
    return 1.0  # no convergence: lam tiny, distributions indistinguishable


def ks_two_sample(a: Sample, b: Sample) -> TestResult:
    """Two-sample Kolmogorov-Smirnov test with asymptotic p-value.

    D is the supremum of |ECDF_a - ECDF_b| over all pooled points; the
    p-value uses the Kolmogorov distribution at sqrt(n1*n2/(n1+n2)) * D.
    """
    if len(a) == 0 or len(b) == 0:
        raise StatError("ks_two_sample requires non-empty samples")
    x = np.sort(np.asarray(a.values, dtype=float))
    y = np.sort(np.asarray(b.values, dtype=float))
    n1, n2 = len(x), len(y)
    pooled = np.concatenate([x, y])
    cdf_x = np.searchsorted(x, pooled, side="right") / n1
    cdf_y = np.searchsorted(y, pooled, side="right") / n2
    d = float(np.max(np.abs(cdf_x - cdf_y)))
    if d == 0.0:
        return TestResult(0.0, 1.0, KS_ASYMPTOTIC, n1, n2)
    n_eff = n1 * n2 / (n1 + n2)
    p = _kolmogorov_sf(math.sqrt(n_eff) * d)
    return TestResult(d, p, KS_ASYMPTOTIC, n1, n2)
