"""Distribution of off-diagonal correlations and the most correlated segment pairs."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import ndtr

from rmtseason.errors import ValidationError
from rmtseason.segmentation import Period, SegmentMatrix
from rmtseason.spectral import CorrMatrix

_SERIES_EPS = 1e-12


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float


@dataclass(eq=False)
class OffDiagSummary:
    n: int
    mean: float
    stdev: float
    skewness: Optional[float]
    excess_kurtosis: Optional[float]
    edges: np.ndarray
    density: np.ndarray
    ks: Optional[TestResult] = None
    jb: Optional[TestResult] = None
    degenerate: bool = False

    @property
    def histogram(self) -> tuple[np.ndarray, np.ndarray]:
        return self.edges, self.density

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "mean": self.mean,
            "stdev": self.stdev,
            "skewness": self.skewness,
            "excess_kurtosis": self.excess_kurtosis,
            "degenerate": self.degenerate,
            "histogram": {"edges": self.edges.tolist(), "density": self.density.tolist()},
            "ks": None if self.ks is None else {"statistic": self.ks.statistic, "p_value": self.ks.p_value},
            "jb": None if self.jb is None else {"statistic": self.jb.statistic, "p_value": self.jb.p_value},
        }


@dataclass(frozen=True)
class RankedPair:
    label_a: int
    label_b: int
    value: float
    peak_index: int


def kolmogorov_sf(x: float) -> float:
    """P(K > x) for the limiting Kolmogorov distribution.

    The alternating series ``2 * sum (-1)**(k-1) exp(-2 k**2 x**2)`` is used
    for x >= 1 and the Jacobi theta form of the CDF below that, where the
    alternating series converges slowly. Both are cut once a term drops
    under 1e-12.
    """
    if x <= 0:
        return 1.0
    if x < 1.0:
        c = -math.pi**2 / (8.0 * x * x)
        total, k = 0.0, 1
        while True:
            term = math.exp(c * (2 * k - 1) ** 2)
            total += term
            if term < _SERIES_EPS:
                break
            k += 1
        cdf = math.sqrt(2.0 * math.pi) / x * total
        return min(1.0, max(0.0, 1.0 - cdf))
    total, k, sign = 0.0, 1, 1.0
    while True:
        term = math.exp(-2.0 * k * k * x * x)
        total += sign * term
        if term < _SERIES_EPS:
            break
        sign, k = -sign, k + 1
    return min(1.0, max(0.0, 2.0 * total))


def _histogram(values: np.ndarray, bins: int) -> tuple[np.ndarray, np.ndarray]:
    lo, hi = float(values.min()), float(values.max())
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    counts, edges = np.histogram(values, bins=bins, range=(lo, hi))
    return edges, counts / (len(values) * np.diff(edges))


def summarize_elements(values, bins: int = 50) -> OffDiagSummary:
    """Moments, histogram and normality tests of a flat sample.

    This is the workhorse behind :func:`offdiag_summary`; it is public so a
    sample can be fed in directly. The Kolmogorov-Smirnov test is run
    against a normal with the sample mean and standard deviation (so its
    p-value is only approximate). The Jarque-Bera statistic is
    ``n/6 * (S**2 + kurt**2 / 4)`` with a chi-square(2) tail. A sample with
    zero spread is flagged ``degenerate`` and gets no tests.
    """
    # sorted first so every moment is independent of the input order
    x = np.sort(np.asarray(values, dtype=np.float64).ravel())
    n = len(x)
    if n < 2:
        raise ValidationError("need at least 2 elements")
    if bins < 2:
        raise ValidationError("need at least 2 histogram bins")
    mean = float(x.mean())
    d = x - mean
    m2 = float(np.mean(d * d))
    edges, density = _histogram(x, bins)
    if m2 == 0.0:
        return OffDiagSummary(n, mean, 0.0, None, None, edges, density, degenerate=True)

    m3 = float(np.mean(d**3))
    m4 = float(np.mean(d**4))
    skew = m3 / m2**1.5
    kurt = m4 / (m2 * m2) - 3.0
    stdev = math.sqrt(m2)

    jb_stat = n / 6.0 * (skew * skew + kurt * kurt / 4.0)
    jb = TestResult(jb_stat, math.exp(-jb_stat / 2.0))

    cdf = ndtr(d / stdev)
    i = np.arange(1, n + 1)
    D = float(max(np.max(i / n - cdf), np.max(cdf - (i - 1) / n)))
    ks = TestResult(D, kolmogorov_sf(math.sqrt(n) * D))

    return OffDiagSummary(n, mean, stdev, skew, kurt, edges, density, ks=ks, jb=jb)


def upper_triangle(C: CorrMatrix | np.ndarray) -> np.ndarray:
    A = C.data if isinstance(C, CorrMatrix) else np.asarray(C)
    return A[np.triu_indices(A.shape[0], k=1)]


def offdiag_summary(C: CorrMatrix, bins: int = 50) -> OffDiagSummary:
    """Summarize the K(K-1)/2 strictly-upper-triangle elements of ``C``."""
    K = C.K if isinstance(C, CorrMatrix) else np.asarray(C).shape[0]
    if K < 3:
        raise ValidationError(f"need K >= 3 for an off-diagonal summary, got {K}")
    return summarize_elements(upper_triangle(C), bins)


def rank_pairs(matrix: SegmentMatrix, C: CorrMatrix, top_n: int = 18) -> list[RankedPair]:
    """The ``top_n`` largest off-diagonal elements as labelled segment pairs.

    Ordered by value descending, ties by ``(label_a, label_b)``. For each pair
    ``peak_index`` is the in-segment position where the product of the two
    standardized rows is largest.
    """
    K = matrix.K
    if C.K != K:
        raise ValidationError(f"correlation matrix is {C.K}x{C.K} but segments have {K} rows")
    n_pairs = K * (K - 1) // 2
    if not 0 <= top_n <= n_pairs:
        raise ValidationError(f"top_n={top_n} outside 0..{n_pairs}")
    a, b = np.triu_indices(K, k=1)
    vals = C.data[a, b]
    # lexsort: last key is primary
    order = np.lexsort((matrix.labels[b], matrix.labels[a], -vals))[:top_n]
    out = []
    for j in order:
        ia, ib = int(a[j]), int(b[j])
        prod = matrix.data[ia] * matrix.data[ib]
        out.append(
            RankedPair(
                label_a=int(matrix.labels[ia]),
                label_b=int(matrix.labels[ib]),
                value=float(vals[j]),
                peak_index=int(np.argmax(prod)),
            )
        )
    return out


def peak_time(period: Period, index: int, delta_t: float) -> str:
    """In-period clock time of a bin index, e.g. ``12:30:00`` or ``Fri 12:30:00``."""
    seconds = int(round(index * delta_t))
    day, rem = divmod(seconds, 86_400)
    clock = f"{rem // 3600:02d}:{rem % 3600 // 60:02d}:{rem % 60:02d}"
    if Period(period) is Period.WEEK:
        return f"{('Sun', 'Mon', 'Tue', 'Wed', 'Thu', 'Fri', 'Sat')[day % 7]} {clock}"
    return clock
