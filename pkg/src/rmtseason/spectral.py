"""Segment correlation matrices, their spectra, and the Marchenko-Pastur reference.

For a K x T matrix of standardized segments the correlation matrix is
``C = M @ M.T / T``. If the segments were independent Gaussian noise the
eigenvalues of ``C`` would follow the Marchenko-Pastur law with
``Q = T / K``; eigenvalues outside its support ``[lambda_minus, lambda_plus]``
point at structure that recurs across segments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg

from rmtseason.errors import ConvergenceError, ValidationError
from rmtseason.segmentation import SegmentMatrix

RESIDUAL_TOL = 1e-8
SIGN_TOL = 1e-12


@dataclass(eq=False)
class CorrMatrix:
    """Symmetric K x K correlation matrix plus what it was computed from."""

    data: np.ndarray
    T: int
    period: Optional[str] = None
    observable: Optional[str] = None
    transform: Optional[str] = None
    labels: Optional[np.ndarray] = None

    @property
    def K(self) -> int:
        return self.data.shape[0]

    @property
    def Q(self) -> float:
        return self.T / self.K


@dataclass(frozen=True)
class MPReference:
    Q: float
    sigma: float
    lambda_minus: float
    lambda_plus: float


@dataclass(eq=False)
class Spectrum:
    """Eigenvalues in descending order with matching unit eigenvectors.

    ``eigenvectors[:, k - 1]`` belongs to ``eigenvalues[k - 1]``; every
    eigenvector is oriented so that its components sum to a non-negative
    number. ``outliers_above`` and ``outliers_below`` hold 1-based ranks.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    mp: MPReference
    outliers_above: list[int] = field(default_factory=list)
    outliers_below: list[int] = field(default_factory=list)

    @property
    def K(self) -> int:
        return len(self.eigenvalues)

    @property
    def lambda_1(self) -> float:
        return float(self.eigenvalues[0])

    def vector(self, k: int) -> np.ndarray:
        if not 1 <= k <= self.K:
            raise ValidationError(f"rank k={k} outside 1..{self.K}")
        return self.eigenvectors[:, k - 1]


@dataclass(frozen=True)
class Classification:
    bulk: list[int]
    above: list[int]
    below: list[int]
    lambda_1: float


def correlation_matrix(matrix: SegmentMatrix) -> CorrMatrix:
    """``C = M @ M.T / T`` for a row-standardized segment matrix.

    Each entry is its own dot product, so ``C[i, j]`` depends only on rows
    ``i`` and ``j`` and not on where they sit in the matrix. A blocked
    matrix product would be faster but its rounding depends on position,
    which breaks exact invariance under reordering the segments.
    """
    if matrix.K < 2:
        raise ValidationError(f"need at least 2 segments, got {matrix.K}")
    M = np.ascontiguousarray(matrix.data)
    K, T = M.shape
    C = np.empty((K, K))
    dot = np.dot
    for i in range(K):
        row = M[i]
        for j in range(i, K):
            C[i, j] = C[j, i] = dot(row, M[j]) / T
    return CorrMatrix(
        data=C,
        T=T,
        period=matrix.period.value,
        observable=matrix.observable.value,
        transform=matrix.transform.value,
        labels=matrix.labels.copy(),
    )


def mp_bounds(Q: float, sigma: float = 1.0) -> tuple[float, float]:
    """Edges of the Marchenko-Pastur support, ``sigma**2 * (1 + 1/Q -+ 2*sqrt(1/Q))``.

    The lower edge is returned as the formula gives it, without clamping.
    """
    if not (Q > 0 and sigma > 0):
        raise ValueError(f"Q and sigma must be positive (got Q={Q}, sigma={sigma})")
    s2 = sigma * sigma
    r = math.sqrt(1.0 / Q)
    return s2 * (1.0 + 1.0 / Q - 2.0 * r), s2 * (1.0 + 1.0 / Q + 2.0 * r)


def mp_density(lam, Q: float, sigma: float = 1.0):
    """Marchenko-Pastur eigenvalue density; zero outside the support and at 0.

    Accepts a scalar or an array and returns the same shape.
    """
    lo, hi = mp_bounds(Q, sigma)
    x = np.asarray(lam, dtype=np.float64)
    inside = (x > lo) & (x < hi) & (x > 0)
    out = np.zeros_like(x)
    xi = x[inside]
    out[inside] = Q / (2.0 * math.pi * sigma**2) * np.sqrt((hi - xi) * (xi - lo)) / xi
    return float(out) if out.ndim == 0 else out


def _orient(vectors: np.ndarray) -> np.ndarray:
    # component sum >= 0; a zero sum falls back to the first non-negligible entry
    sums = vectors.sum(axis=0)
    flip = sums < 0
    tie = np.abs(sums) <= SIGN_TOL
    if tie.any():
        for j in np.flatnonzero(tie):
            col = vectors[:, j]
            nz = np.flatnonzero(np.abs(col) > SIGN_TOL)
            flip[j] = bool(nz.size) and col[nz[0]] < 0
    return np.where(flip, -vectors, vectors)


def eigendecompose(
    C: CorrMatrix | np.ndarray,
    sigma: float = 1.0,
    margin: float = 0.0,
    T: int | None = None,
) -> Spectrum:
    """Full symmetric eigendecomposition, sorted by descending eigenvalue.

    Uses LAPACK ``dsyev`` (Householder tridiagonalization followed by
    implicitly shifted QL/QR). A bare ndarray may be passed for testing, in
    which case ``T`` sets the Marchenko-Pastur ratio (defaults to ``K``).

    Raises
    ------
    ConvergenceError
        If LAPACK reports non-convergence or any eigenpair residual
        ``max|C v - lambda v|`` exceeds ``1e-8`` (scaled by the matrix norm
        when that is above one).
    """
    if isinstance(C, CorrMatrix):
        A, T = C.data, C.T
    else:
        A = np.asarray(C, dtype=np.float64)
        T = A.shape[0] if T is None else T
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {A.shape}")
    K = A.shape[0]

    try:
        w, V = scipy.linalg.eigh(A, driver="ev", check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise ConvergenceError(f"symmetric eigensolver failed: {exc}") from exc

    order = np.argsort(-w, kind="stable")
    w = w[order]
    V = _orient(V[:, order])

    scale = max(1.0, float(np.max(np.abs(A))) if K else 1.0)
    residual = np.max(np.abs(A @ V - V * w), axis=0) if K else np.zeros(0)
    if np.any(residual > RESIDUAL_TOL * scale):
        worst = int(np.argmax(residual))
        raise ConvergenceError(
            f"eigenpair residual {residual[worst]:.3e} at rank {worst + 1} exceeds {RESIDUAL_TOL:g}",
            residuals=residual,
        )

    lo, hi = mp_bounds(T / K, sigma)
    spec = Spectrum(w, V, MPReference(T / K, sigma, lo, hi))
    cls = classify_spectrum(spec, margin)
    spec.outliers_above = cls.above
    spec.outliers_below = cls.below
    return spec


def classify_spectrum(spectrum: Spectrum, margin: float = 0.0) -> Classification:
    """Split eigenvalue ranks into bulk and outliers.

    An eigenvalue is an outlier above if it exceeds ``lambda_plus + margin``
    and below if it is under ``lambda_minus - margin``; ``margin=0`` gives
    the strict Marchenko-Pastur edges.
    """
    w = spectrum.eigenvalues
    ranks = np.arange(1, len(w) + 1)
    above = w > spectrum.mp.lambda_plus + margin
    below = w < spectrum.mp.lambda_minus - margin
    bulk = ~(above | below)
    return Classification(
        bulk=ranks[bulk].tolist(),
        above=ranks[above].tolist(),
        below=ranks[below].tolist(),
        lambda_1=float(w[0]),
    )


def eigenvalue_histogram(spectrum: Spectrum, bins: int = 50):
    """Empirical eigenvalue density next to the Marchenko-Pastur density.

    Returns ``(edges, empirical_density, mp_density)``, the last evaluated at
    bin centres.
    """
    w = spectrum.eigenvalues
    lo = min(float(w.min()), spectrum.mp.lambda_minus, 0.0)
    hi = max(float(w.max()), spectrum.mp.lambda_plus)
    if hi <= lo:
        hi = lo + 1.0
    dens, edges = np.histogram(w, bins=bins, range=(lo, hi), density=True)
    centres = 0.5 * (edges[:-1] + edges[1:])
    return edges, dens, mp_density(centres, spectrum.mp.Q, spectrum.mp.sigma)
