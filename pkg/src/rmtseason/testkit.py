"""Seeded synthetic segment matrices and closed-form eigenvalue oracles.

Random stream
-------------
Everything is drawn from numpy's ``Generator(PCG64(seed))``:

1. the K x T noise block, row-major, via ``standard_normal`` (or
   ``standard_t(df)`` divided by its standard deviation when df > 2);
2. then, per plant in list order, one ``permutation(K)`` whose first
   ``round(fraction * K)`` entries (at least one) are the affected rows.

The noise thus has unit variance and a plant adds ``amplitude`` (in noise
standard deviations) at each of its indices in the affected rows. Rows are standardized afterwards; the unstandardized
rows are kept in ``SegmentMatrix.raw``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from rmtseason.ingest import Observable
from rmtseason.segmentation import DAY_MS, Period, SegmentMatrix, Transform, standardize_rows

# row labels of synthetic matrices: consecutive days from 2020-01-01 UTC
SYNTH_EPOCH_MS = 1_577_836_800_000


@dataclass(frozen=True)
class Plant:
    indices: tuple[int, ...]
    amplitude: float
    fraction: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "indices", tuple(int(i) for i in np.atleast_1d(self.indices)))
        if not 0 < self.fraction <= 1:
            raise ValueError(f"plant fraction must be in (0, 1], got {self.fraction}")
        if not math.isfinite(self.amplitude):
            raise ValueError("plant amplitude must be finite")


@dataclass(frozen=True)
class SyntheticSpec:
    seed: int
    K: int
    T: int
    noise: str = "gaussian"
    df: float | None = None
    plants: tuple[Plant, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if self.K < 2 or self.T < 2:
            raise ValueError("K and T must both be at least 2")
        if self.noise not in ("gaussian", "student_t"):
            raise ValueError(f"unknown noise {self.noise!r}")
        if self.noise == "student_t" and not (self.df and self.df > 0):
            raise ValueError("student_t noise needs df > 0")
        object.__setattr__(self, "plants", tuple(self.plants))
        for p in self.plants:
            if any(not 0 <= i < self.T for i in p.indices):
                raise ValueError(f"plant index outside 0..{self.T - 1}")

    @classmethod
    def from_dict(cls, d: dict) -> "SyntheticSpec":
        noise = d.get("noise", "gaussian")
        df = d.get("df")
        if isinstance(noise, dict):
            noise, df = noise["kind"], noise.get("df", df)
        plants = tuple(
            Plant(tuple(p["indices"]) if "indices" in p else (p["index"],), p["amplitude"], p["fraction"])
            for p in d.get("plants", [])
        )
        return cls(int(d["seed"]), int(d["K"]), int(d["T"]), noise.lower(), df, plants)

    @classmethod
    def from_json(cls, text: str) -> "SyntheticSpec":
        return cls.from_dict(json.loads(text))

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "K": self.K,
            "T": self.T,
            "noise": self.noise,
            "df": self.df,
            "plants": [
                {"indices": list(p.indices), "amplitude": p.amplitude, "fraction": p.fraction}
                for p in self.plants
            ],
        }


def planted_rows(spec: SyntheticSpec) -> list[np.ndarray]:
    """Rows touched by each plant, replaying the generator's stream."""
    return _draw(spec)[1]


def _draw(spec: SyntheticSpec) -> tuple[np.ndarray, list[np.ndarray]]:
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    if spec.noise == "gaussian":
        raw = rng.standard_normal((spec.K, spec.T))
    else:
        raw = rng.standard_t(spec.df, (spec.K, spec.T))
        # infinite variance for df <= 2: left unscaled
        if spec.df > 2:
            raw /= math.sqrt(spec.df / (spec.df - 2.0))
    rows_per_plant = []
    for p in spec.plants:
        n = max(1, int(math.floor(p.fraction * spec.K + 0.5)))
        rows = np.sort(rng.permutation(spec.K)[:n])
        raw[np.ix_(rows, np.asarray(p.indices))] += p.amplitude
        rows_per_plant.append(rows)
    return raw, rows_per_plant


def generate(spec: SyntheticSpec) -> SegmentMatrix:
    """Deterministic synthetic segment matrix for ``spec`` (raw rows retained)."""
    raw, _ = _draw(spec)
    return SegmentMatrix(
        period=Period.DAY,
        observable=Observable.LOG_RETURN,
        transform=Transform.RAW,
        data=standardize_rows(raw),
        labels=SYNTH_EPOCH_MS + np.arange(spec.K, dtype=np.int64) * DAY_MS,
        delta_t=86_400 / spec.T,
        asset="synthetic",
        raw=raw,
    )


# closed-form eigenvalue oracles ------------------------------------------------


def _cubic_real_roots(a: float, b: float, c: float) -> list[float]:
    """Roots of x^3 + a x^2 + b x + c known to be all real (trigonometric form)."""
    p = b - a * a / 3.0
    q = 2.0 * a**3 / 27.0 - a * b / 3.0 + c
    shift = -a / 3.0
    if p >= 0:
        # triple root up to rounding
        return [shift - math.copysign(abs(q) ** (1.0 / 3.0), q)] * 3
    m = 2.0 * math.sqrt(-p / 3.0)
    arg = 3.0 * q / (p * m)
    theta = math.acos(max(-1.0, min(1.0, arg))) / 3.0
    return [shift + m * math.cos(theta - 2.0 * math.pi * j / 3.0) for j in range(3)]


def _eig3(A: np.ndarray) -> list[float]:
    # trigonometric solution for a real symmetric 3x3 matrix
    p1 = A[0, 1] ** 2 + A[0, 2] ** 2 + A[1, 2] ** 2
    q = np.trace(A) / 3.0
    p2 = (A[0, 0] - q) ** 2 + (A[1, 1] - q) ** 2 + (A[2, 2] - q) ** 2 + 2.0 * p1
    if p2 == 0:
        return [q, q, q]
    p = math.sqrt(p2 / 6.0)
    B = (A - q * np.eye(3)) / p
    r = (
        B[0, 0] * (B[1, 1] * B[2, 2] - B[1, 2] * B[2, 1])
        - B[0, 1] * (B[1, 0] * B[2, 2] - B[1, 2] * B[2, 0])
        + B[0, 2] * (B[1, 0] * B[2, 1] - B[1, 1] * B[2, 0])
    ) / 2.0
    phi = math.acos(max(-1.0, min(1.0, r))) / 3.0
    e1 = q + 2.0 * p * math.cos(phi)
    e3 = q + 2.0 * p * math.cos(phi + 2.0 * math.pi / 3.0)
    return [e1, 3.0 * q - e1 - e3, e3]


def _charpoly(A: np.ndarray) -> list[float]:
    # Faddeev-LeVerrier: x^n + c[1] x^(n-1) + ... + c[n]
    n = A.shape[0]
    coeffs = [1.0]
    M = np.zeros_like(A)
    I = np.eye(n)
    for k in range(1, n + 1):
        M = A @ M + coeffs[-1] * I
        coeffs.append(-np.trace(A @ M) / k)
    return coeffs


def _eig4(A: np.ndarray) -> list[float]:
    _, a, b, c, d = _charpoly(A)
    # depress: x = y - a/4  ->  y^4 + p y^2 + q y + r
    p = b - 3.0 * a * a / 8.0
    q = c - a * b / 2.0 + a**3 / 8.0
    r = d - a * c / 4.0 + a * a * b / 16.0 - 3.0 * a**4 / 256.0
    shift = -a / 4.0
    if abs(q) < 1e-14 * max(1.0, abs(p), abs(r)):
        # biquadratic in y^2
        disc = max(0.0, p * p - 4.0 * r)
        ys = []
        for z in ((-p + math.sqrt(disc)) / 2.0, (-p - math.sqrt(disc)) / 2.0):
            s = math.sqrt(max(0.0, z))
            ys += [s, -s]
        return [shift + y for y in ys]
    # resolvent z^3 + 2p z^2 + (p^2 - 4r) z - q^2 = 0 with z = (y1 + y2)^2 >= 0
    z = max(_cubic_real_roots(2.0 * p, p * p - 4.0 * r, -q * q))
    s = math.sqrt(max(z, 0.0))
    alpha = (p + z - q / s) / 2.0
    beta = (p + z + q / s) / 2.0
    d1 = math.sqrt(max(0.0, z - 4.0 * alpha))
    d2 = math.sqrt(max(0.0, z - 4.0 * beta))
    ys = [(-s + d1) / 2.0, (-s - d1) / 2.0, (s + d2) / 2.0, (s - d2) / 2.0]
    return [shift + y for y in ys]


def brute_force_eigen(C) -> np.ndarray:
    """Eigenvalues of a symmetric matrix with K <= 4 from the characteristic polynomial.

    Closed forms only: the quadratic formula for K=2, the trigonometric cubic
    for K=3 and Ferrari's method for K=4. Returned in descending order.
    """
    A = np.asarray(C, dtype=np.float64)
    K = A.shape[0]
    if A.shape != (K, K) or not 1 <= K <= 4:
        raise ValueError(f"brute_force_eigen handles square matrices up to 4x4, got {A.shape}")
    if K == 1:
        roots = [A[0, 0]]
    elif K == 2:
        m = (A[0, 0] + A[1, 1]) / 2.0
        h = math.hypot((A[0, 0] - A[1, 1]) / 2.0, A[0, 1])
        roots = [m + h, m - h]
    elif K == 3:
        roots = _eig3(A)
    else:
        roots = _eig4(A)
    return np.sort(np.asarray(roots, dtype=np.float64))[::-1]


def random_symmetric(rng: np.random.Generator, K: int) -> np.ndarray:
    X = rng.standard_normal((K, K))
    return (X + X.T) / 2.0

