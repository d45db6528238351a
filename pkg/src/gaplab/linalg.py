"""Dense vector/matrix primitives: normalization, covariance, spectra.

Everything here computes in float64 regardless of the caller's storage
dtype, and every function is a pure function of its inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "EmbeddingMatrix",
    "PairedEmbeddings",
    "SpectralSummary",
    "as_array",
    "l2_normalize_rows",
    "row_mean",
    "covariance",
    "spectral_summary",
    "cosine",
    "mean_pairwise_cosine",
]

UNIT_NORM_TOL = 1e-9
DEFAULT_GAMMA = 0.99


def as_array(m) -> np.ndarray:
    """Coerce an EmbeddingMatrix or array-like to a float64 2-d array."""
    if isinstance(m, EmbeddingMatrix):
        return m.values
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {a.shape}")
    return a


@dataclass(frozen=True)
class EmbeddingMatrix:
    """An n x d matrix with one embedding per row.

    Parameters
    ----------
    values : array-like, shape (n, d)
        Row-major embedding values. Stored as float64.
    unit_norm : bool
        If set, every row is required to have unit L2 norm (within 1e-9).
    """

    values: np.ndarray
    unit_norm: bool = False

    def __post_init__(self):
        a = np.asarray(self.values, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
            raise ValueError(f"embedding matrix must be n x d with n,d >= 1, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("embedding matrix contains non-finite values")
        if self.unit_norm:
            norms = np.linalg.norm(a, axis=1)
            bad = np.flatnonzero(np.abs(norms - 1.0) > UNIT_NORM_TOL)
            if bad.size:
                raise ValueError(
                    f"unit_norm contract violated at row {bad[0]}: norm={norms[bad[0]]!r}"
                )
        object.__setattr__(self, "values", a)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class PairedEmbeddings:
    """Two row-aligned embedding matrices; row i of x pairs with row i of y."""

    x: EmbeddingMatrix
    y: EmbeddingMatrix

    def __post_init__(self):
        if self.x.n != self.y.n:
            raise ValueError(f"pairing requires equal row counts, got {self.x.n} vs {self.y.n}")
        if self.x.d != self.y.d:
            raise ValueError(f"paired embeddings must share dimension, got {self.x.d} vs {self.y.d}")

    @property
    def n(self) -> int:
        return self.x.n

    @property
    def d(self) -> int:
        return self.x.d


def l2_normalize_rows(m) -> EmbeddingMatrix:
    """Scale every row to unit L2 norm, preserving its direction.

    Raises
    ------
    ValueError
        If any row is the zero vector (reported with its row index).
    """
    a = as_array(m)
    norms = np.linalg.norm(a, axis=1)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise ValueError(f"cannot normalize zero row at index {zero[0]}")
    return EmbeddingMatrix(a / norms[:, None], unit_norm=True)


def row_mean(m) -> np.ndarray:
    """Arithmetic mean over rows, one value per dimension."""
    return as_array(m).mean(axis=0)


def covariance(m) -> np.ndarray:
    """Mean-centered population covariance (divides by n, not n - 1).

    The divide-by-n convention is fixed here: variance-explained ratios
    derived from the spectrum are invariant to it, but the raw matrix
    is not, so callers can rely on one choice.
    """
    a = as_array(m)
    n = a.shape[0]
    if n < 2:
        raise ValueError(f"covariance needs at least 2 rows, got {n}")
    centered = a - a.mean(axis=0)
    c = centered.T @ centered / n
    return (c + c.T) / 2.0


@dataclass(frozen=True)
class SpectralSummary:
    """Descending spectrum of a covariance matrix plus its effective dimension.

    ``effective_dim`` is the minimal number of leading singular values whose
    cumulative sum reaches at least ``gamma`` of the total.
    """

    singular_values: np.ndarray
    gamma: float
    total: float = field(init=False)
    effective_dim: int = field(init=False)

    def __post_init__(self):
        s = np.asarray(self.singular_values, dtype=np.float64)
        if s.ndim != 1 or s.size < 1:
            raise ValueError("singular_values must be a non-empty 1-d array")
        if np.any(s < 0) or np.any(np.diff(s) > 0):
            raise ValueError("singular_values must be non-negative and non-increasing")
        if not (0.0 < self.gamma <= 1.0):
            raise ValueError(f"gamma must be in (0, 1], got {self.gamma}")
        total = float(s.sum())
        if total <= 0.0:
            raise ValueError("spectrum has zero total mass; effective dimension undefined")
        ratios = np.cumsum(s) / total
        d_e = int(np.argmax(ratios >= self.gamma)) + 1
        object.__setattr__(self, "singular_values", s)
        object.__setattr__(self, "total", total)
        object.__setattr__(self, "effective_dim", d_e)


def spectral_summary(c: np.ndarray, gamma: float = DEFAULT_GAMMA) -> SpectralSummary:
    """Spectrum and effective dimension of a symmetric PSD covariance matrix.

    For a PSD matrix the singular values equal the eigenvalues, so the
    spectrum is computed with a symmetric eigensolver. Eigenvalues that are
    negative within numerical tolerance are clipped to zero; a genuinely
    indefinite or non-symmetric input is rejected.
    """
    c = np.asarray(c, dtype=np.float64)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise ValueError(f"covariance must be square, got shape {c.shape}")
    if not np.all(np.isfinite(c)):
        raise ValueError("covariance contains non-finite values")
    scale = max(1.0, float(np.abs(c).max()))
    if np.abs(c - c.T).max() > 1e-8 * scale:
        raise ValueError("covariance is not symmetric within tolerance")
    eigs = np.linalg.eigvalsh((c + c.T) / 2.0)
    if eigs[0] < -1e-8 * scale:
        raise ValueError(f"covariance is not positive semi-definite: min eigenvalue {eigs[0]!r}")
    s = np.clip(eigs[::-1], 0.0, None)
    return SpectralSummary(singular_values=s, gamma=gamma)


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity of two non-zero vectors, clamped to [-1, 1]."""
    u = np.asarray(u, dtype=np.float64).ravel()
    v = np.asarray(v, dtype=np.float64).ravel()
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ValueError("cosine is undefined for a zero vector")
    return float(np.clip(u @ v / (nu * nv), -1.0, 1.0))


def mean_pairwise_cosine(
    m, max_pairs: int = 10_000, seed: int = 0
) -> tuple[float, float]:
    """Mean and std of cosine similarity over unordered row pairs.

    All n(n-1)/2 pairs are enumerated when there are at most ``max_pairs``
    of them; otherwise a uniform sample of ``max_pairs`` pairs is drawn
    from the seeded generator, so results are deterministic per seed.
    """
    a = as_array(m)
    n = a.shape[0]
    if n < 2:
        raise ValueError(f"pairwise cosine needs at least 2 rows, got {n}")
    norms = np.linalg.norm(a, axis=1)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise ValueError(f"zero row at index {zero[0]}")
    unit = a / norms[:, None]
    total = n * (n - 1) // 2
    if total <= max_pairs:
        g = unit @ unit.T
        iu = np.triu_indices(n, k=1)
        vals = g[iu]
    else:
        rng = np.random.default_rng(seed)
        i = rng.integers(0, n, size=max_pairs)
        j = rng.integers(0, n - 1, size=max_pairs)
        j = np.where(j >= i, j + 1, j)  # j != i, uniform over the rest
        vals = np.einsum("ij,ij->i", unit[i], unit[j])
    vals = np.clip(vals, -1.0, 1.0)
    return float(vals.mean()), float(vals.std())
