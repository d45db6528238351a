"""Embedding transforms for cross-modal training on uni-modal data.

Training-side rows are collapsed (their own modality mean subtracted) and
corrupted (Gaussian noise added); test-side rows from the other modality
are only collapsed with that modality's own mean. Corruption noise can be
isotropic or have its component along a given gap direction projected out
("span only" mode).

Noise is drawn from a per-row stream keyed by (seed, row index), so the
noise a row receives does not depend on how many rows are transformed
alongside it and row-parallel execution stays deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import as_array

__all__ = [
    "C3Config",
    "ModalityMeans",
    "compute_means",
    "collapse",
    "corrupt",
    "train_transform",
    "test_transform",
]

MODE_FULL = "full"
MODE_SPAN_ONLY = "span_only"


@dataclass(frozen=True)
class C3Config:
    """Which stages to apply and how to draw the corruption noise."""

    collapse: bool = True
    corrupt: bool = True
    sigma: float = 0.05
    mode: str = MODE_FULL
    gap_direction: np.ndarray | None = None
    seed: int = 0

    def __post_init__(self):
        if not (self.sigma >= 0.0 and math.isfinite(self.sigma)):
            raise ValueError(f"sigma must be finite and >= 0, got {self.sigma}")
        if self.mode not in (MODE_FULL, MODE_SPAN_ONLY):
            raise ValueError(f"unknown corruption mode {self.mode!r}")
        if self.mode == MODE_SPAN_ONLY:
            if self.gap_direction is None:
                raise ValueError("span_only corruption requires a gap_direction")
            g = np.asarray(self.gap_direction, dtype=np.float64).ravel()
            if abs(np.linalg.norm(g) - 1.0) > 1e-9:
                raise ValueError("gap_direction must be unit-norm")
            object.__setattr__(self, "gap_direction", g)


@dataclass(frozen=True)
class ModalityMeans:
    """Dataset-average embedding of each modality."""

    mean_x: np.ndarray
    mean_y: np.ndarray

    def __post_init__(self):
        if self.mean_x.shape != self.mean_y.shape:
            raise ValueError("modality means must share a dimension")


def compute_means(x, y) -> ModalityMeans:
    """Arithmetic mean embedding of each modality."""
    return ModalityMeans(mean_x=as_array(x).mean(axis=0), mean_y=as_array(y).mean(axis=0))


def collapse(m, mean: np.ndarray) -> np.ndarray:
    """Subtract a modality mean from every row."""
    a = as_array(m)
    mean = np.asarray(mean, dtype=np.float64).ravel()
    if mean.shape[0] != a.shape[1]:
        raise ValueError(f"mean has dimension {mean.shape[0]}, rows have {a.shape[1]}")
    return a - mean


def _row_noise(seed: int, row: int, d: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence([seed, row]))
    return rng.standard_normal(d)


def corrupt(m, cfg: C3Config) -> np.ndarray:
    """Add Gaussian noise to every row per the config.

    In span-only mode the sampled noise has its projection onto
    ``cfg.gap_direction`` removed before being added, leaving each row's
    component along that direction untouched.
    """
    a = as_array(m)
    if cfg.sigma == 0.0:
        return a.copy()
    n, d = a.shape
    noise = np.empty_like(a)
    for i in range(n):
        noise[i] = _row_noise(cfg.seed, i, d)
    noise *= cfg.sigma
    if cfg.mode == MODE_SPAN_ONLY:
        g = cfg.gap_direction
        noise -= np.outer(noise @ g, g)
    return a + noise


def train_transform(m, mean: np.ndarray, cfg: C3Config) -> np.ndarray:
    """Training-side pipeline: collapse (if enabled) then corrupt (if enabled)."""
    a = as_array(m)
    if cfg.collapse:
        a = collapse(a, mean)
    if cfg.corrupt:
        a = corrupt(a, cfg)
    return a


def test_transform(m, mean: np.ndarray) -> np.ndarray:
    """Test-side pipeline: subtract the test modality's own mean, never add noise."""
    return collapse(m, mean)
