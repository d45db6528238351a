"""Symmetric contrastive loss, analytic gradients, and stable-region bounds.

The loss over n unit-norm pairs (x_i, y_i) with temperature tau is

    L = -(1/2n) * sum_i [ log softmax_j(x_i . y_j / tau)[i]
                        + log softmax_j(x_j . y_i / tau)[i] ]

Two gradient routines are provided. ``exact_gradients`` is the true
gradient of L with each row treated as a free variable; the trainer uses
it so descent is genuine. ``span_gradients`` is the compact form

    grad_{x_k} = lambda * sum_i (p(y_i|x_k) + p(x_k|y_i)) (y_i - y_k)

with lambda = 1/(2 n tau), which confines each gradient row to the span
of the other modality's row differences. The two coincide exactly when
sum_i p(x_k|y_i) = 1 for every k (uniform pair marginals); in general
they differ by lambda * (1 - sum_i p(x_k|y_i)) * y_k per row.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import EmbeddingMatrix, PairedEmbeddings, l2_normalize_rows

__all__ = [
    "ContrastiveBatch",
    "GradientPair",
    "TrainerConfig",
    "TrainingRecord",
    "TrainingResult",
    "conditional_probs",
    "contrastive_loss",
    "exact_gradients",
    "span_gradients",
    "train_contrastive",
    "margin",
    "crowding_factor",
    "stable_region_threshold",
    "loss_bound_check",
    "StableRegionReport",
]

DEFAULT_TAU = 0.07


@dataclass(frozen=True)
class ContrastiveBatch:
    """Unit-norm paired embeddings plus a positive temperature."""

    pairs: PairedEmbeddings
    tau: float = DEFAULT_TAU

    def __post_init__(self):
        if not (self.pairs.x.unit_norm and self.pairs.y.unit_norm):
            raise ValueError("contrastive batch requires unit-norm embeddings on both sides")
        if not (self.tau > 0.0 and math.isfinite(self.tau)):
            raise ValueError(f"temperature must be positive and finite, got {self.tau}")

    @property
    def n(self) -> int:
        return self.pairs.n


@dataclass(frozen=True)
class GradientPair:
    """Per-row loss gradients for both modalities."""

    grad_x: np.ndarray
    grad_y: np.ndarray

    def __post_init__(self):
        if self.grad_x.shape != self.grad_y.shape:
            raise ValueError("gradient matrices must share a shape")
        if not (np.all(np.isfinite(self.grad_x)) and np.all(np.isfinite(self.grad_y))):
            raise ValueError("non-finite gradient")


# Shifted logits below this are flushed to exp(-745..) territory otherwise;
# clamping avoids subnormal arithmetic while adding at most e^-700 of mass.
_EXP_FLOOR = -700.0


def _softmax(z: np.ndarray, axis: int) -> np.ndarray:
    z = np.maximum(z - z.max(axis=axis, keepdims=True), _EXP_FLOOR)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def _logsumexp(z: np.ndarray, axis: int) -> np.ndarray:
    m = z.max(axis=axis)
    shifted = np.maximum(z - np.expand_dims(m, axis), _EXP_FLOOR)
    return m + np.log(np.exp(shifted).sum(axis=axis))


def _loss_arrays(x: np.ndarray, y: np.ndarray, tau: float) -> float:
    z = x @ y.T / tau
    diag = np.diag(z)
    n = x.shape[0]
    return float(-(2.0 * diag - _logsumexp(z, axis=1) - _logsumexp(z, axis=0)).sum() / (2.0 * n))


def _exact_grad_arrays(x: np.ndarray, y: np.ndarray, tau: float) -> tuple[np.ndarray, np.ndarray]:
    n = x.shape[0]
    z = x @ y.T / tau
    p_row = _softmax(z, axis=1)  # p_row[k, i] = p(y_i | x_k)
    p_col = _softmax(z, axis=0)  # p_col[k, i] = p(x_k | y_i)
    lam = 1.0 / (2.0 * n * tau)
    grad_x = -lam * (2.0 * y - p_row @ y - p_col @ y)
    grad_y = -lam * (2.0 * x - p_row.T @ x - p_col.T @ x)
    return grad_x, grad_y


def conditional_probs(batch: ContrastiveBatch) -> tuple[np.ndarray, np.ndarray]:
    """Softmax conditionals (P_xy, P_yx).

    P_xy[i, j] = p(x_i | y_j) and P_yx[i, j] = p(y_i | x_j); each column of
    both matrices sums to 1. Computed with max-subtraction so no choice of
    temperature can overflow.
    """
    z = batch.pairs.x.values @ batch.pairs.y.values.T / batch.tau
    p_xy = _softmax(z, axis=0)
    p_yx = _softmax(z, axis=1).T
    return p_xy, p_yx


def contrastive_loss(batch: ContrastiveBatch) -> float:
    """Value of the symmetric contrastive objective (non-negative)."""
    return _loss_arrays(batch.pairs.x.values, batch.pairs.y.values, batch.tau)


def exact_gradients(batch: ContrastiveBatch) -> GradientPair:
    """True gradient of the loss with every row treated as a free variable.

    grad_{x_k} = -(1/2n tau) [ 2 y_k - sum_i p(y_i|x_k) y_i - sum_i p(x_k|y_i) y_i ]

    and symmetrically for grad_{y_k}.
    """
    gx, gy = _exact_grad_arrays(batch.pairs.x.values, batch.pairs.y.values, batch.tau)
    return GradientPair(grad_x=gx, grad_y=gy)


def _span_grad_arrays(x: np.ndarray, y: np.ndarray, tau: float) -> tuple[np.ndarray, np.ndarray]:
    n = x.shape[0]
    z = x @ y.T / tau
    p_row = _softmax(z, axis=1)
    p_col = _softmax(z, axis=0)
    lam = 1.0 / (2.0 * n * tau)
    # Shifting by the first row before weighting telescopes away exactly, but
    # makes coordinates where all rows agree contribute bitwise-exact zeros.
    w_x = p_row + p_col
    ys = y - y[0]
    grad_x = lam * (w_x @ ys - w_x.sum(axis=1)[:, None] * ys)
    w_y = w_x.T
    xs = x - x[0]
    grad_y = lam * (w_y @ xs - w_y.sum(axis=1)[:, None] * xs)
    return grad_x, grad_y


def span_gradients(batch: ContrastiveBatch) -> GradientPair:
    """Compact span form of the gradients.

    Each output row is a weighted sum of the other modality's row
    differences, so any coordinate where that modality's rows all share one
    value receives an exactly zero gradient (bitwise zero, not merely
    small). Equals ``exact_gradients`` only under uniform pair marginals;
    see the module docstring.
    """
    gx, gy = _span_grad_arrays(batch.pairs.x.values, batch.pairs.y.values, batch.tau)
    return GradientPair(grad_x=gx, grad_y=gy)


@dataclass(frozen=True)
class TrainerConfig:
    """Full-batch gradient descent settings.

    ``renormalize_each_step`` re-projects every row onto the unit sphere
    after each update (projected gradient descent). With it off, rows float
    freely during optimization and geometry metrics are computed on
    unit-normalized copies at recording time only.

    ``gradient_form`` selects the update direction: "exact" (the true loss
    gradient, the default) or "span" (the compact form, which leaves
    coordinates shared by all rows of the opposite modality bitwise
    untouched).
    """

    learning_rate: float = 0.1
    steps: int = 1000
    renormalize_each_step: bool = True
    record_every: int = 100
    seed: int = 0
    gradient_form: str = "exact"

    def __post_init__(self):
        if not (self.learning_rate >= 0.0 and math.isfinite(self.learning_rate)):
            raise ValueError(f"learning rate must be finite and >= 0, got {self.learning_rate}")
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        if self.record_every < 1:
            raise ValueError(f"record_every must be >= 1, got {self.record_every}")
        if self.gradient_form not in ("exact", "span"):
            raise ValueError(f"gradient_form must be 'exact' or 'span', got {self.gradient_form!r}")


@dataclass(frozen=True)
class TrainingRecord:
    """Metrics captured at one checkpoint of a training run.

    ``masked_grad_max`` is the largest absolute raw-gradient entry inside
    the masked dimensions seen since the previous checkpoint (0.0 when no
    mask was given).
    """

    step: int
    loss: float
    gap_full: float
    gap_masked: float
    per_dim_variance_x: np.ndarray
    per_dim_variance_y: np.ndarray
    masked_grad_max: float


@dataclass(frozen=True)
class TrainingResult:
    trajectory: list[TrainingRecord]
    final: PairedEmbeddings


def _mean_gap(x: np.ndarray, y: np.ndarray, mask: np.ndarray | None) -> float:
    diff = x.mean(axis=0) - y.mean(axis=0)
    if mask is not None:
        diff = diff[mask]
    return float(np.linalg.norm(diff))


def train_contrastive(
    init: PairedEmbeddings,
    tau: float = DEFAULT_TAU,
    cfg: TrainerConfig = TrainerConfig(),
    masked_dims: np.ndarray | None = None,
) -> TrainingResult:
    """Optimize both embedding matrices by full-batch gradient descent.

    Descends ``exact_gradients`` by default (``cfg.gradient_form`` can select
    the span form instead). Each checkpoint records the loss of the current
    state, the distance between modality means over all dimensions and over
    ``masked_dims``, per-dimension population variances, and the largest
    absolute raw-gradient entry inside ``masked_dims`` since the previous
    checkpoint. Geometry metrics are measured on unit-normalized views of
    the state; the loss is measured on the state itself. The run is
    deterministic given the inputs and config.

    With ``renormalize_each_step`` the initial embeddings must already be
    unit-norm; without it any finite initialization is accepted.

    Raises
    ------
    FloatingPointError
        If the loss or an update turns non-finite (reported with its step).
    """
    if cfg.renormalize_each_step and not (init.x.unit_norm and init.y.unit_norm):
        raise ValueError("projected descent requires unit-norm initial embeddings")
    mask = None if masked_dims is None else np.asarray(masked_dims, dtype=np.intp)
    grad_fn = _exact_grad_arrays if cfg.gradient_form == "exact" else _span_grad_arrays
    x = init.x.values.copy()
    y = init.y.values.copy()

    def analysis_views() -> tuple[np.ndarray, np.ndarray]:
        if cfg.renormalize_each_step:
            return x, y
        return l2_normalize_rows(x).values, l2_normalize_rows(y).values

    def snapshot(step: int, masked_grad_max: float) -> TrainingRecord:
        loss = _loss_arrays(x, y, tau)
        if not math.isfinite(loss):
            raise FloatingPointError(f"loss diverged at step {step}")
        try:
            xs, ys = analysis_views()
        except ValueError as exc:  # overflowing or vanishing row norms
            raise FloatingPointError(f"state degenerated at step {step}: {exc}") from exc
        return TrainingRecord(
            step=step,
            loss=loss,
            gap_full=_mean_gap(xs, ys, None),
            gap_masked=_mean_gap(xs, ys, mask),
            per_dim_variance_x=xs.var(axis=0),
            per_dim_variance_y=ys.var(axis=0),
            masked_grad_max=masked_grad_max,
        )

    trajectory: list[TrainingRecord] = []
    running_masked_max = 0.0
    for step in range(cfg.steps + 1):
        grad_x, grad_y = grad_fn(x, y, tau)
        if mask is not None:
            seen = max(
                float(np.abs(grad_x[:, mask]).max()),
                float(np.abs(grad_y[:, mask]).max()),
            )
            running_masked_max = max(running_masked_max, seen)
        if step % cfg.record_every == 0 or step == cfg.steps:
            trajectory.append(snapshot(step, running_masked_max))
            running_masked_max = 0.0
        if step == cfg.steps:
            break
        if cfg.learning_rate == 0.0:
            continue  # a zero update followed by projection must be a bitwise no-op
        x = x - cfg.learning_rate * grad_x
        y = y - cfg.learning_rate * grad_y
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise FloatingPointError(f"update diverged at step {step}")
        if cfg.renormalize_each_step:
            try:
                x = l2_normalize_rows(x).values
                y = l2_normalize_rows(y).values
            except ValueError as exc:
                raise FloatingPointError(f"state degenerated at step {step}: {exc}") from exc

    if cfg.renormalize_each_step:
        # the state is kept on the sphere by the projection; no extra pass
        final = PairedEmbeddings(
            x=EmbeddingMatrix(x, unit_norm=True), y=EmbeddingMatrix(y, unit_norm=True)
        )
    else:
        final = PairedEmbeddings(x=EmbeddingMatrix(x), y=EmbeddingMatrix(y))
    return TrainingResult(trajectory=trajectory, final=final)


def margin(batch: ContrastiveBatch, i: int) -> float:
    """Similarity margin of anchor x_i: matched pair minus hardest negative."""
    n = batch.n
    if n < 2:
        raise ValueError("margin needs at least one negative (n >= 2)")
    if not (0 <= i < n):
        raise IndexError(f"row {i} out of range for n={n}")
    sims = batch.pairs.x.values[i] @ batch.pairs.y.values.T
    pos = sims[i]
    neg = np.delete(sims, i)
    return float(pos - neg.max())


def crowding_factor(similarities, tau: float) -> tuple[float, int]:
    """Crowding of a similarity profile: (o', ceil(o')).

    o'(tau) = 1 + sum_{i != m} exp((t_i - t_m) / tau) where m is the unique
    argmax of the profile. Monotonically increasing in tau and bounded by
    the profile length. A tied maximum is rejected.
    """
    t = np.asarray(similarities, dtype=np.float64).ravel()
    if t.size < 1:
        raise ValueError("empty similarity profile")
    if tau <= 0.0:
        raise ValueError(f"temperature must be positive, got {tau}")
    m = int(np.argmax(t))
    rest = np.delete(t, m)
    if rest.size and rest.max() == t[m]:
        raise ValueError("similarity profile has a tied maximum")
    o_prime = 1.0 + float(np.exp((rest - t[m]) / tau).sum())
    return o_prime, int(math.ceil(o_prime))


def stable_region_threshold(similarities, tau: float, delta: float) -> float:
    """Margin above which the per-anchor loss term is guaranteed below delta.

    threshold = tau * log( o(tau) / (exp(delta) - 1) )

    with o(tau) the integer crowding factor of the profile. A non-positive
    threshold means any margin suffices.
    """
    if delta <= 0.0:
        raise ValueError(f"delta must be positive, got {delta}")
    _, o = crowding_factor(similarities, tau)
    return float(tau * math.log(o / math.expm1(delta)))


@dataclass(frozen=True)
class StableRegionReport:
    loss_i: float
    bound: float
    margin: float
    crowding: int
    in_stable_region: bool


def loss_bound_check(batch: ContrastiveBatch, i: int, delta: float) -> StableRegionReport:
    """Per-anchor loss, its crowding bound, and the stable-region predicate.

    The anchor term L_i = -log softmax_j(x_i . y_j / tau)[i] always sits
    below log(1 + o(tau) * exp(-r / tau)), where o is the crowding factor
    of the anchor's negative similarities and r its margin.
    """
    n = batch.n
    if n < 2:
        raise ValueError("bound check needs at least one negative (n >= 2)")
    if delta <= 0.0:
        raise ValueError(f"delta must be positive, got {delta}")
    sims = batch.pairs.x.values[i] @ batch.pairs.y.values.T
    r = margin(batch, i)
    negatives = np.delete(sims, i)
    # Tied negative maxima are fine here: the crowding inequality still
    # holds, only the threshold op insists on a unique argmax.
    top = negatives.max()
    o_prime = 1.0 + float(np.exp((np.delete(negatives, np.argmax(negatives)) - top) / batch.tau).sum())
    o = int(math.ceil(o_prime))
    # Writing the anchor loss as log1p(o' * e^(-r/tau)) is exact (shift the
    # log-sum-exp at the hardest negative) and shares every factor with the
    # bound, so the bound can never be undercut by rounding alone.
    decay = np.exp(-r / batch.tau)
    loss_i = float(np.log1p(o_prime * decay))
    bound = float(np.log1p(o * decay))
    return StableRegionReport(
        loss_i=loss_i,
        bound=bound,
        margin=r,
        crowding=o,
        in_stable_region=bool(loss_i <= delta),
    )
