"""Classification and regression losses with analytic input-gradients.

The library carries no network, so gradients are taken with respect to the
inputs themselves: predicted probabilities for the focal loss and raw
regression residuals for smooth L1. That makes every gradient checkable
against central finite differences, which the test suite does.

Reduction order in the batched losses is a fixed sequential sum so results
are bitwise reproducible run to run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InvalidArg, ShapeMismatch

LOG_FLOOR = 1e-12


@dataclass(frozen=True)
class LossConfig:
    lambda1: float = 1.0
    lambda2: float = 1.0
    alpha_stage: tuple = (1.0,)
    focal_alpha: float = 0.25
    focal_gamma: float = 2.0
    smooth_l1_beta: float = 1.0

    def __post_init__(self):
        scalars = {
            "lambda1": self.lambda1,
            "lambda2": self.lambda2,
            "focal_alpha": self.focal_alpha,
            "focal_gamma": self.focal_gamma,
            "smooth_l1_beta": self.smooth_l1_beta,
        }
        for name, v in scalars.items():
            if not math.isfinite(v) or v < 0:
                raise InvalidArg(f"{name} must be finite and nonnegative, got {v}")
        if self.smooth_l1_beta == 0:
            raise InvalidArg("smooth_l1_beta must be positive")
        object.__setattr__(self, "alpha_stage", tuple(float(a) for a in self.alpha_stage))
        if any(a < 0 or not math.isfinite(a) for a in self.alpha_stage):
            raise InvalidArg("alpha_stage entries must be finite and nonnegative")


def focal_loss(p, t, alpha=0.25, gamma=2.0):
    """Binary focal loss and its derivative with respect to p.

    t selects the positive (1) or negative (0) branch. With gamma=0 this is
    alpha-weighted cross-entropy. Returns (loss, dloss_dp).
    """
    p = float(p)
    if not 0.0 < p < 1.0:
        raise DomainError(f"probability must lie in (0,1), got {p}")
    if t not in (0, 1):
        raise InvalidArg(f"target must be 0 or 1, got {t}")
    if alpha < 0 or gamma < 0:
        raise InvalidArg("alpha and gamma must be nonnegative")
    if t == 1:
        p_t, alpha_t, sign = p, alpha, 1.0
    else:
        p_t, alpha_t, sign = 1.0 - p, 1.0 - alpha, -1.0
    log_pt = math.log(max(p_t, LOG_FLOOR))
    mod = (1.0 - p_t) ** gamma
    loss = -alpha_t * mod * log_pt
    # d/dp_t of -alpha_t (1-p_t)^g log(p_t); the first term vanishes at g=0
    grad_pt = -alpha_t * mod / p_t
    if gamma > 0:
        grad_pt += alpha_t * gamma * (1.0 - p_t) ** (gamma - 1.0) * log_pt
    return loss, sign * grad_pt


def smooth_l1(x, beta=1.0):
    """Huber-style loss: quadratic inside |x|<beta, linear outside.

    Returns (loss, dloss_dx). The gradient magnitude never exceeds 1 when
    beta=1, which is what keeps large residuals from dominating updates.
    """
    if beta <= 0:
        raise InvalidArg(f"beta must be positive, got {beta}")
    x = float(x)
    ax = abs(x)
    if ax < beta:
        return 0.5 * x * x / beta, x / beta
    return ax - 0.5 * beta, math.copysign(1.0, x)


def multitask_loss(pred_deltas, target_deltas, fg_mask, class_probs, class_labels, cfg=None):
    """Joint detection loss over one stage: masked regression plus classification.

    pred_deltas, target_deltas: (N, 5) encoded offsets. fg_mask: (N,) with 1
    marking anchors whose regression term counts. class_probs: (N, K)
    per-class probabilities in (0,1). class_labels: (N,) with the true class
    index, or -1 for background (every class is a negative there). Both terms
    are averaged over N, the total anchor count.
    """
    cfg = cfg or LossConfig()
    pred_deltas = np.asarray(pred_deltas, dtype=np.float64)
    target_deltas = np.asarray(target_deltas, dtype=np.float64)
    fg_mask = np.asarray(fg_mask)
    class_probs = np.asarray(class_probs, dtype=np.float64)
    class_labels = np.asarray(class_labels)
    n = pred_deltas.shape[0]
    if pred_deltas.shape != (n, 5) or target_deltas.shape != (n, 5):
        raise ShapeMismatch("delta arrays must be (N, 5)")
    if fg_mask.shape != (n,) or class_labels.shape != (n,):
        raise ShapeMismatch("fg_mask and class_labels must be (N,)")
    if class_probs.ndim != 2 or class_probs.shape[0] != n:
        raise ShapeMismatch("class_probs must be (N, K)")
    if n == 0:
        return 0.0
    k = class_probs.shape[1]
    if np.any(class_labels >= k):
        raise InvalidArg("class label outside probability column range")

    reg = 0.0
    for i in range(n):
        if not fg_mask[i]:
            continue
        for j in range(5):
            loss, _ = smooth_l1(pred_deltas[i, j] - target_deltas[i, j], cfg.smooth_l1_beta)
            reg += loss
    cls = 0.0
    for i in range(n):
        for j in range(k):
            t = 1 if class_labels[i] == j else 0
            loss, _ = focal_loss(class_probs[i, j], t, cfg.focal_alpha, cfg.focal_gamma)
            cls += loss
    return cfg.lambda1 * reg / n + cfg.lambda2 * cls / n


def total_loss(stage_losses, alphas=None):
    """Weighted sum of per-stage losses. alphas defaults to all ones."""
    stage_losses = [float(v) for v in stage_losses]
    if alphas is None:
        alphas = [1.0] * len(stage_losses)
    alphas = [float(a) for a in alphas]
    if len(alphas) != len(stage_losses):
        raise ShapeMismatch(
            f"{len(stage_losses)} losses but {len(alphas)} weights"
        )
    out = 0.0
    for a, l in zip(alphas, stage_losses):
        out += a * l
    return out
