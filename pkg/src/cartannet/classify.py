"""Separator hypersurfaces and probability heads on r=1 layers.

A separator is the zero set of h(Y) = alpha e^{-Y1} + <w, Y2>
+ beta e^{Y1} (1 + |Y2|^2 / 4); when |w|^2 - alpha beta > 0 this is a
totally geodesic hypersurface, and the signed geodesic distance to it is
exactly arcsinh(h / (2 sqrt(|w|^2 - alpha beta))).  The signed distance
feeds sigmoid or softmax heads.  All functions propagate complex inputs
analytically so the training gradients can be taken by complex step.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .spaces import SolvCoords, SpaceId

__all__ = [
    "DegenerateSeparatorError",
    "Separator",
    "SeparatorBank",
    "h_value",
    "signed_distance",
    "sigmoid",
    "sigma_tilde",
    "binary_prob",
    "binary_nll",
    "softmax_probs",
    "multiclass_nll",
    "find_surface_point",
]

PROB_CLAMP = 1e-12


class DegenerateSeparatorError(ValueError):
    """The separator's normalization or admissibility bound fails."""


@dataclasses.dataclass(frozen=True)
class Separator:
    """Separator parameters (alpha, beta, w) on a layer with subPaint
    dimension len(w); admissible when |w|^2 - alpha beta > 0."""

    alpha: float
    beta: float
    w: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "w", np.asarray(self.w))

    @property
    def admissible(self) -> bool:
        w2 = float(np.real(np.sum(self.w * self.w)))
        ab = float(np.real(self.alpha * self.beta))
        return w2 - ab > 0.0


@dataclasses.dataclass(frozen=True)
class SeparatorBank:
    """K separators on a shared layer (K >= 2 for the softmax head)."""

    separators: tuple

    def __post_init__(self):
        object.__setattr__(self, "separators", tuple(self.separators))
        if len(self.separators) < 1:
            raise ValueError("bank must contain at least one separator")

    def __len__(self):
        return len(self.separators)


def _values(p) -> np.ndarray:
    return p.values if isinstance(p, SolvCoords) else np.asarray(p)


def h_value(sep: Separator, p):
    """Defining function of the separator; its sign is the side of p.
    Accepts a SolvCoords or a batch array of coordinate rows."""
    v = _values(p)
    y1 = v[..., 0]
    y2 = v[..., 1:]
    if y2.shape[-1] != len(sep.w):
        raise ValueError("separator normal has the wrong dimension")
    return (
        sep.alpha * np.exp(-y1)
        + y2 @ sep.w
        + sep.beta * np.exp(y1) * (1.0 + 0.25 * np.sum(y2 * y2, axis=-1))
    )


def _normalization(sep: Separator):
    norm2 = np.sum(sep.w * sep.w) - sep.alpha * sep.beta
    if np.real(norm2) <= 0.0:
        raise DegenerateSeparatorError(
            "separator admissibility |w|^2 - alpha*beta must be positive"
        )
    return 2.0 * np.sqrt(norm2)


def signed_distance(sep: Separator, p):
    """Signed geodesic distance to the separator:
    arcsinh(h / (2 sqrt(|w|^2 - alpha beta))).  Odd in h, zero exactly on
    the surface, and equal (up to sign) to the infimum of the geodesic
    distance over the surface."""
    return np.arcsinh(h_value(sep, p) / _normalization(sep))


def sigmoid(x):
    """Overflow-safe logistic function; satisfies s(-x) = 1 - s(x)."""
    x = np.asarray(x)
    pos = np.real(x) >= 0
    # evaluate both stable branches on shifted arguments to avoid overflow
    xp = np.where(pos, x, 0.0)
    xm = np.where(pos, 0.0, x)
    return np.where(pos, 1.0 / (1.0 + np.exp(-xp)), np.exp(xm) / (1.0 + np.exp(xm)))


def sigma_tilde(x):
    """sigmoid composed with sinh; the head that makes the geodesic
    distance and the raw normalized h agree: sigma_tilde(dist) =
    sigmoid(h / normalization)."""
    return sigmoid(np.sinh(np.asarray(x)))


def binary_prob(sep: Separator, p):
    """Probability of class 1: sigmoid of the signed distance; the
    prediction rule 'probability > 1/2' coincides with 'h > 0'."""
    return sigmoid(signed_distance(sep, p))


def _clamp(prob):
    prob = np.asarray(prob)
    lo = np.real(prob) < PROB_CLAMP
    hi = np.real(prob) > 1.0 - PROB_CLAMP
    prob = np.where(lo, PROB_CLAMP, prob)
    return np.where(hi, 1.0 - PROB_CLAMP, prob)


def binary_nll(points, labels, sep: Separator):
    """Negative log likelihood of binary labels (0/1) under the
    sigmoid head, with probabilities clamped away from {0, 1}."""
    labels = np.asarray(labels)
    if labels.size == 0:
        raise ValueError("empty data")
    prob = _clamp(binary_prob(sep, points))
    y = labels.astype(float)
    return -np.sum(y * np.log(prob) + (1.0 - y) * np.log(1.0 - prob))


def softmax_probs(bank: SeparatorBank, p):
    """Softmax over the K signed distances, stabilized by subtracting the
    (constant) maximum of their real parts."""
    d = np.stack([signed_distance(s, p) for s in bank.separators], axis=-1)
    shift = np.max(np.real(d), axis=-1, keepdims=True)
    e = np.exp(d - shift)
    return e / np.sum(e, axis=-1, keepdims=True)


def multiclass_nll(points, labels, bank: SeparatorBank):
    """Negative log likelihood of labels in 0..K-1 under the softmax head."""
    labels = np.asarray(labels)
    if labels.size == 0:
        raise ValueError("empty data")
    if labels.min() < 0 or labels.max() >= len(bank):
        raise ValueError("label out of range")
    prob = _clamp(softmax_probs(bank, points))
    picked = np.take_along_axis(prob, labels.reshape(-1, 1), axis=-1)[..., 0]
    return -np.sum(np.log(picked))


def find_surface_point(sep: Separator, space: SpaceId, seed: int = 0) -> SolvCoords:
    """Produce a witness point on the {h = 0} surface.

    For an admissible separator the surface is a nonempty geodesic
    hypersurface, so a witness always exists; with the subPaint component
    along w chosen suitably, h = 0 reduces to a quadratic in e^{Y1} with a
    guaranteed positive root.  The remaining freedom is drawn from seed."""
    space._require_r1()
    if not sep.admissible:
        raise DegenerateSeparatorError(
            "separator admissibility |w|^2 - alpha*beta must be positive"
        )
    rng = np.random.default_rng(seed)
    s = space.subpaint_dim
    alpha, beta = float(np.real(sep.alpha)), float(np.real(sep.beta))
    wr = np.real(sep.w).astype(float)
    W = float(np.linalg.norm(wr))
    if alpha == 0.0 and beta == 0.0:
        # surface is the hyperplane <w, Y2> = 0 at any Cartan height
        y2 = rng.uniform(-1.0, 1.0, size=s)
        y2 = y2 - np.dot(wr, y2) * wr / W**2
        return SolvCoords(space, np.r_[rng.uniform(-1.0, 1.0), y2])
    if W == 0.0:
        # alpha beta < 0 here; solve alpha + beta t^2 (1 + |y2|^2/4) = 0
        y2 = rng.uniform(-1.0, 1.0, size=s)
        t = np.sqrt(-alpha / (beta * (1.0 + 0.25 * y2 @ y2)))
        return SolvCoords(space, np.r_[np.log(t), y2])
    what = wr / W
    v = rng.uniform(-1.0, 1.0, size=s)
    v = v - np.dot(what, v) * what  # component orthogonal to w
    if beta == 0.0:
        # h = alpha e^{-Y1} + W s with s chosen so the sign works out
        s_along = -np.sign(alpha) * rng.uniform(0.5, 1.5)
        t = -alpha / (W * s_along)
        return SolvCoords(space, np.r_[np.log(t), s_along * what + v])
    # quadratic A t^2 + B t + C with A = beta (1 + |y2|^2/4), B = W s,
    # C = alpha; choosing sign(s) = -sign(beta) makes the root sum
    # positive, and |s| large enough makes the discriminant positive
    ab = alpha * beta
    s_min = np.sqrt(max(4.0 * ab * (1.0 + 0.25 * v @ v), 0.0) / (W * W - ab))
    s_along = -np.sign(beta) * (s_min + rng.uniform(0.5, 1.5))
    y2 = s_along * what + v
    A = beta * (1.0 + 0.25 * y2 @ y2)
    B = W * s_along
    disc = B * B - 4.0 * A * alpha
    t = max((-B + np.sqrt(disc)) / (2 * A), (-B - np.sqrt(disc)) / (2 * A))
    return SolvCoords(space, np.r_[np.log(t), y2])
