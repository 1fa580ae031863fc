"""Trainable span scorers over hashed span features.

Both scorers map a SpanRepresentation (a bag of feature ids) to one score
per label.  ``LinearScorer`` is a plain hashed linear model; ``MLPHead`` is
a two-layer perceptron with a rectifier and inverted dropout, so the
inference path needs no rescaling.  Gradients for the first-layer weights
come back sparse, as (ids, rows) pairs, because only the feature rows a
span touches receive gradient.
"""

from __future__ import annotations

import numpy as np

from .scoring import SpanRepresentation

Gradients = dict


def _apply_sgd(params: dict[str, np.ndarray], grads: list[Gradients], lr: float,
               count: int | None = None) -> None:
    # Plain SGD on the batch mean; ``count`` is the number of training
    # examples the entries in ``grads`` came from (one example usually
    # contributes many per-span gradient dicts).
    scale = lr / (count if count is not None else len(grads))
    for g in grads:
        for name, val in g.items():
            if isinstance(val, tuple):
                ids, rows = val
                np.subtract.at(params[name], ids, scale * rows)
            else:
                params[name] -= scale * val


class LinearScorer:
    """score(rep) = sum of weight rows at the span's feature ids."""

    def __init__(self, dim: int, num_labels: int):
        self.W = np.zeros((dim, num_labels))

    @property
    def dim(self) -> int:
        return self.W.shape[0]

    @property
    def num_labels(self) -> int:
        return self.W.shape[1]

    def score(self, rep: SpanRepresentation) -> np.ndarray:
        return self.W[rep.ids].sum(axis=0)

    def score_train(self, rep: SpanRepresentation, rng) -> tuple[np.ndarray, None]:
        # No dropout in the linear model; train scoring equals inference.
        return self.score(rep), None

    def backward(self, rep: SpanRepresentation, upstream: np.ndarray,
                 cache=None) -> Gradients:
        if not np.isfinite(upstream).all():
            raise ValueError("non-finite upstream gradient")
        rows = np.tile(upstream, (len(rep.ids), 1))
        return {"W": (rep.ids, rows)}

    def params(self) -> dict[str, np.ndarray]:
        return {"W": self.W}

    def sgd_step(self, grads: list[Gradients], lr: float,
                 count: int | None = None) -> None:
        _apply_sgd(self.params(), grads, lr, count)


class MLPHead:
    """Two-layer perceptron head: relu(x W1 + b1) W2 + b2.

    ``dropout`` is applied to the hidden layer only in ``score_train``,
    with inverted scaling.
    """

    def __init__(self, dim: int, num_labels: int, hidden: int = 250,
                 dropout: float = 0.2, rng: np.random.Generator | None = None):
        if not 0.0 <= dropout < 1.0:
            raise ValueError("dropout rate must be in [0, 1)")
        if rng is None:
            rng = np.random.default_rng(0)
        self.W1 = rng.normal(0.0, 0.01, size=(dim, hidden))
        self.b1 = np.zeros(hidden)
        self.W2 = rng.normal(0.0, 1.0 / np.sqrt(hidden), size=(hidden, num_labels))
        self.b2 = np.zeros(num_labels)
        self.dropout = dropout

    @property
    def dim(self) -> int:
        return self.W1.shape[0]

    @property
    def hidden(self) -> int:
        return self.W1.shape[1]

    @property
    def num_labels(self) -> int:
        return self.W2.shape[1]

    def _pre_hidden(self, rep: SpanRepresentation) -> np.ndarray:
        return self.W1[rep.ids].sum(axis=0) + self.b1

    def score(self, rep: SpanRepresentation) -> np.ndarray:
        h = np.maximum(self._pre_hidden(rep), 0.0)
        return h @ self.W2 + self.b2

    def score_train(self, rep: SpanRepresentation,
                    rng: np.random.Generator) -> tuple[np.ndarray, dict]:
        pre = self._pre_hidden(rep)
        h = np.maximum(pre, 0.0)
        if self.dropout > 0.0:
            keep = (rng.random(self.hidden) >= self.dropout) / (1.0 - self.dropout)
            h = h * keep
        else:
            keep = None
        cache = {"pre": pre, "keep": keep}
        return h @ self.W2 + self.b2, cache

    def backward(self, rep: SpanRepresentation, upstream: np.ndarray,
                 cache: dict | None = None) -> Gradients:
        return mlp_backward(self, rep, upstream, cache)

    def params(self) -> dict[str, np.ndarray]:
        return {"W1": self.W1, "b1": self.b1, "W2": self.W2, "b2": self.b2}

    def sgd_step(self, grads: list[Gradients], lr: float,
                 count: int | None = None) -> None:
        _apply_sgd(self.params(), grads, lr, count)


def mlp_backward(head: MLPHead, rep: SpanRepresentation, upstream: np.ndarray,
                 cache: dict | None = None) -> Gradients:
    """Analytic gradients of the MLP forward map at one span.

    Without ``cache`` the forward pass is recomputed with dropout off; pass
    the cache from ``score_train`` to backpropagate through its mask.
    """
    upstream = np.asarray(upstream, dtype=np.float64)
    if not np.isfinite(upstream).all():
        raise ValueError("non-finite upstream gradient")
    if cache is None:
        pre = head._pre_hidden(rep)
        keep = None
    else:
        pre = cache["pre"]
        keep = cache["keep"]
    h = np.maximum(pre, 0.0)
    if keep is not None:
        h = h * keep
    g_W2 = np.outer(h, upstream)
    g_b2 = upstream.copy()
    dh = head.W2 @ upstream
    if keep is not None:
        dh = dh * keep
    dpre = dh * (pre > 0.0)
    rows = np.tile(dpre, (len(rep.ids), 1))
    return {"W1": (rep.ids, rows), "b1": dpre, "W2": g_W2, "b2": g_b2}
