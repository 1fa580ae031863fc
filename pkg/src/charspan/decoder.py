"""Maximum-score binary tree over SpanScores.

``cky_decode`` fills a chart bottom-up and backtraces top-down.  Because no
grammar couples a span's label to its children's labels, the recursion
splits into an independent per-span best label plus a best split point,
O(n^3 + n^2 L) total.  Tie rule everywhere: smallest label id, then
smallest split k (first maximum wins).

The chart fill runs in a compiled kernel when the extension built, with a
vectorized numpy fallback; both use the same float association
``label_score + (left + right)`` so their charts agree bitwise.
``brute_force_decode`` enumerates every bracketing as an oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .chartree import CharTree
from .labels import is_char_label
from .scoring import LabelVocab, SpanScores, iter_spans

try:
    from . import _ckykernel
except ImportError:
    _ckykernel = None

PLACEHOLDER_CHAR = "□"

_BRUTE_FORCE_MAX = 12


@dataclass
class DecodeConfig:
    """Well-formedness masks applied before decoding.

    ``constrain_char_labels`` keeps "@1"-final labels on exactly the
    length-1 spans; ``require_nonnull_root`` forbids "∅" on (0, n).
    """

    constrain_char_labels: bool = True
    require_nonnull_root: bool = True


def available_backends() -> list[str]:
    out = ["python"]
    if _ckykernel is not None:
        out.append("cython")
    return out


def apply_masks(scores: SpanScores, vocab: LabelVocab,
                config: DecodeConfig) -> SpanScores:
    """Copy of ``scores`` with configured entries set to -inf.

    "∅" is never masked on non-root spans: it is how the decoder marks
    spans that are not constituents.  Raises when a span is left with no
    finite label at all.
    """
    if len(vocab) != scores.num_labels:
        raise ValueError("vocabulary size does not match score array")
    out = scores.copy()
    v = out.values
    n = scores.n
    if config.constrain_char_labels:
        char_final = np.array([is_char_label(lab) for lab in vocab.labels])
        ii = np.arange(n)
        v[ii[:, None], (ii + 1)[:, None], np.flatnonzero(~char_final)[None, :]] = -np.inf
        if n > 1:
            wi, wj = np.triu_indices(n + 1, k=2)
            v[wi[:, None], wj[:, None], np.flatnonzero(char_final)[None, :]] = -np.inf
    if config.require_nonnull_root:
        v[0, n, vocab.null_id] = -np.inf
    usable = np.isfinite(v).any(axis=2)
    si, sj = np.triu_indices(n + 1, k=1)
    bad = ~usable[si, sj]
    if bad.any():
        k = int(np.argmax(bad))
        raise ValueError(f"masking left span ({si[k]}, {sj[k]}) with no usable label")
    return out


def _fill_chart_py(values: np.ndarray, n: int):
    bc = np.zeros((n + 1, n + 1))
    bestlab = np.zeros((n + 1, n + 1), dtype=np.int64)
    split = np.zeros((n + 1, n + 1), dtype=np.int64)
    for length in range(1, n + 1):
        ii = np.arange(0, n - length + 1)
        jj = ii + length
        rows = values[ii, jj]
        bl = np.argmax(rows, axis=1)
        ls = rows[np.arange(len(ii)), bl]
        bestlab[ii, jj] = bl
        if length == 1:
            bc[ii, jj] = ls
        else:
            cands = np.stack([bc[ii, ii + k] + bc[ii + k, jj]
                              for k in range(1, length)])
            bk = np.argmax(cands, axis=0)
            bc[ii, jj] = ls + cands[bk, np.arange(len(ii))]
            split[ii, jj] = ii + bk + 1
    return bc, bestlab, split


def _fill_chart_cython(values: np.ndarray, n: int):
    bc = np.zeros((n + 1, n + 1))
    bestlab = np.zeros((n + 1, n + 1), dtype=np.int64)
    split = np.zeros((n + 1, n + 1), dtype=np.int64)
    _ckykernel.fill_chart(np.ascontiguousarray(values), bc, bestlab, split)
    return bc, bestlab, split


def fill_chart(values: np.ndarray, n: int, backend: str = "auto"):
    """Chart arrays (best_combined, best_label, best_split) for ``values``."""
    if backend == "auto":
        backend = "cython" if _ckykernel is not None else "python"
    if backend == "cython":
        if _ckykernel is None:
            raise ValueError("compiled kernel is not available in this build")
        return _fill_chart_cython(values, n)
    if backend == "python":
        return _fill_chart_py(values, n)
    raise ValueError(f"unknown backend {backend!r}")


def cky_decode(scores: SpanScores, vocab: LabelVocab,
               config: DecodeConfig | None = None,
               chars: Sequence[str] | None = None,
               backend: str = "auto") -> tuple[CharTree, float]:
    """Highest-scoring binary tree and its total span-score sum.

    ``chars`` supplies leaf characters; a placeholder is used when absent
    (scores alone do not carry the text).
    """
    if config is None:
        config = DecodeConfig()
    n = scores.n
    if chars is not None and len(chars) != n:
        raise ValueError(f"got {len(chars)} characters for {n} score positions")
    masked = apply_masks(scores, vocab, config)
    bc, bestlab, split = fill_chart(masked.values, n, backend)

    def build(i: int, j: int) -> CharTree:
        label = vocab[int(bestlab[i, j])]
        if j - i == 1:
            ch = chars[i] if chars is not None else PLACEHOLDER_CHAR
            return CharTree(label, char=ch, start=i)
        k = int(split[i, j])
        return CharTree(label, left=build(i, k), right=build(k, j))

    return build(0, n), float(bc[0, n])


def tree_score(scores: SpanScores, vocab: LabelVocab, tree: CharTree) -> float:
    """Sum of the tree's chosen span scores, associated exactly as the
    chart fill associates them, so it reproduces cky_decode's total."""
    i, j = tree.span
    v = float(scores.values[i, j, vocab.index[tree.label]])
    if tree.char is not None:
        return v
    return v + (tree_score(scores, vocab, tree.left)
                + tree_score(scores, vocab, tree.right))


def _span_argmax(values: np.ndarray, n: int, num_labels: int):
    # Deliberately a plain scan, sharing no code with the chart fills.
    bestlab = {}
    labscore = {}
    for i, j in iter_spans(n):
        arg = 0
        best = values[i, j, 0]
        for l in range(1, num_labels):
            v = values[i, j, l]
            if v > best:
                # strict >: the first maximum, i.e. smallest label id, wins
                best = v
                arg = l
        bestlab[i, j] = arg
        labscore[i, j] = float(best)
    return bestlab, labscore


def _enumerate_trees(labscore: dict, i: int, j: int, memo: dict) -> list:
    """Every bracketing of (i, j) as (score, shape), in split-major order so
    a first-strict-max scan lands on the same tree as the chart tie rule."""
    key = (i, j)
    if key in memo:
        return memo[key]
    if j == i + 1:
        out = [(labscore[i, j], None)]
    else:
        out = []
        for k in range(i + 1, j):
            for ls, lshape in _enumerate_trees(labscore, i, k, memo):
                for rs, rshape in _enumerate_trees(labscore, k, j, memo):
                    out.append((labscore[i, j] + (ls + rs), (k, lshape, rshape)))
    memo[key] = out
    return out


def brute_force_decode(scores: SpanScores, vocab: LabelVocab,
                       config: DecodeConfig | None = None,
                       chars: Sequence[str] | None = None) -> tuple[CharTree, float]:
    """Exhaustive maximum over all bracketings; oracle for cky_decode."""
    n = scores.n
    if n > _BRUTE_FORCE_MAX:
        raise ValueError(f"brute force decoding is limited to n <= {_BRUTE_FORCE_MAX}")
    if config is None:
        config = DecodeConfig()
    if chars is not None and len(chars) != n:
        raise ValueError(f"got {len(chars)} characters for {n} score positions")
    masked = apply_masks(scores, vocab, config)
    bestlab, labscore = _span_argmax(masked.values, n, scores.num_labels)
    best = None
    best_shape = None
    for s, shape in _enumerate_trees(labscore, 0, n, {}):
        if best is None or s > best:
            best = s
            best_shape = shape

    def build(i: int, j: int, shape) -> CharTree:
        label = vocab[bestlab[i, j]]
        if shape is None:
            ch = chars[i] if chars is not None else PLACEHOLDER_CHAR
            return CharTree(label, char=ch, start=i)
        k, lshape, rshape = shape
        return CharTree(label, left=build(i, k, lshape), right=build(k, j, rshape))

    return build(0, n, best_shape), float(best)
