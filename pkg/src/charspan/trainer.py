"""Mini-batch training with the two-phase loss schedule.

Epochs 1..label_loss_epochs use the per-span cross-entropy, the rest the
structured hinge.  After every epoch the dev set is decoded and parse F1
drives the schedule: no improvement for ``decay_patience`` consecutive
epochs halves the learning rate (times ``decay_factor``), and training
stops after ``max_decay`` decays, at the epoch cap, or when an epoch's
loss hits exactly zero (no gradient can flow anymore).  The best-dev
parameters are returned.

The optimizer is plain mini-batch SGD on the batch mean.  The 1e-5
learning rate documented for encoder-backed models is kept as a named
constant; the in-repo feature scorers use their own 0.1 preset because
nothing about an encoder's tuning transfers to hashed features.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .chartree import (from_char_tree, gold_span_labels, segmentation_of,
                       to_char_tree)
from .decoder import DecodeConfig, cky_decode
from .losses import label_loss, tree_loss
from .metrics import PRF, parse_f1, seg_f1
from .scorers import LinearScorer, MLPHead
from .scoring import (LabelVocab, SpanScores, build_vocab, iter_spans,
                      span_representation, score_spans)

# Rate for finetuning a pretrained encoder; documented for users plugging
# in external scores, not used by the feature scorers below.
ENCODER_LEARNING_RATE = 1e-5
FEATURE_SCORER_LEARNING_RATE = 0.1

LINEAR_FEATURE_DIM = 1 << 20
MLP_FEATURE_DIM = 1 << 14  # keeps MLP checkpoints at tens of megabytes


@dataclass
class TrainConfig:
    scorer: str = "linear"              # "linear" | "mlp"
    learning_rate: float | None = None  # None: preset for the chosen scorer
    decay_factor: float = 0.5
    decay_patience: int = 3
    max_decay: int = 10
    batch_size: int = 250
    label_loss_epochs: int = 10
    max_epochs: int = 100
    mlp_hidden: int = 250
    dropout: float = 0.2
    seed: int = 0
    margin_mode: str = "flat"           # tree-loss margin: "flat" | "hamming"
    loss_spans: str = "all"             # label-loss span set: "all" | "gold"
    feature_dim: int | None = None      # None: preset for the chosen scorer

    def __post_init__(self):
        if self.scorer not in ("linear", "mlp"):
            raise ValueError(f"unknown scorer {self.scorer!r}")
        for name in ("decay_factor", "decay_patience", "max_decay", "batch_size",
                     "label_loss_epochs", "max_epochs", "mlp_hidden"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.learning_rate is not None and self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")

    @property
    def effective_learning_rate(self) -> float:
        if self.learning_rate is not None:
            return self.learning_rate
        return FEATURE_SCORER_LEARNING_RATE

    @property
    def effective_feature_dim(self) -> int:
        if self.feature_dim is not None:
            return self.feature_dim
        return MLP_FEATURE_DIM if self.scorer == "mlp" else LINEAR_FEATURE_DIM


_CONFIG_CASTS = {
    "scorer": str, "learning_rate": float, "decay_factor": float,
    "decay_patience": int, "max_decay": int, "batch_size": int,
    "label_loss_epochs": int, "max_epochs": int, "mlp_hidden": int,
    "dropout": float, "seed": int, "margin_mode": str, "loss_spans": str,
    "feature_dim": int,
}


def parse_train_config(text: str, base: TrainConfig | None = None) -> TrainConfig:
    """key = value lines, '#' comments; unknown keys rejected."""
    updates = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected key = value")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _CONFIG_CASTS:
            raise ValueError(f"config line {lineno}: unknown key {key!r}")
        try:
            updates[key] = _CONFIG_CASTS[key](value)
        except ValueError:
            raise ValueError(f"config line {lineno}: bad value {value!r} "
                             f"for {key!r}") from None
    return replace(base or TrainConfig(), **updates)


def load_train_config(path) -> TrainConfig:
    with io.open(path, "r", encoding="utf-8") as f:
        return parse_train_config(f.read())


class Checkpoint:
    """Scorer parameters plus everything needed to rebuild inference."""

    def __init__(self, scorer_kind: str, params: dict[str, np.ndarray],
                 labels: list[str], feature_dim: int, mlp_hidden: int,
                 dropout: float, epoch: int, best_dev_f1: float, decays: int):
        self.scorer_kind = scorer_kind
        self.params = params
        self.labels = labels
        self.feature_dim = feature_dim
        self.mlp_hidden = mlp_hidden
        self.dropout = dropout
        self.epoch = epoch
        self.best_dev_f1 = best_dev_f1
        self.decays = decays

    @property
    def vocab(self) -> LabelVocab:
        return LabelVocab(self.labels)

    def build_scorer(self):
        if self.scorer_kind == "linear":
            scorer = LinearScorer(self.feature_dim, len(self.labels))
        else:
            scorer = MLPHead(self.feature_dim, len(self.labels), self.mlp_hidden,
                             self.dropout, rng=np.random.default_rng(0))
        for name, value in self.params.items():
            getattr(scorer, name)[...] = value
        return scorer

    def save(self, path) -> None:
        arrays = {
            "scorer_kind": np.array(self.scorer_kind),
            "labels": np.array(self.labels, dtype=str),
            "feature_dim": np.array(self.feature_dim),
            "mlp_hidden": np.array(self.mlp_hidden),
            "dropout": np.array(self.dropout),
            "epoch": np.array(self.epoch),
            "best_dev_f1": np.array(self.best_dev_f1),
            "decays": np.array(self.decays),
        }
        if self.scorer_kind == "linear":
            # almost all hash buckets stay zero; store touched rows only
            w = self.params["W"]
            ids = np.flatnonzero(np.any(w != 0.0, axis=1))
            arrays["W_ids"] = ids
            arrays["W_rows"] = w[ids]
        else:
            for name, value in self.params.items():
                arrays["p_" + name] = value
        with open(path, "wb") as f:
            np.savez(f, **arrays)

    @classmethod
    def load(cls, path) -> "Checkpoint":
        with np.load(path, allow_pickle=False) as data:
            kind = str(data["scorer_kind"])
            labels = [str(x) for x in data["labels"]]
            dim = int(data["feature_dim"])
            if kind == "linear":
                w = np.zeros((dim, len(labels)))
                w[data["W_ids"]] = data["W_rows"]
                params = {"W": w}
            else:
                params = {name[2:]: data[name].copy() for name in data.files
                          if name.startswith("p_")}
            return cls(kind, params, labels, dim, int(data["mlp_hidden"]),
                       float(data["dropout"]), int(data["epoch"]),
                       float(data["best_dev_f1"]), int(data["decays"]))


def _make_scorer(config: TrainConfig, dim: int, num_labels: int,
                 rng: np.random.Generator):
    if config.scorer == "linear":
        return LinearScorer(dim, num_labels)
    return MLPHead(dim, num_labels, config.mlp_hidden, config.dropout, rng=rng)


def _sentence_pass(scorer, chars, reps, gold_map, gold_ct, vocab, kind,
                   config: TrainConfig, decode_cfg: DecodeConfig,
                   rng: np.random.Generator):
    n = len(chars)
    values = np.zeros((n + 1, n + 1, len(vocab)))
    caches = {}
    for (i, j), rep in reps.items():
        row, cache = scorer.score_train(rep, rng)
        values[i, j] = row
        caches[(i, j)] = cache
    scores = SpanScores(n, len(vocab), values, validate=False)
    if kind == "label":
        lv = label_loss(scores, gold_map, vocab, spans=config.loss_spans)
    else:
        lv = tree_loss(scores, gold_ct, vocab, decode_cfg,
                       margin_mode=config.margin_mode)
    rows: dict[tuple[int, int], np.ndarray] = {}
    for (i, j, l), g in lv.score_gradient.items():
        row = rows.get((i, j))
        if row is None:
            row = rows[(i, j)] = np.zeros(len(vocab))
        row[l] = g
    grads = [scorer.backward(reps[ij], row, caches[ij])
             for ij, row in rows.items()]
    return lv.value, grads


def _decode_corpus(scorer, vocab: LabelVocab, trees, decode_cfg: DecodeConfig):
    pred_trees = []
    pred_segs = []
    for tree in trees:
        chars = "".join(tree.leaves())
        scores = score_spans(scorer, chars, vocab)
        ct, _ = cky_decode(scores, vocab, decode_cfg, chars=chars)
        ptree, pseg = from_char_tree(ct)
        pred_trees.append(ptree)
        pred_segs.append(pseg)
    return pred_trees, pred_segs


def _evaluate(scorer, vocab: LabelVocab, trees,
              decode_cfg: DecodeConfig) -> tuple[PRF, PRF]:
    pred_trees, pred_segs = _decode_corpus(scorer, vocab, trees, decode_cfg)
    seg = seg_f1([segmentation_of(t) for t in trees], pred_segs)
    par = parse_f1(list(trees), pred_trees)
    return seg, par


def train(train_corpus: Sequence, dev_corpus: Sequence,
          config: TrainConfig | None = None,
          history: list | None = None) -> Checkpoint:
    """Train a scorer; returns the checkpoint of the best dev-F1 epoch.

    ``history``, when given, receives one record per epoch with the loss
    kind, epoch loss, learning rate, decay count, and dev metrics.
    """
    if config is None:
        config = TrainConfig()
    train_trees = list(train_corpus)
    dev_trees = list(dev_corpus)
    if not train_trees or not dev_trees:
        raise ValueError("training and dev corpora must be non-empty")

    gold_char = [to_char_tree(t) for t in train_trees]
    gold_maps = [gold_span_labels(ct) for ct in gold_char]
    sentences = ["".join(t.leaves()) for t in train_trees]
    vocab = build_vocab(gold_char)
    dim = config.effective_feature_dim
    rng = np.random.default_rng(config.seed)
    scorer = _make_scorer(config, dim, len(vocab), rng)
    decode_cfg = DecodeConfig()
    reps = [{(i, j): span_representation(chars, i, j, dim)
             for (i, j) in iter_spans(len(chars))} for chars in sentences]

    lr = config.effective_learning_rate
    best_f1 = -1.0
    best_params = {k: v.copy() for k, v in scorer.params().items()}
    best_epoch = 0
    decays = 0
    since_improve = 0

    for epoch in range(1, config.max_epochs + 1):
        kind = "label" if epoch <= config.label_loss_epochs else "tree"
        order = rng.permutation(len(train_trees))
        epoch_loss = 0.0
        for batch_id, start in enumerate(range(0, len(order), config.batch_size)):
            batch = order[start:start + config.batch_size]
            grads = []
            for s in batch:
                value, sent_grads = _sentence_pass(
                    scorer, sentences[s], reps[s], gold_maps[s], gold_char[s],
                    vocab, kind, config, decode_cfg, rng)
                if not np.isfinite(value):
                    raise RuntimeError(f"non-finite {kind} loss in batch "
                                       f"{batch_id} of epoch {epoch}")
                epoch_loss += value
                grads.extend(sent_grads)
            if grads:
                scorer.sgd_step(grads, lr, count=len(batch))

        seg, par = _evaluate(scorer, vocab, dev_trees, decode_cfg)
        if par.f1 > best_f1:
            best_f1 = par.f1
            best_params = {k: v.copy() for k, v in scorer.params().items()}
            best_epoch = epoch
            since_improve = 0
        else:
            since_improve += 1
            if since_improve >= config.decay_patience:
                lr *= config.decay_factor
                decays += 1
                since_improve = 0
        if history is not None:
            history.append({"epoch": epoch, "loss_kind": kind,
                            "loss": float(epoch_loss), "lr": lr,
                            "decays": decays, "dev_seg_f1": seg.f1,
                            "dev_parse_f1": par.f1})
        if decays >= config.max_decay:
            break
        if epoch_loss == 0.0:
            break

    return Checkpoint(config.scorer, best_params, vocab.labels, dim,
                      config.mlp_hidden, config.dropout, best_epoch,
                      best_f1, decays)


def evaluate_dev(checkpoint: Checkpoint, dev_corpus: Sequence) -> tuple[PRF, PRF]:
    """Decode ``dev_corpus`` with the checkpoint's parameters and score it."""
    scorer = checkpoint.build_scorer()
    return _evaluate(scorer, checkpoint.vocab, list(dev_corpus), DecodeConfig())
