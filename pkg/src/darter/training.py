"""Joint training: summed BCE over both tables, Adam, grid search, checkpoints.

The loss for one sentence is gamma * entity-table BCE plus delta *
relation-table BCE, each summed over (unmasked) cells; batches average the
per-sentence losses and gradients.  The hyperparameter search sweeps the
mixing coefficients of the relation head and the two loss weights over their
small grids, refitting from scratch per point and selecting by dev relation
F1, then entity F1, then first in enumeration order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from .autodiff import (ContractError, Tensor, add, affine_const, clamp,
                       constant, log, mul, sum_all)
from .corpus import (LabelSchema, MatchMode, Vocabulary, entity_mask,
                     gold_tables)
from .decoders import ALPHA_BETA_GRID
from .evaluation import evaluate_corpus
from .model import ConfigError, JointModel, ModelConfig

__all__ = [
    "Adam",
    "GAMMA_DELTA_GRID",
    "GridPoint",
    "GridSearchResult",
    "LossWeights",
    "TrainConfig",
    "TrainingDiverged",
    "bce_sum",
    "grid_search",
    "load_checkpoint",
    "save_checkpoint",
    "save_history",
    "sentence_loss",
    "train",
]

GAMMA_DELTA_GRID = (0.75, 0.85, 1.0)

CHECKPOINT_FORMAT = "darter-checkpoint"
CHECKPOINT_VERSION = 1


class TrainingDiverged(RuntimeError):
    """Raised when the loss stops being finite."""


@dataclass(frozen=True)
class LossWeights:
    gamma: float = 1.0  # entity-table weight
    delta: float = 1.0  # relation-table weight

    def __post_init__(self):
        if self.gamma < 0 or self.delta < 0:
            raise ConfigError("loss weights must be non-negative")


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-3
    epochs: int = 100
    batch_size: int = 1
    seed: int = 0
    clamp_eps: float = 1e-7

    def __post_init__(self):
        if self.lr < 0:
            raise ConfigError("lr must be non-negative")
        if self.epochs < 0:
            raise ConfigError("epochs must be non-negative")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be at least 1")
        if not 0.0 < self.clamp_eps <= 1e-3:
            raise ConfigError("clamp_eps must lie in (0, 1e-3]")


# ---------------------------------------------------------------------------
# loss


def bce_sum(probs: Tensor, gold: np.ndarray, mask: np.ndarray | None = None,
            eps: float = 1e-7) -> Tensor:
    """Binary cross-entropy summed over (unmasked) table cells."""
    gold = np.asarray(gold, dtype=np.float64)
    if gold.shape != probs.shape:
        raise ContractError(
            f"gold shape {gold.shape} != probs shape {probs.shape}")
    if not np.all((gold == 0.0) | (gold == 1.0)):
        raise ContractError("gold tables must be binary")
    p = clamp(probs, eps, 1.0 - eps)
    hit = mul(constant(gold), log(p))
    miss = mul(constant(1.0 - gold), log(affine_const(p, -1.0, 1.0)))
    cells = add(hit, miss)
    if mask is not None:
        if mask.shape != probs.shape:
            raise ContractError(
                f"mask shape {mask.shape} != probs shape {probs.shape}")
        cells = mul(cells, constant(np.asarray(mask, dtype=np.float64)))
    return affine_const(sum_all(cells), -1.0, 0.0)


def sentence_loss(forward, entity_gold: np.ndarray, relation_gold: np.ndarray,
                  mask: np.ndarray | None, weights: LossWeights,
                  eps: float = 1e-7) -> Tensor:
    ner = bce_sum(forward.entities.probs, entity_gold, mask, eps)
    re = bce_sum(forward.relations.probs, relation_gold, None, eps)
    return add(affine_const(ner, weights.gamma, 0.0),
               affine_const(re, weights.delta, 0.0))


# ---------------------------------------------------------------------------
# optimizer


class Adam:
    """Adam with bias correction; state keyed by parameter name."""

    def __init__(self, store, lr: float, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.store = store
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self._m = {name: np.zeros_like(store[name]) for name in store.names()}
        self._v = {name: np.zeros_like(store[name]) for name in store.names()}

    def step(self, grads: dict[str, np.ndarray]) -> None:
        self.step_count += 1
        t = self.step_count
        for name in self.store.names():
            g = grads[name]
            m = self._m[name]
            v = self._v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            m_hat = m / (1.0 - self.beta1 ** t)
            v_hat = v / (1.0 - self.beta2 ** t)
            self.store.set_(name, self.store[name]
                            - self.lr * m_hat / (np.sqrt(v_hat) + self.eps))


# ---------------------------------------------------------------------------
# training loop


@dataclass
class _Prepared:
    token_ids: np.ndarray
    entity_gold: np.ndarray
    relation_gold: np.ndarray
    mask: np.ndarray


def _prepare(model: JointModel, sentence) -> _Prepared:
    config = model.config
    if sentence.mode is not config.match_mode:
        raise ContractError(
            f"sentence annotated in {sentence.mode.value} mode but the model "
            f"expects {config.match_mode.value}")
    entity_gold, relation_gold = gold_tables(sentence, model.schema)
    mask = entity_mask(len(sentence), model.schema.u, config.match_mode,
                       config.mask_reversed_entity_cells)
    return _Prepared(model.vocab.encode(sentence.tokens), entity_gold,
                     relation_gold, mask)


def train(model: JointModel, sentences, train_config: TrainConfig,
          weights: LossWeights = LossWeights()) -> list[float]:
    """Fit in place; returns the mean per-sentence loss of each epoch."""
    if not sentences:
        raise ContractError("training corpus is empty")
    prepared = [_prepare(model, s) for s in sentences]
    rng = np.random.default_rng(train_config.seed)
    optimizer = Adam(model.store, train_config.lr)
    names = list(model.store.names())
    history = []
    for epoch in range(train_config.epochs):
        order = rng.permutation(len(prepared))
        epoch_loss = 0.0
        for start in range(0, len(order), train_config.batch_size):
            batch = order[start:start + train_config.batch_size]
            grads = {name: np.zeros_like(model.store[name])
                     for name in names}
            for step, idx in enumerate(batch):
                item = prepared[idx]
                forward = model.forward(item.token_ids)
                loss = sentence_loss(forward, item.entity_gold,
                                     item.relation_gold, item.mask, weights,
                                     train_config.clamp_eps)
                value = loss.item()
                if not np.isfinite(value):
                    raise TrainingDiverged(
                        f"non-finite loss {value} at epoch {epoch}, "
                        f"sentence {int(idx)}")
                epoch_loss += value
                forward.record.backward(loss)
                for name in names:
                    grad = forward.record.grad(forward.bound[name])
                    if grad is not None:
                        grads[name] += grad
            scale = 1.0 / len(batch)
            optimizer.step({name: g * scale for name, g in grads.items()})
        history.append(epoch_loss / len(prepared))
    return history


# ---------------------------------------------------------------------------
# grid search


@dataclass(frozen=True)
class GridPoint:
    alpha: float
    beta: float
    gamma: float
    delta: float
    ner_f1: float
    re_f1: float

    def to_json(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta, "gamma": self.gamma,
                "delta": self.delta, "ner_f1": self.ner_f1,
                "re_f1": self.re_f1}


@dataclass(frozen=True)
class GridSearchResult:
    best: GridPoint
    points: tuple[GridPoint, ...]

    def to_json(self) -> dict:
        return {"best": self.best.to_json(),
                "points": [p.to_json() for p in self.points]}


def _default_scorer(model: JointModel, dev_sentences):
    report = evaluate_corpus(dev_sentences, model.predict_corpus(dev_sentences),
                             model.schema, model.config.match_mode)
    return report["ner"]["micro"]["f1"], report["re"]["micro"]["f1"]


def grid_search(config: ModelConfig, schema: LabelSchema, vocab: Vocabulary,
                train_sentences, dev_sentences, train_config: TrainConfig,
                alphas=ALPHA_BETA_GRID, betas=ALPHA_BETA_GRID,
                gammas=GAMMA_DELTA_GRID, deltas=GAMMA_DELTA_GRID,
                scorer=None) -> GridSearchResult:
    """Refit per grid point; best dev relation F1 wins, entity F1 breaks
    ties, then the lexicographically smallest (alpha, beta, gamma, delta)."""
    scorer = _default_scorer if scorer is None else scorer

    def rank(point):
        # maximize scores, then minimize the parameter tuple
        return (point.re_f1, point.ner_f1,
                (-point.alpha, -point.beta, -point.gamma, -point.delta))

    points = []
    best = None
    for alpha in alphas:
        for beta in betas:
            for gamma in gammas:
                for delta in deltas:
                    point_config = replace(config, alpha=alpha, beta=beta)
                    model = JointModel(point_config, schema, vocab)
                    train(model, train_sentences, train_config,
                          LossWeights(gamma=gamma, delta=delta))
                    ner_f1, re_f1 = scorer(model, dev_sentences)
                    point = GridPoint(alpha, beta, gamma, delta,
                                      ner_f1, re_f1)
                    points.append(point)
                    if best is None or rank(point) > rank(best):
                        best = point
    return GridSearchResult(best=best, points=tuple(points))


# ---------------------------------------------------------------------------
# artifacts


def save_checkpoint(path, model: JointModel) -> None:
    obj = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "config": model.config.to_json(),
        "schema": {"entity_types": list(model.schema.entity_types),
                   "relation_types": list(model.schema.relation_types)},
        "vocab": list(model.vocab.tokens),
        "params": {name: {"shape": list(values.shape),
                          "data": values.ravel().tolist()}
                   for name, values in model.store.items()},
    }
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(obj, handle)
        handle.write("\n")


def load_checkpoint(path) -> JointModel:
    with open(path, encoding="utf-8") as handle:
        try:
            obj = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: malformed JSON: {exc.msg}") from None
    if not isinstance(obj, dict) or obj.get("format") != CHECKPOINT_FORMAT:
        raise ConfigError(f"{path}: not a model checkpoint")
    if obj.get("version") != CHECKPOINT_VERSION:
        raise ConfigError(f"{path}: unsupported checkpoint version "
                          f"{obj.get('version')!r}")
    config = ModelConfig.from_json(obj["config"])
    schema = LabelSchema(tuple(obj["schema"]["entity_types"]),
                         tuple(obj["schema"]["relation_types"]))
    vocab = Vocabulary(tuple(obj["vocab"]))
    model = JointModel(config, schema, vocab)
    saved = obj["params"]
    want = set(model.store.names())
    if set(saved) != want:
        raise ConfigError(f"{path}: checkpoint parameters do not match the "
                          f"configured architecture")
    for name in model.store.names():
        entry = saved[name]
        values = np.array(entry["data"], dtype=np.float64)
        shape = tuple(entry["shape"])
        if values.size != int(np.prod(shape)) or \
                shape != model.store[name].shape:
            raise ConfigError(f"{path}: parameter {name} has shape {shape}, "
                              f"expected {model.store[name].shape}")
        model.store.set_(name, values.reshape(shape))
    return model


def save_history(path, history) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump({"epoch_mean_loss": list(history)}, handle)
        handle.write("\n")
