"""Pre-training with early stopping and per-interval fine-tuning."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .ggcn import AdamW, GgcnModel, loss_and_gradients
from .graph import HeteroGraph, pack

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Sample:
    graph: HeteroGraph
    target: float


@dataclass
class TrainConfig:
    lr: float = 1e-4
    weight_decay: float = 0.01
    batch_size: int = 16
    max_epochs: int = 200
    patience: int = 10
    val_fraction: float = 0.2
    seed: int = 0
    # start from the constant predictor of the mean training target
    init_mean_predictor: bool = True


@dataclass
class LossCurve:
    train: list[float] = field(default_factory=list)
    val: list[float] = field(default_factory=list)
    best_epoch: int = 0

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["epoch", "train_mse", "val_mse"])
            for i, (a, b) in enumerate(zip(self.train, self.val)):
                w.writerow([i, repr(a), repr(b)])


def split(samples: list[Sample], val_fraction: float, seed: int) -> tuple[list[Sample], list[Sample]]:
    order = np.random.default_rng([seed, 0x5B11]).permutation(len(samples))
    n_val = max(1, int(round(val_fraction * len(samples)))) if len(samples) > 1 else 0
    val = [samples[i] for i in order[:n_val]]
    train = [samples[i] for i in order[n_val:]]
    return train, val


def evaluate(model: GgcnModel, samples: list[Sample], batch_size: int = 64) -> float:
    if not samples:
        return math.nan
    sq = 0.0
    for i in range(0, len(samples), batch_size):
        chunk = samples[i:i + batch_size]
        out = model.predict(pack([s.graph for s in chunk]))
        sq += float(np.sum((out - np.array([s.target for s in chunk])) ** 2))
    return sq / len(samples)


def set_mean_predictor(model: GgcnModel, mean_target: float) -> None:
    """Zero the output weights and put the output bias at logit(mean), so
    every graph is predicted as the mean target."""
    y = min(max(mean_target, 1e-6), 1 - 1e-6)
    model.params["out_w"][:] = 0.0
    model.params["out_b"][0] = math.log(y / (1 - y))


def pretrain(model: GgcnModel, samples: list[Sample], config: TrainConfig | None = None) -> tuple[GgcnModel, LossCurve]:
    """Mini-batch AdamW on MSE; stops after ``patience`` epochs without a
    validation improvement and returns the best-validation snapshot."""
    config = config or TrainConfig()
    if not samples:
        raise ValueError("pre-training needs a non-empty dataset")
    train, val = split(samples, config.val_fraction, config.seed)
    if not val:
        val = train
    model = model.copy()
    if config.init_mean_predictor:
        set_mean_predictor(model, float(np.mean([s.target for s in train])))
    opt = AdamW(config.lr, weight_decay=config.weight_decay)
    rng = np.random.default_rng([config.seed, 0x7EA1])
    curve = LossCurve()
    best, best_val, stale = model.copy(), evaluate(model, val), 0
    curve.train.append(evaluate(model, train))
    curve.val.append(best_val)
    for epoch in range(1, config.max_epochs + 1):
        order = rng.permutation(len(train))
        total = 0.0
        for i in range(0, len(order), config.batch_size):
            chunk = [train[j] for j in order[i:i + config.batch_size]]
            mse, grads = loss_and_gradients(model, pack([s.graph for s in chunk]), np.array([s.target for s in chunk]))
            opt.step(model.params, grads)
            total += mse * len(chunk)
        v = evaluate(model, val)
        curve.train.append(total / len(train))
        curve.val.append(v)
        log.debug("epoch %d train %.6f val %.6f", epoch, curve.train[-1], v)
        if v < best_val:
            best, best_val, stale = model.copy(), v, 0
            curve.best_epoch = epoch
        else:
            stale += 1
            if stale >= config.patience:
                break
    return best, curve


class FineTuner:
    """One optimizer step on the newest datapoint per scheduling interval."""

    def __init__(self, model: GgcnModel, lr: float = 1e-4, weight_decay: float = 0.01):
        self.model = model
        self.lr = lr
        self.opt = AdamW(lr, weight_decay=weight_decay)

    def __call__(self, sample: Sample) -> float:
        mse, grads = loss_and_gradients(self.model, pack([sample.graph]), np.array([sample.target]))
        self.opt.step(self.model.params, grads)
        return mse


def fine_tune(model: GgcnModel, sample: Sample, optimizer: AdamW | None = None, lr: float = 1e-4) -> GgcnModel:
    optimizer = optimizer or AdamW(lr)
    _, grads = loss_and_gradients(model, pack([sample.graph]), np.array([sample.target]))
    optimizer.step(model.params, grads, lr)
    return model
