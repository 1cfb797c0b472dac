# Copyright 2026 The ransomtrace Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
#
"""AdamW with decoupled weight decay, a linear schedule and the training loop."""

import logging
import math
from collections.abc import Mapping, Sequence
from typing import Optional

import numpy as np
import torch

from .data_model import EpochRecord, TrainConfig, TrainHistory, TrainStepRecord
from .errors import ConfigError, DataError, NumericError
from .evaluation import confusion, metrics
from .model import TransformerClassifier, batch_loss, batch_tensors, predict_arrays
from .nttp import EncodedExample
from .sinks import RecordSink

_logger = logging.getLogger(__name__)

Moments = tuple[torch.Tensor, torch.Tensor]


def adamw_update(
    param: torch.Tensor,
    grad: torch.Tensor,
    m: torch.Tensor,
    v: torch.Tensor,
    step: int,
    lr: float,
    hyper: TrainConfig,
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """One AdamW update of a single tensor; returns new (param, m, v)."""
    m = hyper.beta1 * m + (1 - hyper.beta1) * grad
    v = hyper.beta2 * v + (1 - hyper.beta2) * grad * grad
    m_hat = m / (1 - hyper.beta1**step)
    v_hat = v / (1 - hyper.beta2**step)
    param = param - lr * (m_hat / (v_hat.sqrt() + hyper.eps) + hyper.weight_decay * param)
    return param, m, v


def adamw_step(
    params: Mapping[str, torch.Tensor],
    grads: Mapping[str, torch.Tensor],
    state: Mapping[str, Moments],
    step: int,
    lr_t: float,
    hyper: TrainConfig,
) -> tuple[dict[str, torch.Tensor], dict[str, Moments]]:
    """Functional AdamW over named tensors; inputs are left untouched.

    Missing moment entries start at zero.

    Raises:
        ConfigError: ``step`` below 1.
        DataError: A gradient or moment shape differs from its parameter.
    """
    if step < 1:
        raise ConfigError(f"AdamW step counts from 1, got {step}")
    new_params, new_state = {}, {}
    for name, param in params.items():
        grad = grads[name]
        m, v = state.get(name, (torch.zeros_like(param), torch.zeros_like(param)))
        if not (grad.shape == m.shape == v.shape == param.shape):
            raise DataError(f"shape mismatch for parameter '{name}'")
        new_params[name], m, v = adamw_update(param, grad, m, v, step, lr_t, hyper)
        new_state[name] = (m, v)
    return new_params, new_state


class AdamW(torch.optim.Optimizer):
    """AdamW over ``torch`` parameters using :func:`adamw_update`.

    Args:
        params: Parameters to optimize.
        hyper: Betas, epsilon and weight decay; ``learning_rate`` is the base lr.
    """

    def __init__(self, params, hyper: TrainConfig):
        super().__init__(params, dict(lr=hyper.learning_rate))
        self.hyper = hyper

    @torch.no_grad()
    def step(self, closure=None):
        for group in self.param_groups:
            for p in group["params"]:
                if p.grad is None:
                    continue
                state = self.state[p]
                if not state:
                    state["step"] = 0
                    state["exp_avg"] = torch.zeros_like(p)
                    state["exp_avg_sq"] = torch.zeros_like(p)
                state["step"] += 1
                new_p, state["exp_avg"], state["exp_avg_sq"] = adamw_update(
                    p,
                    p.grad,
                    state["exp_avg"],
                    state["exp_avg_sq"],
                    state["step"],
                    group["lr"],
                    self.hyper,
                )
                p.copy_(new_p)
        return None


def lr_at(step: int, total_steps: int, base_lr: float) -> float:
    """Linear decay from ``base_lr`` at step 0 to 0 at ``total_steps``; no warmup.

    Raises:
        ConfigError: ``total_steps`` is zero or ``step`` is out of range.
    """
    if total_steps <= 0:
        raise ConfigError("total_steps must be positive")
    if not 0 <= step <= total_steps:
        raise ConfigError(f"step {step} outside [0, {total_steps}]")
    return base_lr * (1.0 - step / total_steps)


def _validation_scores(
    model: TransformerClassifier, val_ids, val_mask, val_labels: np.ndarray
) -> tuple[float, float]:
    model.eval()
    probs = predict_arrays(model, val_ids, val_mask)
    predicted = probs.argmax(axis=1).tolist()
    result = metrics(confusion(predicted, val_labels.tolist()))
    return result.accuracy, result.f1


def train(
    model: TransformerClassifier,
    train_set: Sequence[EncodedExample],
    val_set: Sequence[EncodedExample],
    config: TrainConfig,
    sink: Optional[RecordSink] = None,
) -> tuple[TransformerClassifier, TrainHistory]:
    """Trains in place with AdamW and a linearly decaying learning rate.

    Each epoch visits the training set in an order drawn from
    ``(config.seed, epoch)``; the last batch of an epoch may be short. After
    every epoch the validation split is scored for accuracy and F1.

    Args:
        model: The classifier to train; left in eval mode.
        train_set: Labelled training examples.
        val_set: Labelled validation examples.
        config: Optimizer and loop settings.
        sink: Receives a `TrainStepRecord` per step and an `EpochRecord` per epoch.

    Returns:
        The trained model and its `TrainHistory`.

    Raises:
        DataError: An empty or unlabelled split.
        NumericError: The loss became non-finite.
    """
    if not train_set or not val_set:
        raise DataError("training needs non-empty train and validation splits")
    ids, mask, labels = batch_tensors(train_set)
    val_ids, val_mask, val_labels = batch_tensors(val_set)
    if labels is None or val_labels is None:
        raise DataError("training needs labelled examples")

    n = ids.shape[0]
    steps_per_epoch = math.ceil(n / config.batch_size)
    total_steps = steps_per_epoch * config.epochs
    optimizer = AdamW(model.parameters(), config)
    step_losses, val_accuracy, val_f1 = [], [], []
    _logger.info(
        "training %d examples for %d epochs (%d steps)", n, config.epochs, total_steps
    )

    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(config.seed)
        global_step = 0
        for epoch in range(config.epochs):
            order = torch.from_numpy(np.random.default_rng([config.seed, epoch]).permutation(n))
            model.train()
            epoch_losses = []
            for start in range(0, n, config.batch_size):
                batch = order[start : start + config.batch_size]
                lr_t = lr_at(global_step, total_steps, config.learning_rate)
                for group in optimizer.param_groups:
                    group["lr"] = lr_t
                optimizer.zero_grad(set_to_none=True)
                loss = batch_loss(model, ids[batch], mask[batch], labels[batch])
                if not torch.isfinite(loss):
                    raise NumericError(f"non-finite loss at step {global_step}")
                loss.backward()
                optimizer.step()
                value = float(loss.detach())
                epoch_losses.append(value)
                if sink is not None:
                    sink.export(
                        TrainStepRecord(
                            epoch=epoch, step=global_step, loss=value, learning_rate=lr_t
                        )
                    )
                global_step += 1

            accuracy, f1 = _validation_scores(model, val_ids.numpy(), val_mask.numpy(), val_labels.numpy())
            step_losses.extend(epoch_losses)
            val_accuracy.append(accuracy)
            val_f1.append(f1)
            record = EpochRecord(
                epoch=epoch,
                mean_loss=float(np.mean(epoch_losses)),
                val_accuracy=accuracy,
                val_f1=f1,
            )
            _logger.info(record.model_dump_json())
            if sink is not None:
                sink.export(record)

    model.eval()
    history = TrainHistory(
        step_losses=step_losses,
        val_accuracy=val_accuracy,
        val_f1=val_f1,
        steps_per_epoch=steps_per_epoch,
        epochs=config.epochs,
    )
    return model, history
