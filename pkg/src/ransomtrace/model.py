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
"""Small transformer encoder classifier over bin-token sentences.

Two attention modes share one encoder:

* ``absolute``: learned position embeddings are added to the token
  embeddings and heads score ``q_i . k_j / sqrt(d_head)``.
* ``disentangled``: no positions at the input. Each head adds
  content-to-position and position-to-content terms over relative distances
  clipped to ``[-window, window]`` and the three-term sum is scaled by
  ``1 / sqrt(3 * d_head)``.

Everything runs on the CPU in float64 so gradients can be checked against
finite differences.
"""

import logging
import math
from collections.abc import Callable, Sequence
from typing import Optional

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from .data_model import EmbeddingStats, ModelConfig
from .errors import ConfigError, DataError, NumericError
from .nttp import SPECIAL_TOKENS, EncodedExample, TokenVocab, encode_texts

_logger = logging.getLogger(__name__)

DTYPE = torch.float64
INIT_STD = 0.02
PREDICT_CHUNK = 256
# Below this magnitude gradient errors are compared absolutely.
GRAD_CHECK_FLOOR = 1e-6

PredictFn = Callable[[Sequence[str]], np.ndarray]


def relative_position_index(length: int, window: int) -> torch.Tensor:
    """``idx[i, j] = clip(i - j, -window, window) + window``."""
    pos = torch.arange(length)
    return (pos[:, None] - pos[None, :]).clamp(-window, window) + window


class SelfAttention(nn.Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        self.n_heads = config.n_heads
        self.d_head = config.d_model // config.n_heads
        self.disentangled = config.attention_mode == "disentangled"
        self.window = config.relative_window
        self.query = nn.Linear(config.d_model, config.d_model)
        self.key = nn.Linear(config.d_model, config.d_model)
        self.value = nn.Linear(config.d_model, config.d_model)
        self.output = nn.Linear(config.d_model, config.d_model)
        if self.disentangled:
            self.pos_query = nn.Linear(config.d_model, config.d_model)
            self.pos_key = nn.Linear(config.d_model, config.d_model)
        self.dropout = nn.Dropout(config.dropout_rate)

    def _heads(self, x: torch.Tensor) -> torch.Tensor:
        # (..., L, d_model) -> (..., H, L, d_head)
        shape = x.shape[:-1] + (self.n_heads, self.d_head)
        return x.view(shape).transpose(-3, -2)

    def scores(
        self, hidden: torch.Tensor, rel_embeddings: Optional[torch.Tensor] = None
    ) -> torch.Tensor:
        """Pre-softmax scores of shape (B, H, L, L), before masking."""
        q = self._heads(self.query(hidden))
        k = self._heads(self.key(hidden))
        if not self.disentangled:
            return q @ k.transpose(-1, -2) / math.sqrt(self.d_head)

        length = hidden.shape[1]
        idx = relative_position_index(length, self.window)
        pos_k = self._heads(self.pos_key(rel_embeddings))  # (H, 2w+1, d_head)
        pos_q = self._heads(self.pos_query(rel_embeddings))
        gather_idx = idx.expand(q.shape[0], self.n_heads, length, length)
        # content -> position: q_i . pos_k[delta(i, j)]
        c2p = torch.gather(q @ pos_k.transpose(-1, -2), -1, gather_idx)
        # position -> content: k_j . pos_q[delta(j, i)]
        p2c = torch.gather(k @ pos_q.transpose(-1, -2), -1, gather_idx).transpose(-1, -2)
        return (q @ k.transpose(-1, -2) + c2p + p2c) / math.sqrt(3 * self.d_head)

    def forward(
        self,
        hidden: torch.Tensor,
        mask: torch.Tensor,
        rel_embeddings: Optional[torch.Tensor] = None,
    ) -> tuple[torch.Tensor, torch.Tensor]:
        scores = self.scores(hidden, rel_embeddings)
        scores = scores.masked_fill(~mask[:, None, None, :], float("-inf"))
        probs = torch.softmax(scores, dim=-1)
        context = self.dropout(probs) @ self._heads(self.value(hidden))
        context = context.transpose(1, 2).reshape(hidden.shape)
        return self.output(context), probs


class EncoderLayer(nn.Module):
    """Post-norm block: attention then a GELU feed-forward, each with a residual."""

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.attention = SelfAttention(config)
        self.attention_norm = nn.LayerNorm(config.d_model)
        self.ffn_in = nn.Linear(config.d_model, config.d_ffn)
        self.ffn_out = nn.Linear(config.d_ffn, config.d_model)
        self.ffn_norm = nn.LayerNorm(config.d_model)
        self.dropout = nn.Dropout(config.dropout_rate)

    def forward(self, hidden, mask, rel_embeddings=None):
        attended, probs = self.attention(hidden, mask, rel_embeddings)
        hidden = self.attention_norm(hidden + self.dropout(attended))
        ffn = self.ffn_out(F.gelu(self.ffn_in(hidden)))
        hidden = self.ffn_norm(hidden + self.dropout(ffn))
        return hidden, probs


class TransformerClassifier(nn.Module):
    """Encoder with CLS pooling and a two-way (Benign, Ransomware) head."""

    def __init__(self, config: ModelConfig, vocab_size: int):
        super().__init__()
        self.config = config
        self.vocab_size = vocab_size
        self.token_embeddings = nn.Embedding(vocab_size, config.d_model)
        if config.attention_mode == "absolute":
            self.position_embeddings = nn.Embedding(config.max_len, config.d_model)
        else:
            self.relative_position_embeddings = nn.Embedding(
                2 * config.relative_window + 1, config.d_model
            )
        self.embedding_norm = nn.LayerNorm(config.d_model)
        self.layers = nn.ModuleList(EncoderLayer(config) for _ in range(config.n_layers))
        self.dropout = nn.Dropout(config.dropout_rate)
        self.classifier = nn.Linear(config.d_model, 2)

    def forward(
        self,
        token_ids: torch.Tensor,
        attention_mask: torch.Tensor,
        capture_attention: bool = False,
    ) -> tuple[torch.Tensor, Optional[list[torch.Tensor]]]:
        """Logits (B, 2) and, when asked, per-layer attention (B, H, L, L).

        The batch is trimmed to its longest real sequence, so trailing PAD
        columns never enter the computation.
        """
        if token_ids.numel() and (
            int(token_ids.min()) < 0 or int(token_ids.max()) >= self.vocab_size
        ):
            raise DataError(f"token id out of range for vocabulary of {self.vocab_size}")
        if token_ids.shape[1] > self.config.max_len:
            raise DataError(f"sequence length {token_ids.shape[1]} exceeds max_len")
        length = max(int(attention_mask.sum(dim=1).max()), 1)
        token_ids = token_ids[:, :length]
        mask = attention_mask[:, :length].bool()

        hidden = self.token_embeddings(token_ids)
        rel_embeddings = None
        if self.config.attention_mode == "absolute":
            hidden = hidden + self.position_embeddings(torch.arange(length))
        else:
            rel_embeddings = self.relative_position_embeddings.weight
        hidden = self.dropout(self.embedding_norm(hidden))

        attentions = []
        for layer in self.layers:
            hidden, probs = layer(hidden, mask, rel_embeddings)
            if capture_attention:
                attentions.append(probs.detach())
        logits = self.classifier(hidden[:, 0])
        return logits, (attentions if capture_attention else None)


def init_model(config: ModelConfig, vocab_size: int) -> TransformerClassifier:
    """Builds a float64 classifier with seeded N(0, 0.02) weights.

    Biases start at zero and layer-norm scales at one. Parameters are drawn
    in registration order from a generator seeded with ``config.seed``, so the
    same seed gives bit-identical weights.

    Raises:
        ConfigError: ``vocab_size`` below 4.
    """
    if vocab_size < len(SPECIAL_TOKENS) + 1:
        raise ConfigError(f"vocab_size must be >= 4, got {vocab_size}")
    with torch.random.fork_rng(devices=[]):
        model = TransformerClassifier(config, vocab_size).to(DTYPE)
    generator = torch.Generator().manual_seed(config.seed)
    norms = {
        name for name, module in model.named_modules() if isinstance(module, nn.LayerNorm)
    }
    with torch.no_grad():
        for name, param in model.named_parameters():
            owner, _, kind = name.rpartition(".")
            if owner in norms:
                param.fill_(1.0 if kind == "weight" else 0.0)
            elif kind == "bias":
                param.zero_()
            else:
                param.copy_(torch.randn(param.shape, generator=generator, dtype=DTYPE) * INIT_STD)
    model.eval()
    _logger.debug(
        "initialised %s model with %d parameters",
        config.attention_mode,
        sum(p.numel() for p in model.parameters()),
    )
    return model


def batch_tensors(
    batch: Sequence[EncodedExample],
) -> tuple[torch.Tensor, torch.Tensor, Optional[torch.Tensor]]:
    ids = torch.tensor([ex.token_ids for ex in batch], dtype=torch.long)
    mask = torch.tensor([ex.attention_mask for ex in batch], dtype=torch.long)
    if any(ex.label is None for ex in batch):
        return ids, mask, None
    return ids, mask, torch.tensor([ex.label for ex in batch], dtype=torch.long)


def forward(
    model: TransformerClassifier,
    batch: Sequence[EncodedExample],
    capture_attention: bool = False,
) -> tuple[torch.Tensor, Optional[list[torch.Tensor]]]:
    ids, mask, _ = batch_tensors(batch)
    return model(ids, mask, capture_attention)


def batch_loss(
    model: TransformerClassifier,
    token_ids: torch.Tensor,
    attention_mask: torch.Tensor,
    labels: torch.Tensor,
) -> torch.Tensor:
    """Mean softmax cross-entropy of the batch, as a graph-attached scalar."""
    logits, _ = model(token_ids, attention_mask)
    if not torch.isfinite(logits).all():
        raise NumericError("non-finite logits")
    return F.cross_entropy(logits, labels)


def loss_and_grad(
    model: TransformerClassifier, batch: Sequence[EncodedExample]
) -> tuple[float, dict[str, torch.Tensor]]:
    """Loss and exact gradients, keyed by parameter name.

    Raises:
        DataError: Empty batch or unlabelled examples.
    """
    if not batch:
        raise DataError("loss_and_grad needs a non-empty batch")
    ids, mask, labels = batch_tensors(batch)
    if labels is None:
        raise DataError("loss_and_grad needs labelled examples")
    model.zero_grad(set_to_none=True)
    loss = batch_loss(model, ids, mask, labels)
    loss.backward()
    grads = {
        name: (p.grad.detach().clone() if p.grad is not None else torch.zeros_like(p))
        for name, p in model.named_parameters()
    }
    model.zero_grad(set_to_none=True)
    return float(loss.detach()), grads


def gradient_check(
    model: TransformerClassifier, batch: Sequence[EncodedExample], eps: float = 1e-4
) -> dict[str, float]:
    """Max relative error of analytic against central-difference gradients.

    Per tensor the error is ``max|a - n| / max(max|a|, max|n|, GRAD_CHECK_FLOOR)``.
    An element-wise ratio is unbounded wherever the true gradient is near
    zero: there the central difference is only truncation and rounding noise.
    A bias that shifts a whole score row by a constant (the key bias) has an
    exactly zero gradient, so it would always fail an element-wise check.
    Scaling by the largest gradient of the tensor measures the error at the
    size the optimizer actually applies.
    Every element is perturbed, so keep the model small.
    """
    _, analytic = loss_and_grad(model, batch)
    ids, mask, labels = batch_tensors(batch)
    errors = {}
    with torch.no_grad():
        for name, param in model.named_parameters():
            flat = param.view(-1)
            numeric = torch.zeros_like(flat)
            for i in range(flat.numel()):
                original = flat[i].item()
                flat[i] = original + eps
                plus = batch_loss(model, ids, mask, labels).item()
                flat[i] = original - eps
                minus = batch_loss(model, ids, mask, labels).item()
                flat[i] = original
                numeric[i] = (plus - minus) / (2 * eps)
            a = analytic[name].view(-1)
            scale = max(a.abs().max().item(), numeric.abs().max().item(), GRAD_CHECK_FLOOR)
            errors[name] = (a - numeric).abs().max().item() / scale
    return errors


def predict_arrays(
    model: TransformerClassifier, token_ids: np.ndarray, attention_mask: np.ndarray
) -> np.ndarray:
    """Class probabilities (n, 2) in (Benign, Ransomware) order.

    Raises:
        NumericError: The model produced non-finite probabilities.
    """
    ids = torch.as_tensor(token_ids, dtype=torch.long)
    mask = torch.as_tensor(attention_mask, dtype=torch.long)
    chunks = []
    with torch.no_grad():
        for start in range(0, ids.shape[0], PREDICT_CHUNK):
            logits, _ = model(ids[start : start + PREDICT_CHUNK], mask[start : start + PREDICT_CHUNK])
            chunks.append(torch.softmax(logits, dim=-1).numpy())
    probs = np.concatenate(chunks) if chunks else np.zeros((0, 2))
    if not np.isfinite(probs).all():
        raise NumericError("non-finite class probabilities")
    return probs


def predict_proba(model: TransformerClassifier, examples: Sequence[EncodedExample]) -> np.ndarray:
    if not examples:
        return np.zeros((0, 2))
    model.eval()
    ids, mask, _ = batch_tensors(examples)
    return predict_arrays(model, ids.numpy(), mask.numpy())


def model_predictor(model: TransformerClassifier, vocab: TokenVocab) -> PredictFn:
    """Wraps a frozen model as a pure ``texts -> (n, 2)`` function."""
    model.eval()
    max_len = model.config.max_len

    def predict(texts: Sequence[str]) -> np.ndarray:
        ids, mask = encode_texts(vocab, list(texts), max_len)
        return predict_arrays(model, ids, mask)

    return predict


# --- embedding statistics ---


def embedding_matrix(model: TransformerClassifier) -> np.ndarray:
    """Token embeddings of the non-special vocabulary entries."""
    return model.token_embeddings.weight.detach().numpy()[len(SPECIAL_TOKENS) :].copy()


def matrix_stats(embeddings: np.ndarray) -> EmbeddingStats:
    """Anisotropy of an (n_tokens, d) embedding matrix.

    Zero-norm rows count as orthogonal to everything. A zero-variance matrix
    has ``top_singular_share`` 1.0.

    Raises:
        DataError: Fewer than two rows.
    """
    emb = np.asarray(embeddings, dtype=np.float64)
    n = emb.shape[0]
    if n < 2:
        raise DataError("embedding statistics need at least two tokens")
    norms = np.linalg.norm(emb, axis=1, keepdims=True)
    unit = np.divide(emb, norms, out=np.zeros_like(emb), where=norms > 0)
    sims = unit @ unit.T
    mean_cos = (sims.sum() - np.trace(sims)) / (n * (n - 1))
    centered = emb - emb.mean(axis=0)
    singular = np.linalg.svd(centered, compute_uv=False)
    total = float(np.sum(singular**2))
    share = float(singular[0] ** 2 / total) if total > 0 else 1.0
    return EmbeddingStats(
        n_tokens=n,
        mean_pairwise_cosine=float(np.clip(mean_cos, -1.0, 1.0)),
        per_dimension_variance=np.var(emb, axis=0).tolist(),
        top_singular_share=min(share, 1.0),
    )


def embedding_stats(model: TransformerClassifier) -> EmbeddingStats:
    return matrix_stats(embedding_matrix(model))
