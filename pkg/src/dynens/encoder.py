"""LSTM sequence encoder and MLP scoring head, built on the autodiff core.

One encoder instance owns its parameters; forward passes accept whole
token batches (batch, seq_len) and return batched activations.
"""

from __future__ import annotations

import numpy as np

from .autodiff import Tensor, constant, embedding_lookup
from .optim import ParameterSet, uniform_init

EMBED_DIM = 100
HIDDEN_DIM = 100
MLP_HIDDEN = 200
DROPOUT_RATE = 0.1


class SequenceEncoder:
    """Token embedding + single-layer LSTM; the final hidden state is the
    architecture embedding.  Dropout applies to that state in training mode."""

    def __init__(self, vocab_size: int, rng: np.random.Generator,
                 embed_dim: int = EMBED_DIM, hidden_dim: int = HIDDEN_DIM,
                 dropout: float = DROPOUT_RATE, name: str = "encoder"):
        if not (0.0 <= dropout < 1.0):
            raise ValueError(f"dropout rate must lie in [0, 1), got {dropout}")
        self.vocab_size = vocab_size
        self.embed_dim = embed_dim
        self.hidden_dim = hidden_dim
        self.dropout = dropout
        self.params = ParameterSet()
        # Gate column order: input, forget, cell, output.
        self.embedding = self.params.add(
            f"{name}.embedding", uniform_init(rng, embed_dim, (vocab_size, embed_dim)))
        self.w_x = self.params.add(
            f"{name}.w_x", uniform_init(rng, embed_dim, (embed_dim, 4 * hidden_dim)))
        self.w_h = self.params.add(
            f"{name}.w_h", uniform_init(rng, hidden_dim, (hidden_dim, 4 * hidden_dim)))
        bias = np.zeros(4 * hidden_dim)
        bias[hidden_dim:2 * hidden_dim] = 1.0  # forget gate opens at init
        self.bias = self.params.add(f"{name}.bias", bias)

    def forward(self, tokens, training: bool = False,
                rng: np.random.Generator | None = None) -> Tensor:
        """Encode a (batch, seq_len) token array to (batch, hidden_dim)."""
        tokens = np.asarray(tokens, dtype=np.intp)
        if tokens.ndim != 2 or tokens.shape[1] == 0:
            raise ValueError(f"expected non-empty (batch, seq_len) tokens, got {tokens.shape}")
        if tokens.min() < 0 or tokens.max() >= self.vocab_size:
            raise ValueError(
                f"token out of vocabulary range [0, {self.vocab_size})")
        batch, seq_len = tokens.shape
        h = constant(np.zeros((batch, self.hidden_dim)))
        c = constant(np.zeros((batch, self.hidden_dim)))
        hd = self.hidden_dim
        for t in range(seq_len):
            x = embedding_lookup(self.embedding, tokens[:, t])
            z = x @ self.w_x + h @ self.w_h + self.bias
            i = z.slice_cols(0, hd).sigmoid()
            f = z.slice_cols(hd, 2 * hd).sigmoid()
            g = z.slice_cols(2 * hd, 3 * hd).tanh()
            o = z.slice_cols(3 * hd, 4 * hd).sigmoid()
            c = f * c + i * g
            h = o * c.tanh()
        if training and self.dropout > 0.0:
            if rng is None:
                raise ValueError("training-mode forward needs an rng for dropout")
            keep = rng.random(h.shape) >= self.dropout
            h = h * constant(keep / (1.0 - self.dropout))
        return h

    def encode(self, token_sequence) -> np.ndarray:
        """Eval-mode embedding of a single token sequence."""
        tokens = np.asarray(token_sequence, dtype=np.intp).reshape(1, -1)
        return self.forward(tokens, training=False).data[0]


class MlpHead:
    """Three affine layers (hidden width 200) with ReLU in between."""

    def __init__(self, rng: np.random.Generator, in_dim: int = HIDDEN_DIM,
                 out_dim: int = 1, hidden: int = MLP_HIDDEN, name: str = "head",
                 zero_final: bool = False):
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.params = ParameterSet()
        dims = [in_dim, hidden, hidden, out_dim]
        self.layers = []
        for li, (d_in, d_out) in enumerate(zip(dims[:-1], dims[1:])):
            if zero_final and li == len(dims) - 2:
                init = np.zeros((d_in, d_out))
            else:
                init = uniform_init(rng, d_in, (d_in, d_out))
            w = self.params.add(f"{name}.w{li}", init)
            b = self.params.add(f"{name}.b{li}", np.zeros(d_out))
            self.layers.append((w, b))

    def forward(self, embedding: Tensor) -> Tensor:
        """Raw (pre-sigmoid, pre-softmax) scores, shape (batch, out_dim)."""
        if embedding.shape[-1] != self.in_dim:
            raise ValueError(
                f"embedding width {embedding.shape[-1]} != head input {self.in_dim}")
        x = embedding
        for li, (w, b) in enumerate(self.layers):
            x = x @ w + b
            if li < len(self.layers) - 1:
                x = x.relu()
        return x

    def score(self, embedding: np.ndarray) -> np.ndarray:
        """Eval-mode scores for a single embedding vector."""
        out = self.forward(constant(np.asarray(embedding).reshape(1, -1)))
        return out.data[0]
