"""Character-level language models assembled from the layer modules."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import codec, fast, layers
from .layers import (Embedding, bits_per_character, dct_lstm_params,
                     dense_lstm_params, dropout, dropout_mask, lm_loss,
                     lstm_sequence)
from .numerics import (Parameter, Rng, config, derive_seed, matmul, reshape,
                       transpose)

ARCHS = ("baseline-dense", "dct", "fast-twin", "fast-single")


@dataclass(frozen=True)
class ModelSpec:
    arch: str = "dct"
    vocab: int = 205
    embed: int = 400
    layers: tuple[int, ...] = (1840, 1840, 400)
    rate: float = 0.0
    corner: str = codec.HIGH
    budget: str = "diagonal"
    slow_rate: float = 0.0
    backward: str = "recompute"

    def __post_init__(self):
        if self.arch not in ARCHS:
            raise ValueError(f"unknown architecture {self.arch!r}; expected one of {ARCHS}")
        if not self.layers or min(self.layers) < 1 or self.embed < 1 or self.vocab < 1:
            raise ValueError("layer, embedding and vocabulary sizes must be positive")
        for name in ("rate", "slow_rate"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.corner not in codec.CORNERS:
            raise ValueError(f"corner must be one of {codec.CORNERS}")
        if self.budget not in codec.BUDGET_MODES:
            raise ValueError(f"budget must be one of {codec.BUDGET_MODES}")
        if self.backward not in fast.MODES:
            raise ValueError(f"backward must be one of {fast.MODES}")

    @property
    def is_fast(self) -> bool:
        return self.arch.startswith("fast-")

    @property
    def needs_projection(self) -> bool:
        return self.layers[-1] != self.embed


def count_params(spec: ModelSpec) -> int:
    """Trainable scalars of ``spec`` without building the model."""
    total = spec.vocab * spec.embed
    m = spec.embed
    for n in spec.layers:
        if spec.arch == "baseline-dense":
            total += dense_lstm_params(n, m)
        elif spec.arch == "dct":
            total += (dense_lstm_params(n, m) if spec.rate == 0
                      else dct_lstm_params(n, m, spec.rate, spec.budget))
        else:
            ci = codec.coeff_budget(n, m, spec.rate, spec.budget)
            ch = codec.coeff_budget(n, n, spec.rate, spec.budget)
            hidden = [ci, ch] if spec.arch == "fast-twin" else [ci + ch]
            for H in hidden:
                total += (dense_lstm_params(H, m) if spec.slow_rate == 0
                          else dct_lstm_params(H, m, spec.slow_rate, spec.budget))
        m = n
    if spec.needs_projection:
        total += spec.embed * spec.layers[-1]
    return total


def fast_param_count(spec: ModelSpec) -> int:
    """Coefficients generated per step across all fast layers (0 otherwise)."""
    if not spec.is_fast:
        return 0
    total, m = 0, spec.embed
    for n in spec.layers:
        total += (codec.coeff_budget(n, m, spec.rate, spec.budget)
                  + codec.coeff_budget(n, n, spec.rate, spec.budget))
        m = n
    return total


class LanguageModel:
    """Tied-embedding recurrent LM over byte ids.

    ``forward`` consumes a (B, T) batch and the carried state and returns the
    mean cross-entropy tensor together with the detached final state.
    """

    def __init__(self, spec: ModelSpec, seed: int = 0):
        self.spec = spec
        rng = Rng(derive_seed(seed, "init"))
        self.embedding = Embedding(spec.vocab, spec.embed, rng)
        self.layers = []
        m = spec.embed
        for k, n in enumerate(spec.layers):
            name = f"layer{k}"
            if spec.arch == "baseline-dense":
                layer = layers.DenseLSTMWeights(n, m, rng, name)
            elif spec.arch == "dct":
                layer = layers.lstm_weights(n, m, spec.rate, spec.corner, spec.budget, rng, name,
                                            dense=False)
            else:
                variant = fast.TWIN if spec.arch == "fast-twin" else fast.SINGLE
                layer = fast.FastRNNLayer(n, m, spec.rate, variant, spec.corner, spec.budget,
                                          spec.slow_rate, rng, name)
            self.layers.append(layer)
            m = n
        self.projection = None
        if spec.needs_projection:
            self.projection = Parameter(layers.uniform_init(rng, spec.embed, m), name="proj")

    def parameters(self) -> list[Parameter]:
        params = list(self.embedding.parameters())
        for layer in self.layers:
            params.extend(layer.parameters())
        if self.projection is not None:
            params.append(self.projection)
        return params

    def named_parameters(self) -> dict[str, Parameter]:
        return {p.name: p for p in self.parameters()}

    def buffers(self) -> dict[str, np.ndarray]:
        out = {}
        for layer in self.layers:
            if isinstance(layer, fast.FastRNNLayer):
                out.update(layer.buffers())
        return out

    def load_buffers(self, buffers: dict[str, np.ndarray]) -> None:
        for layer in self.layers:
            if isinstance(layer, fast.FastRNNLayer):
                layer.g0_i = np.asarray(buffers[f"{layer.name}.g0_i"], dtype=np.float64)
                layer.g0_h = np.asarray(buffers[f"{layer.name}.g0_h"], dtype=np.float64)

    def num_params(self) -> int:
        return sum(p.size for p in self.parameters())

    def initial_state(self, batch: int):
        dtype = config.get_dtype()
        state = []
        for layer in self.layers:
            if isinstance(layer, fast.FastRNNLayer):
                state.append(layer.initial_state(batch))
            else:
                z = np.zeros((batch, layer.n), dtype=dtype)
                state.append((z, z.copy()))
        return state

    def forward(self, inputs, targets, state, train: bool = False,
                rng: Rng | None = None, drop=(0.0, 0.0, 0.0)):
        """Loss over one (B, T) segment.

        ``drop`` is ``(feed-forward, recurrent-weight, output)`` dropout,
        applied only when ``train`` is set.
        """
        p_ff, p_rec, p_out = drop
        inputs = np.asarray(inputs)
        B, T = inputs.shape
        x = self.embedding(inputs.T)  # (T, B, E)
        new_state = []
        last = len(self.layers) - 1
        for k, (layer, st) in enumerate(zip(self.layers, state)):
            if isinstance(layer, fast.FastRNNLayer):
                x, final = fast.fast_sequence(layer, x, st, self.spec.backward)
            else:
                mask = None
                if train and p_rec > 0:
                    mask = dropout_mask((4 * layer.n, layer.n), p_rec, rng)
                x, final = lstm_sequence(layer, x, st[0], st[1], mask)
            new_state.append(final)
            p = p_out if k == last else p_ff
            x = dropout(x, p, train, rng)
        h = reshape(x, (T * B, x.shape[-1]))
        if self.projection is not None:
            h = matmul(h, transpose(self.projection))
        logits = self.embedding.logits(h)
        loss = lm_loss(logits, np.asarray(targets).T)
        return loss, new_state


__all__ = ["ARCHS", "LanguageModel", "ModelSpec", "bits_per_character",
           "count_params", "fast_param_count"]
