"""Minimal fully-connected autoencoder with analytic gradients.

Dense layers only, float64 end to end. ``forward`` caches every
activation so ``backward`` can return exact parameter gradients for any
scalar objective, given upstream gradients on the reconstruction and,
optionally, on the latent code. The latent hook is what lets a
clustering loss pull on the embedding without a general autodiff graph.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

ACTIVATIONS = ("relu", "linear")


@dataclass(frozen=True)
class LayerSpec:
    """Shape and nonlinearity of one dense layer."""

    input_dim: int
    output_dim: int
    activation: str = "relu"

    def __post_init__(self):
        if self.input_dim < 1 or self.output_dim < 1:
            raise ValueError(
                f"layer dims must be >= 1, got {self.input_dim}x{self.output_dim}"
            )
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")


def mirrored_spec(
    input_dim: int,
    latent_dim: int = 10,
    hidden_dims: Sequence[int] = (500, 500, 2000),
) -> tuple[list[LayerSpec], list[LayerSpec]]:
    """Build encoder/decoder specs: ReLU hidden stack, linear final layers.

    The decoder mirrors the encoder, so the full net is
    input -> h1 -> ... -> hk -> latent -> hk -> ... -> h1 -> input.
    """
    hidden = list(hidden_dims)
    enc_dims = [input_dim] + hidden + [latent_dim]
    encoder = [
        LayerSpec(a, b, "relu") for a, b in zip(enc_dims[:-2], enc_dims[1:-1])
    ] + [LayerSpec(enc_dims[-2], enc_dims[-1], "linear")]
    dec_dims = [latent_dim] + hidden[::-1] + [input_dim]
    decoder = [
        LayerSpec(a, b, "relu") for a, b in zip(dec_dims[:-2], dec_dims[1:-1])
    ] + [LayerSpec(dec_dims[-2], dec_dims[-1], "linear")]
    return encoder, decoder


@dataclass
class Layer:
    """One dense layer: ``out = act(x @ weight + bias)``."""

    weight: np.ndarray  # (input_dim, output_dim)
    bias: np.ndarray  # (output_dim,)
    activation: str


@dataclass
class AutoencoderParams:
    """Encoder/decoder weight stacks. The bottleneck is the latent space."""

    encoder: list[Layer]
    decoder: list[Layer]

    @property
    def input_dim(self) -> int:
        return self.encoder[0].weight.shape[0]

    @property
    def latent_dim(self) -> int:
        return self.encoder[-1].weight.shape[1]

    def copy(self) -> "AutoencoderParams":
        return AutoencoderParams(
            encoder=[Layer(l.weight.copy(), l.bias.copy(), l.activation) for l in self.encoder],
            decoder=[Layer(l.weight.copy(), l.bias.copy(), l.activation) for l in self.decoder],
        )

    def all_finite(self) -> bool:
        return all(
            np.isfinite(l.weight).all() and np.isfinite(l.bias).all()
            for l in self.encoder + self.decoder
        )


@dataclass
class Gradients:
    """Per-layer (d_weight, d_bias) pairs, shape-congruent with the params."""

    encoder: list[tuple[np.ndarray, np.ndarray]]
    decoder: list[tuple[np.ndarray, np.ndarray]]


def _validate_chain(spec: Sequence[LayerSpec], what: str) -> None:
    if not spec:
        raise ValueError(f"{what} spec is empty")
    for i, (a, b) in enumerate(zip(spec, spec[1:])):
        if a.output_dim != b.input_dim:
            raise ValueError(
                f"{what} layers {i} and {i + 1} do not chain: "
                f"{a.output_dim} -> {b.input_dim}"
            )


def init_autoencoder(
    encoder_spec: Sequence[LayerSpec],
    decoder_spec: Sequence[LayerSpec],
    seed: int,
) -> AutoencoderParams:
    """Deterministically initialize parameters for the given architecture.

    Weights are uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)], biases zero.
    The decoder must map the encoder's latent dim back to its input dim.
    """
    _validate_chain(encoder_spec, "encoder")
    _validate_chain(decoder_spec, "decoder")
    if encoder_spec[-1].output_dim != decoder_spec[0].input_dim:
        raise ValueError(
            f"latent dim mismatch: encoder ends at {encoder_spec[-1].output_dim}, "
            f"decoder starts at {decoder_spec[0].input_dim}"
        )
    if decoder_spec[-1].output_dim != encoder_spec[0].input_dim:
        raise ValueError(
            f"decoder output {decoder_spec[-1].output_dim} does not match "
            f"encoder input {encoder_spec[0].input_dim}"
        )
    rng = np.random.default_rng(seed)

    def _make(spec: Sequence[LayerSpec]) -> list[Layer]:
        layers = []
        for s in spec:
            lim = 1.0 / np.sqrt(s.input_dim)
            w = rng.uniform(-lim, lim, size=(s.input_dim, s.output_dim))
            b = np.zeros(s.output_dim)
            layers.append(Layer(w, b, s.activation))
        return layers

    return AutoencoderParams(encoder=_make(encoder_spec), decoder=_make(decoder_spec))


def _run_layers(
    layers: Sequence[Layer],
    x: np.ndarray,
    inputs: list | None = None,
    pres: list | None = None,
) -> np.ndarray:
    for layer in layers:
        if inputs is not None:
            inputs.append(x)
        pre = x @ layer.weight + layer.bias
        if pres is not None:
            pres.append(pre)
        x = np.maximum(pre, 0.0) if layer.activation == "relu" else pre
    return x


def _check_batch(batch: np.ndarray, dim: int, what: str) -> np.ndarray:
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim != 2 or batch.shape[1] != dim:
        raise ValueError(
            f"{what} expects a 2-d array with {dim} columns, got shape {batch.shape}"
        )
    return batch


def encode(params: AutoencoderParams, batch: np.ndarray) -> np.ndarray:
    """Map a (B, input_dim) batch to its (B, latent_dim) embedding."""
    batch = _check_batch(batch, params.input_dim, "encode")
    return _run_layers(params.encoder, batch)


def decode(params: AutoencoderParams, latent: np.ndarray) -> np.ndarray:
    """Map a (B, latent_dim) embedding back to (B, input_dim)."""
    latent = _check_batch(latent, params.latent_dim, "decode")
    return _run_layers(params.decoder, latent)


def encode_blocks(params: AutoencoderParams, features: np.ndarray, block: int = 4096) -> np.ndarray:
    """encode() over row blocks, bounding peak memory on wide hidden layers."""
    features = _check_batch(features, params.input_dim, "encode")
    if features.shape[0] <= block:
        return encode(params, features)
    out = np.empty((features.shape[0], params.latent_dim))
    for start in range(0, features.shape[0], block):
        out[start : start + block] = encode(params, features[start : start + block])
    return out


@dataclass
class ForwardCache:
    """All activations of one forward pass, consumed by ``backward``."""

    batch: np.ndarray
    encoder_inputs: list[np.ndarray]
    encoder_pre: list[np.ndarray]
    latent: np.ndarray
    decoder_inputs: list[np.ndarray]
    decoder_pre: list[np.ndarray]
    reconstruction: np.ndarray


def forward(params: AutoencoderParams, batch: np.ndarray) -> ForwardCache:
    """Full encode+decode pass, caching activations for ``backward``."""
    batch = _check_batch(batch, params.input_dim, "forward")
    enc_inputs: list[np.ndarray] = []
    enc_pre: list[np.ndarray] = []
    latent = _run_layers(params.encoder, batch, enc_inputs, enc_pre)
    dec_inputs: list[np.ndarray] = []
    dec_pre: list[np.ndarray] = []
    recon = _run_layers(params.decoder, latent, dec_inputs, dec_pre)
    return ForwardCache(batch, enc_inputs, enc_pre, latent, dec_inputs, dec_pre, recon)


def _layers_backward(
    layers: Sequence[Layer],
    inputs: Sequence[np.ndarray],
    pres: Sequence[np.ndarray],
    upstream: np.ndarray,
) -> tuple[list[tuple[np.ndarray, np.ndarray]], np.ndarray]:
    grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(layers)  # type: ignore[list-item]
    g = upstream
    for i in range(len(layers) - 1, -1, -1):
        layer = layers[i]
        if layer.activation == "relu":
            g = g * (pres[i] > 0.0)
        dw = inputs[i].T @ g
        db = g.sum(axis=0)
        grads[i] = (dw, db)
        g = g @ layer.weight.T
    return grads, g


def backward(
    params: AutoencoderParams,
    cache: ForwardCache,
    grad_reconstruction: np.ndarray,
    grad_latent: np.ndarray | None = None,
) -> Gradients:
    """Exact gradients of a scalar loss w.r.t. every parameter.

    ``grad_reconstruction`` is dLoss/dReconstruction; ``grad_latent``, if
    given, is an extra dLoss/dLatent term added where the decoder's
    backward pass reaches the bottleneck (clustering losses use this).
    """
    if not isinstance(cache, ForwardCache):
        raise ValueError("backward requires the ForwardCache of a prior forward() call")
    if len(cache.encoder_pre) != len(params.encoder) or len(cache.decoder_pre) != len(params.decoder):
        raise ValueError("forward cache does not match this architecture")
    grad_reconstruction = np.asarray(grad_reconstruction, dtype=np.float64)
    if grad_reconstruction.shape != cache.reconstruction.shape:
        raise ValueError(
            f"grad_reconstruction shape {grad_reconstruction.shape} does not match "
            f"reconstruction {cache.reconstruction.shape}"
        )
    dec_grads, g_latent = _layers_backward(
        params.decoder, cache.decoder_inputs, cache.decoder_pre, grad_reconstruction
    )
    if grad_latent is not None:
        grad_latent = np.asarray(grad_latent, dtype=np.float64)
        if grad_latent.shape != cache.latent.shape:
            raise ValueError(
                f"grad_latent shape {grad_latent.shape} does not match latent {cache.latent.shape}"
            )
        g_latent = g_latent + grad_latent
    enc_grads, _ = _layers_backward(
        params.encoder, cache.encoder_inputs, cache.encoder_pre, g_latent
    )
    return Gradients(encoder=enc_grads, decoder=dec_grads)


def iter_param_arrays(params: AutoencoderParams) -> Iterator[tuple[str, np.ndarray]]:
    """Flat, stable iteration over named parameter tensors."""
    for side, layers in (("encoder", params.encoder), ("decoder", params.decoder)):
        for i, layer in enumerate(layers):
            yield f"{side}[{i}].weight", layer.weight
            yield f"{side}[{i}].bias", layer.bias


def iter_grad_arrays(grads: Gradients) -> Iterator[tuple[str, np.ndarray]]:
    """Flat iteration over gradient tensors, aligned with iter_param_arrays."""
    for side, pairs in (("encoder", grads.encoder), ("decoder", grads.decoder)):
        for i, (dw, db) in enumerate(pairs):
            yield f"{side}[{i}].weight", dw
            yield f"{side}[{i}].bias", db


@dataclass
class OptimizerState:
    """SGD or Adam state; Adam keeps bias-corrected moment buffers."""

    kind: str
    learning_rate: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step_count: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)


def make_optimizer(
    kind: str = "adam",
    learning_rate: float = 1e-3,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> OptimizerState:
    if kind not in ("sgd", "adam"):
        raise ValueError(f"unknown optimizer kind {kind!r}")
    if learning_rate <= 0:
        raise ValueError("learning_rate must be positive")
    return OptimizerState(kind=kind, learning_rate=learning_rate, beta1=beta1, beta2=beta2, eps=eps)


def optimizer_step(
    params: AutoencoderParams,
    grads: Gradients,
    state: OptimizerState,
) -> tuple[AutoencoderParams, OptimizerState]:
    """Apply one in-place update. SGD: p -= lr*g; Adam: bias-corrected moments."""
    named_params = list(iter_param_arrays(params))
    named_grads = list(iter_grad_arrays(grads))
    if len(named_params) != len(named_grads):
        raise ValueError("gradients do not match parameter structure")
    for (name, p), (_, g) in zip(named_params, named_grads):
        if p.shape != g.shape:
            raise ValueError(f"gradient shape mismatch for {name}: {p.shape} vs {g.shape}")
        if not np.isfinite(g).all():
            raise FloatingPointError(f"non-finite gradient in {name}")

    lr = state.learning_rate
    if state.kind == "sgd":
        for (_, p), (_, g) in zip(named_params, named_grads):
            p -= lr * g
        state.step_count += 1
        return params, state

    if not state.m:
        state.m = [np.zeros_like(p) for _, p in named_params]
        state.v = [np.zeros_like(p) for _, p in named_params]
    state.step_count += 1
    t = state.step_count
    b1, b2 = state.beta1, state.beta2
    for i, ((_, p), (_, g)) in enumerate(zip(named_params, named_grads)):
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * g
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g
        m_hat = state.m[i] / (1.0 - b1**t)
        v_hat = state.v[i] / (1.0 - b2**t)
        p -= lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return params, state
