"""Clustering-regularized objectives and their analytic gradients.

Three clustering terms share the skeleton "sum of squared distances,
weighted by a row-stochastic membership matrix":

* ``ct``  — weights proportional to d^(-alpha); gradients flow through
  both the distance factor and the weights, but centroids are trained
  only by the periodic K-means refresh, never by these gradients.
* ``dkm`` — softmax(-alpha * d) weights; centroids receive gradients and
  are trained jointly with the network.
* ``dcn`` — hard nearest-centroid assignment with a 0.5 * ||z - r||^2
  penalty; centroids follow running per-cluster means elsewhere.

All values are means over the batch so the coefficient ``lam`` is
batch-size independent. Weight computations run in log space with
max-subtraction, so large exponents stay finite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .clustering import assign
from .nn import AutoencoderParams, Gradients, backward, forward

VARIANTS = ("ct", "dkm", "dcn")


@dataclass(frozen=True)
class LossConfig:
    variant: str = "ct"
    lam: float = 10.0  # clustering-term coefficient
    alpha: float = 3.0  # weight sharpness exponent
    epsilon: float = 1e-12  # floor under squared distances

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown loss variant {self.variant!r}")
        if self.lam < 0:
            raise ValueError("lam must be non-negative")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")


def _pairwise(latent: np.ndarray, centroids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """diff (B,K,l) and squared distances (B,K), both float64."""
    latent = np.asarray(latent, dtype=np.float64)
    centroids = np.asarray(centroids, dtype=np.float64)
    if latent.ndim != 2 or centroids.ndim != 2 or latent.shape[1] != centroids.shape[1]:
        raise ValueError(
            f"latent {latent.shape} and centroids {centroids.shape} are not "
            "compatible 2-d arrays"
        )
    diff = latent[:, None, :] - centroids[None, :, :]
    d = np.einsum("bkl,bkl->bk", diff, diff)
    return diff, d


def _row_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def ct_weights(
    latent: np.ndarray,
    centroids: np.ndarray,
    alpha: float,
    epsilon: float = 1e-12,
) -> np.ndarray:
    """Row-stochastic (B, K) weights proportional to distance^(-alpha).

    d^(-alpha) is evaluated as exp(-alpha*log(max(d, epsilon))), which is
    a softmax over -alpha*log d and therefore safe for any alpha.
    """
    _, d = _pairwise(latent, centroids)
    return _row_softmax(-float(alpha) * np.log(np.maximum(d, epsilon)))


def dkm_weights(latent: np.ndarray, centroids: np.ndarray, alpha_dkm: float) -> np.ndarray:
    """Row-stochastic (B, K) softmax of -alpha_dkm times squared distance."""
    _, d = _pairwise(latent, centroids)
    return _row_softmax(-float(alpha_dkm) * d)


def ct_loss(
    latent: np.ndarray,
    centroids: np.ndarray,
    config: LossConfig,
) -> tuple[float, np.ndarray]:
    """Mean over the batch of sum_k d_k * w_k, with w = ct_weights.

    The returned gradient differentiates through the weights as well as
    the distances. The raw (unfloored) distance multiplies each weight,
    so a point sitting exactly on its only centroid contributes 0.
    """
    if config.variant != "ct":
        raise ValueError(f"ct_loss called with variant {config.variant!r}")
    diff, d = _pairwise(latent, centroids)
    b = d.shape[0]
    alpha = float(config.alpha)
    d_floor = np.maximum(d, config.epsilon)
    w = _row_softmax(-alpha * np.log(d_floor))
    per_sample = np.einsum("bk,bk->b", d, w)
    value = float(per_sample.sum() / b)
    # d/dz of the weights contributes -2*alpha * w*(d - s)/d_floor per
    # cluster; the factor is masked where the floor clamps the distance
    # (there the weight has zero local dependence on z).
    coef = w * (d - per_sample[:, None]) / d_floor * (d > config.epsilon)
    grad_latent = (
        2.0 * np.einsum("bk,bkl->bl", w, diff)
        - 2.0 * alpha * np.einsum("bk,bkl->bl", coef, diff)
    ) / b
    return value, grad_latent


def ct_centroid_grad(
    latent: np.ndarray,
    centroids: np.ndarray,
    config: LossConfig,
) -> np.ndarray:
    """Gradient of ct_loss w.r.t. the centroids.

    Provided for analysis only; the training loop never applies it —
    centroids move exclusively via the K-means refresh.
    """
    if config.variant != "ct":
        raise ValueError(f"ct_centroid_grad called with variant {config.variant!r}")
    diff, d = _pairwise(latent, centroids)
    b = d.shape[0]
    alpha = float(config.alpha)
    d_floor = np.maximum(d, config.epsilon)
    w = _row_softmax(-alpha * np.log(d_floor))
    per_sample = np.einsum("bk,bk->b", d, w)
    coef = w * (d - per_sample[:, None]) / d_floor * (d > config.epsilon)
    return (
        -2.0 * np.einsum("bk,bkl->kl", w, diff)
        + 2.0 * alpha * np.einsum("bk,bkl->kl", coef, diff)
    ) / b


def dkm_loss(
    latent: np.ndarray,
    centroids: np.ndarray,
    config: LossConfig,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Softmax-weighted distance loss with gradients for latents AND centroids."""
    if config.variant != "dkm":
        raise ValueError(f"dkm_loss called with variant {config.variant!r}")
    diff, d = _pairwise(latent, centroids)
    b = d.shape[0]
    alpha = float(config.alpha)
    g = _row_softmax(-alpha * d)
    per_sample = np.einsum("bk,bk->b", d, g)
    value = float(per_sample.sum() / b)
    coef = g * (d - per_sample[:, None])
    grad_latent = (
        2.0 * np.einsum("bk,bkl->bl", g, diff)
        - 2.0 * alpha * np.einsum("bk,bkl->bl", coef, diff)
    ) / b
    grad_centroids = (
        -2.0 * np.einsum("bk,bkl->kl", g, diff)
        + 2.0 * alpha * np.einsum("bk,bkl->kl", coef, diff)
    ) / b
    return value, grad_latent, grad_centroids


def dcn_penalty(
    latent: np.ndarray,
    centroids: np.ndarray,
    assignment: np.ndarray,
) -> tuple[float, np.ndarray]:
    """Mean over the batch of 0.5 * squared distance to the assigned centroid."""
    latent = np.asarray(latent, dtype=np.float64)
    centroids = np.asarray(centroids, dtype=np.float64)
    assignment = np.asarray(assignment)
    if assignment.shape != (latent.shape[0],):
        raise ValueError(
            f"assignment shape {assignment.shape} does not match batch of {latent.shape[0]}"
        )
    if assignment.min(initial=0) < 0 or (
        assignment.size and assignment.max() >= centroids.shape[0]
    ):
        raise ValueError(
            f"assignment labels must lie in [0, {centroids.shape[0]}), "
            f"got range [{assignment.min()}, {assignment.max()}]"
        )
    b = latent.shape[0]
    resid = latent - centroids[assignment]
    value = float(0.5 * np.einsum("bl,bl->", resid, resid) / b)
    grad_latent = resid / b
    return value, grad_latent


@dataclass
class CombinedResult:
    total: float
    reconstruction: float
    clustering: float  # unscaled clustering term; total = recon + lam * this
    param_grads: Gradients
    centroid_grads: np.ndarray | None  # only the dkm variant trains centroids
    assignment: np.ndarray | None  # hard labels used by the dcn variant


def reconstruction_loss(batch: np.ndarray, reconstruction: np.ndarray) -> tuple[float, np.ndarray]:
    """Squared-error autoencoder loss: mean over batch, sum over features."""
    batch = np.asarray(batch, dtype=np.float64)
    resid = reconstruction - batch
    b = batch.shape[0]
    value = float(np.einsum("bd,bd->", resid, resid) / b)
    return value, 2.0 * resid / b


def combined_objective(
    batch: np.ndarray,
    params: AutoencoderParams,
    centroids: np.ndarray,
    config: LossConfig,
) -> CombinedResult:
    """Reconstruction + lam * clustering term, with full parameter gradients.

    Runs one forward pass, evaluates the configured clustering term on
    the latent codes, and backpropagates both contributions through the
    network in a single backward pass. With lam = 0 the result is
    bitwise identical to the plain reconstruction objective.
    """
    cache = forward(params, batch)
    recon, grad_recon = reconstruction_loss(cache.batch, cache.reconstruction)
    lam = float(config.lam)
    centroid_grads: np.ndarray | None = None
    assignment: np.ndarray | None = None
    if config.variant == "ct":
        clust, grad_latent = ct_loss(cache.latent, centroids, config)
    elif config.variant == "dkm":
        clust, grad_latent, centroid_grads = dkm_loss(cache.latent, centroids, config)
        centroid_grads = lam * centroid_grads
    else:
        assignment = assign(cache.latent, centroids)
        clust, grad_latent = dcn_penalty(cache.latent, centroids, assignment)
    if lam == 0.0:
        param_grads = backward(params, cache, grad_recon)
        if centroid_grads is not None:
            centroid_grads = np.zeros_like(centroids)
    else:
        param_grads = backward(params, cache, grad_recon, lam * grad_latent)
    return CombinedResult(
        total=recon + lam * clust,
        reconstruction=recon,
        clustering=clust,
        param_grads=param_grads,
        centroid_grads=centroid_grads,
        assignment=assignment,
    )
