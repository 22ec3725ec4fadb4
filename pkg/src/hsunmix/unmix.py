"""Simplex-constrained unmixing solvers over a pixel network.

One outer loop serves six variants of the same alternating scheme:

* ``nmf``                          multiplicative updates for both factors
* ``lq_nmf``                       multiplicative signatures, projected
                                   gradient abundances with a q-norm penalty
* ``distributed``                  adds neighborhood cooperation
* ``sparse_distributed``           neighborhood cooperation plus sparsity
* ``clustered_sparse_distributed`` cooperation restricted to same-cluster
                                   neighbors (the full method)
* ``fcls``                         abundances only, signatures held fixed

Every iteration ends by projecting each abundance column onto the unit
simplex, so all iterates satisfy the nonnegativity and sum-to-one
constraints. The abundance sweep is synchronous: every pixel reads its
neighbors from the previous iterate.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, List, Optional

import numpy as np

from .errors import NumericalFailureError
from .regularizers import (
    estimate_sparsity_weight,
    neighbor_weights,
    project_simplex,
    project_simplex_columns,
    sparsity_gradient,
    sparsity_norm,
)
from .types import (
    AbundanceMatrix,
    ClusterAssignment,
    HyperspectralImage,
    NeighborhoodSystem,
    SignatureMatrix,
    UnmixingConfig,
    as_matrix,
    build_neighborhood,
)

MULT_GUARD = 1e-12  # added to multiplicative-update denominators


class AlgorithmVariant(str, Enum):
    NMF = "nmf"
    LQ_NMF = "lq_nmf"
    DISTRIBUTED = "distributed"
    SPARSE_DISTRIBUTED = "sparse_distributed"
    CLUSTERED_SPARSE_DISTRIBUTED = "clustered_sparse_distributed"
    FCLS = "fcls"


class StopReason(str, Enum):
    CONVERGED = "converged"
    MAX_ITER = "max_iter"


@dataclass(frozen=True)
class UnmixingResult:
    """Outcome of a solver run. ``cost_trace`` holds one objective value per iteration."""

    A: SignatureMatrix
    S: AbundanceMatrix
    cost_trace: List[float]
    iterations_run: int
    stop_reason: StopReason

    def __post_init__(self):
        if len(self.cost_trace) != self.iterations_run:
            raise ValueError("cost_trace length must equal iterations_run")


def global_cost(Y, A, S) -> float:
    """Summed squared reconstruction error over all pixels."""
    Yd = as_matrix(Y, "image")
    Ad = as_matrix(A, "signatures")
    Sd = as_matrix(S, "abundances")
    if Ad.shape[0] != Yd.shape[0] or Ad.shape[1] != Sd.shape[0] or Sd.shape[1] != Yd.shape[1]:
        raise ValueError("incompatible shapes for image, signatures, abundances")
    resid = Yd - Ad @ Sd
    return float(np.sum(resid * resid))


def local_cost(
    k: int,
    Y,
    A,
    S,
    nbhd: Optional[NeighborhoodSystem] = None,
    clusters: Optional[ClusterAssignment] = None,
    cfg: UnmixingConfig = UnmixingConfig(),
) -> float:
    """Per-pixel objective: residual + neighborhood coupling + sparsity penalty.

    The neighborhood term sums the weighted squared abundance differences to
    the neighbors that pass the variant's cluster mask; the sparsity term is
    the guarded q-norm of the pixel abundance scaled by the variant weight.
    """
    Yd = as_matrix(Y, "image")
    Ad = as_matrix(A, "signatures")
    Sd = as_matrix(S, "abundances")
    eta, lam, use_mask, _, _ = _variant_params(cfg, Yd)
    s_k = Sd[:, k]
    resid = Yd[:, k] - Ad @ s_k
    value = float(resid @ resid)
    if eta > 0:
        neighbors, weights = _masked_neighbors(k, nbhd, clusters, use_mask)
        if neighbors.size:
            diff = Sd[:, neighbors] - s_k[:, None]
            value += eta * float(weights @ np.einsum("ij,ij->j", diff, diff))
    if lam > 0:
        value += lam * float(sparsity_norm(s_k, cfg.q))
    return value


def smooth_cost_gradient(
    k: int,
    Y,
    A,
    S,
    nbhd: Optional[NeighborhoodSystem] = None,
    clusters: Optional[ClusterAssignment] = None,
    cfg: UnmixingConfig = UnmixingConfig(),
) -> np.ndarray:
    """Gradient of the smooth part of ``local_cost`` (residual + neighborhood)
    with respect to the abundance vector of pixel k."""
    Yd = as_matrix(Y, "image")
    Ad = as_matrix(A, "signatures")
    Sd = as_matrix(S, "abundances")
    eta, _, use_mask, _, _ = _variant_params(cfg, Yd)
    s_k = Sd[:, k]
    grad = -2.0 * (Ad.T @ (Yd[:, k] - Ad @ s_k))
    if eta > 0:
        neighbors, weights = _masked_neighbors(k, nbhd, clusters, use_mask)
        if neighbors.size:
            grad = grad + 2.0 * eta * ((s_k[:, None] - Sd[:, neighbors]) @ weights)
    return grad


def update_abundance(
    k: int,
    Y,
    A,
    S_prev,
    nbhd: Optional[NeighborhoodSystem] = None,
    clusters: Optional[ClusterAssignment] = None,
    cfg: UnmixingConfig = UnmixingConfig(),
) -> np.ndarray:
    """One projected update of the abundance column of pixel k.

    Moves along the residual gradient, pulls toward the (cluster-masked)
    neighbor abundances, steps down the sparsity gradient, then projects
    onto the simplex. Neighbor values are read from ``S_prev`` unchanged.
    """
    Yd = as_matrix(Y, "image")
    Ad = as_matrix(A, "signatures")
    Sd = as_matrix(S_prev, "abundances")
    eta, lam, use_mask, _, _ = _variant_params(cfg, Yd)
    s_k = Sd[:, k]
    step = cfg.mu * (Ad.T @ (Yd[:, k] - Ad @ s_k))
    if eta > 0:
        neighbors, weights = _masked_neighbors(k, nbhd, clusters, use_mask)
        if neighbors.size:
            step = step + cfg.mu * eta * ((Sd[:, neighbors] - s_k[:, None]) @ weights)
    if lam > 0:
        step = step - cfg.mu * lam * sparsity_gradient(s_k, cfg.q)
    return project_simplex(s_k + step)


def update_signatures(Y, A, S) -> np.ndarray:
    """Multiplicative signature update A * (Y S^T) / (A S S^T + guard).

    Keeps nonnegativity and never increases the reconstruction error; the
    additive guard only protects against zero denominators.
    """
    Yd = as_matrix(Y, "image")
    Ad = as_matrix(A, "signatures")
    Sd = as_matrix(S, "abundances")
    if Ad.shape[0] != Yd.shape[0] or Ad.shape[1] != Sd.shape[0] or Sd.shape[1] != Yd.shape[1]:
        raise ValueError("incompatible shapes for image, signatures, abundances")
    gram = Sd @ Sd.T
    return Ad * (Yd @ Sd.T) / (Ad @ gram + MULT_GUARD)


def update_abundance_multiplicative(Y, A, S) -> np.ndarray:
    """Multiplicative abundance update S * (A^T Y) / (A^T A S + guard)."""
    Yd = as_matrix(Y, "image")
    Ad = as_matrix(A, "signatures")
    Sd = as_matrix(S, "abundances")
    return Sd * (Ad.T @ Yd) / ((Ad.T @ Ad) @ Sd + MULT_GUARD)


def converged(j_new: float, j_old: float, eps: float) -> bool:
    """Stopping rule: the absolute objective change fell below ``eps``."""
    if not (np.isfinite(j_new) and np.isfinite(j_old)):
        raise ValueError("objective values must be finite")
    return bool(abs(j_new - j_old) < eps)


def run_unmixing(
    Y,
    cfg: UnmixingConfig,
    init_A,
    init_S,
    clusters: Optional[ClusterAssignment] = None,
    on_iteration: Optional[Callable[[int, np.ndarray, np.ndarray, float], None]] = None,
) -> UnmixingResult:
    """Run the variant selected by ``cfg.variant`` from the given initialization.

    Every outer iteration updates the signatures (multiplicative rule, skipped
    for ``fcls``), sweeps all abundance columns synchronously, projects each
    column onto the simplex, and records the full objective (reconstruction
    error plus the variant's neighborhood and sparsity terms). The run stops
    when two consecutive objectives differ by less than ``cfg.eps`` or after
    ``cfg.max_iter`` iterations.

    ``clusters`` is required by the clustered variant and ignored elsewhere.
    ``on_iteration`` receives (iteration, A, S, objective) after each pass;
    the arrays must not be modified.
    """
    if not isinstance(Y, HyperspectralImage):
        raise ValueError("Y must be a HyperspectralImage")
    variant = AlgorithmVariant(cfg.variant)
    if variant is AlgorithmVariant.CLUSTERED_SPARSE_DISTRIBUTED and clusters is None:
        raise ValueError("the clustered variant requires a ClusterAssignment")
    Yd = Y.data
    A = as_matrix(init_A, "init_A").copy()
    S = as_matrix(init_S, "init_S").copy()
    n_bands, n_pixels = Yd.shape
    if A.shape[0] != n_bands or S.shape != (A.shape[1], n_pixels):
        raise ValueError("initial matrices do not match the image dimensions")

    eta, lam, use_mask, multiplicative_s, update_a = _variant_params(cfg, Yd)

    src = dst = w_eff = None
    if eta > 0:
        system = neighbor_weights(Y, build_neighborhood(Y.width, Y.height))
        if system.indices.size:
            src = np.repeat(np.arange(n_pixels), np.diff(system.indptr))
            dst = system.indices
            w_eff = system.weights
            if use_mask:
                labels = clusters.labels
                w_eff = w_eff * (labels[src] == labels[dst])

    trace: List[float] = []
    j_prev: Optional[float] = None
    reason = StopReason.MAX_ITER
    for iteration in range(1, cfg.max_iter + 1):
        if update_a:
            gram = S @ S.T
            A = A * (Yd @ S.T) / (A @ gram + MULT_GUARD)
        if multiplicative_s:
            S = S * (A.T @ Yd) / ((A.T @ A) @ S + MULT_GUARD)
        else:
            step = cfg.mu * (A.T @ (Yd - A @ S))
            if src is not None:
                step += (cfg.mu * eta) * _neighbor_pull(S, src, dst, w_eff)
            if lam > 0:
                step -= (cfg.mu * lam) * sparsity_gradient(S, cfg.q)
            S = S + step
        S = project_simplex_columns(S)

        j = _objective(Yd, A, S, eta, lam, cfg.q, src, dst, w_eff)
        if not np.isfinite(j):
            raise NumericalFailureError(
                f"objective became non-finite at iteration {iteration}", iteration=iteration
            )
        trace.append(j)
        if on_iteration is not None:
            on_iteration(iteration, A, S, j)
        if j_prev is not None and converged(j, j_prev, cfg.eps):
            reason = StopReason.CONVERGED
            break
        j_prev = j

    return UnmixingResult(
        A=SignatureMatrix(A),
        S=AbundanceMatrix(S),
        cost_trace=trace,
        iterations_run=len(trace),
        stop_reason=reason,
    )


def _variant_params(cfg: UnmixingConfig, Yd: np.ndarray):
    """Resolve (eta, sparsity weight, cluster mask, multiplicative S-step, update A)."""
    variant = AlgorithmVariant(cfg.variant)
    sparse = variant in (
        AlgorithmVariant.LQ_NMF,
        AlgorithmVariant.SPARSE_DISTRIBUTED,
        AlgorithmVariant.CLUSTERED_SPARSE_DISTRIBUTED,
    )
    cooperative = variant in (
        AlgorithmVariant.DISTRIBUTED,
        AlgorithmVariant.SPARSE_DISTRIBUTED,
        AlgorithmVariant.CLUSTERED_SPARSE_DISTRIBUTED,
    )
    lam = 0.0
    if sparse:
        lam = (
            cfg.sparsity_weight
            if cfg.sparsity_weight is not None
            else estimate_sparsity_weight(Yd)
        )
    eta = cfg.eta if cooperative else 0.0
    use_mask = variant is AlgorithmVariant.CLUSTERED_SPARSE_DISTRIBUTED
    multiplicative_s = variant is AlgorithmVariant.NMF
    update_a = variant is not AlgorithmVariant.FCLS
    return eta, lam, use_mask, multiplicative_s, update_a


def _masked_neighbors(
    k: int,
    nbhd: Optional[NeighborhoodSystem],
    clusters: Optional[ClusterAssignment],
    use_mask: bool,
):
    if nbhd is None:
        raise ValueError("this variant needs a neighborhood system")
    if nbhd.weights is None:
        raise ValueError("neighborhood weights have not been attached")
    neighbors = nbhd.neighbors_of(k)
    weights = nbhd.weights_of(k)
    if use_mask:
        if clusters is None:
            raise ValueError("the clustered variant requires a ClusterAssignment")
        keep = clusters.labels[neighbors] == clusters.labels[k]
        neighbors = neighbors[keep]
        weights = weights[keep]
    return neighbors, weights


def _neighbor_pull(S: np.ndarray, src: np.ndarray, dst: np.ndarray, w_eff: np.ndarray) -> np.ndarray:
    """Sum of weighted neighbor differences for every pixel, c x N."""
    contrib = (S[:, dst] - S[:, src]) * w_eff
    acc = np.zeros((S.shape[1], S.shape[0]))
    np.add.at(acc, src, contrib.T)
    return acc.T


def _objective(Yd, A, S, eta, lam, q, src, dst, w_eff) -> float:
    resid = Yd - A @ S
    value = float(np.sum(resid * resid))
    if src is not None and eta > 0:
        diff = S[:, src] - S[:, dst]
        value += eta * float(w_eff @ np.einsum("ij,ij->j", diff, diff))
    if lam > 0:
        value += lam * float(sparsity_norm(S, q).sum())
    return value
