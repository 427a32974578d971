"""Finite-block diagnostics for the information-spectrum limits.

The spectral inf- and sup-mutual-information rates sandwich private capacity
in the large-block limit; nothing asymptotic is computable at desk scale.
What is computable: exact one-shot divergences of small tensor powers, and
Monte Carlo quantiles of the classical information density at moderate block
lengths, where the iid law of large numbers pins both rates to the mutual
information and gives a target to check against.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .divergences import cq_hypothesis_testing_divergence, smooth_max_divergence
from .ensembles import CqState, Ensemble
from .errors import DomainError, TooLarge, ValidationError

__all__ = ["SpectralSeries", "classical_spectral_estimate", "tensor_power_rates"]

TENSOR_DIM_CAP = 4096
N_BLOCKS = 101


@dataclass(frozen=True)
class SpectralSeries:
    """Per-block-length normalized rate bounds, aligned with ``n_values``."""

    n_values: tuple
    rate_lower: tuple
    rate_upper: tuple
    eps: float


def _product_ensemble(e: Ensemble, n):
    labels, probs, states = e.labels, np.asarray(e.probs), e.states
    out_labels = [(x,) for x in labels]
    out_probs = probs.copy()
    out_states = list(states)
    for _ in range(n - 1):
        out_labels = [lx + (x,) for lx in out_labels for x in labels]
        out_probs = np.kron(out_probs, probs)
        out_states = [np.kron(sl, s) for sl in out_states for s in states]
    return Ensemble(tuple(out_labels), tuple(out_probs), tuple(out_states))


def tensor_power_rates(cq: CqState, n_max, eps) -> SpectralSeries:
    """Normalized one-shot divergences of the n-fold powers, n = 1..n_max.

    rate_lower is the hypothesis-testing divergence over n, rate_upper the
    smooth max divergence over n, both against the product of marginals.
    The joint dimension grows as dim(VB)^n; anything past 4096 total is
    refused rather than attempted.
    """
    if not (isinstance(n_max, int) and n_max >= 1):
        raise DomainError(f"n_max must be a positive integer, got {n_max!r}")
    dim_vb = cq.dim_v * cq.dim_b
    if dim_vb**n_max > TENSOR_DIM_CAP:
        raise TooLarge(
            f"dim(VB)^n_max = {dim_vb}^{n_max} exceeds the {TENSOR_DIM_CAP} cap"
        )
    lower, upper = [], []
    for n in range(1, n_max + 1):
        e_n = _product_ensemble(cq.ensemble, n)
        lower.append(cq_hypothesis_testing_divergence(CqState(e_n), eps).value_bits / n)
        upper.append(smooth_max_divergence(e_n, eps).value_bits / n)
    return SpectralSeries(tuple(range(1, n_max + 1)), tuple(lower), tuple(upper), float(eps))


def classical_spectral_estimate(p_joint, n_samples, eps, seed):
    """Empirical (eps, 1-eps) quantiles of the normalized information density.

    Draws 101 independent blocks of ``n_samples`` iid pairs from the joint
    table and averages log2(p(v,y)/(p(v)p(y))) within each block; the two
    quantiles of the 101 block means estimate the inf and sup spectral rates
    at that block length.  For an iid source both converge to the mutual
    information.
    """
    p = np.asarray(p_joint, dtype=float)
    if p.ndim != 2:
        raise ValidationError(f"joint table must be 2-d, got shape {p.shape}")
    if np.any(p < 0) or abs(float(p.sum()) - 1.0) > 1e-9:
        raise ValidationError("joint table entries must be a probability distribution")
    if not (isinstance(n_samples, int) and n_samples >= 1000):
        raise DomainError(f"n_samples must be an integer >= 1000, got {n_samples!r}")
    if not 0.0 < eps < 1.0:
        raise DomainError(f"eps must lie in (0, 1), got {eps!r}")

    p_v = p.sum(axis=1)
    p_y = p.sum(axis=0)
    dens = np.zeros_like(p)
    pos = p > 0
    dens[pos] = np.log2(p[pos] / np.outer(p_v, p_y)[pos])

    gen = np.random.Generator(np.random.Philox(key=seed))
    cdf = np.cumsum(p.ravel())
    cells = np.clip(
        np.searchsorted(cdf, gen.random((N_BLOCKS, n_samples)), side="right"),
        0,
        p.size - 1,
    )
    block_means = dens.ravel()[cells].mean(axis=1)
    return (
        float(np.quantile(block_means, eps)),
        float(np.quantile(block_means, 1.0 - eps)),
    )
