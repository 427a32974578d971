"""One-shot divergences between states, and a Pinsker-type trace-distance floor.

Two quantities drive everything downstream:

* the hypothesis-testing divergence: the best ``-log2`` type-II error of a
  test ``0 <= Gamma <= I`` whose type-I success against ``rho`` is exactly
  ``1 - eps`` (optimal threshold tests with boundary randomization);
* the smoothed max divergence of an ensemble: the smallest threshold
  ``gamma`` such that the average mass of ``rho_v`` above ``2^gamma rho``
  (strictly positive eigenspace of ``rho_v - 2^gamma rho``) is at most
  ``eps``, located by an exhaustive grid scan since the tail need not be
  monotone for non-commuting states.

All values are in bits.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ._kernels import tail_scan
from .ensembles import CqState, Ensemble, average_state
from .errors import DomainError, NoFiniteValue
from .operators import positive_part_projector, spectral_tolerance, support_projector, trace_norm

__all__ = [
    "HypothesisTest",
    "DivergenceResult",
    "PinskerCheck",
    "hypothesis_testing_divergence",
    "cq_hypothesis_testing_divergence",
    "smooth_max_divergence",
    "smoothing_tail",
    "pinsker_floor",
]

LN2 = math.log(2.0)
BISECT_ITERS = 60


@dataclass(frozen=True)
class HypothesisTest:
    """A feasible test operator with its achieved error pair.

    ``blocks`` carries the per-label components for block-diagonal witnesses
    (classical-quantum inputs); ``gamma_op`` assembles the full matrix.
    """

    achieved_alpha: float
    achieved_beta: float
    operator: np.ndarray | None = None
    blocks: dict | None = None

    @cached_property
    def gamma_op(self):
        if self.operator is not None:
            return self.operator
        mats = list(self.blocks.values())
        d = mats[0].shape[0]
        out = np.zeros((len(mats) * d, len(mats) * d), dtype=complex)
        for k, m in enumerate(mats):
            out[k * d : (k + 1) * d, k * d : (k + 1) * d] = m
        return out


@dataclass(frozen=True)
class DivergenceResult:
    value_bits: float
    epsilon: float
    witness: HypothesisTest | None = None
    threshold_bits: float | None = None
    tail_value: float | None = None
    infinite: bool = False


@dataclass(frozen=True)
class PinskerCheck:
    lhs: float
    rhs: float
    prefactor: float
    holds: bool


def _check_eps(eps):
    if not (isinstance(eps, (int, float)) and 0.0 <= eps < 1.0 and math.isfinite(eps)):
        raise DomainError(f"eps must lie in [0, 1), got {eps!r}")
    return float(eps)


class _BlockPair:
    """Threshold tests for block-diagonal (rho, sigma) pairs.

    Blocks are (weight, rho_block, sigma_block); a plain state pair is the
    single-block case.  Evaluating a threshold t yields the projector family
    {rho_v - t sigma_v > 0} with its joint alpha and beta.
    """

    def __init__(self, blocks):
        self.blocks = blocks

    def outside_support_mass(self):
        total = 0.0
        comps = []
        for weight, rho_b, sigma_b in self.blocks:
            comp = np.eye(rho_b.shape[0]) - support_projector(sigma_b)
            comps.append(comp)
            total += weight * float(np.trace(comp @ rho_b).real)
        return total, comps

    def test_at(self, t):
        alpha = beta = 0.0
        projs = []
        for weight, rho_b, sigma_b in self.blocks:
            pi = positive_part_projector(rho_b - t * sigma_b, "strict")
            projs.append(pi)
            alpha += weight * float(np.trace(pi @ rho_b).real)
            beta += weight * float(np.trace(pi @ sigma_b).real)
        return alpha, beta, projs

    def mix(self, lam, projs_a, projs_b):
        gammas = [lam * pa + (1.0 - lam) * pb for pa, pb in zip(projs_a, projs_b)]
        alpha = beta = 0.0
        for (weight, rho_b, sigma_b), g in zip(self.blocks, gammas):
            alpha += weight * float(np.trace(g @ rho_b).real)
            beta += weight * float(np.trace(g @ sigma_b).real)
        return gammas, alpha, beta


def _neyman_pearson(pair: _BlockPair, eps):
    """Optimal randomized threshold test achieving type-I success 1 - eps.

    Returns (infinite, blocks, alpha, beta); with ``infinite`` the blocks are
    the support complements of the sigma blocks and beta is 0.
    """
    target = 1.0 - eps
    mass_out, comps = pair.outside_support_mass()
    if mass_out >= target - 1e-12:
        # beta can be driven to zero inside ker(sigma)
        return True, comps, mass_out, 0.0
    t_lo, (a_lo, b_lo, p_lo) = 0.0, pair.test_at(0.0)
    t_hi = 1.0
    a_hi, b_hi, p_hi = pair.test_at(t_hi)
    doublings = 0
    while a_hi > target:
        t_hi *= 2.0
        a_hi, b_hi, p_hi = pair.test_at(t_hi)
        doublings += 1
        if doublings > 400:  # mathematically unreachable once mass_out < target
            raise NoFiniteValue("threshold search failed to bracket the target")
    for _ in range(BISECT_ITERS):
        t_mid = 0.5 * (t_lo + t_hi)
        a_mid, b_mid, p_mid = pair.test_at(t_mid)
        if a_mid >= target:
            t_lo, a_lo, b_lo, p_lo = t_mid, a_mid, b_mid, p_mid
        else:
            t_hi, a_hi, b_hi, p_hi = t_mid, a_mid, b_mid, p_mid
    if a_lo - a_hi > 1e-15:
        lam = min(1.0, max(0.0, (target - a_hi) / (a_lo - a_hi)))
    else:
        lam = 0.0 if abs(a_hi - target) <= abs(a_lo - target) else 1.0
    gammas, alpha, beta = pair.mix(lam, p_lo, p_hi)
    return False, gammas, alpha, beta


def hypothesis_testing_divergence(rho, sigma, eps) -> DivergenceResult:
    """Best ``-log2 tr(Gamma sigma)`` over tests with ``tr(Gamma rho) = 1 - eps``.

    Parameters
    ----------
    rho, sigma : ndarray
        States of equal dimension (PSD, unit trace).
    eps : float
        Allowed type-I failure, in ``[0, 1)``.

    Returns
    -------
    DivergenceResult
        Value in bits with the achieving test as witness.  When at least
        ``1 - eps`` of ``rho``'s mass fits outside the support of ``sigma``
        the value is infinite and the witness is that support complement.
    """
    eps = _check_eps(eps)
    rho = np.asarray(rho, dtype=complex)
    sigma = np.asarray(sigma, dtype=complex)
    if rho.shape != sigma.shape:
        raise DomainError(f"state shapes differ: {rho.shape} vs {sigma.shape}")
    pair = _BlockPair([(1.0, rho, sigma)])
    infinite, blocks, alpha, beta = _neyman_pearson(pair, eps)
    wit = HypothesisTest(alpha, beta, operator=blocks[0])
    if infinite:
        return DivergenceResult(math.inf, eps, witness=wit, infinite=True)
    return DivergenceResult(-math.log2(beta), eps, witness=wit)


def cq_hypothesis_testing_divergence(cq: CqState, eps) -> DivergenceResult:
    """Divergence of a cq state against the product of its marginals.

    Both the joint state and the product are block-diagonal in the classical
    index, so the optimization restricts to block-diagonal tests without
    loss; each label's block of the witness is exposed in ``witness.blocks``
    (these are the measurement seeds consumed by the decoder).
    """
    eps = _check_eps(eps)
    e = cq.ensemble
    rho_b = cq.quantum_marginal()
    pair = _BlockPair([(p, s, rho_b) for p, s in zip(e.probs, e.states)])
    infinite, blocks, alpha, beta = _neyman_pearson(pair, eps)
    wit = HypothesisTest(alpha, beta, blocks=dict(zip(e.labels, blocks)))
    if infinite:
        return DivergenceResult(math.inf, eps, witness=wit, infinite=True)
    return DivergenceResult(-math.log2(beta), eps, witness=wit)


def _scan_inputs(e: Ensemble):
    rhos = np.stack(e.states).astype(np.complex128)
    avg = average_state(e)
    wv = np.linalg.eigvalsh(rhos)
    wa = np.linalg.eigvalsh(avg)
    return rhos, avg, wv, wa


def _positive_min(w):
    tau = spectral_tolerance(w)
    above = w[w > tau]
    return float(above[0]) if above.size else None


def _grid(wv, wa, step):
    lmax_avg = float(wa[-1])
    lminp_avg = _positive_min(wa)
    lminp_v = [_positive_min(row) for row in wv]
    gamma_lo = min(math.log2(lv / lmax_avg) for lv in lminp_v) - 1.0
    gamma_hi = math.log2(max(float(row[-1]) for row in wv) / lminp_avg) + 1.0
    j0 = math.floor(gamma_lo / step)
    j1 = math.ceil(gamma_hi / step)
    return np.arange(j0, j1 + 1) * step


def _weyl_floor(wv, probs, lmax_avg, c):
    # certified lower bound on tail(c); the cushion absorbs the zero cutoff
    slack = 1e-10 * (1.0 + np.max(wv) + c * lmax_avg) + 1e-9
    return float(np.sum(probs[:, None] * np.maximum(wv - c * lmax_avg - slack, 0.0)))


def _scan_start(gammas, wv, probs, lmax_avg, eps):
    """First grid index the Weyl bound cannot rule out (sound prefix skip)."""
    if _weyl_floor(wv, probs, lmax_avg, float(2.0 ** gammas[0])) <= eps:
        return 0
    lo, hi = 0, len(gammas) - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _weyl_floor(wv, probs, lmax_avg, float(2.0 ** gammas[mid])) > eps:
            lo = mid
        else:
            hi = mid
    return hi


def smooth_max_divergence(e: Ensemble, eps, grid_step_bits=1e-3) -> DivergenceResult:
    """Smallest grid threshold whose smoothing tail is within ``eps``.

    The tail at ``gamma`` is ``sum_v p_v tr(P_v rho_v)`` with ``P_v`` the
    strictly positive eigenspace of ``rho_v - 2^gamma rho``.  The grid is
    anchored at integer multiples of ``grid_step_bits`` and spans one extra
    bit beyond the eigenvalue ratios on each side; every point up to the
    returned one is accounted for (scan from below, no monotonicity assumed).

    Raises
    ------
    NoFiniteValue
        if no grid point has tail ``<= eps``; the exception carries the
        scanned curve.  Unreachable for valid ensembles, kept defensively.
    """
    eps = _check_eps(eps)
    if not (isinstance(grid_step_bits, (int, float)) and grid_step_bits > 0):
        raise DomainError(f"grid_step_bits must be positive, got {grid_step_bits!r}")
    step = float(grid_step_bits)
    rhos, avg, wv, wa = _scan_inputs(e)
    gammas = _grid(wv, wa, step)
    cs = np.exp2(gammas)
    probs = np.asarray(e.probs, dtype=float)
    start = _scan_start(gammas, wv, probs, float(wa[-1]), eps)
    first, tails = tail_scan(rhos, avg, probs, cs[start:], eps, False)
    if first < 0:
        _, curve = tail_scan(rhos, avg, probs, cs, eps, True)
        raise NoFiniteValue(
            f"no threshold in [{gammas[0]:.6f}, {gammas[-1]:.6f}] bits reaches tail <= {eps}",
            gammas=gammas,
            tails=curve,
        )
    gamma_star = float(gammas[start + first])
    tail_at = float(tails[first])
    return DivergenceResult(gamma_star, eps, threshold_bits=gamma_star, tail_value=tail_at)


def smoothing_tail(e: Ensemble, gamma_bits) -> float:
    """The smoothing tail of `smooth_max_divergence` at a single threshold."""
    rhos, avg, _, _ = _scan_inputs(e)
    probs = np.asarray(e.probs, dtype=float)
    _, tails = tail_scan(rhos, avg, probs, np.array([2.0 ** float(gamma_bits)]), -1.0, True)
    return float(tails[0])


def pinsker_floor(rho, sigma, beta) -> PinskerCheck:
    """Trace-distance floor ``|rho - sigma| >= (2b/(b+1)) tr(P rho)``.

    ``P`` projects onto the strictly positive eigenspace of
    ``rho - 2^beta sigma`` and ``b = beta * ln 2``; at ``beta = 1/ln 2`` the
    prefactor is exactly 1.
    """
    if not (isinstance(beta, (int, float)) and beta > 0 and math.isfinite(beta)):
        raise DomainError(f"beta must be positive and finite, got {beta!r}")
    rho = np.asarray(rho, dtype=complex)
    sigma = np.asarray(sigma, dtype=complex)
    if rho.shape != sigma.shape:
        raise DomainError(f"state shapes differ: {rho.shape} vs {sigma.shape}")
    pi = positive_part_projector(rho - (2.0 ** beta) * sigma, "strict")
    b = beta * LN2
    prefactor = 2.0 * b / (b + 1.0)
    rhs = prefactor * float(np.trace(pi @ rho).real)
    lhs = trace_norm(rho - sigma)
    return PinskerCheck(lhs, rhs, prefactor, lhs >= rhs - 1e-10)
