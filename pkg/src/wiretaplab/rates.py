"""Achievability and converse rate formulas with explicit constants.

The achievable message rate trades the hypothesis-testing divergence toward
the receiver against the smoothed max divergence toward the eavesdropper,
minus an overhead that depends only on the eavesdropper dimension and the
smoothing parameter.  Rates are in bits; the one inner logarithm that is
natural in the source formula stays natural.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .divergences import smooth_max_divergence
from .errors import DomainError, PreconditionError
from .operators import trace_norm
from .ensembles import CqState, average_state

__all__ = [
    "AchievabilityInputs",
    "RatePair",
    "SecrecyCheck",
    "achievable_rate",
    "code_params_for_targets",
    "converse_bound",
    "converse_secrecy_check",
]


@dataclass(frozen=True)
class AchievabilityInputs:
    """Divergence values and parameters feeding the rate formula.

    ``i0_bits`` is the hypothesis-testing divergence toward the receiver at
    smoothing ``eps_prime``; ``iinf_bits`` the smoothed max divergence toward
    the eavesdropper at smoothing ``delta_hat``; ``dim_e`` the eavesdropper
    dimension.
    """

    i0_bits: float
    iinf_bits: float
    eps_prime: float
    delta_hat: float
    dim_e: int


@dataclass(frozen=True)
class RatePair:
    """Message rate, band rate, and the budgets the construction guarantees."""

    r_bits: float
    r_tilde_bits: float
    c_const: float
    error_budget: float
    leakage_budget: float


@dataclass(frozen=True)
class SecrecyCheck:
    iinf_bits: float
    leakage: float
    bound: float
    holds: bool


def _finite(x, name):
    if not (isinstance(x, (int, float)) and math.isfinite(x)):
        raise DomainError(f"{name} must be finite, got {x!r}")
    return float(x)


def achievable_rate(inp: AchievabilityInputs) -> RatePair:
    """Evaluate the explicit-constant rate pair.

    With ``m = max(0, iinf_bits)`` and
    ``C = dim_e * (log2(4 dim_e / delta_hat) + 1)^2`` the overhead is
    ``log2(1e16 * (log2 dim_e)^6 / delta_hat^9 * (-ln(delta_hat / (30 C))))``
    and the rates are ``R = i0 - m + log2(eps_prime) - overhead`` and
    ``R_tilde = m + overhead``, so ``R + R_tilde = i0 + log2(eps_prime)``.
    R may come out negative at desk scale; it is reported as-is.
    """
    i0 = _finite(inp.i0_bits, "i0_bits")
    iinf = _finite(inp.iinf_bits, "iinf_bits")
    eps_prime = _finite(inp.eps_prime, "eps_prime")
    delta_hat = _finite(inp.delta_hat, "delta_hat")
    if not 0.0 < eps_prime < 1.0:
        raise DomainError(f"eps_prime must lie in (0, 1), got {eps_prime!r}")
    if not 0.0 < delta_hat < 1.0:
        raise DomainError(f"delta_hat must lie in (0, 1), got {delta_hat!r}")
    if not (isinstance(inp.dim_e, int) and inp.dim_e >= 2):
        raise DomainError(f"dim_e must be an integer >= 2, got {inp.dim_e!r}")
    c_const = inp.dim_e * (math.log2(4.0 * inp.dim_e / delta_hat) + 1.0) ** 2
    if not delta_hat < 30.0 * c_const:
        raise DomainError("delta_hat must be smaller than 30*C")
    inner = -math.log(delta_hat / (30.0 * c_const))
    overhead = math.log2(1e16 * math.log2(inp.dim_e) ** 6 / delta_hat**9 * inner)
    m = max(0.0, iinf)
    r = i0 - m + math.log2(eps_prime) - overhead
    r_tilde = m + overhead
    return RatePair(r, r_tilde, c_const, 6.0 * eps_prime, 48.0 * math.sqrt(delta_hat))


def _largest_below(start, image, target):
    # largest float x with image(x) <= target; image must be nondecreasing
    x = start
    while image(x) > target:
        x = math.nextafter(x, 0.0)
    while True:
        up = math.nextafter(x, math.inf)
        if image(up) > target:
            return x
        x = up


def code_params_for_targets(eps_target, delta_target):
    """Largest smoothing pair meeting ``18 eps' <= eps`` and ``144 sqrt(delta_hat) <= delta``.

    Each component is the largest double satisfying its inequality in float
    arithmetic (the naive quotients can overshoot by an ulp), so the bounds
    are tight: one ulp higher and they break.
    """
    eps_target = _finite(eps_target, "eps_target")
    delta_target = _finite(delta_target, "delta_target")
    if not 0.0 < eps_target < 1.0:
        raise DomainError(f"eps_target must lie in (0, 1), got {eps_target!r}")
    if not 0.0 < delta_target < 2.0:
        raise DomainError(f"delta_target must lie in (0, 2), got {delta_target!r}")
    eps_prime = _largest_below(eps_target / 18.0, lambda x: 18.0 * x, eps_target)
    delta_hat = _largest_below(
        (delta_target / 144.0) ** 2, lambda x: 144.0 * math.sqrt(x), delta_target
    )
    return eps_prime, delta_hat


def converse_bound(i0_eps, iinf_delta):
    """Upper bound ``i0 - iinf + 1.5`` on the rate of any code with these divergences."""
    return _finite(i0_eps, "i0_eps") - _finite(iinf_delta, "iinf_delta") + 1.5


def converse_secrecy_check(code_cq_ve: CqState, delta, grid_step_bits=1e-3) -> SecrecyCheck:
    """Verify that small leakage caps the eavesdropper's max divergence at 1.5 bits.

    The precondition is that the message-to-eavesdropper state is
    ``delta``-close to product; the measured leakage is reported on failure.
    """
    delta = _finite(delta, "delta")
    e = code_cq_ve.ensemble
    avg = average_state(e)
    leakage = float(sum(p * trace_norm(s - avg) for p, s in zip(e.probs, e.states)))
    if leakage > delta + 1e-12:
        raise PreconditionError(
            f"measured leakage {leakage!r} exceeds the declared delta {delta!r}"
        )
    res = smooth_max_divergence(e, delta, grid_step_bits)
    bound = 1.5 + grid_step_bits
    return SecrecyCheck(res.value_bits, leakage, bound, res.value_bits <= bound)
