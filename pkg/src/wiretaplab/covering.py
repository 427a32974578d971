"""One-shot covering verification: band decomposition, splitting, sampling.

The covering statement says a sample mean of M ensemble states lands within
22 sqrt(eps) of the true average except with an (explicitly constanted)
exponentially small probability.  Its proof machinery is reproduced here as
checkable pieces: per-label comparison projectors and their failure masses,
a dyadic eigenvalue banding of the average state, plus/minus splitting of
each band against the conjugated average, the key quadratic-form lemma, the
gentle measurement and scalar Chernoff layers, and the off-diagonal block
experiment that feeds the rectangular concentration bound.

Headline tails are evaluated and reported even when vacuous at desk scale;
the deterministic inequalities and scalar layers are the sharp content.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .concentration import TrialReport
from .ensembles import Ensemble, average_state
from .errors import (
    DegenerateEpsilon,
    DomainError,
    EmptyBand,
    PreconditionError,
    ValidationError,
)
from .operators import (
    eig_h,
    positive_part_projector,
    spectral_tolerance,
    sqrt_psd,
    trace_norm,
)

__all__ = [
    "BandDecomposition",
    "BandSplit",
    "CoveringInstance",
    "CoveringReport",
    "GentleReport",
    "KeyLemmaReport",
    "PlusMassReport",
    "band_decomposition",
    "band_split",
    "build_covering_instance",
    "covering_experiment",
    "covering_tail_bound",
    "gentle_measurement_check",
    "key_lemma_check",
    "offdiag_block_experiment",
    "plus_mass_check",
    "primed_average_distance",
    "projected_distance_tail",
]


@dataclass(frozen=True)
class CoveringInstance:
    """Ensemble with its comparison projectors and aggregated failure mass.

    ``pi_x[x]`` keeps the weak-mode nonnegative eigenspace of
    2^i_param * avg - state_x; ``eps_x[x]`` is the mass of state_x outside
    it, and ``eps`` their ensemble average (floored when the caller asked
    for a floor; ``floored`` records that).
    """

    ensemble: Ensemble
    i_param: float
    rho: np.ndarray
    pi_x: dict
    eps_x: dict
    eps: float
    floored: bool = False

    @property
    def dim(self):
        return self.rho.shape[0]


@dataclass(frozen=True)
class BandDecomposition:
    """Dyadic eigenvalue bands of a state, in its own eigenbasis.

    ``bands`` maps band index i (1-based) to the positions of the
    eigenvalues lying in (2^-i, 2^-(i-1)]; only indices up to ``k_bands``
    are kept, the rest (and the near-zero spectrum) form the tail.
    ``eigenvalues``/``basis`` hold the full spectral decomposition in
    descending order.
    """

    k_bands: int
    bands: dict
    eigenvalues: np.ndarray
    basis: np.ndarray
    pi_star: np.ndarray
    tail_mass: float

    def projector(self, i):
        idx = self.bands.get(i)
        if idx is None or len(idx) == 0:
            raise EmptyBand(f"band {i} holds no eigenvalues")
        u = self.basis[:, idx]
        return u @ u.conj().T

    def band_eigs(self, i):
        idx = self.bands.get(i)
        if idx is None or len(idx) == 0:
            raise EmptyBand(f"band {i} holds no eigenvalues")
        return self.eigenvalues[idx]

    @property
    def nonempty(self):
        return tuple(sorted(i for i, idx in self.bands.items() if len(idx)))


@dataclass(frozen=True)
class BandSplit:
    """Plus/minus split of one label's compressed state across the bands.

    The split is exact on each band; whether the cross terms between the
    two projectors vanish is not guaranteed by the construction, so the
    residual of minus + plus against the compressed state is measured and
    reported instead of asserted.
    """

    pi_minus_star: np.ndarray
    pi_plus_star: np.ndarray
    rho_star: np.ndarray
    rho_minus: np.ndarray
    rho_plus: np.ndarray
    residual: float
    band_plus: dict


@dataclass(frozen=True)
class CoveringReport:
    m_samples: int
    trials: int
    deviations: tuple
    threshold: float
    empirical_fail: float
    bound_rhs: float


@dataclass(frozen=True)
class KeyLemmaReport:
    trials: int
    premise_hits: int
    max_excess: float
    holds_pointwise: bool
    trace_lhs: float
    trace_rhs: float
    holds_trace: bool


@dataclass(frozen=True)
class GentleReport:
    lhs: float
    eps: float
    rhs: float
    holds: bool


@dataclass(frozen=True)
class PlusMassReport:
    mass: float
    bound: float
    holds: bool


def _rng(seed):
    return np.random.Generator(np.random.Philox(key=seed))


def _trial_seeds(master_seed, trials):
    if not (isinstance(trials, int) and trials >= 1):
        raise DomainError(f"trials must be a positive integer, got {trials!r}")
    gen = _rng(master_seed)
    return [int(s) for s in gen.integers(0, 2**63, size=trials, dtype=np.uint64)]


def _sample_indices(gen, probs, size):
    cdf = np.cumsum(probs)
    return np.clip(np.searchsorted(cdf, gen.random(size), side="right"), 0, len(probs) - 1)


def _empirical_weights(gen, probs, size):
    # per-label frequencies of an M-fold draw; mixing by these instead of
    # averaging M copies keeps a single-label draw bitwise exact
    idx = _sample_indices(gen, probs, size)
    return np.bincount(idx, minlength=len(probs)).astype(float) / size


def build_covering_instance(e: Ensemble, i_param, eps_floor=None) -> CoveringInstance:
    """Comparison projectors {2^i_param * avg >= state_x} and their masses.

    A degenerate instance (every state inside its projector, eps <= 1e-12)
    raises DegenerateEpsilon unless ``eps_floor`` supplies a substitute
    (1e-6 is the conventional choice); the floor is recorded on the
    instance, never applied silently.
    """
    if not (isinstance(i_param, (int, float)) and math.isfinite(i_param) and i_param >= 0):
        raise DomainError(f"i_param must be a nonnegative real, got {i_param!r}")
    rho = average_state(e)
    scale = 2.0**i_param
    pi_x, eps_x = {}, {}
    for x, state in zip(e.labels, e.states):
        pi = positive_part_projector(scale * rho - state, mode="weak")
        pi_x[x] = pi
        mass = 1.0 - float(np.trace(pi @ state).real)
        if not -1e-8 <= mass <= 1.0 + 1e-12:
            raise ValidationError(f"label {x!r}: escape mass {mass} outside [0, 1]")
        eps_x[x] = mass
    eps = float(sum(p * eps_x[x] for p, x in zip(e.probs, e.labels)))
    floored = False
    if eps <= 1e-12:
        if eps_floor is None:
            raise DegenerateEpsilon(
                "every state sits inside its comparison projector; pass eps_floor"
                " (conventionally 1e-6) to proceed with a reported floor"
            )
        eps = float(eps_floor)
        floored = True
    return CoveringInstance(e, float(i_param), rho, pi_x, eps_x, eps, floored)


def band_decomposition(rho, eps) -> BandDecomposition:
    """Partition the spectrum of ``rho`` into dyadic bands, keeping the top K.

    K = ceil(log2(4 dim / eps)).  An eigenvalue lambda joins band
    ceil(-log2(lambda) - 1e-12): the tolerance puts exact boundary values
    2^-i into band i, so every nonempty band still has max/min ratio <= 2.
    Eigenvalues at or below the spectral tolerance join no band.
    """
    rho = np.asarray(rho)
    if not (isinstance(eps, (int, float)) and 0.0 < eps < 1.0):
        raise DomainError(f"eps must lie in (0, 1), got {eps!r}")
    d = rho.shape[0]
    k = math.ceil(math.log2(4.0 * d / eps))
    w, u = eig_h(rho)
    tau = spectral_tolerance(w)
    bands = {}
    kept = 0.0
    for j, lam in enumerate(w):
        if lam <= tau:
            continue
        i = max(1, math.ceil(-math.log2(lam) - 1e-12))
        if i > k:
            continue
        bands.setdefault(i, []).append(j)
        kept += lam
    bands = {i: np.array(idx, dtype=np.intp) for i, idx in bands.items()}
    star_idx = np.concatenate(list(bands.values())) if bands else np.array([], dtype=np.intp)
    u_star = u[:, star_idx]
    pi_star = u_star @ u_star.conj().T
    tail = float(1.0 - kept)
    if tail > eps / 4.0 + 1e-10:
        raise ValidationError(f"unbanded mass {tail} exceeds eps/4 = {eps / 4.0}")
    for i, idx in bands.items():
        lo, hi = float(w[idx].min()), float(w[idx].max())
        if hi > lo * (2.0 + 1e-9):
            raise ValidationError(f"band {i}: eigenvalue spread {hi / lo} above 2")
    return BandDecomposition(k, bands, w, u, pi_star, tail)


def _band_plus(ci: CoveringInstance, bands: BandDecomposition, x, i):
    """Positive-part projector of the band-compressed comparison, embedded back."""
    idx = bands.bands.get(i)
    if idx is None or len(idx) == 0:
        raise EmptyBand(f"band {i} holds no eigenvalues")
    u_i = bands.basis[:, idx]
    pi = ci.pi_x[x]
    q = pi @ ci.rho @ pi
    small = u_i.conj().T @ q @ u_i - 4.0 * np.diag(bands.band_eigs(i))
    p_small = positive_part_projector(small, mode="strict")
    return u_i @ p_small @ u_i.conj().T


def band_split(ci: CoveringInstance, bands: BandDecomposition, x) -> BandSplit:
    """Split label x's compressed state into its plus and minus parts."""
    state = ci.ensemble.state(x)
    pi = ci.pi_x[x]
    rho_primed = pi @ state @ pi
    rho_star = bands.pi_star @ rho_primed @ bands.pi_star

    band_plus = {i: _band_plus(ci, bands, x, i) for i in bands.nonempty}
    pi_plus = sum(band_plus.values()) if band_plus else np.zeros_like(bands.pi_star)
    pi_minus = bands.pi_star - pi_plus
    rho_minus = pi_minus @ rho_star @ pi_minus
    rho_plus = pi_plus @ rho_star @ pi_plus
    residual = trace_norm(rho_star - rho_minus - rho_plus)
    return BandSplit(pi_minus, pi_plus, rho_star, rho_minus, rho_plus, residual, band_plus)


def key_lemma_check(rho, pi_x, trials, seed=0, pi=None) -> KeyLemmaReport:
    """Probe the quadratic-form lemma behind the plus-mass bound.

    Pointwise part: over ``trials`` Haar-random unit vectors v with
    <v|P rho P|v> > 4 <v|rho|v> (P = pi_x), check
    <v|P rho P|v> < 4 <v|P^c rho P^c|v> + 1e-10; a run finding no premise
    vectors passes vacuously, with the hit count reported.  Trace part:
    for Pi = ``pi`` (identity by default), build the strict-mode plus
    projector of Pi P rho P Pi - 4 Pi rho Pi and compare the two traces.
    """
    rho = np.asarray(rho)
    pi_x = np.asarray(pi_x)
    if rho.shape != pi_x.shape:
        raise DomainError("state and projector must share a dimension")
    d = rho.shape[0]
    comp = np.eye(d) - pi_x
    conj = pi_x @ rho @ pi_x
    conj_c = comp @ rho @ comp

    gen = _rng(seed)
    hits = 0
    excess = -math.inf
    for _ in range(int(trials)):
        v = gen.standard_normal(d) + 1j * gen.standard_normal(d)
        v /= np.linalg.norm(v)
        a = float((v.conj() @ conj @ v).real)
        if a <= 4.0 * float((v.conj() @ rho @ v).real):
            continue
        hits += 1
        excess = max(excess, a - 4.0 * float((v.conj() @ conj_c @ v).real))
    holds_point = hits == 0 or excess < 1e-10

    big = np.eye(d) if pi is None else np.asarray(pi)
    plus = positive_part_projector(big @ conj @ big - 4.0 * big @ rho @ big, mode="strict")
    lhs = float(np.trace(plus @ conj @ plus).real)
    rhs = 4.0 * float(np.trace(plus @ conj_c @ plus).real)
    return KeyLemmaReport(
        int(trials),
        hits,
        excess if hits else 0.0,
        holds_point,
        lhs,
        rhs,
        lhs <= rhs + 1e-10,
    )


def covering_tail_bound(dim, eps, i_param, m_samples):
    """Headline failure bound 30 C exp(-1e-16 eps^9 / log2(dim)^6 * M / 2^i)."""
    if dim < 2:
        raise DomainError("the tail formula needs dimension at least 2")
    c_const = dim * (math.log2(4.0 * dim / eps) + 1.0) ** 2
    rate = 1e-16 * eps**9 / math.log2(dim) ** 6
    return 30.0 * c_const * math.exp(-rate * m_samples / 2.0**i_param)


def covering_experiment(ci: CoveringInstance, m_samples, trials, master_seed) -> CoveringReport:
    """Sample-mean deviations of M-fold draws against the 22 sqrt(eps) threshold."""
    if not (isinstance(m_samples, int) and m_samples >= 1):
        raise DomainError(f"m_samples must be a positive integer, got {m_samples!r}")
    e = ci.ensemble
    states = np.stack(e.states)
    probs = np.asarray(e.probs)
    devs = []
    for s in _trial_seeds(master_seed, trials):
        w = _empirical_weights(_rng(s), probs, m_samples)
        devs.append(trace_norm(np.tensordot(w, states, axes=1) - ci.rho))
    threshold = 22.0 * math.sqrt(ci.eps)
    fail = float(np.mean([d >= threshold for d in devs]))
    rhs = covering_tail_bound(ci.dim, ci.eps, ci.i_param, m_samples)
    return CoveringReport(m_samples, int(trials), tuple(devs), threshold, fail, rhs)


def offdiag_block_experiment(
    ci: CoveringInstance, bands: BandDecomposition, i, l, m_samples, trials, master_seed,
    threshold=None,
) -> TrialReport:
    """Sample-mean concentration of the minus-projected off-diagonal blocks.

    For each label the block sigma_x = Pi-_i,x (P rho_x P) Pi-_l,x must obey
    the two norm caps the rectangular bound needs (trace norm <= 1, operator
    norm <= 2^(i_param+3) sqrt(min eig of band i * min eig of band l)); both
    are asserted per label at 1e-8.  The deviation threshold defaults to the
    instance's eps, and the reported bound is
    25 dim exp(-1e-12 threshold^3 M / 2^i_param).
    """
    if i == l:
        raise DomainError("the two band indices must differ")
    if not (isinstance(m_samples, int) and m_samples >= 1):
        raise DomainError(f"m_samples must be a positive integer, got {m_samples!r}")
    lam_i = float(bands.band_eigs(i).min())
    lam_l = float(bands.band_eigs(l).min())
    cap = 2.0 ** (ci.i_param + 3.0) * math.sqrt(lam_i * lam_l)

    e = ci.ensemble
    blocks = []
    for x, state in zip(e.labels, e.states):
        pi = ci.pi_x[x]
        primed = pi @ state @ pi
        minus_i = bands.projector(i) - _band_plus(ci, bands, x, i)
        minus_l = bands.projector(l) - _band_plus(ci, bands, x, l)
        sig = minus_i @ primed @ minus_l
        if trace_norm(sig) > 1.0 + 1e-8:
            raise PreconditionError(f"label {x!r}: block trace norm above 1")
        if float(np.linalg.norm(sig, 2)) > cap + 1e-8:
            raise PreconditionError(f"label {x!r}: block operator norm above its cap")
        blocks.append(sig)
    blocks = np.stack(blocks)
    mean = np.tensordot(np.asarray(e.probs), blocks, axes=1)

    devs = []
    for s in _trial_seeds(master_seed, trials):
        w = _empirical_weights(_rng(s), np.asarray(e.probs), m_samples)
        devs.append(trace_norm(np.tensordot(w, blocks, axes=1) - mean))
    thr = ci.eps if threshold is None else float(threshold)
    bound = 25.0 * ci.dim * math.exp(-1e-12 * thr**3 * m_samples / 2.0**ci.i_param)
    tail = float(np.mean([d >= thr for d in devs]))
    return TrialReport(int(trials), tail, bound, tuple(devs), bound >= 1.0)


def gentle_measurement_check(e: Ensemble, lam) -> GentleReport:
    """Average disturbance of a near-certain test against its 2 sqrt(eps) cap."""
    lam = np.asarray(lam)
    rho = average_state(e)
    eps = max(0.0, 1.0 - float(np.trace(lam @ rho).real))
    root = sqrt_psd(lam)
    lhs = float(
        sum(p * trace_norm(s - root @ s @ root) for p, s in zip(e.probs, e.states))
    )
    rhs = 2.0 * math.sqrt(eps)
    return GentleReport(lhs, eps, rhs, lhs <= rhs + 1e-9)


def primed_average_distance(ci: CoveringInstance):
    """Distance of the projector-compressed average from the true average.

    Returns (value, bound, holds) for the deterministic 2 sqrt(eps) cap.
    """
    e = ci.ensemble
    primed = sum(
        p * (ci.pi_x[x] @ s @ ci.pi_x[x]) for p, x, s in zip(e.probs, e.labels, e.states)
    )
    value = trace_norm(primed - ci.rho)
    bound = 2.0 * math.sqrt(ci.eps)
    return value, bound, value <= bound + 1e-9


def plus_mass_check(ci: CoveringInstance, bands: BandDecomposition) -> PlusMassReport:
    """Average trace captured by the plus parts against its 4 eps cap."""
    e = ci.ensemble
    mass = float(
        sum(
            p * np.trace(band_split(ci, bands, x).rho_plus).real
            for p, x in zip(e.probs, e.labels)
        )
    )
    bound = 4.0 * ci.eps
    return PlusMassReport(mass, bound, mass <= bound + 1e-8)


def projected_distance_tail(
    ci: CoveringInstance, bands: BandDecomposition, m_samples, trials, master_seed
) -> TrialReport:
    """Scalar Chernoff layer: sampled mean of ||rho_x - P* rho_x P*||.

    The per-trial statistic is the M-sample mean of the projection
    disturbance; failure means reaching sqrt(eps) + 2 eps, and the bound is
    exp(-2 M eps^2).
    """
    if not (isinstance(m_samples, int) and m_samples >= 1):
        raise DomainError(f"m_samples must be a positive integer, got {m_samples!r}")
    e = ci.ensemble
    star = bands.pi_star
    dists = np.array([trace_norm(s - star @ s @ star) for s in e.states])
    probs = np.asarray(e.probs)
    stats = []
    for s in _trial_seeds(master_seed, trials):
        w = _empirical_weights(_rng(s), probs, m_samples)
        stats.append(float(w @ dists))
    threshold = math.sqrt(ci.eps) + 2.0 * ci.eps
    bound = math.exp(-2.0 * m_samples * ci.eps**2)
    tail = float(np.mean([t >= threshold for t in stats]))
    return TrialReport(int(trials), tail, bound, tuple(stats), bound >= 1.0)
