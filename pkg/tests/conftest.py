"""Shared random-instance factories; every test seeds its own generator."""
from __future__ import annotations

import numpy as np

from wiretaplab.ensembles import Ensemble
from wiretaplab.operators import density


def philox(seed):
    return np.random.Generator(np.random.Philox(key=seed))


def rand_state(gen, d, ridge=0.0):
    """Random full-support density matrix; ridge mixes in I/d for conditioning."""
    g = gen.standard_normal((d, d)) + 1j * gen.standard_normal((d, d))
    m = g @ g.conj().T
    m = m / np.trace(m).real
    if ridge:
        m = (1.0 - ridge) * m + ridge * np.eye(d) / d
    return density(m)


def rand_probs(gen, n):
    p = gen.random(n) + 0.1
    return tuple(p / p.sum())


def rand_ensemble(gen, d, n, ridge=0.0):
    return Ensemble(
        tuple(range(n)),
        rand_probs(gen, n),
        tuple(rand_state(gen, d, ridge) for _ in range(n)),
    )


def rand_unit(gen, d):
    v = gen.standard_normal(d) + 1j * gen.standard_normal(d)
    return v / np.linalg.norm(v)


def rand_unitary(gen, d):
    """Haar-ish random unitary: QR of a complex Ginibre draw, phases fixed."""
    g = gen.standard_normal((d, d)) + 1j * gen.standard_normal((d, d))
    q, r = np.linalg.qr(g)
    return q * (np.diag(r) / np.abs(np.diag(r)))
