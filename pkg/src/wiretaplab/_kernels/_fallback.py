"""Pure-numpy tail scan, used when the compiled kernel is unavailable.

Both backends implement the same contract:

``tail_scan(rhos, rho_avg, probs, cs, eps, want_curve) -> (first_idx, tails)``

* ``rhos``: (nv, d, d) conditional states, ``rho_avg``: (d, d) their mixture,
  ``probs``: (nv,) weights, ``cs``: ascending positive thresholds.
* The tail at ``c`` is ``sum_v p_v tr(P_v rho_v)`` with ``P_v`` the strictly
  positive eigenspace of ``rho_v - c * rho_avg`` (relative zero cutoff
  ``1e-10 * (1 + |.|_inf)``).
* ``first_idx`` is the first index whose tail is ``<= eps`` (-1 if none).
* With ``want_curve`` the full curve is computed exactly.  Without it the
  scan stops at ``first_idx``; earlier entries are exact-or-partial sums that
  are still certified ``> eps``, later entries are NaN.
"""
from __future__ import annotations

import numpy as np

def _label_cutoffs(rhos, rho_avg):
    # past c >= lmax(rho_v) / lmin(rho_avg) the label's tail term is exactly 0
    wv = np.linalg.eigvalsh(rhos)
    wa = np.linalg.eigvalsh(rho_avg)
    lmin = float(wa[0])
    tau = 1e-10 * (1.0 + float(np.max(np.abs(wa))))
    if lmin <= tau:
        return np.full(rhos.shape[0], np.inf)
    return wv[:, -1] / lmin


def tail_scan(rhos, rho_avg, probs, cs, eps, want_curve):
    rhos = np.ascontiguousarray(rhos, dtype=np.complex128)
    rho_avg = np.ascontiguousarray(rho_avg, dtype=np.complex128)
    probs = np.asarray(probs, dtype=float)
    cs = np.asarray(cs, dtype=float)
    nc = cs.shape[0]
    d = rho_avg.shape[0]
    tails = np.full(nc, np.nan)
    cuts = _label_cutoffs(rhos, rho_avg)
    live = probs > 0.0
    # cap the eigh batch near 4M scalars so memory stays flat at large dim
    chunk = max(1, (1 << 22) // max(1, int(np.sum(live)) * d * d))

    first = -1
    for lo in range(0, nc, chunk):
        hi = min(lo + chunk, nc)
        span = cs[lo:hi]
        # only (point, label) pairs whose label is not yet past its cutoff
        need = live[None, :] & (span[:, None] < cuts[None, :])
        ci, vi = np.nonzero(need)
        part = np.zeros(hi - lo)
        if ci.size:
            mats = rhos[vi] - span[ci][:, None, None] * rho_avg[None]
            w, u = np.linalg.eigh(mats)
            taus = 1e-10 * (1.0 + np.max(np.abs(w), axis=1))
            mask = w > taus[:, None]
            # diag of U^dag rho_v U, keeping only eigenvalues above the cutoff
            quad = np.einsum("nja,njk,nka->na", u.conj(), rhos[vi], u).real
            contrib = probs[vi] * np.sum(quad * mask, axis=1)
            np.add.at(part, ci, contrib)
        tails[lo:hi] = part
        ok = np.nonzero(part <= eps)[0]
        if ok.size and not want_curve:
            first = lo + int(ok[0])
            tails[first + 1 :] = np.nan
            return first, tails
        if ok.size and first < 0:
            first = lo + int(ok[0])
    return first, tails
