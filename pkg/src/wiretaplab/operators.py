"""Dense complex linear algebra for Hermitian operators and general matrices.

Operators are plain numpy arrays.  The constructors (`hermitian`, `density`,
`projector`, `general`) validate their input, then return a read-only array,
so validated operators can be shared freely; every function here is pure.

Conventions used throughout the package:

* Hermiticity is enforced by symmetrization ``(H + H') / 2`` at construction,
  which is exact in floating point.
* Spectral decisions use the relative cutoff ``tau = 1e-10 * (1 + |H|_inf)``;
  eigenvalues within ``tau`` of zero are treated as zero.
* Eigenvalues are reported in descending order.
"""
from __future__ import annotations

import numpy as np

from .errors import FormatError, InvalidOperator, NotPositive, ShapeError, ValidationError

__all__ = [
    "hermitian",
    "density",
    "projector",
    "general",
    "eig_h",
    "spectral_tolerance",
    "positive_part_projector",
    "support_projector",
    "trace_norm",
    "operator_norm",
    "sqrt_psd",
    "inv_sqrt_on_support",
    "tensor",
    "partial_trace",
    "matrix_to_literal",
    "matrix_from_literal",
]

PSD_TOL = 1e-10
TRACE_TOL = 1e-10
PROJ_TOL = 1e-8


def _as_matrix(entries, *, square=False):
    m = np.array(entries, dtype=complex)
    if m.ndim != 2:
        raise InvalidOperator(f"expected a 2-D matrix, got ndim={m.ndim}")
    if m.shape[0] == 0 or m.shape[1] == 0:
        raise InvalidOperator(f"empty matrix of shape {m.shape}")
    if square and m.shape[0] != m.shape[1]:
        raise InvalidOperator(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m.view(float))):
        raise InvalidOperator("matrix has non-finite entries")
    return m


def _locked(m):
    m.setflags(write=False)
    return m


def general(entries):
    """Validate a rectangular complex matrix (finite entries only)."""
    return _locked(_as_matrix(entries))


def hermitian(entries):
    """Validate and symmetrize a square matrix; the result is exactly Hermitian."""
    m = _as_matrix(entries, square=True)
    return _locked((m + m.conj().T) / 2)


def density(entries):
    """Validate a density operator: Hermitian, eigenvalues >= -1e-10, trace 1.

    Raises
    ------
    NotPositive
        if the smallest eigenvalue is below ``-1e-10``.
    ValidationError
        if the trace differs from 1 by more than ``1e-10``.
    """
    h = hermitian(entries)
    w = np.linalg.eigvalsh(h)
    if w[0] < -PSD_TOL:
        raise NotPositive(f"density operator has eigenvalue {w[0]:.3e} < -{PSD_TOL}")
    tr = float(np.trace(h).real)
    if abs(tr - 1.0) > TRACE_TOL:
        raise ValidationError(f"density operator trace is {tr!r}, not 1 within {TRACE_TOL}")
    return h


def projector(entries):
    """Validate an orthogonal projector: Hermitian, idempotent within 1e-8."""
    h = hermitian(entries)
    if operator_norm(h @ h - h) > PROJ_TOL:
        raise ValidationError("projector is not idempotent within 1e-8")
    w = np.linalg.eigvalsh(h)
    if np.any(np.minimum(np.abs(w), np.abs(w - 1.0)) > PROJ_TOL):
        raise ValidationError("projector eigenvalues are not within 1e-8 of {0, 1}")
    return h


def eig_h(h):
    """Eigendecomposition of a Hermitian operator.

    Parameters
    ----------
    h : ndarray
        Hermitian matrix (symmetrized if slightly off).

    Returns
    -------
    w : ndarray
        Real eigenvalues, sorted descending.
    u : ndarray
        Unitary with eigenvectors as columns, aligned with ``w``.
    """
    m = _as_matrix(h, square=True)
    m = (m + m.conj().T) / 2
    w, u = np.linalg.eigh(m)
    return w[::-1].copy(), u[:, ::-1].copy()


def spectral_tolerance(eigenvalues):
    """Zero cutoff ``1e-10 * (1 + |H|_inf)`` computed from a spectrum."""
    w = np.asarray(eigenvalues, dtype=float)
    return 1e-10 * (1.0 + float(np.max(np.abs(w), initial=0.0)))


def positive_part_projector(h, mode="strict"):
    """Projector onto the selected eigenspace of a Hermitian operator.

    ``mode="strict"`` keeps eigenvalues ``> tau`` (the strictly positive
    eigenspace); ``mode="weak"`` keeps eigenvalues ``>= -tau`` (kernel
    included).  ``tau`` is the relative cutoff of `spectral_tolerance`.
    """
    if mode not in ("strict", "weak"):
        raise ValueError(f"mode must be 'strict' or 'weak', got {mode!r}")
    w, u = eig_h(h)
    tau = spectral_tolerance(w)
    keep = w > tau if mode == "strict" else w >= -tau
    basis = u[:, keep]
    return _locked(basis @ basis.conj().T)


def support_projector(h):
    """Projector onto the support (strictly positive eigenspace) of a PSD operator."""
    return positive_part_projector(h, mode="strict")


def trace_norm(a):
    """Sum of singular values."""
    m = _as_matrix(a)
    return float(np.sum(np.linalg.svd(m, compute_uv=False)))


def operator_norm(a):
    """Largest singular value."""
    m = _as_matrix(a)
    return float(np.max(np.linalg.svd(m, compute_uv=False)))


def _psd_eigs(h, what):
    w, u = eig_h(h)
    tau = spectral_tolerance(w)
    if w[-1] < -tau:
        raise NotPositive(f"{what} needs a PSD input; smallest eigenvalue is {w[-1]:.3e}")
    return np.maximum(w, 0.0), u, tau


def sqrt_psd(h):
    """Operator square root of a PSD operator (negatives clamped to zero)."""
    w, u, _ = _psd_eigs(h, "sqrt_psd")
    return _locked((u * np.sqrt(w)) @ u.conj().T)


def inv_sqrt_on_support(h):
    """Inverse square root on the support of a PSD operator.

    Eigenvalues above the zero cutoff map to ``1/sqrt(lambda)``, the rest to 0,
    so ``S^{-1/2} S S^{-1/2}`` is the support projector of ``S``.
    """
    w, u, tau = _psd_eigs(h, "inv_sqrt_on_support")
    f = np.where(w > tau, 1.0 / np.sqrt(np.where(w > tau, w, 1.0)), 0.0)
    return _locked((u * f) @ u.conj().T)


def tensor(a, b):
    """Kronecker product."""
    return np.kron(_as_matrix(a), _as_matrix(b))


def partial_trace(m, dims, axis):
    """Trace out one tensor factor of an operator on a bipartite space.

    Parameters
    ----------
    m : ndarray
        Operator on a space of dimension ``dims[0] * dims[1]``.
    dims : (int, int)
        Dimensions of the two factors, in tensor order.
    axis : int
        Which factor to trace out: 0 for the first, 1 for the second.

    Returns
    -------
    ndarray
        Operator on the remaining factor.  The trace is preserved.
    """
    m = _as_matrix(m, square=True)
    d0, d1 = int(dims[0]), int(dims[1])
    if d0 < 1 or d1 < 1 or d0 * d1 != m.shape[0]:
        raise ShapeError(f"dims {dims} do not factor dimension {m.shape[0]}")
    if axis not in (0, 1):
        raise ShapeError(f"axis must be 0 or 1, got {axis}")
    t = m.reshape(d0, d1, d0, d1)
    return np.einsum("ijik->jk", t) if axis == 0 else np.einsum("ijkj->ik", t)


def matrix_to_literal(a):
    """Encode a matrix as nested row-major lists of ``[re, im]`` pairs."""
    m = _as_matrix(a)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def matrix_from_literal(obj):
    """Decode the ``[re, im]`` nested-list format produced by `matrix_to_literal`."""
    if not isinstance(obj, list) or not obj:
        raise FormatError("matrix literal must be a non-empty list of rows")
    rows = []
    width = None
    for i, row in enumerate(obj):
        if not isinstance(row, list) or not row:
            raise FormatError(f"row {i} is not a non-empty list")
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise FormatError(f"row {i} has {len(row)} entries, expected {width}")
        vals = []
        for j, pair in enumerate(row):
            if (
                not isinstance(pair, list)
                or len(pair) != 2
                or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in pair)
            ):
                raise FormatError(f"entry ({i}, {j}) is not a [re, im] pair of numbers")
            vals.append(complex(pair[0], pair[1]))
        rows.append(vals)
    try:
        return general(rows)
    except InvalidOperator as exc:
        raise FormatError(str(exc)) from exc
