"""State ensembles, classical-quantum states, and the wiretap channel model.

An `Ensemble` pairs a finite label set with probabilities and one density
operator per label.  A `CqState` reads an ensemble as the block-diagonal
joint state sum_v p(v) |v><v| (x) rho_v.  A `WiretapChannelModel` maps each
input label to a joint receiver/eavesdropper output state.

Files use a single JSON schema::

    {"dim_b": int, "dim_e": int,
     "inputs": [{"label": str, "prob": float?, "state": matrix-literal}]}

where the matrix literal is the nested ``[re, im]`` row-major format of
`operators.matrix_to_literal`.  Channel states live on the composite space of
dimension ``dim_b * dim_e``; ensemble states are read on that space as a
single system.  Probabilities are optional in channel files (they are
supplied per experiment) and required in ensemble files.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FormatError, ValidationError
from .operators import density, matrix_from_literal, matrix_to_literal, partial_trace

__all__ = [
    "Ensemble",
    "CqState",
    "WiretapChannelModel",
    "average_state",
    "bob_marginals",
    "eve_marginals",
    "load_channel",
    "load_ensemble",
    "save_channel",
    "save_ensemble",
]

PROB_SUM_TOL = 1e-10


def _validated_probs(probs, n):
    p = np.asarray(probs, dtype=float)
    if p.shape != (n,):
        raise ValidationError(f"probs: expected {n} entries, got shape {p.shape}")
    if np.any(p < 0):
        raise ValidationError("probs: entries must be >= 0")
    s = float(p.sum())
    if abs(s - 1.0) > PROB_SUM_TOL:
        raise ValidationError(f"probs: sum is {s!r}, not 1 within {PROB_SUM_TOL}")
    p.setflags(write=False)
    return p


def _validated_states(states, expect_dim=None):
    out = tuple(density(s) for s in states)
    dims = {s.shape[0] for s in out}
    if len(dims) != 1:
        raise ValidationError(f"states: mixed dimensions {sorted(dims)}")
    if expect_dim is not None and out[0].shape[0] != expect_dim:
        raise ValidationError(
            f"states: dimension {out[0].shape[0]} does not match declared {expect_dim}"
        )
    return out


def _validated_labels(labels, n):
    lab = tuple(labels)
    if len(lab) != n:
        raise ValidationError(f"labels: expected {n}, got {len(lab)}")
    if len(set(lab)) != len(lab):
        raise ValidationError("labels: duplicates are not allowed")
    return lab


@dataclass(frozen=True)
class Ensemble:
    """Finite labelled family of density operators with probabilities."""

    labels: tuple
    probs: np.ndarray
    states: tuple
    index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        states = _validated_states(self.states)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "labels", _validated_labels(self.labels, len(states)))
        object.__setattr__(self, "probs", _validated_probs(self.probs, len(states)))
        object.__setattr__(self, "index", {v: k for k, v in enumerate(self.labels)})

    @property
    def size(self):
        return len(self.labels)

    @property
    def dim(self):
        return self.states[0].shape[0]

    def state(self, label):
        return self.states[self.index[label]]


def average_state(e: Ensemble):
    """Probability-weighted mixture sum_v p(v) rho_v, revalidated as a density operator."""
    return density(sum(p * s for p, s in zip(e.probs, e.states)))


@dataclass(frozen=True)
class CqState:
    """Ensemble read as the joint block-diagonal state on the classical x quantum space."""

    ensemble: Ensemble

    @property
    def dim_v(self):
        return self.ensemble.size

    @property
    def dim_b(self):
        return self.ensemble.dim

    def joint(self):
        """Full matrix sum_v p(v) |v><v| (x) rho_v."""
        e = self.ensemble
        d = e.dim
        out = np.zeros((e.size * d, e.size * d), dtype=complex)
        for k, (p, s) in enumerate(zip(e.probs, e.states)):
            out[k * d : (k + 1) * d, k * d : (k + 1) * d] = p * s
        return out

    def classical_marginal(self):
        return np.diag(self.ensemble.probs.astype(complex))

    def quantum_marginal(self):
        return average_state(self.ensemble)


@dataclass(frozen=True)
class WiretapChannelModel:
    """Input alphabet mapped to joint receiver/eavesdropper output states."""

    labels: tuple
    dim_b: int
    dim_e: int
    states: tuple
    probs: np.ndarray | None = None

    def __post_init__(self):
        if self.dim_b < 1 or self.dim_e < 1:
            raise ValidationError(f"dims: dim_b={self.dim_b}, dim_e={self.dim_e} must be >= 1")
        states = _validated_states(self.states, expect_dim=self.dim_b * self.dim_e)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "labels", _validated_labels(self.labels, len(states)))
        if self.probs is not None:
            object.__setattr__(self, "probs", _validated_probs(self.probs, len(states)))

    @property
    def size(self):
        return len(self.labels)

    def resolved_probs(self, probs=None):
        """Explicit probs, else the model's stored ones, else uniform."""
        if probs is not None:
            return _validated_probs(probs, self.size)
        if self.probs is not None:
            return self.probs
        return np.full(self.size, 1.0 / self.size)


def bob_marginals(ch: WiretapChannelModel, probs=None) -> Ensemble:
    """Per-label receiver marginals (eavesdropper factor traced out)."""
    states = [partial_trace(s, (ch.dim_b, ch.dim_e), axis=1) for s in ch.states]
    return Ensemble(ch.labels, ch.resolved_probs(probs), states)


def eve_marginals(ch: WiretapChannelModel, probs=None) -> Ensemble:
    """Per-label eavesdropper marginals (receiver factor traced out)."""
    states = [partial_trace(s, (ch.dim_b, ch.dim_e), axis=0) for s in ch.states]
    return Ensemble(ch.labels, ch.resolved_probs(probs), states)


def _load_doc(path):
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise FormatError(f"{path}: top level must be an object")
    return doc


def _parse_dim(doc, key, path):
    val = doc.get(key)
    if not isinstance(val, int) or isinstance(val, bool) or val < 1:
        raise FormatError(f"{path}: field '{key}' must be a positive integer")
    return val


def _parse_inputs(doc, path, *, require_prob):
    inputs = doc.get("inputs")
    if not isinstance(inputs, list) or not inputs:
        raise FormatError(f"{path}: field 'inputs' must be a non-empty list")
    labels, probs, states = [], [], []
    have_prob = False
    for k, item in enumerate(inputs):
        where = f"{path}: inputs[{k}]"
        if not isinstance(item, dict):
            raise FormatError(f"{where}: must be an object")
        if "label" not in item:
            raise FormatError(f"{where}: field 'label' is required")
        labels.append(item["label"])
        if "prob" in item:
            if not isinstance(item["prob"], (int, float)) or isinstance(item["prob"], bool):
                raise FormatError(f"{where}: field 'prob' must be a number")
            have_prob = True
            probs.append(float(item["prob"]))
        elif require_prob:
            raise FormatError(f"{where}: field 'prob' is required in ensemble files")
        elif have_prob:
            raise FormatError(f"{where}: field 'prob' given for some inputs but not all")
        if "state" not in item:
            raise FormatError(f"{where}: field 'state' is required")
        try:
            states.append(matrix_from_literal(item["state"]))
        except FormatError as exc:
            raise FormatError(f"{where}.state: {exc}") from exc
    return labels, (probs if have_prob else None), states


def load_channel(path) -> WiretapChannelModel:
    """Read and validate a wiretap channel file."""
    doc = _load_doc(path)
    dim_b = _parse_dim(doc, "dim_b", path)
    dim_e = _parse_dim(doc, "dim_e", path)
    labels, probs, states = _parse_inputs(doc, path, require_prob=False)
    return WiretapChannelModel(tuple(labels), dim_b, dim_e, tuple(states), probs)


def load_ensemble(path) -> Ensemble:
    """Read and validate an ensemble file (states on the composite dimension)."""
    doc = _load_doc(path)
    dim = _parse_dim(doc, "dim_b", path) * _parse_dim(doc, "dim_e", path)
    labels, probs, states = _parse_inputs(doc, path, require_prob=True)
    e = Ensemble(tuple(labels), probs, tuple(states))
    if e.dim != dim:
        raise ValidationError(
            f"states: dimension {e.dim} does not match declared dim_b*dim_e = {dim}"
        )
    return e


def _dump(doc, path):
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def save_channel(ch: WiretapChannelModel, path):
    inputs = []
    for k, label in enumerate(ch.labels):
        item = {"label": label, "state": matrix_to_literal(ch.states[k])}
        if ch.probs is not None:
            item["prob"] = float(ch.probs[k])
        inputs.append(item)
    _dump({"dim_b": ch.dim_b, "dim_e": ch.dim_e, "inputs": inputs}, path)


def save_ensemble(e: Ensemble, path, dim_b=None, dim_e=None):
    """Write an ensemble file; dims default to (dim, 1)."""
    dim_b = e.dim if dim_b is None else dim_b
    dim_e = 1 if dim_e is None else dim_e
    if dim_b * dim_e != e.dim:
        raise ValidationError(f"dims: {dim_b}*{dim_e} does not factor dimension {e.dim}")
    inputs = [
        {"label": label, "prob": float(p), "state": matrix_to_literal(s)}
        for label, p, s in zip(e.labels, e.probs, e.states)
    ]
    _dump({"dim_b": dim_b, "dim_e": dim_e, "inputs": inputs}, path)
