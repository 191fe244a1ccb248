"""Constrained-lattice linear-chain CRF.

A label lattice holds the set of admissible labels per position. Weak
labels constrain it: a typed label pins its position, B-NT/I-NT admit the
same boundary with any type, a sampled UN position is pinned to O, and an
unsampled UN position admits every label. Training maximizes the total
probability of all admissible paths, i.e. minimizes
logZ(full lattice) - logZ(constrained lattice).

Scores use virtual START/STOP boundary states appended after the real
labels in the transition matrix; START has no inbound transitions and
STOP no outbound ones. All recursions run in log space.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import Parameter, Tape, Var
from .errors import ContractViolation, DataError
from .labels import B_NO_TYPE, I_NO_TYPE, OUTSIDE, UNLABELED, TypeSystem

NEG_INF = -np.inf


def start_index(n_labels: int) -> int:
    return n_labels


def stop_index(n_labels: int) -> int:
    return n_labels + 1


@dataclass(frozen=True)
class LabelLattice:
    """Boolean mask of admissible labels, one row per token position."""

    mask: np.ndarray

    def __post_init__(self):
        mask = np.asarray(self.mask, dtype=bool)
        if mask.ndim != 2 or mask.shape[0] == 0:
            raise DataError(f"lattice mask must be (positions, labels), got {mask.shape}")
        if not mask.any(axis=1).all():
            empty = int(np.flatnonzero(~mask.any(axis=1))[0])
            raise DataError(f"no admissible label at position {empty}")
        object.__setattr__(self, "mask", mask)

    @property
    def n_positions(self) -> int:
        return self.mask.shape[0]

    @property
    def n_labels(self) -> int:
        return self.mask.shape[1]

    def single_path(self) -> list[int] | None:
        """The unique admissible path, or None if any position admits > 1 label."""
        if not (self.mask.sum(axis=1) == 1).all():
            return None
        return [int(i) for i in self.mask.argmax(axis=1)]


def full_lattice(n_positions: int, n_labels: int) -> LabelLattice:
    return LabelLattice(np.ones((n_positions, n_labels), dtype=bool))


def build_lattice(
    weak_labels,
    sampled_positions,
    type_system: TypeSystem,
) -> LabelLattice:
    """Turn one sentence's weak labels plus sampled-O positions into a lattice."""
    weak_labels = list(weak_labels)
    sampled = set(sampled_positions)
    for pos in sampled:
        if not 0 <= pos < len(weak_labels) or weak_labels[pos] != UNLABELED:
            raise ContractViolation(
                f"sampled position {pos} does not hold an UN label"
            )
    n = type_system.num_labels
    mask = np.zeros((len(weak_labels), n), dtype=bool)
    begin_indices = [type_system.label_index(type_system.begin(t)) for t in type_system.types]
    inside_indices = [type_system.label_index(type_system.inside(t)) for t in type_system.types]
    for i, lab in enumerate(weak_labels):
        if lab == UNLABELED:
            if i in sampled:
                mask[i, type_system.label_index(OUTSIDE)] = True
            else:
                mask[i, :] = True
        elif lab == B_NO_TYPE:
            mask[i, begin_indices] = True
        elif lab == I_NO_TYPE:
            mask[i, inside_indices] = True
        else:
            mask[i, type_system.label_index(lab)] = True
    return LabelLattice(mask)


def _logsumexp_rows(scores: np.ndarray, axis: int) -> np.ndarray:
    """Log-sum-exp along one axis, tolerating -inf entries and -inf rows."""
    m = np.max(scores, axis=axis)
    finite = np.isfinite(m)
    safe_m = np.where(finite, m, 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        summed = np.sum(np.exp(scores - np.expand_dims(safe_m, axis)), axis=axis)
        out = safe_m + np.log(summed)
    return np.where(finite, out, NEG_INF)


def sequence_score(emissions: np.ndarray, transitions: np.ndarray, labels) -> float:
    """Score of one complete label path, boundary transitions included.

    Accumulated in lattice-forward order (transition into a position, then
    its emission) so that a singleton lattice's log-partition reproduces
    this value bit-for-bit.
    """
    emissions = np.asarray(emissions, dtype=np.float64)
    labels = [int(y) for y in labels]
    n_pos, n_labels = emissions.shape
    if len(labels) != n_pos:
        raise DataError(f"{len(labels)} labels for {n_pos} emission rows")
    start, stop = start_index(n_labels), stop_index(n_labels)
    score = transitions[start, labels[0]] + emissions[0, labels[0]]
    for i in range(1, n_pos):
        score = score + transitions[labels[i - 1], labels[i]]
        score = score + emissions[i, labels[i]]
    return float(score + transitions[labels[-1], stop])


def _forward_alphas(
    emissions: np.ndarray, transitions: np.ndarray, mask: np.ndarray
) -> np.ndarray:
    n_pos, n_labels = emissions.shape
    start = start_index(n_labels)
    inner = transitions[:n_labels, :n_labels]
    alphas = np.full((n_pos, n_labels), NEG_INF)
    first = transitions[start, :n_labels] + emissions[0]
    alphas[0] = np.where(mask[0], first, NEG_INF)
    for t in range(1, n_pos):
        scores = alphas[t - 1][:, None] + inner
        step = _logsumexp_rows(scores, axis=0) + emissions[t]
        alphas[t] = np.where(mask[t], step, NEG_INF)
    return alphas


def _backward_betas(
    emissions: np.ndarray, transitions: np.ndarray, mask: np.ndarray
) -> np.ndarray:
    n_pos, n_labels = emissions.shape
    stop = stop_index(n_labels)
    inner = transitions[:n_labels, :n_labels]
    betas = np.full((n_pos, n_labels), NEG_INF)
    betas[-1] = np.where(mask[-1], transitions[:n_labels, stop], NEG_INF)
    for t in range(n_pos - 2, -1, -1):
        tail = np.where(mask[t + 1], emissions[t + 1] + betas[t + 1], NEG_INF)
        step = _logsumexp_rows(inner + tail[None, :], axis=1)
        betas[t] = np.where(mask[t], step, NEG_INF)
    return betas


def log_partition(
    emissions: np.ndarray, transitions: np.ndarray, lattice: LabelLattice
) -> float:
    """Log of the summed exponentiated scores of all admissible paths."""
    emissions = np.asarray(emissions, dtype=np.float64)
    if lattice.mask.shape != emissions.shape:
        raise DataError(
            f"lattice shape {lattice.mask.shape} does not match emissions {emissions.shape}"
        )
    n_labels = emissions.shape[1]
    alphas = _forward_alphas(emissions, transitions, lattice.mask)
    final = alphas[-1] + transitions[:n_labels, stop_index(n_labels)]
    return float(_logsumexp_rows(final[None, :], axis=1)[0])


def lattice_marginals(
    emissions: np.ndarray, transitions: np.ndarray, lattice: LabelLattice
) -> tuple[float, np.ndarray, np.ndarray]:
    """Forward-backward pass over one lattice.

    Returns (logZ, node marginals of shape (positions, labels), transition
    marginals of shape (labels+2, labels+2) with START row / STOP column
    populated from the boundary transitions).
    """
    emissions = np.asarray(emissions, dtype=np.float64)
    mask = lattice.mask
    n_pos, n_labels = emissions.shape
    start, stop = start_index(n_labels), stop_index(n_labels)
    inner = transitions[:n_labels, :n_labels]

    alphas = _forward_alphas(emissions, transitions, mask)
    betas = _backward_betas(emissions, transitions, mask)
    final = alphas[-1] + transitions[:n_labels, stop]
    log_z = float(_logsumexp_rows(final[None, :], axis=1)[0])

    with np.errstate(invalid="ignore"):
        node = np.exp(alphas + betas - log_z)
    node[~mask] = 0.0

    trans_marg = np.zeros((n_labels + 2, n_labels + 2))
    for t in range(n_pos - 1):
        tail = emissions[t + 1] + betas[t + 1]
        with np.errstate(invalid="ignore"):
            edge = np.exp(alphas[t][:, None] + inner + tail[None, :] - log_z)
        edge[~mask[t]] = 0.0
        edge[:, ~mask[t + 1]] = 0.0
        trans_marg[:n_labels, :n_labels] += edge
    trans_marg[start, :n_labels] = node[0]
    trans_marg[:n_labels, stop] = node[-1]
    return log_z, node, trans_marg


def pcrf_loss(
    emissions: Var,
    transitions: Parameter,
    constrained: LabelLattice,
    tape: Tape,
) -> Var:
    """Negative log-probability of the constrained path set.

    loss = logZ(full) - logZ(constrained) >= 0. On the backward pass the
    gradient w.r.t. each emission and transition entry is the difference
    of the two lattices' marginals, accumulated into the emissions Var and
    the transition Parameter so shared encoder weights train end to end.
    """
    values = emissions.value
    n_pos, n_labels = values.shape
    if constrained.mask.shape != values.shape:
        raise DataError(
            f"lattice shape {constrained.mask.shape} does not match emissions {values.shape}"
        )
    unconstrained = full_lattice(n_pos, n_labels)
    trans_values = transitions.value
    log_z_full = log_partition(values, trans_values, unconstrained)
    log_z_constr = log_partition(values, trans_values, constrained)
    out = Var(log_z_full - log_z_constr)

    def backward():
        if out.grad is None:
            return
        g = float(out.grad)
        _, node_f, trans_f = lattice_marginals(values, trans_values, unconstrained)
        _, node_c, trans_c = lattice_marginals(values, trans_values, constrained)
        emissions.accumulate(g * (node_f - node_c))
        transitions.grad += g * (trans_f - trans_c)

    tape.record(backward)
    return out


def viterbi_decode(emissions: np.ndarray, transitions: np.ndarray) -> list[int]:
    """Highest-scoring unconstrained label path; ties break toward lower indices."""
    emissions = np.asarray(emissions, dtype=np.float64)
    if emissions.ndim != 2 or emissions.shape[0] == 0:
        raise DataError("emissions must be a non-empty (positions, labels) matrix")
    n_pos, n_labels = emissions.shape
    start, stop = start_index(n_labels), stop_index(n_labels)
    inner = transitions[:n_labels, :n_labels]
    delta = transitions[start, :n_labels] + emissions[0]
    backptr = np.zeros((n_pos, n_labels), dtype=np.intp)
    for t in range(1, n_pos):
        scores = delta[:, None] + inner
        backptr[t] = scores.argmax(axis=0)
        delta = scores[backptr[t], np.arange(n_labels)] + emissions[t]
    final = delta + transitions[:n_labels, stop]
    best = int(final.argmax())
    path = [best]
    for t in range(n_pos - 1, 0, -1):
        best = int(backptr[t, best])
        path.append(best)
    path.reverse()
    return path
