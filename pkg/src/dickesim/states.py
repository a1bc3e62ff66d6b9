"""Single-excitation collective states and their phasing diagnostics.

A state is a normalized complex amplitude vector beta over the basis
|j> = |b_1 ... a_j ... b_N> (atom j excited, all others in the ground
state).  The symmetric state carries uniform timed phases exp(i k0.r_j)
and radiates collectively; antisymmetric bin-weighted states place the
sum of their phased amplitudes at k0 to zero and decouple from the
collective channel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ensemble import AtomEnsemble, BinPartition, halves, thirds
from .errors import InvalidParameterError

NORM_TOL = 1e-12


@dataclass(frozen=True)
class ExcitationState:
    """Normalized amplitude vector over the single-excitation basis."""

    amplitudes: np.ndarray
    label: str = ""

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=complex)
        if amp.ndim != 1 or amp.size < 1:
            raise InvalidParameterError("amplitudes must be a 1-D vector")
        norm2 = float(np.sum(np.abs(amp) ** 2))
        if abs(norm2 - 1.0) > NORM_TOL:
            raise InvalidParameterError(
                f"state must be unit norm to {NORM_TOL}; |beta|^2 = {norm2}")
        amp = np.ascontiguousarray(amp)
        amp.setflags(write=False)
        object.__setattr__(self, "amplitudes", amp)

    @classmethod
    def normalized(cls, amplitudes, label: str = "") -> "ExcitationState":
        amp = np.asarray(amplitudes, dtype=complex)
        norm = np.linalg.norm(amp)
        if norm == 0:
            raise InvalidParameterError("cannot normalize the zero vector")
        return cls(amp / norm, label=label)

    @property
    def n(self) -> int:
        return self.amplitudes.size

    def overlap(self, other: "ExcitationState") -> complex:
        """Inner product <self|other>."""
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def fidelity_to(self, other: "ExcitationState") -> float:
        return float(abs(self.overlap(other)) ** 2)

    def to_json_dict(self) -> dict:
        return {"label": self.label,
                "amplitudes": [[float(a.real), float(a.imag)]
                               for a in self.amplitudes]}

    @classmethod
    def from_json_dict(cls, d: dict) -> "ExcitationState":
        amp = np.array([complex(re, im) for re, im in d["amplitudes"]])
        return cls(amp, label=d.get("label", ""))


def basis_state(n: int, j: int) -> ExcitationState:
    """|j>: only atom j excited."""
    if not (0 <= j < n):
        raise InvalidParameterError(f"atom index {j} outside 0..{n - 1}")
    amp = np.zeros(n, dtype=complex)
    amp[j] = 1.0
    return ExcitationState(amp, label=f"basis:{j}")


def bin_weighted_state(ensemble: AtomEnsemble, partition: BinPartition,
                       label: str = "") -> ExcitationState:
    """beta_j = w_bin(j) exp(i k0.r_j) / sqrt(sum_b w_b^2 |bin_b|)."""
    if partition.n != ensemble.n:
        raise InvalidParameterError(
            f"partition covers {partition.n} atoms, ensemble has {ensemble.n}")
    w = partition.weight_per_atom()
    amp = w * ensemble.timed_phases()
    return ExcitationState(amp / np.linalg.norm(amp), label=label)


def plus_state(ensemble: AtomEnsemble) -> ExcitationState:
    """Symmetric timed state: beta_j = exp(i k0.r_j) / sqrt(N).

    Reduces to the uniform small-sample superposition when all r_j = 0.
    """
    amp = ensemble.timed_phases() / np.sqrt(ensemble.n)
    return ExcitationState(amp, label="plus")


def minus_state(ensemble: AtomEnsemble,
                partition: BinPartition = None) -> ExcitationState:
    """Antisymmetric two-bin timed state (+1 on the first half, -1 on the
    second), the long-lived companion of the symmetric state."""
    if partition is None:
        partition = halves(ensemble)
    if partition.arity != 2 or tuple(partition.weights) != (1.0, -1.0):
        raise InvalidParameterError(
            "minus_state requires the two-bin (+1, -1) halves partition")
    return bin_weighted_state(ensemble, partition, label="minus")


def three_bin_state(ensemble: AtomEnsemble,
                    partition: BinPartition = None) -> ExcitationState:
    """Three-bin subradiant state with bin coefficients (1, -2, 1)/sqrt(6),
    each bin holding N/3 atoms."""
    if partition is None:
        partition = thirds(ensemble)
    if partition.arity != 3 or tuple(partition.weights) != (1.0, -2.0, 1.0):
        raise InvalidParameterError(
            "three_bin_state requires the three-bin (+1, -2, +1) partition")
    return bin_weighted_state(ensemble, partition, label="three-bin")


def structure_factor(state: ExcitationState, ensemble: AtomEnsemble,
                     k) -> complex:
    """Phased amplitude sum S(k) = sum_j beta_j exp(-i k.r_j).

    |S(k0)|^2 = N for the symmetric timed state and 0 for the bin-weighted
    subradiant states, for any geometry.
    """
    k = np.asarray(k, dtype=float)
    phases = np.exp(-1j * (ensemble.positions @ k))
    return complex(np.sum(state.amplitudes * phases))


def apply_bin_phase(state: ExcitationState, index_set,
                    phase: float) -> ExcitationState:
    """Multiply the amplitudes in ``index_set`` by exp(i phase).

    Unitary and norm preserving; with phase = pi on the second half it
    maps the antisymmetric state onto the symmetric one exactly.
    """
    idx = np.asarray(list(index_set), dtype=int)
    if idx.size and (idx.min() < 0 or idx.max() >= state.n):
        raise InvalidParameterError(
            f"indices must lie in 0..{state.n - 1}")
    if idx.size != np.unique(idx).size:
        raise InvalidParameterError("index_set contains duplicates")
    amp = state.amplitudes.copy()
    amp[idx] *= np.exp(1j * phase)
    return ExcitationState(amp, label=state.label)
