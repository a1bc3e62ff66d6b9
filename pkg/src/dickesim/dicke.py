"""Exact full-Hilbert-space machinery for small atom numbers (N <= 8).

Basis convention: product states are indexed by bitmask, atom j excited
iff bit j of the index is set (atom 0 is the least significant bit).
Everything here is meant as a brute-force oracle for the single-excitation
engines: collective pseudo-spin operators, angular-momentum multiplets,
two-atom singlet constructions, and the t = 0 emission rate
gamma * ||R^- psi||^2 valid in the small-sample limit.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb, sqrt

import numpy as np

from .errors import (CapacityError, DegenerateInputError,
                     InvalidParameterError)

MAX_ATOMS = 8
NORM_TOL = 1e-12


@dataclass(frozen=True)
class FullState:
    """Normalized vector over the 2^N product basis."""

    amplitudes: np.ndarray
    label: str = ""

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=complex)
        if amp.ndim != 1 or amp.size < 2 or amp.size & (amp.size - 1):
            raise InvalidParameterError(
                "amplitudes must have length 2^N for some N >= 1")
        norm2 = float(np.sum(np.abs(amp) ** 2))
        if abs(norm2 - 1.0) > NORM_TOL:
            raise InvalidParameterError(
                f"state must be unit norm to {NORM_TOL}; got {norm2}")
        amp = np.ascontiguousarray(amp)
        amp.setflags(write=False)
        object.__setattr__(self, "amplitudes", amp)

    @property
    def n_atoms(self) -> int:
        return int(self.amplitudes.size).bit_length() - 1

    def overlap(self, other: "FullState") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def fidelity_to(self, other: "FullState") -> float:
        return float(abs(self.overlap(other)) ** 2)


@dataclass(frozen=True)
class MultipletLabel:
    """(R, m)_p quantum numbers: cooperation number, inversion, column."""

    r: float
    m: float
    p: int = 0

    def __post_init__(self):
        two_r = round(2 * self.r)
        two_m = round(2 * self.m)
        if abs(2 * self.r - two_r) > 1e-9 or abs(2 * self.m - two_m) > 1e-9:
            raise InvalidParameterError("r and m must be half-integers")
        if two_r < 0 or abs(two_m) > two_r or (two_r - two_m) % 2 != 0:
            raise InvalidParameterError(
                f"m must be in -r..r in integer steps, got r={self.r} m={self.m}")
        if self.p < 0:
            raise InvalidParameterError("p must be >= 0")
        object.__setattr__(self, "r", two_r / 2.0)
        object.__setattr__(self, "m", two_m / 2.0)


def _check_capacity(n: int):
    if not (1 <= n <= MAX_ATOMS):
        raise CapacityError(
            f"full-space operations support 1 <= N <= {MAX_ATOMS}, got {n}")


def _sigma_plus_apply(vec: np.ndarray, j: int, n: int) -> np.ndarray:
    out = np.zeros_like(vec)
    bit = 1 << j
    idx = np.arange(vec.size)
    ground = (idx & bit) == 0
    out[idx[ground] | bit] = vec[ground]
    return out


def _sigma_minus_apply(vec: np.ndarray, j: int, n: int) -> np.ndarray:
    out = np.zeros_like(vec)
    bit = 1 << j
    idx = np.arange(vec.size)
    excited = (idx & bit) != 0
    out[idx[excited] & ~bit] = vec[excited]
    return out


def raise_collective(vec: np.ndarray, n: int) -> np.ndarray:
    """Apply R^+ = sum_j sigma_j^+ (unnormalized)."""
    out = np.zeros_like(vec)
    for j in range(n):
        out += _sigma_plus_apply(vec, j, n)
    return out


def lower_collective(vec: np.ndarray, n: int) -> np.ndarray:
    """Apply R^- = sum_j sigma_j^-."""
    out = np.zeros_like(vec)
    for j in range(n):
        out += _sigma_minus_apply(vec, j, n)
    return out


@dataclass(frozen=True)
class CollectiveOps:
    r_plus: np.ndarray
    r_minus: np.ndarray
    r_z: np.ndarray
    r_squared: np.ndarray


def collective_ops(n: int) -> CollectiveOps:
    """Dense matrices for R^+, R^-, R_z and R^2 on the 2^N space."""
    _check_capacity(n)
    dim = 1 << n
    rp = np.zeros((dim, dim))
    for b in range(dim):
        for j in range(n):
            bit = 1 << j
            if not b & bit:
                rp[b | bit, b] += 1.0
    rm = rp.T.copy()
    n_excited = np.array([bin(b).count("1") for b in range(dim)], dtype=float)
    rz = np.diag(n_excited - n / 2.0)
    r2 = 0.5 * (rp @ rm + rm @ rp) + rz @ rz
    return CollectiveOps(r_plus=rp, r_minus=rm, r_z=rz, r_squared=r2)


def ground_state(n: int) -> np.ndarray:
    vec = np.zeros(1 << n, dtype=complex)
    vec[0] = 1.0
    return vec


def _pair_create(vec: np.ndarray, i: int, j: int, n: int,
                 sign: float) -> np.ndarray:
    # (sigma_i^+ + sign * sigma_j^+) / sqrt(2)
    return (_sigma_plus_apply(vec, i, n)
            + sign * _sigma_plus_apply(vec, j, n)) / sqrt(2.0)


def singlet(i: int, j: int, n: int) -> FullState:
    """|s_ij> = (|a_i b_j> - |b_i a_j>)/sqrt(2), all other atoms ground.

    Annihilated by the collective raising/lowering operators restricted
    to the pair {i, j}.
    """
    _check_capacity(n)
    if i == j:
        raise InvalidParameterError("singlet needs two distinct atoms")
    if not (0 <= i < n and 0 <= j < n):
        raise InvalidParameterError(f"atom indices must lie in 0..{n - 1}")
    vec = _pair_create(ground_state(n), i, j, n, -1.0)
    return FullState(vec, label=f"singlet({i},{j})")


def triplet_plus(i: int, j: int, n: int) -> FullState:
    """|+_ij> = (|a_i b_j> + |b_i a_j>)/sqrt(2), other atoms ground."""
    _check_capacity(n)
    if i == j:
        raise InvalidParameterError("pair state needs two distinct atoms")
    vec = _pair_create(ground_state(n), i, j, n, +1.0)
    return FullState(vec, label=f"plus-pair({i},{j})")


def table1_states(n: int = 4):
    """The five N = 4 subradiant eigenstates in singlet-product form.

    Rows: three single-excitation (R=1, m=-1) states built from one
    singlet each, then the one- and two-pair double-singlet (R=0, m=0)
    states.  Unit norm of each row doubles as a check of the printed
    prefactors (sqrt 3, sqrt 6, sqrt 3), which assume the non-orthogonal
    singlet overlaps; FullState raises if a prefactor were wrong.
    """
    if n != 4:
        raise InvalidParameterError("the tabulated states are for N = 4")
    g = ground_state(4)

    def s(i, j, vec=None):
        return _pair_create(g if vec is None else vec, i, j, 4, -1.0)

    rows = [
        (MultipletLabel(1, -1, 0), s(0, 1), "singlet(0,1)"),
        (MultipletLabel(1, -1, 1), (s(0, 2) + s(1, 2)) / sqrt(3.0),
         "[s02 + s12]/sqrt3"),
        (MultipletLabel(1, -1, 2), (s(0, 3) + s(1, 3) + s(2, 3)) / sqrt(6.0),
         "[s03 + s13 + s23]/sqrt6"),
        (MultipletLabel(0, 0, 0), s(2, 3, s(0, 1)), "s01 x s23"),
        (MultipletLabel(0, 0, 1),
         (s(1, 3, s(0, 2)) + s(0, 3, s(1, 2))) / sqrt(3.0),
         "[s02 s13 + s12 s03]/sqrt3"),
    ]
    return [(lab, FullState(vec, label=txt)) for lab, vec, txt in rows]


def ladder_rate(label: MultipletLabel, gamma: float = 1.0) -> float:
    """Collective emission rate (r + m)(r - m + 1) * gamma from |r, m>;
    zero at the bottom of the ladder."""
    return (label.r + label.m) * (label.r - label.m + 1.0) * gamma


def promote(state: FullState, n: int) -> FullState:
    """Apply the normalized symmetric raising operator.

    Raises DegenerateInputError for R^+-annihilated inputs (e.g. pure
    singlet products).
    """
    _check_capacity(n)
    if state.amplitudes.size != 1 << n:
        raise InvalidParameterError("state dimension does not match N")
    vec = raise_collective(state.amplitudes, n)
    norm = np.linalg.norm(vec)
    if norm < 1e-12:
        raise DegenerateInputError("input state is annihilated by R^+")
    return FullState(vec / norm, label=f"raised({state.label})")


def dicke_decay_oracle(initial: FullState, n: int, gamma: float = 1.0) -> float:
    """Total emission rate at t = 0 in the small-sample limit:
    gamma * ||R^- psi||^2.

    Agrees with the kernel quadratic form on single-excitation states and
    with ladder_rate on |r, m> eigenstates.
    """
    _check_capacity(n)
    if initial.amplitudes.size != 1 << n:
        raise InvalidParameterError("state dimension does not match N")
    lowered = lower_collective(initial.amplitudes, n)
    return gamma * float(np.sum(np.abs(lowered) ** 2))


def embed_single_excitation(amplitudes, n: int, label: str = "") -> FullState:
    """Lift a single-excitation amplitude vector into the 2^N space."""
    _check_capacity(n)
    amps = np.asarray(amplitudes, dtype=complex)
    if amps.size != n:
        raise InvalidParameterError("need one amplitude per atom")
    vec = np.zeros(1 << n, dtype=complex)
    for j in range(n):
        vec[1 << j] = amps[j]
    return FullState(vec, label=label)


def extract_single_excitation(state: FullState) -> np.ndarray:
    """Inverse of embed_single_excitation; requires the support to lie
    entirely in the single-excitation sector."""
    n = state.n_atoms
    amps = np.zeros(n, dtype=complex)
    weight = 0.0
    for j in range(n):
        amps[j] = state.amplitudes[1 << j]
        weight += abs(amps[j]) ** 2
    if abs(weight - 1.0) > 1e-10:
        raise InvalidParameterError(
            "state has support outside the single-excitation sector")
    return amps


def multiplet_degeneracy(n: int, r: float) -> int:
    """Number of independent (R = r) multiplets for N atoms."""
    k = round(n / 2.0 - r)
    if k < 0 or abs(n / 2.0 - r - k) > 1e-9:
        return 0
    return comb(n, k) - (comb(n, k - 1) if k >= 1 else 0)


def multiplet_basis(n: int):
    """All |r, m>_p eigenstates by iterative pairwise coupling.

    Atoms are coupled one at a time in index order with standard
    Clebsch-Gordan coefficients (Condon-Shortley phases).  Degenerate
    multiplets are ordered deterministically: for each R at each step,
    children reached by raising R (parent R - 1/2) come first, then
    children reached by lowering (parent R + 1/2), each group in parent-p
    order.  Returns a list of (MultipletLabel, FullState), every state an
    exact eigenvector of R^2 and R_z.
    """
    _check_capacity(n)
    # blocks: {two_r: [array of shape (two_r + 1, dim)]}, row index
    # (two_m + two_r) // 2, list position = p.
    blocks = {1: [np.array([[1.0, 0.0], [0.0, 1.0]], dtype=complex)]}
    dim = 2
    for _ in range(1, n):
        new_blocks = {}
        child_rs = sorted({tr + d for tr in blocks for d in (+1, -1)
                           if tr + d >= 0}, reverse=True)
        for two_r in child_rs:
            for branch in (+1, -1):  # +1: from parents below, -1: above
                two_rp = two_r - branch
                if two_rp < 0 or two_rp not in blocks:
                    continue
                for parent in blocks[two_rp]:
                    child = np.zeros((two_r + 1, 2 * dim), dtype=complex)
                    for row in range(two_r + 1):
                        two_m = 2 * row - two_r
                        c_up = sqrt((two_rp + two_m + 1)
                                    / (2.0 * (two_rp + 1)))
                        c_dn = sqrt((two_rp - two_m + 1)
                                    / (2.0 * (two_rp + 1)))
                        if branch == -1:
                            c_up, c_dn = -c_dn, c_up
                        # parent row for m -/+ 1/2, new atom up/down
                        rm = (two_m - 1 + two_rp) // 2
                        rp_ = (two_m + 1 + two_rp) // 2
                        if 0 <= rm <= two_rp:
                            child[row, dim:] += c_up * parent[rm]
                        if 0 <= rp_ <= two_rp:
                            child[row, :dim] += c_dn * parent[rp_]
                    new_blocks.setdefault(two_r, []).append(child)
        # p order within each R: up-branch children first, then down-branch
        blocks = new_blocks
        dim *= 2

    out = []
    for two_r in sorted(blocks, reverse=True):
        for p, block in enumerate(blocks[two_r]):
            for row in range(two_r + 1):
                two_m = 2 * row - two_r
                label = MultipletLabel(two_r / 2.0, two_m / 2.0, p)
                out.append((label, FullState(block[row],
                                             label=f"|{label.r},{label.m}>_{p}")))
    return out


def multiplet_state(n: int, r: float, m: float, p: int = 0) -> FullState:
    """Single |r, m>_p eigenstate from the deterministic basis."""
    for label, state in multiplet_basis(n):
        if label.r == r and label.m == m and label.p == p:
            return state
    raise InvalidParameterError(
        f"no multiplet (r={r}, m={m}, p={p}) for N={n}")


def multiplet_table(n: int) -> dict:
    """JSON-ready dump of the full multiplet decomposition."""
    entries = []
    for label, state in multiplet_basis(n):
        entries.append({
            "r": label.r,
            "m": label.m,
            "p": label.p,
            "amplitudes": [[float(a.real), float(a.imag)]
                           for a in state.amplitudes],
        })
    return {"n_atoms": n, "dimension": 1 << n, "states": entries}
