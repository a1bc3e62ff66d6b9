"""Optical preparation of collective states and subradiant switching.

A single photon is routed through a beam-splitter cascade onto the atoms
and absorbed by resonant single-photon pi pulses.  Beam splitters are
modeled as real Givens rotations between the running rail mode and the
output leg: leg = r * rail + t * vacuum, rail' = t * rail - r * vacuum
with t = sqrt(1 - r^2).  Only amplitude magnitudes matter for the
protocols; this fixes one unitary convention everywhere.  The -i phase a
pi pulse attaches is common to all atoms prepared in parallel and drops
out of every fidelity.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from .dicke import FullState, ground_state, _sigma_plus_apply
from .ensemble import AtomEnsemble, halves
from .errors import InvalidParameterError
from .states import ExcitationState, apply_bin_phase, bin_weighted_state

# Drive amplitude above which the optically-thin preparation model is
# flagged as unreliable.
THIN_MEDIUM_LIMIT = 0.3


@dataclass(frozen=True)
class BeamSplitter:
    """Reflects amplitude r onto its output leg, transmits sqrt(1-r^2)."""

    reflectance: float

    def __post_init__(self):
        if not (0.0 <= self.reflectance <= 1.0):
            raise InvalidParameterError(
                f"reflectance must lie in [0, 1], got {self.reflectance}")

    @property
    def transmittance(self) -> float:
        return math.sqrt(max(0.0, 1.0 - self.reflectance ** 2))


@dataclass(frozen=True)
class Mirror:
    """Fully reflecting terminator (beam splitter with r = 1)."""

    @property
    def reflectance(self) -> float:
        return 1.0

    @property
    def transmittance(self) -> float:
        return 0.0


@dataclass(frozen=True)
class PhaseShifter:
    """Multiplies the rail amplitude by exp(i phase)."""

    phase: float


@dataclass(frozen=True)
class OpticalNetwork:
    """Ordered rail elements plus a leg -> atom map.

    Legs are numbered by the order their beam splitter appears on the
    rail; ``targets[leg] = atom`` must be injective.
    """

    elements: tuple
    targets: dict

    def __post_init__(self):
        elements = tuple(self.elements)
        legs = sum(1 for e in elements if isinstance(e, (BeamSplitter, Mirror)))
        targets = dict(self.targets)
        if sorted(targets) != list(range(legs)):
            raise InvalidParameterError(
                f"targets must map every leg 0..{legs - 1}")
        atoms = list(targets.values())
        if len(set(atoms)) != len(atoms):
            raise InvalidParameterError("leg -> atom map must be injective")
        object.__setattr__(self, "elements", elements)
        object.__setattr__(self, "targets", targets)

    @property
    def n_legs(self) -> int:
        return len(self.targets)


def equal_split_network(n: int) -> OpticalNetwork:
    """Cascade sending amplitude 1/sqrt(N) to each of N legs.

    Reflectances r_j = 1/sqrt(N - j) for leg j = 0..N-2 and a mirror on
    the last leg; each splitter peels off an equal share of what remains
    on the rail.
    """
    if n < 1:
        raise InvalidParameterError(f"need at least one leg, got {n}")
    elements = [BeamSplitter(1.0 / math.sqrt(n - j)) for j in range(n - 1)]
    elements.append(Mirror())
    return OpticalNetwork(elements=tuple(elements),
                          targets={j: j for j in range(n)})


def scattering_matrix(network: OpticalNetwork) -> np.ndarray:
    """Full mode unitary of the cascade.

    Modes 0..L-1 are the legs (doubling as each splitter's vacuum input
    port before it fires), mode L is the rail.  The result is a product
    of Givens rotations and rail phases, hence exactly unitary.
    """
    n_modes = network.n_legs + 1
    rail = n_modes - 1
    s = np.eye(n_modes, dtype=complex)
    leg = 0
    for element in network.elements:
        if isinstance(element, PhaseShifter):
            step = np.eye(n_modes, dtype=complex)
            step[rail, rail] = np.exp(1j * element.phase)
        else:
            r, t = element.reflectance, element.transmittance
            step = np.eye(n_modes, dtype=complex)
            step[leg, rail] = r
            step[leg, leg] = t
            step[rail, rail] = t
            step[rail, leg] = -r
            leg += 1
        s = step @ s
    return s


def propagate_photon(network: OpticalNetwork) -> np.ndarray:
    """Leg amplitudes for a single photon entering on the rail."""
    s = scattering_matrix(network)
    amps = s[:, -1]
    return amps[:-1]


def jc_pulse(atom_excited: bool, photon: int, g: float, t: float) -> np.ndarray:
    """Resonant Jaynes-Cummings evolution of one atom and one mode.

    Returns the joint amplitudes indexed [atom, photon] (0 = ground /
    vacuum).  The {|b,1>, |a,0>} pair rotates at the vacuum Rabi
    frequency; |b,0> and |a,1> are stationary in this resonant sector.
    A pulse area g*t = pi transfers |b,1> -> -i |a,0> completely.
    """
    if g <= 0:
        raise InvalidParameterError(f"coupling g must be > 0, got {g}")
    if t < 0:
        raise InvalidParameterError(f"duration must be >= 0, got {t}")
    if photon not in (0, 1):
        raise InvalidParameterError("photon number must be 0 or 1")
    out = np.zeros((2, 2), dtype=complex)
    c = math.cos(0.5 * g * t)
    s = math.sin(0.5 * g * t)
    if not atom_excited and photon == 1:
        out[0, 1] = c
        out[1, 0] = -1j * s
    elif atom_excited and photon == 0:
        out[1, 0] = c
        out[0, 1] = -1j * s
    else:
        out[int(atom_excited), photon] = 1.0
    return out


_PI_PULSE_PHASE = -1j  # amplitude factor of |b,1> -> |a,0> at g*t = pi


@dataclass(frozen=True)
class PhotonAtomState:
    """Single shared excitation between N photon legs and N atoms.

    Amplitudes: photon in leg j with all atoms ground (leg_amp), atom j
    excited with the field in vacuum (atom_amp), and the empty
    vacuum-leg component.
    """

    leg_amp: np.ndarray
    atom_amp: np.ndarray
    vacuum_amp: complex = 0.0

    def __post_init__(self):
        leg = np.asarray(self.leg_amp, dtype=complex)
        atom = np.asarray(self.atom_amp, dtype=complex)
        if leg.shape != atom.shape or leg.ndim != 1:
            raise InvalidParameterError("leg and atom sectors must match")
        norm2 = (float(np.sum(np.abs(leg) ** 2))
                 + float(np.sum(np.abs(atom) ** 2))
                 + abs(self.vacuum_amp) ** 2)
        if abs(norm2 - 1.0) > 1e-12:
            raise InvalidParameterError(
                f"joint state must be unit norm, got {norm2}")
        object.__setattr__(self, "leg_amp", leg)
        object.__setattr__(self, "atom_amp", atom)

    @property
    def field_vacuum_probability(self) -> float:
        """Probability that no leg carries a photon."""
        return (float(np.sum(np.abs(self.atom_amp) ** 2))
                + abs(self.vacuum_amp) ** 2)

    @property
    def excitation_number(self) -> float:
        """Expectation of (photon + atomic) excitations; conserved."""
        return (float(np.sum(np.abs(self.leg_amp) ** 2))
                + float(np.sum(np.abs(self.atom_amp) ** 2)))


@dataclass(frozen=True)
class PreparationResult:
    state: ExcitationState
    success_probability: float
    photon_state: PhotonAtomState


def _absorb_by_pi_pulses(ensemble: AtomEnsemble,
                         leg_amp: np.ndarray) -> PhotonAtomState:
    # Timed phase from propagation to each atom, then a pi pulse per leg.
    phased = leg_amp * ensemble.timed_phases()
    atom_amp = _PI_PULSE_PHASE * phased
    return PhotonAtomState(leg_amp=np.zeros_like(atom_amp),
                           atom_amp=atom_amp)


def _timed_preparation(ensemble: AtomEnsemble, shifted: bool,
                       label: str) -> PreparationResult:
    n = ensemble.n
    elements = list(equal_split_network(n).elements)
    if shifted:
        elements.insert(n // 2, PhaseShifter(math.pi))
    network = OpticalNetwork(elements=tuple(elements),
                             targets={j: j for j in range(n)})
    legs = propagate_photon(network)
    joint = _absorb_by_pi_pulses(ensemble, legs)
    state = ExcitationState.normalized(joint.atom_amp, label=label)
    return PreparationResult(state=state,
                             success_probability=joint.field_vacuum_probability,
                             photon_state=joint)


def prepare_timed_plus(ensemble: AtomEnsemble) -> PreparationResult:
    """Split a single photon over N legs, delay-phase each leg, absorb
    with pi pulses: deterministically yields the symmetric timed state
    (success probability 1, no post-selection)."""
    return _timed_preparation(ensemble, shifted=False, label="prepared-plus")


def prepare_timed_minus(ensemble: AtomEnsemble) -> PreparationResult:
    """Same cascade with a pi shifter on the rail after the first N/2
    splitters: the second half is prepared out of phase, producing the
    antisymmetric timed state deterministically."""
    if ensemble.n % 2 != 0:
        raise InvalidParameterError(
            "antisymmetric preparation needs an even atom number")
    return _timed_preparation(ensemble, shifted=True, label="prepared-minus")


def prepare_singlet_pair(i: int, j: int, n: int,
                         base: FullState = None):
    """Drive atoms i and j with the antisymmetric two-leg photon state
    (50/50 splitter + pi shifter) and absorb with pi pulses.

    Returns (FullState, success probability).  The atomic pair ends in
    the exact two-atom singlet; with ``base`` given, the protocol acts on
    that register state instead of the global ground state (the two
    target atoms must be unexcited in every populated component).
    """
    if i == j:
        raise InvalidParameterError("need two distinct atoms")
    if not (0 <= i < n and 0 <= j < n):
        raise InvalidParameterError(f"atom indices must lie in 0..{n - 1}")
    vec = ground_state(n) if base is None else base.amplitudes
    mask = (1 << i) | (1 << j)
    occupied = np.abs(vec) > 0
    if np.any((np.arange(vec.size)[occupied] & mask) != 0):
        raise InvalidParameterError(
            f"atoms {i} and {j} must be in the ground state")

    network = OpticalNetwork(
        elements=(BeamSplitter(1.0 / math.sqrt(2.0)), PhaseShifter(math.pi),
                  Mirror()),
        targets={0: i, 1: j})
    legs = propagate_photon(network)
    out = _PI_PULSE_PHASE * (
        legs[0] * _sigma_plus_apply(vec, i, n)
        + legs[1] * _sigma_plus_apply(vec, j, n))
    state = FullState(out, label=f"singlet-prep({i},{j})")
    return state, 1.0


@dataclass(frozen=True)
class HeraldedOutcome:
    """Branches of the weak-drive heralded preparation."""

    no_count_state: ExcitationState
    no_count_probability: float
    count_probability: float
    thin_medium: bool          # False flags a violated thin-medium regime
    target: str
    drive_strength: float


def conditional_prepare(ensemble: AtomEnsemble, target: str,
                        drive_strength: float) -> HeraldedOutcome:
    """Weakly driven heralded preparation (detector no-count branch).

    The drive photon passes the atoms in sequence; atom j picks up the
    excitation amplitude eps * w_j exp(i k0.r_j) / sqrt(N) (the momentum
    condition of the drive fields imposes the timed phases, and a pi
    shift on the second half's drive gives the antisymmetric weights).
    The per-atom rotation angles are chosen so these amplitudes are exact
    at any eps, making the no-count branch the target state itself; a
    surviving photon reaches the detector with amplitude sqrt(1 - eps^2)
    and the count heralds a discard.
    """
    eps = float(drive_strength)
    if not (0.0 <= eps < 1.0):
        raise InvalidParameterError(
            f"drive_strength must lie in [0, 1), got {eps}")
    if target == "plus":
        weights = np.ones(ensemble.n)
    elif target == "minus":
        weights = halves(ensemble).weight_per_atom()
    else:
        raise InvalidParameterError("target must be 'plus' or 'minus'")

    amps = weights * ensemble.timed_phases()
    state = ExcitationState.normalized(_PI_PULSE_PHASE * amps,
                                       label=f"heralded-{target}")
    return HeraldedOutcome(no_count_state=state,
                           no_count_probability=eps ** 2,
                           count_probability=1.0 - eps ** 2,
                           thin_medium=eps < THIN_MEDIUM_LIMIT,
                           target=target, drive_strength=eps)


def switch_2pi(state: ExcitationState, bin_indices) -> ExcitationState:
    """Cycle the given atoms through a 2 pi drive of an auxiliary
    sublevel, imprinting a geometric -1 on their excited amplitudes.

    Identical to a pi bin phase; applied to the second half it maps the
    antisymmetric state onto the symmetric one (and back: applying it
    twice is the identity).
    """
    out = apply_bin_phase(state, bin_indices, math.pi)
    return ExcitationState(out.amplitudes, label=f"switched({state.label})")
