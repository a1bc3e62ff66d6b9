"""Pairwise spontaneous-emission kernel and collective decay rates.

Carrying out the resonant mode sum in the Markov limit for scalar
photons leaves the pair coupling

    Gamma_jl = gamma * sinc(k0 |r_j - r_l|),   sinc x = sin x / x,

the isotropic solid-angle average of exp(i k0.(r_j - r_l)) over the
resonant shell.  A collective state decays in probability at the
quadratic-form rate Gamma(psi) = sum_jl beta_j* Gamma_jl beta_l, its
amplitude at half that, so the single-atom basis state decays at
exactly gamma and the symmetric small-sample state at N gamma.

The large-sample closed-form rates are kept alongside as asymptotic
predictions to compare against, never as the engine.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from .ensemble import AtomEnsemble
from .errors import InvalidParameterError
from .states import ExcitationState

# Negative-eigenvalue slack (units of gamma) tolerated when validating
# positive semidefiniteness of an assembled kernel.
PSD_TOL = 1e-10

# lambda^2 / A above which the antisymmetric closed form goes negative
# and is clamped to zero in reports.
CLAMP_THRESHOLD = 8.0 * math.pi / 3.0


@dataclass(frozen=True)
class DecayKernel:
    """N x N symmetric PSD rate matrix Gamma_jl with Gamma_jj = gamma."""

    gamma_matrix: np.ndarray
    ensemble_ref: AtomEnsemble

    def __post_init__(self):
        g = np.asarray(self.gamma_matrix, dtype=float)
        gamma = self.ensemble_ref.gamma
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise InvalidParameterError("gamma_matrix must be square")
        if g.shape[0] != self.ensemble_ref.n:
            raise InvalidParameterError("kernel size must match ensemble")
        if not np.allclose(g, g.T, rtol=0, atol=1e-12 * gamma):
            raise InvalidParameterError("gamma_matrix must be symmetric")
        if not np.allclose(np.diag(g), gamma, rtol=1e-12):
            raise InvalidParameterError("diagonal entries must all equal gamma")
        if np.abs(g).max() > gamma * (1 + 1e-12):
            raise InvalidParameterError("|Gamma_jl| must not exceed gamma")
        if np.linalg.eigvalsh(g).min() < -PSD_TOL * gamma:
            raise InvalidParameterError("gamma_matrix must be PSD")
        g = np.ascontiguousarray(g)
        g.setflags(write=False)
        object.__setattr__(self, "gamma_matrix", g)

    @property
    def n(self) -> int:
        return self.gamma_matrix.shape[0]

    def eigen_modes(self):
        """Eigenvalues (ascending) and eigenvectors of the rate matrix."""
        return np.linalg.eigh(self.gamma_matrix)


def build_kernel(ensemble: AtomEnsemble) -> DecayKernel:
    """Assemble Gamma_jl = gamma * sinc(k0 |r_j - r_l|).

    np.sinc is the normalized sinc, hence the division by pi.  Coincident
    atoms (including j = l) give the full gamma; no exclusion radius.
    """
    x = ensemble.k0 * ensemble.separations()
    g = ensemble.gamma * np.sinc(x / math.pi)
    return DecayKernel(gamma_matrix=g, ensemble_ref=ensemble)


def rate_of(state: ExcitationState, kernel: DecayKernel) -> float:
    """Collective decay rate Gamma(psi) = beta^dag Gamma beta.

    Probability decays at this rate, the amplitude at half of it.  The
    quadratic form of a PSD kernel is clamped at zero against rounding.
    """
    if state.n != kernel.n:
        raise InvalidParameterError(
            f"state dimension {state.n} does not match kernel {kernel.n}")
    beta = state.amplitudes
    val = float(np.real(np.vdot(beta, kernel.gamma_matrix @ beta)))
    return max(val, 0.0)


def _lam2_over_area(ensemble: AtomEnsemble) -> float:
    return ensemble.lambda0 ** 2 / ensemble.area_A


def rate_plus_closed_form(ensemble: AtomEnsemble) -> float:
    """Large-sample symmetric-state rate:
    (gamma/2) * [1 + (3/8pi) (lambda^2/A) (N - 1)]."""
    x = _lam2_over_area(ensemble)
    return 0.5 * ensemble.gamma * (
        1.0 + 3.0 / (8.0 * math.pi) * x * (ensemble.n - 1))


def rate_minus_closed_form(ensemble: AtomEnsemble) -> float:
    """Large-sample antisymmetric-state rate:
    (gamma/2) * [1 - (3/8pi) lambda^2/A]; the N-dependent term cancels
    identically, so the value is independent of N.

    Negative values (lambda^2/A > 8pi/3, outside the formula's validity)
    are clamped to zero; see closed_form_clamped."""
    x = _lam2_over_area(ensemble)
    raw = 0.5 * ensemble.gamma * (1.0 - 3.0 / (8.0 * math.pi) * x)
    return max(raw, 0.0)


def rate_three_bin_closed_form(ensemble: AtomEnsemble) -> float:
    """Three-bin subradiant closed form; its surviving terms are those of
    the antisymmetric form, so the two coincide for any N."""
    return rate_minus_closed_form(ensemble)


def closed_form_clamped(ensemble: AtomEnsemble) -> bool:
    """True when the subradiant closed form was clamped at zero."""
    return _lam2_over_area(ensemble) > CLAMP_THRESHOLD


@dataclass(frozen=True)
class DecayTrajectory:
    """Sampled amplitude evolution under the kernel (Markov limit)."""

    times: np.ndarray        # (T,)
    amplitudes: np.ndarray   # (T, N), raw decaying amplitudes
    survival: np.ndarray     # (T,) total excited-state probability

    def state_at(self, i: int) -> ExcitationState:
        """Normalized snapshot at sample i."""
        return ExcitationState.normalized(self.amplitudes[i])


def evolve_amplitudes(state: ExcitationState, kernel: DecayKernel,
                      t_grid) -> DecayTrajectory:
    """Integrate beta' = -(1/2) Gamma beta over ``t_grid``.

    Classic fixed-step RK4 with substep <= 0.01 / (N gamma), small enough
    that the stiffest kernel eigenvalue (at most N gamma) is resolved.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size < 1:
        raise InvalidParameterError("t_grid must be a 1-D array")
    if t_grid[0] != 0.0:
        raise InvalidParameterError("t_grid must start at 0")
    if t_grid.size > 1 and not np.all(np.diff(t_grid) > 0):
        raise InvalidParameterError("t_grid must be strictly increasing")
    if state.n != kernel.n:
        raise InvalidParameterError("state dimension does not match kernel")

    h_max = 0.01 / (kernel.n * kernel.ensemble_ref.gamma)
    half_g = 0.5 * kernel.gamma_matrix

    def rhs(beta):
        return -(half_g @ beta)

    beta = state.amplitudes.astype(complex)
    out = np.empty((t_grid.size, state.n), dtype=complex)
    out[0] = beta
    for i in range(1, t_grid.size):
        span = t_grid[i] - t_grid[i - 1]
        steps = max(1, int(math.ceil(span / h_max)))
        h = span / steps
        for _ in range(steps):
            k1 = rhs(beta)
            k2 = rhs(beta + 0.5 * h * k1)
            k3 = rhs(beta + 0.5 * h * k2)
            k4 = rhs(beta + h * k3)
            beta = beta + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        out[i] = beta
    survival = np.sum(np.abs(out) ** 2, axis=1)
    return DecayTrajectory(times=t_grid, amplitudes=out, survival=survival)
