"""Mode-resolved atom + photon amplitude integration.

Instead of assuming the Markov limit, this module discretizes the photon
continuum into a finite grid of modes around the resonant shell and
integrates the coupled first-order amplitude equations

    beta_j'   = -i sum_m A[j, m] c_m
    c_m'      = +i Delta_m c_m - i sum_j conj(A[j, m]) beta_j

where c_m is the mode amplitude in the frame rotating at its own
detuning Delta_m = c(|k_m| - k0) and A[j, m] = G_m exp(i k_m . r_j).
The coupling is taken flat across the band and evaluated at resonance;
its overall scale is fixed so a single atom decays in probability at
gamma.  A detuning grid symmetric about zero leaves no collective
frequency shift by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from .ensemble import AtomEnsemble
from .errors import (ConfigurationError, FitFailureError,
                     IntegrationError, InvalidParameterError)
from .states import ExcitationState

# Relative accuracy demanded of the grid's single-atom rate estimate.
CALIBRATION_TOL = 0.02
# Norm drift that aborts an integration.
NORM_DRIFT_LIMIT = 1e-4


@dataclass(frozen=True)
class ModeGrid:
    """Discretized photon modes: wave vectors, quadrature weights,
    couplings and detunings, plus the calibration bookkeeping."""

    k_vectors: np.ndarray     # (M, 3)
    weights: np.ndarray       # (M,) quadrature measure, detuning units
    g_k: np.ndarray           # (M,) bare coupling amplitude (flat)
    detunings: np.ndarray     # (M,)
    cutoff: float             # max |Delta|
    light_speed: float
    gamma_target: float
    calibration_gamma: float

    @property
    def n_modes(self) -> int:
        return self.detunings.size

    def effective_couplings(self) -> np.ndarray:
        """Per-mode amplitude coupling sqrt(weight) * g_k."""
        return np.sqrt(self.weights) * self.g_k

    def calibration_report(self) -> dict:
        return {
            "n_modes": int(self.n_modes),
            "cutoff": float(self.cutoff),
            "light_speed": float(self.light_speed),
            "gamma_target": float(self.gamma_target),
            "gamma_calibration": float(self.calibration_gamma),
            "relative_error": float(
                abs(self.calibration_gamma - self.gamma_target)
                / self.gamma_target),
        }


def _hann_window(delta, cutoff):
    # Smooth unit-mass spectral window over the band: integrates the flat
    # coupling density to exactly 2 pi x density in the continuum limit.
    return (2.0 * math.pi / cutoff) * 0.5 * (1.0 + np.cos(math.pi * delta / cutoff))


def calibrate(weights, g_k, detunings, cutoff) -> float:
    """Single-atom rate implied by the grid: the coupling density at zero
    detuning (estimated through a smooth band-wide window) times 2 pi."""
    return float(np.sum(weights * g_k ** 2 * _hann_window(detunings, cutoff)))


def make_mode_grid(ensemble: AtomEnsemble, n_angles: int = 12,
                   n_radial: int = 128, cutoff_multiple: float = 60.0,
                   light_speed: float = 1e6) -> ModeGrid:
    """Product quadrature over the resonant band.

    Gauss-Legendre nodes in cos(theta) (n_angles) x uniform azimuth
    (2 n_angles) x Gauss-Legendre detunings on [-cutoff, +cutoff] with
    cutoff = cutoff_multiple * gamma.  ``light_speed`` (units of
    lambda0 * gamma) converts detunings to radial wavenumber offsets;
    its default makes retardation across the sample negligible.
    """
    if n_angles < 6:
        raise ConfigurationError(f"n_angles must be >= 6, got {n_angles}")
    if n_radial < 64:
        raise ConfigurationError(f"n_radial must be >= 64, got {n_radial}")
    if cutoff_multiple < 20:
        raise ConfigurationError(
            f"cutoff_multiple must be >= 20, got {cutoff_multiple}")
    if light_speed <= 0:
        raise ConfigurationError("light_speed must be > 0")

    gamma = ensemble.gamma
    k0 = ensemble.k0
    cutoff = cutoff_multiple * gamma

    # Radial (detuning) quadrature, symmetric about zero.
    x, wx = np.polynomial.legendre.leggauss(n_radial)
    deltas = cutoff * x
    wdelta = cutoff * wx

    # Angular product quadrature, total weight 4 pi.
    mu, wmu = np.polynomial.legendre.leggauss(n_angles)
    n_phi = 2 * n_angles
    phi = 2.0 * math.pi * (np.arange(n_phi) + 0.5) / n_phi
    wphi = 2.0 * math.pi / n_phi
    sin_th = np.sqrt(1.0 - mu ** 2)
    dirs = np.stack([np.outer(sin_th, np.cos(phi)),
                     np.outer(sin_th, np.sin(phi)),
                     np.outer(mu, np.ones(n_phi))], axis=-1).reshape(-1, 3)
    womega = np.outer(wmu, np.full(n_phi, wphi)).ravel()

    # All (direction, detuning) combinations.
    n_dir = dirs.shape[0]
    k_mag = k0 + deltas / light_speed
    k_vectors = (dirs[:, None, :] * k_mag[None, :, None]).reshape(-1, 3)
    detunings = np.tile(deltas, n_dir)
    weights = (womega[:, None] / (4.0 * math.pi) * wdelta[None, :]).ravel()
    g0 = math.sqrt(gamma / (2.0 * math.pi))
    g_k = np.full(detunings.size, g0)

    cal = calibrate(weights, g_k, detunings, cutoff)
    if abs(cal - gamma) > CALIBRATION_TOL * gamma:
        raise ConfigurationError(
            f"mode grid fails calibration: gamma_eff = {cal}, "
            f"target {gamma}", measured=cal)

    return ModeGrid(k_vectors=k_vectors, weights=weights, g_k=g_k,
                    detunings=detunings, cutoff=cutoff,
                    light_speed=light_speed, gamma_target=gamma,
                    calibration_gamma=cal)


@dataclass(frozen=True)
class WWState:
    """Snapshot of the coupled atom/field amplitudes.

    Mode amplitudes are stored in the frame rotating at each mode's own
    detuning; their magnitudes equal the lab-frame ones.  Total norm must
    be 1 within the integration tolerance.
    """

    beta: np.ndarray      # (N,)
    gamma_k: np.ndarray   # (M,)
    time: float

    def __post_init__(self):
        norm2 = float(np.sum(np.abs(self.beta) ** 2)
                      + np.sum(np.abs(self.gamma_k) ** 2))
        if abs(norm2 - 1.0) > NORM_DRIFT_LIMIT:
            raise InvalidParameterError(
                f"total norm {norm2} violates unitarity tolerance")

    @property
    def atom_norm2(self) -> float:
        return float(np.sum(np.abs(self.beta) ** 2))

    @property
    def field_norm2(self) -> float:
        return float(np.sum(np.abs(self.gamma_k) ** 2))


@dataclass(frozen=True)
class WWTrajectory:
    """Sampled mode-resolved evolution."""

    times: np.ndarray        # (T,)
    amplitudes: np.ndarray   # (T, N) atomic amplitudes
    atom_norm2: np.ndarray   # (T,)
    field_norm2: np.ndarray  # (T,)
    final_state: WWState

    @property
    def total_norm2(self) -> np.ndarray:
        return self.atom_norm2 + self.field_norm2


def default_time_step(ensemble: AtomEnsemble, grid: ModeGrid) -> float:
    """Resolve both the collective decay (0.002 / N gamma) and the fastest
    detuning in the band."""
    return min(0.002 / (ensemble.n * ensemble.gamma), 0.05 / grid.cutoff)


def integrate_ww(ensemble: AtomEnsemble, grid: ModeGrid,
                 initial: ExcitationState, t_end: float,
                 dt: float = None, n_samples: int = 600) -> WWTrajectory:
    """RK4 integration of the coupled amplitude equations from a purely
    atomic initial state (field in vacuum)."""
    if initial.n != ensemble.n:
        raise InvalidParameterError("initial state does not match ensemble")
    if not (t_end > 0):
        raise InvalidParameterError("t_end must be > 0")
    dt_cap = 0.002 / (ensemble.n * ensemble.gamma)
    if dt is None:
        dt = default_time_step(ensemble, grid)
    elif not (0 < dt <= dt_cap * (1 + 1e-12)):
        raise InvalidParameterError(
            f"dt must lie in (0, {dt_cap}] for N = {ensemble.n}")

    n = ensemble.n
    coupling = grid.effective_couplings()
    phases = np.exp(1j * (ensemble.positions @ grid.k_vectors.T))
    a_mat = phases * coupling[None, :]          # (N, M)
    a_her = a_mat.conj().T                      # (M, N)
    delta = grid.detunings

    n_steps = max(1, int(math.ceil(t_end / dt)))
    h = t_end / n_steps
    stride = max(1, n_steps // max(1, n_samples))

    def rhs(beta, modes):
        dbeta = -1j * (a_mat @ modes)
        dmodes = 1j * delta * modes - 1j * (a_her @ beta)
        return dbeta, dmodes

    beta = initial.amplitudes.astype(complex)
    modes = np.zeros(grid.n_modes, dtype=complex)

    times = [0.0]
    amps = [beta.copy()]
    p_atom = [float(np.sum(np.abs(beta) ** 2))]
    p_field = [0.0]

    for step in range(1, n_steps + 1):
        b1, m1 = rhs(beta, modes)
        b2, m2 = rhs(beta + 0.5 * h * b1, modes + 0.5 * h * m1)
        b3, m3 = rhs(beta + 0.5 * h * b2, modes + 0.5 * h * m2)
        b4, m4 = rhs(beta + h * b3, modes + h * m3)
        beta = beta + (h / 6.0) * (b1 + 2 * b2 + 2 * b3 + b4)
        modes = modes + (h / 6.0) * (m1 + 2 * m2 + 2 * m3 + m4)
        if step % stride == 0 or step == n_steps:
            pa = float(np.sum(np.abs(beta) ** 2))
            pf = float(np.sum(np.abs(modes) ** 2))
            if abs(pa + pf - 1.0) > NORM_DRIFT_LIMIT:
                raise IntegrationError(
                    f"norm drift {pa + pf - 1.0:.3e} at t = {step * h:.4g} "
                    "exceeds 1e-4; reduce dt")
            times.append(step * h)
            amps.append(beta.copy())
            p_atom.append(pa)
            p_field.append(pf)

    final = WWState(beta=beta, gamma_k=modes, time=n_steps * h)
    return WWTrajectory(times=np.array(times), amplitudes=np.array(amps),
                        atom_norm2=np.array(p_atom),
                        field_norm2=np.array(p_field), final_state=final)


@dataclass(frozen=True)
class RateFit:
    """Log-linear fit of a projected survival probability."""

    rate: float
    stderr: float
    flat: bool
    upper_bound: float       # meaningful when flat
    spans_decade: bool

    # Decay below which a trajectory counts as flat (rate 0 + upper bound).
    FLAT_DECAY = 0.02


def _quadratic_log_fit(t, y):
    # log p = a + b t + c t^2; returns (b, c, stderr of b).
    design = np.stack([np.ones_like(t), t, t * t], axis=1)
    coef, res, _, _ = np.linalg.lstsq(design, y, rcond=None)
    dof = t.size - 3
    stderr = 0.0
    if dof > 0 and res.size:
        sigma2 = float(res[0]) / dof
        cov = sigma2 * np.linalg.inv(design.T @ design)
        stderr = math.sqrt(max(cov[1, 1], 0.0))
    return float(coef[1]), float(coef[2]), stderr


def extract_rate(trajectory, subspace: ExcitationState,
                 skip_fraction: float = 0.05,
                 monotone_tol: float = 1e-3) -> RateFit:
    """Initial decay rate of |<subspace|beta(t)>|^2.

    Works on any trajectory exposing ``times`` and ``amplitudes``
    (kernel or mode-resolved).  The first ``skip_fraction`` of the time
    span is excluded (short-time transient), then log p is fit with a
    quadratic in t whose slope extrapolated to t = 0 gives the rate; the
    window is shrunk until the curvature term contributes little, so
    multi-exponential bending of non-eigenstates does not bias the
    result.  Projections that rise beyond ``monotone_tol`` (relative to
    the running maximum) abort with a fit failure; nearly constant ones
    return rate zero with an upper bound.
    """
    times = np.asarray(trajectory.times, dtype=float)
    amps = np.asarray(trajectory.amplitudes)
    if times.size < 8:
        raise FitFailureError("trajectory too short to fit")
    proj = np.abs(amps @ subspace.amplitudes.conj()) ** 2
    if proj[0] <= 0:
        raise FitFailureError("initial projection vanishes")

    running_max = np.maximum.accumulate(proj)
    if np.any(proj[1:] > running_max[:-1] * (1 + monotone_tol) + 1e-12):
        raise FitFailureError("projection is non-monotone beyond tolerance")

    span = times[-1] - times[0]
    total_decay = proj[-1] / proj[0]
    if total_decay > 1.0 - RateFit.FLAT_DECAY:
        bound = -math.log(max(total_decay, 1e-300)) / span if span > 0 else 0.0
        return RateFit(rate=0.0, stderr=0.0, flat=True,
                       upper_bound=max(bound, 0.0), spans_decade=False)

    t_min = times[0] + skip_fraction * span
    mask = (times >= t_min) & (proj > proj[0] * 1e-12)
    if mask.sum() < 8:
        raise FitFailureError("too few samples in the fit window")
    t = times[mask]
    y = np.log(proj[mask])

    # Start from the window where p has fallen to 30% of its post-skip
    # value, then shrink while the quadratic term still changes the log
    # slope materially across the window.  Never shrink below three times
    # the skipped interval: the fit must extrapolate back across it, and
    # a quadratic needs support a few times the extrapolation distance.
    below = np.nonzero(y <= y[0] + math.log(0.3))[0]
    hi = int(below[0]) + 1 if below.size else t.size
    hi = min(max(hi, 8), t.size)
    width_floor = 3.0 * (t[0] - times[0])
    while True:
        b, c, stderr = _quadratic_log_fit(t[:hi], y[:hi])
        width = t[hi - 1] - t[0]
        if hi <= 8 or abs(c) * width <= 0.15 * abs(b) or b == 0.0:
            break
        nxt = max(8, hi // 2)
        if t[nxt - 1] - t[0] < width_floor:
            break
        hi = nxt

    spans_decade = bool(proj[mask][0] / proj[mask][-1] >= 10.0)
    rate = -b
    return RateFit(rate=rate, stderr=stderr, flat=False,
                   upper_bound=rate + 3 * stderr, spans_decade=spans_decade)
