import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dickesim.ensemble import from_positions, line, point_cluster, slab
from dickesim.errors import InvalidParameterError
from dickesim.kernel import (DecayKernel, build_kernel, closed_form_clamped,
                             evolve_amplitudes, rate_minus_closed_form,
                             rate_of, rate_plus_closed_form,
                             rate_three_bin_closed_form)
from dickesim.states import (ExcitationState, basis_state, minus_state,
                             plus_state)

EIGHT_PI_OVER_3 = 8.0 * math.pi / 3.0


def solid_angle_average(k0, d_vec, n_theta=400, n_phi=400):
    """Independent oracle: (1/4pi) integral of exp(i k0 Omega.d) over the
    resonant shell, by direct product quadrature."""
    mu, wmu = np.polynomial.legendre.leggauss(n_theta)
    phi = 2 * math.pi * (np.arange(n_phi) + 0.5) / n_phi
    st_ = np.sqrt(1 - mu**2)
    kx = np.outer(st_, np.cos(phi))
    ky = np.outer(st_, np.sin(phi))
    kz = np.outer(mu, np.ones(n_phi))
    phase = np.exp(1j * k0 * (kx * d_vec[0] + ky * d_vec[1] + kz * d_vec[2]))
    integral = np.sum(wmu[:, None] * phase) * (2 * math.pi / n_phi)
    return integral / (4 * math.pi)


def test_kernel_dicke_pair():
    ens = from_positions([[0, 0, 0], [0, 0, 0]])
    k = build_kernel(ens)
    assert k.gamma_matrix[0, 1] == pytest.approx(1.0)


def test_kernel_half_wavelength_pair():
    ens = from_positions([[0, 0, 0], [0, 0, 0.5]])
    k = build_kernel(ens)
    oracle = solid_angle_average(ens.k0, np.array([0, 0, 0.5]))
    assert abs(oracle.imag) < 1e-10
    assert k.gamma_matrix[0, 1] == pytest.approx(oracle.real, abs=1e-8)
    assert k.gamma_matrix[0, 1] == pytest.approx(0.0, abs=1e-12)


def test_kernel_matches_solid_angle_oracle(rng):
    # 20 random pair separations in (0, 10 lambda]
    for _ in range(20):
        d = rng.uniform(0.02, 10.0)
        direction = rng.normal(size=3)
        direction /= np.linalg.norm(direction)
        vec = d * direction
        ens = from_positions([[0, 0, 0], vec])
        k = build_kernel(ens)
        oracle = solid_angle_average(ens.k0, vec)
        assert k.gamma_matrix[0, 1] == pytest.approx(oracle.real, abs=1e-8)


def test_kernel_psd_random_slab(slab30):
    k = build_kernel(slab30)
    assert np.linalg.eigvalsh(k.gamma_matrix).min() >= -1e-10


def test_kernel_type_invariants_enforced(dicke4):
    good = build_kernel(dicke4).gamma_matrix
    bad = np.array(good)
    bad[0, 1] = 2.0
    with pytest.raises(InvalidParameterError):
        DecayKernel(gamma_matrix=bad, ensemble_ref=dicke4)


def test_rates_dicke(dicke4):
    k = build_kernel(dicke4)
    assert rate_of(plus_state(dicke4), k) == pytest.approx(4.0, rel=1e-12)
    assert rate_of(minus_state(dicke4), k) == pytest.approx(0.0, abs=1e-12)
    assert rate_of(basis_state(4, 0), k) == pytest.approx(1.0, rel=1e-12)


def test_rate_dimension_mismatch(dicke4):
    k = build_kernel(dicke4)
    with pytest.raises(InvalidParameterError):
        rate_of(basis_state(3, 0), k)


def test_rate_global_phase_invariance(slab30):
    k = build_kernel(slab30)
    st_ = plus_state(slab30)
    rotated = ExcitationState(st_.amplitudes * np.exp(1j * 0.731))
    assert rate_of(rotated, k) == pytest.approx(rate_of(st_, k), rel=1e-12)


def test_rate_matches_eigen_decomposition(slab30):
    k = build_kernel(slab30)
    st_ = minus_state(slab30)
    evals, evecs = k.eigen_modes()
    weights = np.abs(evecs.conj().T @ st_.amplitudes) ** 2
    assert rate_of(st_, k) == pytest.approx(float(weights @ evals), abs=1e-10)


def test_switching_property_every_geometry():
    for ens in (point_cluster(4), line(4, 0.3),
                slab(8, area=2.0, depth=1.0, seed=3)):
        k = build_kernel(ens)
        switched = ExcitationState(
            minus_state(ens).amplitudes
            * np.where(np.arange(ens.n) < ens.n // 2, 1.0, -1.0))
        assert rate_of(switched, k) == pytest.approx(
            rate_of(plus_state(ens), k), rel=1e-12)


def test_closed_form_plus():
    ens1 = from_positions([[0, 0, 0]], area_A=5.0)
    assert rate_plus_closed_form(ens1) == pytest.approx(0.5)
    ens2 = from_positions([[0, 0, 0], [0, 0, 0.1]],
                          area_A=1.0 / EIGHT_PI_OVER_3)
    # lambda^2/A = 8 pi/3 with N = 2: (gamma/2) * 2
    assert rate_plus_closed_form(ens2) == pytest.approx(1.0)


def test_closed_form_plus_affine_in_n():
    area = 30.0
    slope = None
    for n in (10, 20, 40):
        a = rate_plus_closed_form(point_cluster(n, **{"area_A": area}))
        b = rate_plus_closed_form(point_cluster(2 * n, **{"area_A": area}))
        inc = b - a
        expect = 0.5 * (3 / (8 * math.pi)) * (1.0 / area) * n
        assert inc == pytest.approx(expect, rel=1e-12)
        slope = inc if slope is None else slope


def test_closed_form_minus_n_independent():
    area = 12.0
    vals = [rate_minus_closed_form(point_cluster(n, **{"area_A": area}))
            for n in (2, 4, 8, 300)]
    assert all(v == vals[0] for v in vals)
    assert vals[0] == pytest.approx(0.5 * (1 - 3 / (8 * math.pi) / area))


def test_closed_form_minus_limits():
    huge_area = from_positions([[0, 0, 0], [0, 0, 0.1]], area_A=1e9)
    assert rate_minus_closed_form(huge_area) == pytest.approx(0.5, rel=1e-6)
    critical = from_positions([[0, 0, 0], [0, 0, 0.1]],
                              area_A=1.0 / EIGHT_PI_OVER_3)
    assert rate_minus_closed_form(critical) == pytest.approx(0.0, abs=1e-12)
    clamped = from_positions([[0, 0, 0], [0, 0, 0.1]],
                             area_A=0.5 / EIGHT_PI_OVER_3)
    assert rate_minus_closed_form(clamped) == 0.0
    assert closed_form_clamped(clamped)
    assert not closed_form_clamped(huge_area)


def test_closed_form_three_bin_equals_minus():
    for n in (3, 300):
        ens = point_cluster(n, **{"area_A": 9.0})
        assert (rate_three_bin_closed_form(ens)
                == rate_minus_closed_form(ens))


def test_evolve_plus_dicke_exponential(dicke4):
    k = build_kernel(dicke4)
    t = np.linspace(0.0, 1.5, 61)
    traj = evolve_amplitudes(plus_state(dicke4), k, t)
    assert np.max(np.abs(traj.survival / np.exp(-4.0 * t) - 1.0)) < 1e-6


def test_evolve_minus_dicke_flat(dicke4):
    k = build_kernel(dicke4)
    t = np.linspace(0.0, 2.0, 41)
    traj = evolve_amplitudes(minus_state(dicke4), k, t)
    assert np.max(np.abs(traj.survival - 1.0)) < 1e-12


def test_evolve_single_atom():
    ens = point_cluster(1)
    k = build_kernel(ens)
    t = np.linspace(0.0, 3.0, 31)
    traj = evolve_amplitudes(basis_state(1, 0), k, t)
    assert np.max(np.abs(traj.survival / np.exp(-t) - 1.0)) < 1e-6


def test_evolve_monotone_and_normalized_start(slab30):
    k = build_kernel(slab30)
    t = np.linspace(0.0, 2.0, 101)
    traj = evolve_amplitudes(plus_state(slab30), k, t)
    assert traj.survival[0] == pytest.approx(1.0, abs=1e-12)
    assert np.all(np.diff(traj.survival) <= 1e-9)


def test_evolve_eigenvector_rate(slab30):
    from dickesim.wigner_weisskopf import extract_rate
    k = build_kernel(slab30)
    evals, evecs = k.eigen_modes()
    for m in (0, slab30.n // 2, slab30.n - 1):
        lam = evals[m]
        st_ = ExcitationState.normalized(evecs[:, m])
        t = np.linspace(0.0, min(2.0, 4.0 / max(lam, 0.5)), 201)
        traj = evolve_amplitudes(st_, k, t)
        fit = extract_rate(traj, st_)
        if lam < 0.02:
            assert fit.flat or abs(fit.rate) < 1e-3
        else:
            assert fit.rate == pytest.approx(lam, rel=1e-4)


def test_evolve_grid_validation(dicke4):
    k = build_kernel(dicke4)
    st_ = plus_state(dicke4)
    with pytest.raises(InvalidParameterError):
        evolve_amplitudes(st_, k, np.array([0.5, 1.0]))
    with pytest.raises(InvalidParameterError):
        evolve_amplitudes(st_, k, np.array([0.0, 1.0, 0.5]))


def test_directional_scaling_standard_slab():
    # dense sub-wavelength pancake: N-fold directional enhancement of the
    # symmetric state vs a near-single-atom antisymmetric rate
    for n in (32, 64):
        ens = slab(n, area=0.25, depth=0.05, seed=11)
        k = build_kernel(ens)
        g_plus = rate_of(plus_state(ens), k)
        g_minus = rate_of(minus_state(ens), k)
        assert 0.0 <= g_minus <= 2.0
        assert g_plus / g_minus > n / 4.0


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(4, 24))
def test_kernel_psd_property(seed, n):
    ens = slab(n, area=3.0, depth=1.5, seed=seed)
    k = build_kernel(ens)
    assert np.linalg.eigvalsh(k.gamma_matrix).min() >= -1e-10
