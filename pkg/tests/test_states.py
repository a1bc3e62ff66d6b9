import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dickesim.ensemble import halves, line, point_cluster, slab, thirds
from dickesim.errors import InvalidParameterError
from dickesim.states import (ExcitationState, apply_bin_phase, basis_state,
                             minus_state, plus_state, structure_factor,
                             three_bin_state)


def test_plus_state_dicke_n2(dicke2):
    st_ = plus_state(dicke2)
    assert np.allclose(st_.amplitudes, np.array([1, 1]) / math.sqrt(2))


def test_plus_state_timed_phases(line3):
    # spacing lambda/2 along k0: phases alternate by pi
    st_ = plus_state(line3)
    expect = np.array([1, -1, 1]) / math.sqrt(3)
    assert np.allclose(st_.amplitudes, expect, atol=1e-12)


def test_plus_state_normalized_on_slab():
    ens = slab(50, area=9.0, depth=3.0, seed=4)
    assert np.sum(np.abs(plus_state(ens).amplitudes) ** 2) == pytest.approx(1.0)


def test_minus_state_dicke_n4(dicke4):
    st_ = minus_state(dicke4)
    assert np.allclose(st_.amplitudes, np.array([1, 1, -1, -1]) / 2.0)


def test_plus_minus_orthogonal(dicke4):
    assert plus_state(dicke4).overlap(minus_state(dicke4)) == pytest.approx(0.0)


def test_minus_needs_halves(dicke4):
    with pytest.raises(InvalidParameterError):
        minus_state(dicke4, thirds(point_cluster(6)))


def test_three_bin_small():
    ens = point_cluster(3)
    st_ = three_bin_state(ens)
    assert np.allclose(st_.amplitudes, np.array([1, -2, 1]) / math.sqrt(6))


def test_three_bin_n6_expansion():
    # frozen from expanding the three-bin construction by hand at N=6
    ens = point_cluster(6)
    st_ = three_bin_state(ens)
    expect = np.array([1, 1, -2, -2, 1, 1]) / math.sqrt(12)
    assert np.allclose(st_.amplitudes, expect, atol=1e-12)


def test_three_bin_arity_check():
    with pytest.raises(InvalidParameterError):
        three_bin_state(point_cluster(6), halves(point_cluster(6)))


def test_structure_factor_values(dicke4):
    k0 = dicke4.k0_vec
    s_plus = structure_factor(plus_state(dicke4), dicke4, k0)
    assert abs(s_plus) ** 2 == pytest.approx(4.0, rel=1e-12)
    assert structure_factor(minus_state(dicke4), dicke4, k0) == pytest.approx(0.0)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_structure_factor_nulls_any_geometry(seed):
    ens = slab(12, area=4.0, depth=2.0, seed=seed)
    k0 = ens.k0_vec
    assert abs(structure_factor(minus_state(ens), ens, k0)) < 1e-12
    assert abs(structure_factor(three_bin_state(ens), ens, k0)) < 1e-12
    s_plus = structure_factor(plus_state(ens), ens, k0)
    assert abs(s_plus) ** 2 == pytest.approx(ens.n, rel=1e-12)


def test_plus_minus_orthogonal_any_geometry():
    ens = slab(8, area=2.0, depth=1.0, seed=9)
    assert abs(plus_state(ens).overlap(minus_state(ens))) < 1e-12


def test_apply_bin_phase_switches_minus_to_plus():
    ens = line(4, 0.3)
    switched = apply_bin_phase(minus_state(ens), range(2, 4), math.pi)
    assert np.allclose(switched.amplitudes, plus_state(ens).amplitudes,
                       atol=1e-12)


def test_apply_bin_phase_identity_and_involution(dicke4):
    st_ = minus_state(dicke4)
    assert np.allclose(apply_bin_phase(st_, [0, 1], 0.0).amplitudes,
                       st_.amplitudes)
    twice = apply_bin_phase(apply_bin_phase(st_, [2, 3], math.pi),
                            [2, 3], math.pi)
    assert np.allclose(twice.amplitudes, st_.amplitudes, atol=1e-12)


def test_apply_bin_phase_bad_indices(dicke4):
    st_ = plus_state(dicke4)
    with pytest.raises(InvalidParameterError):
        apply_bin_phase(st_, [4], math.pi)
    with pytest.raises(InvalidParameterError):
        apply_bin_phase(st_, [1, 1], math.pi)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000),
       phase=st.floats(-10, 10, allow_nan=False))
def test_apply_bin_phase_unitary(seed, phase):
    rng = np.random.default_rng(seed)
    n = 6
    a = rng.normal(size=n) + 1j * rng.normal(size=n)
    b = rng.normal(size=n) + 1j * rng.normal(size=n)
    sa = ExcitationState.normalized(a)
    sb = ExcitationState.normalized(b)
    idx = rng.choice(n, size=3, replace=False)
    ta = apply_bin_phase(sa, idx, phase)
    tb = apply_bin_phase(sb, idx, phase)
    assert np.sum(np.abs(ta.amplitudes) ** 2) == pytest.approx(1.0, abs=1e-12)
    assert ta.overlap(tb) == pytest.approx(sa.overlap(sb), abs=1e-12)


def test_norm_enforced():
    with pytest.raises(InvalidParameterError):
        ExcitationState(np.array([1.0, 1.0]))


def test_basis_state_bounds():
    st_ = basis_state(3, 1)
    assert np.allclose(st_.amplitudes, [0, 1, 0])
    with pytest.raises(InvalidParameterError):
        basis_state(3, 3)


def test_json_round_trip(line3):
    st_ = plus_state(line3)
    doc = st_.to_json_dict()
    assert doc["label"] == "plus"
    back = ExcitationState.from_json_dict(doc)
    assert np.allclose(back.amplitudes, st_.amplitudes)
