"""Truncated Fock space: basis layout, permanent lifting, composition."""

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from nla_weaksim import fock
from nla_weaksim.elements import beamsplitter
from nla_weaksim.fock import (
    BasisSizeError,
    DensityOperator,
    ModeOverlapError,
    ModeTransform,
    StateVector,
    apply,
    basis_size,
    build_basis,
    compose_transforms,
    lift_mode_transform,
    occupancy_distribution,
    occupancy_probability,
    partial_trace,
    permanent,
    project,
    tensor,
)


def test_basis_sizes():
    assert basis_size(4, 3) == 35
    assert basis_size(5, 3) == 56
    assert basis_size(1, 0) == 1
    assert basis_size(2, 1) == 3
    b = build_basis(4, 3)
    assert b.size == 35
    assert len(b.occupations) == 35


def test_basis_order_and_lookup():
    b = build_basis(2, 2)
    assert b.occupations == ((0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (2, 0))
    for i, occ in enumerate(b.occupations):
        assert b.index_of(occ) == i
    with pytest.raises(KeyError):
        b.index_of((3, 0))


def test_basis_respects_size_limit(monkeypatch):
    monkeypatch.setenv(fock.BASIS_LIMIT_ENV, "10")
    with pytest.raises(BasisSizeError):
        build_basis(4, 3)
    monkeypatch.setenv(fock.BASIS_LIMIT_ENV, "100")
    assert build_basis(4, 3).size == 35
    monkeypatch.delenv(fock.BASIS_LIMIT_ENV)
    with pytest.raises(BasisSizeError):
        build_basis(40, 12)


def test_custom_mode_labels():
    b = build_basis(2, 1, modes=(3, 7))
    assert b.modes == (3, 7)
    assert b.position(7) == 1
    # build_basis normalizes the order, the raw constructor does not
    assert build_basis(2, 1, modes=(7, 3)).modes == (3, 7)
    with pytest.raises(ValueError):
        fock.FockBasis((7, 3), 1)


def _random_matrix(rng, n):
    return rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))


def test_permanent_small_cases(rng):
    assert permanent(np.zeros((0, 0))) == 1.0
    assert permanent(np.array([[3.5 + 1j]])) == 3.5 + 1j
    a = np.array([[1, 2], [3, 4]], dtype=complex)
    assert permanent(a) == pytest.approx(1 * 4 + 2 * 3)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_permanent_matches_permutation_sum(rng, n):
    a = _random_matrix(rng, n)
    brute = sum(
        np.prod([a[i, p[i]] for i in range(n)])
        for p in itertools.permutations(range(n))
    )
    assert permanent(a) == pytest.approx(brute, rel=1e-12)


def test_lift_matches_operator_expansion(rng):
    for m in (1, 2, 3):
        for cap in (1, 2, 3):
            u = oracles.haar_unitary(m, rng)
            basis = build_basis(m, cap)
            lifted = lift_mode_transform(
                ModeTransform(u, tuple(range(m))), basis
            )
            for j, occ in enumerate(basis.occupations):
                expect = oracles.expand_transform(u, occ)
                for i, occ_out in enumerate(basis.occupations):
                    assert lifted[i, j] == pytest.approx(
                        expect.get(occ_out, 0.0), abs=1e-12
                    )


def test_lift_is_homomorphism(rng):
    u = oracles.haar_unitary(3, rng)
    v = oracles.haar_unitary(3, rng)
    basis = build_basis(3, 3)
    modes = (0, 1, 2)
    lu = lift_mode_transform(ModeTransform(u, modes), basis)
    lv = lift_mode_transform(ModeTransform(v, modes), basis)
    lvu = lift_mode_transform(ModeTransform(v @ u, modes), basis)
    assert np.max(np.abs(lv @ lu - lvu)) < 1e-10


def test_lift_preserves_photon_number_blocks(rng):
    # even a lossy map never moves amplitude between photon-number sectors
    m = 0.6 * oracles.haar_unitary(3, rng)
    basis = build_basis(3, 2)
    lifted = lift_mode_transform(ModeTransform(m, (0, 1, 2), kind="subunitary"),
                                 basis)
    totals = basis.totals()
    for i in range(basis.size):
        for j in range(basis.size):
            if totals[i] != totals[j]:
                assert lifted[i, j] == 0.0


def test_coincidence_amplitude_one_third_splitter():
    bs = beamsplitter(1.0 / 3.0, (0, 1))
    basis = build_basis(2, 2)
    lifted = lift_mode_transform(bs, basis)
    i11 = basis.index_of((1, 1))
    assert lifted[i11, i11] == pytest.approx(-1.0 / 3.0, abs=1e-15)


def test_balanced_splitter_cancels_coincidence():
    bs = beamsplitter(0.5, (0, 1))
    basis = build_basis(2, 2)
    lifted = lift_mode_transform(bs, basis)
    i11 = basis.index_of((1, 1))
    assert abs(lifted[i11, i11]) < 1e-15


def test_mode_transform_validation():
    with pytest.raises(ValueError):
        ModeTransform(np.array([[1.0, 1.0], [0.0, 1.0]]), (0, 1))
    # contractive maps pass as subunitary, expansive ones do not
    ModeTransform(0.5 * np.eye(2), (0, 1), kind="subunitary")
    with pytest.raises(ValueError):
        ModeTransform(1.5 * np.eye(2), (0, 1), kind="subunitary")


def test_compose_transforms_order(rng):
    a = ModeTransform(oracles.haar_unitary(2, rng), (0, 1))
    b = ModeTransform(oracles.haar_unitary(2, rng), (1, 2))
    combined = compose_transforms([a, b])
    full_a = a.embed((0, 1, 2))
    full_b = b.embed((0, 1, 2))
    assert np.allclose(combined.matrix, full_b @ full_a)


def _coherent_vector(alpha, cap, mode):
    basis = build_basis(1, cap, modes=(mode,))
    amps = np.array(oracles.coherent_amps(alpha, cap))
    return StateVector(basis, amps)


def test_tensor_product_pure_states():
    a = _coherent_vector(0.3, 3, 0)
    b = _coherent_vector(0.2, 3, 1)
    joint, dropped = tensor(a, b)
    assert joint.basis.photon_cap == 6
    assert dropped == 0.0
    assert joint.amplitude((1, 2)) == pytest.approx(
        a.amplitude((1,)) * b.amplitude((2,)), rel=1e-12
    )


def test_tensor_truncation_reports_dropped_weight():
    a = _coherent_vector(0.3, 3, 0)
    b = _coherent_vector(0.2, 3, 1)
    full, _ = tensor(a, b)
    cut, dropped = tensor(a, b, photon_cap=3)
    lost = sum(
        abs(full.amplitude(occ)) ** 2
        for occ in full.basis.occupations
        if sum(occ) > 3
    )
    assert dropped == pytest.approx(lost, rel=1e-12)
    assert dropped < 1e-4


def test_tensor_rejects_shared_modes():
    a = _coherent_vector(0.3, 2, 0)
    b = _coherent_vector(0.2, 2, 0)
    with pytest.raises(ModeOverlapError):
        tensor(a, b)


def test_project_onto_single_mode_bra():
    # (|01> + |10>)/sqrt2 projected on <1| in mode 0 leaves |0> on mode 1
    basis = build_basis(2, 1)
    amps = np.zeros(3, dtype=complex)
    amps[basis.index_of((0, 1))] = 1 / math.sqrt(2)
    amps[basis.index_of((1, 0))] = 1 / math.sqrt(2)
    state = StateVector(basis, amps)
    proj_basis = build_basis(1, 1, modes=(0,))
    proj = StateVector(proj_basis, np.array([0.0, 1.0], dtype=complex))
    res = project(state, proj)
    assert res.probability == pytest.approx(0.5, abs=1e-15)
    assert res.state.basis.modes == (1,)
    assert abs(res.state.amplitude((0,))) == pytest.approx(1.0, abs=1e-12)


def test_project_zero_probability_flags_none():
    basis = build_basis(2, 1)
    amps = np.zeros(3, dtype=complex)
    amps[basis.index_of((0, 1))] = 1.0
    state = StateVector(basis, amps)
    proj_basis = build_basis(1, 1, modes=(0,))
    proj = StateVector(proj_basis, np.array([0.0, 1.0], dtype=complex))
    res = project(state, proj)
    assert res.state is None
    assert res.probability <= fock.ZERO_PROBABILITY


def test_partial_trace_of_product_state():
    a = _coherent_vector(0.3, 2, 0)
    b = _coherent_vector(0.2, 2, 1)
    joint, _ = tensor(a, b)
    reduced = partial_trace(joint, (1,))
    # joint cap is the sum, so embed the factor in the larger ladder
    padded = np.zeros(reduced.basis.size, dtype=complex)
    padded[: a.basis.size] = a.amplitudes
    expect = np.outer(padded, padded.conj()) * (b.norm() ** 2)
    assert np.max(np.abs(reduced.matrix - expect)) < 1e-12
    everything = partial_trace(joint, (0, 1))
    assert everything.matrix.shape == (1, 1)
    assert everything.trace() == pytest.approx(joint.norm() ** 2, rel=1e-12)


def test_occupancy_probability_and_distribution():
    a = _coherent_vector(0.3, 3, 0)
    dist = occupancy_distribution(a, 0)
    assert dist.sum() == pytest.approx(a.norm() ** 2, rel=1e-12)
    assert occupancy_probability(a, 0, 1) == pytest.approx(
        abs(a.amplitude((1,))) ** 2, rel=1e-12
    )


def test_density_operator_path():
    a = _coherent_vector(0.2, 2, 0)
    b = _coherent_vector(0.1, 2, 1)
    joint, _ = tensor(a, b, photon_cap=2)
    rho = joint.to_density()
    assert isinstance(rho, DensityOperator)
    lifted = lift_mode_transform(beamsplitter(0.5, (0, 1)), rho.basis)
    moved = apply(lifted, rho)
    assert moved.trace() == pytest.approx(rho.trace(), rel=1e-12)
    rho.validate()


def test_state_json_round_trip():
    a = _coherent_vector(0.3 + 0.1j, 2, 5)
    doc = fock.state_to_jsonable(a)
    back = fock.state_from_jsonable(doc)
    assert isinstance(back, StateVector)
    assert back.basis.modes == (5,)
    assert np.allclose(back.amplitudes, a.amplitudes)
    rho = a.to_density()
    back_rho = fock.state_from_jsonable(fock.state_to_jsonable(rho))
    assert np.allclose(back_rho.matrix, rho.matrix)


@st.composite
def _unitary_and_cap(draw):
    n = draw(st.integers(min_value=2, max_value=3))
    cap = draw(st.integers(min_value=1, max_value=3))
    seed = draw(st.integers(min_value=0, max_value=2**31 - 1))
    u = oracles.haar_unitary(n, np.random.default_rng(seed))
    return u, cap, seed


@settings(max_examples=40, deadline=None)
@given(_unitary_and_cap())
def test_lifted_unitary_preserves_norm(uc):
    u, cap, seed = uc
    n = u.shape[0]
    basis = build_basis(n, cap)
    lifted = lift_mode_transform(ModeTransform(u, tuple(range(n))), basis)
    rng = np.random.default_rng(seed + 1)
    amps = rng.normal(size=basis.size) + 1j * rng.normal(size=basis.size)
    state = StateVector(basis, amps)
    moved = apply(lifted, state)
    assert moved.norm() == pytest.approx(state.norm(), rel=1e-10)


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=2**31 - 1))
def test_projection_probabilities_sum_to_norm(seed):
    rng = np.random.default_rng(seed)
    basis = build_basis(2, 2)
    amps = rng.normal(size=basis.size) + 1j * rng.normal(size=basis.size)
    state = StateVector(basis, amps)
    total = 0.0
    mode0 = build_basis(1, 2, modes=(0,))
    for n in range(3):
        bra = np.zeros(3, dtype=complex)
        bra[mode0.index_of((n,))] = 1.0
        total += project(state, StateVector(mode0, bra)).probability
    assert total == pytest.approx(state.norm() ** 2, rel=1e-10)
