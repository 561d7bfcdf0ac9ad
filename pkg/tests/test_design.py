import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from dpbeam.array import ArrayGeometry, RegionPartition, build_dictionaries
from dpbeam.channel import PolarizationState
from dpbeam.design import (Codeword, HybridSettings, SeCandidateSet, canonical_phase, design_single_codebook,
                           effective_single, elementwise_phases, ideal_gain, ideal_pattern, lift_rx, lift_tx,
                           mip_single, pattern_single, pattern_vector, power_iteration,
                           rayleigh_quotient, se_select, se_single_candidate, squared_error,
                           DegenerateCandidate)

from conftest import unit

seeds = st.integers(0, 2 ** 32 - 1)


def rand_pol(rng):
    return PolarizationState(rng.uniform(0, 1), rng.uniform(-np.pi, np.pi), *rng.uniform(0, 2 * np.pi, 4))


def test_ideal_gain_value():
    g = ideal_gain(RegionPartition(6, 6), ArrayGeometry(8, 16))
    assert_allclose(g, 36 * np.sqrt(2) / 128)
    assert_allclose(g, 0.397748, atol=1e-6)


def test_ideal_pattern_layout():
    part, geom = RegionPartition(3, 2, 2, 3), ArrayGeometry(8, 8)
    ideal = ideal_pattern(part, geom, 2, 1)
    v = ideal.vector
    assert np.count_nonzero(v) == part.section_count
    assert_allclose(v.sum(), part.section_count * ideal.gain)
    want = np.kron(np.kron([0, 1, 0], np.ones(2)), np.kron([1, 0], np.ones(3))) * ideal.gain
    assert_allclose(v, want)


def test_ideal_pattern_single_region():
    part = RegionPartition(1, 1, 3, 3)
    ideal = ideal_pattern(part, ArrayGeometry(4, 4), 1, 1)
    assert_allclose(ideal.vector, ideal.gain)


def test_ideal_pattern_warns_on_small_array():
    with pytest.warns(UserWarning):
        ideal_pattern(RegionPartition(4, 4), ArrayGeometry(2, 2), 1, 1)


def test_codeword_norm_enforced():
    with pytest.raises(ValueError):
        Codeword(np.ones(4), "se", (1, 1))


@settings(max_examples=30, deadline=None)
@given(seed=seeds)
def test_lift_pattern_identity(seed, small_dic):
    rng = np.random.default_rng(seed)
    c, pol = unit(rng, 32), rand_pol(rng)
    assert_allclose(pattern_vector(lift_tx(c, pol), pol, small_dic), pattern_single(c, small_dic), atol=1e-12)
    assert_allclose(pattern_vector(lift_rx(c, pol), pol, small_dic, "rx"), pattern_single(c, small_dic),
                    atol=1e-12)


def test_pattern_vector_peaks_at_matched_section(small_dic):
    k = 37
    c = small_dic.d[:, k]
    g = pattern_vector(lift_tx(c, PolarizationState(0.3)), PolarizationState(0.3), small_dic)
    assert g[k] == pytest.approx(g.max())
    assert g.max() <= 1 + 1e-12


def test_pattern_vector_dimension_check(small_dic):
    with pytest.raises(ValueError):
        pattern_vector(np.ones(10) / np.sqrt(10), PolarizationState(0.3), small_dic)


def test_lift_tx_examples():
    rng = np.random.default_rng(0)
    c = unit(rng, 8)
    pol = PolarizationState(0.0, 0.0, 0.7, 1.1)
    assert_allclose(lift_tx(c, pol), np.concatenate([np.exp(-0.7j) * c, np.zeros(8)]), atol=1e-15)
    pol = PolarizationState(0.3, 0.0, 0.2, 0.9)
    assert_allclose(lift_tx(c, pol), np.concatenate([np.conj(pol.rho_vv) * c, np.conj(pol.rho_vh) * c]))


def test_lift_rx_examples():
    c = unit(np.random.default_rng(1), 8)
    assert_allclose(lift_rx(c, PolarizationState(0.0, 0, 1, 2, 3, 4)), np.concatenate([c, np.zeros(8)]))
    pol = PolarizationState(0.3)
    xi = 2 * np.sqrt(0.3) / 1.3
    assert_allclose(lift_rx(c, pol), np.concatenate([c, xi * c]) / np.sqrt(1 + xi ** 2))


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_lifts_are_unit_norm_and_gain_preserving(seed):
    rng = np.random.default_rng(seed)
    c, pol = unit(rng, 16), rand_pol(rng)
    assert abs(np.linalg.norm(lift_tx(c, pol)) - 1) < 1e-12
    assert abs(np.linalg.norm(lift_rx(c, pol)) - 1) < 1e-12
    d = unit(rng, 16)
    # Tx-side gain factor of the lifted codeword equals the single-panel gain
    assert_allclose(abs(np.vdot(d, effective_single(lift_tx(c, pol), pol))) ** 2, abs(np.vdot(d, c)) ** 2,
                    atol=1e-10)


def test_se_single_candidate_examples():
    dic = build_dictionaries(ArrayGeometry(4, 4), RegionPartition(2, 2, 1, 1))
    c = se_single_candidate(np.ones(1), np.ones(1), dic, 1, 1)
    want = np.kron(dic.d_h[:, 0], dic.d_v[:, 0])
    assert_allclose(c, want)

    dic = build_dictionaries(ArrayGeometry(4, 1), RegionPartition(2, 1, 2, 1))
    c = se_single_candidate(np.ones(2), np.ones(1), dic, 1, 1)
    s = dic.d_h[:, 0] + dic.d_h[:, 1]
    assert_allclose(c, s / np.linalg.norm(s))


def test_se_single_candidate_degenerate():
    dic = build_dictionaries(ArrayGeometry(1, 1), RegionPartition(1, 1, 2, 1))
    with pytest.raises(DegenerateCandidate):
        se_single_candidate(np.array([1, -1]), np.ones(1), dic)


def test_candidate_sets():
    part = RegionPartition(6, 6)
    cs = SeCandidateSet.build(part, 3)
    assert len(cs) == 9
    for q in cs.g_h + cs.g_v:
        assert_allclose(np.abs(q), 1)
        assert q.shape == (7,)
    assert len(elementwise_phases(2, 3)) == 9
    with pytest.raises(ValueError):
        SeCandidateSet(1, [np.array([2.0])], [np.ones(1)])


def test_se_select_argmin(small_dic):
    pol = PolarizationState(0.3)
    cs = SeCandidateSet.build(small_dic.part, 3)
    choice = se_select(cs, small_dic, pol)
    ideal = ideal_pattern(small_dic.part, small_dic.geom, 1, 1)
    errs = [squared_error(pattern_vector(lift_tx(se_single_candidate(a, b, small_dic), pol), pol, small_dic),
                          ideal) for a, b in cs.pairs()]
    assert choice.error == pytest.approx(min(errs))
    assert choice.index == int(np.argmin(errs))
    again = se_select(cs, small_dic, pol)
    assert np.array_equal(again.codeword.weights, choice.codeword.weights)


def test_se_select_singleton(small_dic):
    cs = SeCandidateSet(1, [np.ones(7)], [np.ones(7)])
    choice = se_select(cs, small_dic, PolarizationState(0.3))
    assert choice.index == 0
    assert_allclose(choice.codeword.single, se_single_candidate(np.ones(7), np.ones(7), small_dic))


def test_se_select_hybrid_candidates_are_hybrid(small_dic):
    choice = se_select(SeCandidateSet.build(small_dic.part), small_dic, PolarizationState(0.3),
                       hybridizer=HybridSettings(4, 4))
    choice.codeword.hybrid.check()


def test_power_iteration_against_eigh(rng):
    a = rng.standard_normal((12, 12)) + 1j * rng.standard_normal((12, 12))
    a = a @ a.conj().T
    lam, v, _ = power_iteration(a)
    w, vecs = np.linalg.eigh(a)
    assert lam == pytest.approx(w[-1], rel=1e-10)
    assert abs(abs(np.vdot(v, vecs[:, -1])) - 1) < 1e-6


def test_canonical_phase():
    v = canonical_phase(np.array([0.1j, -2j, 0.5]))
    assert v[1].imag == pytest.approx(0) and v[1].real > 0


def test_mip_beats_random_vectors(small_dic, rng):
    for p, q in [(1, 1), (2, 3), (4, 4)]:
        d = small_dic.d_pq(p, q)
        a = d @ d.conj().T
        c = mip_single(small_dic, p, q)
        assert abs(np.linalg.norm(c) - 1) < 1e-12
        best = rayleigh_quotient(a, c)
        assert all(best >= rayleigh_quotient(a, unit(rng, 32)) for _ in range(200))


def test_mip_degenerate_closed_form():
    dic = build_dictionaries(ArrayGeometry(4, 1), RegionPartition(1, 1, 6, 1))
    a = dic.d_pq(1, 1) @ dic.d_pq(1, 1).conj().T
    assert rayleigh_quotient(a, mip_single(dic)) == pytest.approx(6 / 4, abs=1e-9)


@settings(max_examples=20, deadline=None)
@given(seed=seeds)
def test_inner_product_objective_identity(seed, small_dic):
    rng = np.random.default_rng(seed)
    c, pol = unit(rng, 64), rand_pol(rng)
    ideal = ideal_pattern(small_dic.part, small_dic.geom, 2, 3)
    lhs = pattern_vector(c, pol, small_dic) @ ideal.vector
    rhs = ideal.gain * np.linalg.norm(small_dic.d_pq(2, 3).conj().T @ effective_single(c, pol)) ** 2
    assert lhs == pytest.approx(rhs, rel=1e-10)


def test_scale_stationarity(small_dic, rng):
    # best scalar for a fixed direction: gamma^2 = <s, g_ideal> / <s, s>
    ideal = ideal_pattern(small_dic.part, small_dic.geom, 1, 1)
    for _ in range(10):
        s = pattern_single(unit(rng, 32), small_dic)
        g2 = (s @ ideal.vector) / (s @ s)
        err = lambda k: squared_error(k * g2 * s, ideal)  # noqa: E731
        assert err(1.0) <= min(err(0.9 ** 2), err(1.1 ** 2))


@pytest.mark.parametrize("criterion", ["se", "mip", "baseline"])
def test_design_single_codebook(criterion):
    geom, part = ArrayGeometry(4, 8), RegionPartition(4, 4)
    cb = design_single_codebook(criterion, geom, part)
    assert len(cb) == 16 and cb.criterion == criterion
    assert_allclose(np.linalg.norm(cb.matrix(), axis=1), 1)
    assert cb[(2, 3)].region == (2, 3)


def test_design_unknown_criterion():
    with pytest.raises(ValueError):
        design_single_codebook("xx", ArrayGeometry(2, 2), RegionPartition(1, 1))
