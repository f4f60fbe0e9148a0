import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import project_dense
from resonant_search.quantum_core import StateVector
from resonant_search.search_hamiltonians import (
    DriveParams,
    SearchInstance,
    build_hg_dense,
    build_hg_effective,
    build_hls,
    build_iontrap,
    decompose_initial,
    effective_params,
    iontrap_frequency,
)

GAMMA4 = np.sqrt(3) / 4  # 0.4330127...


def test_decompose_uniform():
    x, beta = decompose_initial(SearchInstance(4, 0))
    assert x == 0.5
    assert beta.amplitudes == pytest.approx([0, 1 / np.sqrt(3), 1 / np.sqrt(3), 1 / np.sqrt(3)], abs=1e-15)
    assert decompose_initial(SearchInstance(100, 7))[0] == pytest.approx(0.1, abs=1e-15)


def test_decompose_explicit():
    x, beta = decompose_initial(SearchInstance(2, 0, StateVector(np.array([0.6, 0.8]))))
    assert x == pytest.approx(0.6, abs=1e-15)
    assert beta.amplitudes == pytest.approx([0, 1], abs=1e-15)


def test_decompose_absorbs_complex_phase():
    psi = StateVector(np.array([0.6j, 0.8, 0]))
    x, beta = decompose_initial(SearchInstance(3, 0, psi))
    assert x == pytest.approx(0.6)
    alpha = np.array([1j, 0, 0])
    assert np.vdot(alpha, beta.amplitudes) == pytest.approx(0, abs=1e-15)
    np.testing.assert_allclose(x * alpha + np.sqrt(1 - x * x) * beta.amplitudes, psi.amplitudes, atol=1e-15)


def test_instance_rejects_target_as_initial():
    with pytest.raises(ValueError):
        SearchInstance(3, 1, StateVector.basis(3, 1))
    with pytest.raises(ValueError):
        SearchInstance(1)
    with pytest.raises(ValueError):
        SearchInstance(4, 4)


def test_drive_params_invariants():
    with pytest.raises(ValueError):
        DriveParams(0.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        DriveParams(1.0, -0.1, 0.0)
    with pytest.raises(ValueError):
        DriveParams(1.0, 1.0, np.inf)


def test_effective_params_matches_dense_projection():
    eff = effective_params(DriveParams(1, 1, np.pi), 0.5)
    oracle = project_dense(build_hg_dense(SearchInstance(4, 0), DriveParams(1, 1, np.pi)).entries, 4)
    assert (eff.e_alpha, eff.e_beta, eff.gamma, eff.w_res) == pytest.approx((0.25, 0.75, GAMMA4, 0.5), abs=1e-15)
    assert eff.phi_prime == pytest.approx(np.pi, abs=1e-15)
    assert eff.valid
    np.testing.assert_allclose(eff.matrix(), oracle, atol=1e-15)


@pytest.mark.parametrize("x", [0.1, 0.5, 0.9])
def test_farhi_gutmann_limit(x):
    eff = effective_params(DriveParams(1, 0, 0.7), x)
    assert eff.e_alpha == pytest.approx(1 + x * x)
    assert eff.e_beta == pytest.approx(1 - x * x)
    assert eff.gamma == pytest.approx(x * np.sqrt(1 - x * x))
    assert eff.w_res == pytest.approx(-2 * x * x)
    assert not eff.valid and "eps > Ex" in eff.reason


def test_small_x_limit():
    eff = effective_params(DriveParams(1, 1, np.pi), 1e-9)
    assert eff.w_res == pytest.approx(0, abs=1e-8)
    assert eff.gamma == pytest.approx(1, abs=1e-8)


def test_effective_params_rejects_bad_x():
    for x in (0.0, 1.0, -0.2):
        with pytest.raises(ValueError):
            effective_params(DriveParams(1, 1, 0), x)


def test_degenerate_coupling_flag():
    eff = effective_params(DriveParams(1.0, 0.5, np.pi), 0.5)  # Ex + eps e^{i pi} = 0 up to sin(pi)
    assert eff.gamma <= 1e-15
    exact = effective_params(DriveParams(1.0, 0.0, 0.0), 0.5)
    assert not exact.degenerate


def test_iontrap_frequency_examples():
    assert iontrap_frequency(4, 1, 1) == 0.5
    assert iontrap_frequency(4, 1, 1) == pytest.approx(effective_params(DriveParams(1, 1, np.pi), 0.5).w_res, abs=1e-15)
    assert iontrap_frequency(9, 2.0, 2.0 / 3) == pytest.approx(0, abs=1e-15)
    assert iontrap_frequency(16, 1, 2) == pytest.approx(0.875, abs=1e-15)
    assert effective_params(DriveParams(1, 2, np.pi), 0.25).w_res == pytest.approx(0.875, abs=1e-15)


def test_build_iontrap_examples():
    eff = build_iontrap(4, 1, 1)
    assert (eff.e_alpha, eff.e_beta, eff.gamma, eff.w_res) == pytest.approx((0.25, 0.75, GAMMA4, 0.5), abs=1e-15)
    edge = build_iontrap(16, 1.0, 0.25)
    assert edge.gamma == pytest.approx(0, abs=1e-15) and edge.w_res == pytest.approx(0, abs=1e-15)
    assert not edge.valid
    eff = build_iontrap(16, 1, 0.5)
    assert eff.valid and eff.e_alpha == pytest.approx(0.8125, abs=1e-15)
    assert eff == effective_params(DriveParams(1, 0.5, np.pi), 0.25)


@given(st.integers(2, 10**6), st.floats(0.1, 10), st.floats(0, 10))
def test_iontrap_matches_written_hamiltonian(n, E, eps):
    eff = build_iontrap(n, E, eps)
    assert eff.e_alpha == pytest.approx(E * (1 + 1 / n) - 2 * eps / np.sqrt(n), abs=1e-12)
    assert eff.e_beta == pytest.approx(E * (1 - 1 / n), abs=1e-12)
    assert eff.gamma == pytest.approx(np.sqrt(1 - 1 / n) * abs(E / np.sqrt(n) - eps), abs=1e-12)
    assert eff.w_res == pytest.approx(iontrap_frequency(n, E, eps), abs=1e-12)


def test_build_hg_dense_n2():
    H = build_hg_dense(SearchInstance(2, 0), DriveParams(1, 0, 0)).entries
    np.testing.assert_allclose(H, [[1.5, 0.5], [0.5, 0.5]], atol=1e-15)
    np.testing.assert_allclose(np.linalg.eigvalsh(H), [1 - np.sqrt(2) / 2, 1 + np.sqrt(2) / 2], atol=1e-14)


def test_build_hg_dense_limit():
    with pytest.raises(ValueError, match="effective"):
        build_hg_dense(SearchInstance(64), DriveParams(1, 1, 0), dense_limit=32)


def test_build_hg_dense_is_linear_in_energies():
    inst = SearchInstance(5, 2)
    a = build_hg_dense(inst, DriveParams(1.0, 0.0, 0.3)).entries
    b = build_hg_dense(inst, DriveParams(2.0, 0.0, 0.3)).entries
    np.testing.assert_allclose(b, 2 * a, atol=1e-15)


def test_build_hg_effective_examples():
    np.testing.assert_allclose(
        build_hg_effective(effective_params(DriveParams(1, 1, np.pi), 0.5)).matrix(),
        [[0.25, -GAMMA4], [-GAMMA4, 0.75]], atol=1e-15)
    d = DriveParams(1, 0, 0)
    H = build_hg_effective(effective_params(d, 0.5), d, 0.5).matrix()
    np.testing.assert_allclose(H, [[1.25, GAMMA4], [GAMMA4, 0.75]], atol=1e-15)
    np.testing.assert_allclose(H, project_dense(build_hg_dense(SearchInstance(4), d).entries, 4), atol=1e-15)


def test_build_hg_effective_consistency_check():
    with pytest.raises(ValueError):
        build_hg_effective(effective_params(DriveParams(1, 1, 0), 0.5), DriveParams(1, 2, 0), 0.5)


@given(st.floats(0.01, 0.99), st.floats(0.1, 5), st.floats(0, 5), st.floats(-10, 10))
def test_effective_trace(x, E, eps, phi):
    eff = effective_params(DriveParams(E, eps, phi), x)
    assert np.trace(build_hg_effective(eff).matrix()).real == pytest.approx(2 * E + 2 * eps * x * np.cos(phi), abs=1e-12)


def test_build_hls_examples():
    eff = build_iontrap(4, 1, 1)
    assert build_hls(eff, 0.5, 0.0) == build_hg_effective(eff)
    H = build_hls(eff, 0.5, np.pi).matrix()
    assert H[0, 1] == pytest.approx(-GAMMA4 * 1j, abs=1e-15)
    assert abs(H[0, 1]) == pytest.approx(GAMMA4, abs=1e-15)
    ev0 = np.linalg.eigvalsh(build_hls(eff, 0.5, 0).matrix())
    for t in (0.3, 2.0, 11.1):
        np.testing.assert_allclose(np.linalg.eigvalsh(build_hls(eff, 0.5, t).matrix()), ev0, atol=1e-14)


# ---- invariants ----

def test_resonance_formulas_agree_over_powers_of_two(rng):
    for k in range(1, 21):
        n = 2**k
        for E, eps in rng.uniform(0.01, 10, size=(20, 2)):
            w = effective_params(DriveParams(E, eps, np.pi), 1 / np.sqrt(n)).w_res
            assert abs(w - iontrap_frequency(n, E, eps)) <= 1e-12 * max(1, abs(w))


@settings(max_examples=1000)
@given(st.floats(0.001, 0.999), st.floats(0.01, 10), st.floats(0, 10), st.floats(-20, 20))
def test_diagonal_gap_identity(x, E, eps, phi):
    eff = effective_params(DriveParams(E, eps, phi), x)
    assert abs(eff.w_res - (eff.e_beta - eff.e_alpha)) <= 1e-12
    expected_gamma = np.sqrt(1 - x * x) * np.hypot(E * x + eps * np.cos(phi), eps * np.sin(phi))
    assert abs(eff.gamma - expected_gamma) <= 1e-12


@settings(max_examples=1000)
@given(st.floats(0.001, 0.999), st.floats(0.01, 10), st.floats(0, 10), st.floats(-20, 20))
def test_validity_sign_of_frequency(x, E, eps, phi):
    eff = effective_params(DriveParams(E, eps, phi), x)
    if eff.valid:
        assert eff.w_res > 0
    if eps > 0 and np.cos(phi) >= -E * x / eps:
        assert eff.w_res <= 1e-15
        assert not eff.valid


@given(st.floats(0.001, 0.999), st.floats(0.01, 10), st.floats(0, 10), st.floats(-20, 20))
def test_phase_periodicity(x, E, eps, phi):
    a = effective_params(DriveParams(E, eps, phi), x)
    b = effective_params(DriveParams(E, eps, phi + 2 * np.pi), x)
    np.testing.assert_allclose(a.matrix(), b.matrix(), atol=1e-12 * max(1, E, eps))
    assert (a.e_alpha, a.e_beta, a.gamma, a.w_res) == pytest.approx((b.e_alpha, b.e_beta, b.gamma, b.w_res), abs=1e-12 * max(1, E, eps))


def test_dense_effective_agreement(rng):
    for _ in range(40):
        n = int(rng.integers(2, 257))
        target = int(rng.integers(0, n))
        d = DriveParams(rng.uniform(0.1, 3), rng.uniform(0, 3), rng.uniform(-np.pi, np.pi))
        dense = build_hg_dense(SearchInstance(n, target), d).entries
        eff = effective_params(d, 1 / np.sqrt(n))
        np.testing.assert_allclose(project_dense(dense, n, target), eff.matrix(), atol=1e-10)


def test_complement_is_annihilated(rng):
    for n in (3, 16, 100):
        target = int(rng.integers(0, n))
        d = DriveParams(rng.uniform(0.1, 3), rng.uniform(0, 3), rng.uniform(-np.pi, np.pi))
        H = build_hg_dense(SearchInstance(n, target), d).entries
        alpha = np.eye(n)[target]
        beta = np.ones(n) - alpha
        v = rng.normal(size=n) + 1j * rng.normal(size=n)
        v -= alpha * np.vdot(alpha, v) + beta * np.vdot(beta, v) / np.vdot(beta, beta)
        v /= np.linalg.norm(v)
        assert np.max(np.abs(H @ v)) <= 1e-12
