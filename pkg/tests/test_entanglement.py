"""Half-split structure, Schmidt laws, distinguishability."""

import numpy as np
import pytest
from scipy.special import comb

from macrosize import (
    ContractViolation,
    DensityOp,
    entanglement_entropy,
    helstrom_ps,
    make_dicke,
    make_fock,
    make_spin_coherent,
    negativity,
    reduced_group_state,
    split,
    trace_norm,
)


def test_split_shapes_and_norm():
    s = split(make_dicke(10, 3), 4)
    assert s.m_a == 4 and s.m_b == 6
    assert s.coeffs.shape == (5, 7)
    assert np.linalg.norm(s.coeffs) == pytest.approx(1.0, abs=1e-12)


def test_dicke_split_is_hypergeometric():
    M, k, m_a = 12, 4, 6
    s = split(make_dicke(M, k), m_a)
    want = np.array(
        [comb(m_a, l) * comb(M - m_a, k - l) / comb(M, k) for l in range(k + 1)]
    )
    got = np.sort(s.schmidt_values**2)[::-1]
    assert np.allclose(np.sort(want)[::-1], got[: k + 1], atol=1e-12)


def test_product_state_has_single_schmidt_value():
    s = split(make_spin_coherent(1.2, 20), 10)
    assert s.schmidt_values[0] == pytest.approx(1.0, abs=1e-10)
    assert entanglement_entropy(s) == pytest.approx(0.0, abs=1e-9)
    assert negativity(s) == pytest.approx(0.0, abs=1e-9)


def test_negativity_matches_schmidt_sum_identity():
    s = split(make_dicke(8, 2), 4)
    lam = s.schmidt_values
    assert negativity(s) == pytest.approx(((lam.sum()) ** 2 - 1) / 2, rel=1e-12)
    assert negativity(s) >= 0


def test_entropy_bounded_by_rank():
    s = split(make_dicke(16, 2), 8)
    h = entanglement_entropy(s)
    assert 0 <= h <= np.log2(3) + 1e-12


def test_helstrom_limits():
    r0 = DensityOp.from_pure(make_fock(0, cutoff=6))
    r1 = DensityOp.from_pure(make_fock(1, cutoff=6))
    assert helstrom_ps(r0, r1) == pytest.approx(1.0, abs=1e-12)
    assert helstrom_ps(r0, r0) == pytest.approx(0.5, abs=1e-12)


def test_helstrom_closed_form_two_dim():
    rng = np.random.default_rng(5)
    for _ in range(5):
        v0 = rng.normal(size=2) + 1j * rng.normal(size=2)
        v1 = rng.normal(size=2) + 1j * rng.normal(size=2)
        v0 /= np.linalg.norm(v0)
        v1 /= np.linalg.norm(v1)
        basis = make_fock(0, cutoff=6).basis
        m0 = np.zeros((7, 7), dtype=complex)
        m1 = np.zeros((7, 7), dtype=complex)
        m0[:2, :2] = np.outer(v0, v0.conj())
        m1[:2, :2] = np.outer(v1, v1.conj())
        r0, r1 = DensityOp(basis, m0), DensityOp(basis, m1)
        want = 0.5 + 0.25 * trace_norm(m0 - m1)
        assert helstrom_ps(r0, r1) == pytest.approx(want, abs=1e-10)


def test_reduced_group_state_is_density():
    rho = reduced_group_state(make_dicke(8, 2), 3)
    assert isinstance(rho, DensityOp)
    m = rho.matrix
    assert np.trace(m).real == pytest.approx(1.0, abs=1e-12)
    assert np.min(np.linalg.eigvalsh(m)) >= -1e-12


def test_split_rejects_bad_cut():
    with pytest.raises(ContractViolation):
        split(make_dicke(8, 2), 0)
    with pytest.raises(ContractViolation):
        split(make_dicke(8, 2), 8)
