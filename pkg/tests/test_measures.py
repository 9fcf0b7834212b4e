"""Size measures: closed forms, brackets, and frozen numeric oracles."""

import numpy as np
import pytest
from scipy.special import erfinv

from macrosize import (
    ContractViolation,
    DensityOp,
    FamilyId,
    Homodyne,
    SuperpositionPair,
    branch_pair,
    c_delta,
    covariance_matrix,
    d_bar,
    displace,
    family_state,
    fisher_matrix,
    index_q,
    m_squared,
    make_coherent,
    make_dicke,
    make_even_cat,
    make_fock,
    make_ghz,
    make_mixed_cat,
    make_spin_coherent,
    max_variance_collective,
    n_eff,
    normalized_sum,
    relative_fisher,
    size_pg,
    size_prefactor,
    wigner_I_photonic,
    wigner_I_spin,
)
from macrosize.mapping import absorb_density
from macrosize.measures import DegeneratePairError


def test_ghz_closed_forms():
    M = 40
    g = make_ghz(M)
    pair = branch_pair("ghz", M=M)
    assert n_eff(g).value == pytest.approx(M, rel=1e-9)
    assert max_variance_collective(g).value == pytest.approx(M**2, rel=1e-9)
    assert m_squared(pair).value == pytest.approx(2 * M, rel=1e-9)
    rc = c_delta(pair)
    assert rc.value == pytest.approx(M, rel=1e-9)
    assert rc.witness["nMin"] == 1
    assert d_bar(pair).value == pytest.approx(M, rel=1e-9)
    assert index_q(g).value == pytest.approx(4 * M**2, rel=1e-9)


def test_dicke_effective_size():
    M, N = 100, 5
    assert n_eff(make_dicke(M, 0, K=M)).value == pytest.approx(1.0, rel=1e-12)
    want = 4 * N + 1 - 8 * N**2 / M
    assert n_eff(make_dicke(M, 2 * N, K=M)).value == pytest.approx(want, rel=1e-10)


def test_pure_state_consistency_neff_maxvar():
    for phi in (make_spin_coherent(1.3, 30), normalized_sum(branch_pair("ghz", M=16))):
        assert n_eff(phi).value * phi.basis.M == pytest.approx(
            max_variance_collective(phi).value, rel=1e-10
        )


def test_fisher_is_four_covariance_for_pure():
    phi = make_spin_coherent(1.1, 24)
    assert np.allclose(fisher_matrix(phi), 4 * covariance_matrix(phi), atol=1e-9)


def test_c_delta_matches_product_branch_law():
    # product branches: P_S(n) = 1/2 + sqrt(1 - o^(2n))/2 with per-spin
    # overlap o = 1 - 2 p, so n_min = ceil(ln(3/4) / (2 ln o)) at delta = 1/4
    for M, a2 in ((3000, 1.0), (1600, 8.0)):
        a = np.sqrt(a2)
        pair = SuperpositionPair(make_spin_coherent(a, M), make_spin_coherent(-a, M))
        o = 1.0 - 2.0 * a2 / M
        want = int(np.ceil(np.log(0.75) / (2 * np.log(o))))
        r = c_delta(pair)
        assert r.witness["nMin"] == want
        assert r.value == pytest.approx(M / want, rel=1e-12)


def test_c_delta_bracket_property():
    pair = SuperpositionPair(make_spin_coherent(1.0, 400), make_spin_coherent(-1.0, 400))
    r = c_delta(pair)
    n_min = r.witness["nMin"]
    from macrosize import helstrom_ps, reduced_group_state

    def ps(n):
        return helstrom_ps(
            reduced_group_state(pair.psi0, n), reduced_group_state(pair.psi1, n)
        )

    assert ps(n_min) >= 0.75 - 1e-9
    assert ps(n_min - 1) < 0.75


def test_c_delta_degenerate_pair_undefined():
    d = make_dicke(10, 2)
    r = c_delta(SuperpositionPair(d, d))
    assert not r.defined
    assert r.witness["pSFull"] == pytest.approx(0.5, abs=1e-12)


def test_relative_fisher_examples():
    fock_pair = SuperpositionPair(make_dicke(200, 0, K=12), make_dicke(200, 10, K=12))
    assert relative_fisher(fock_pair).value == pytest.approx(1.0, abs=1e-9)
    dsp = family_state(FamilyId.DISPLACED_SINGLE_PHOTON, 8)
    assert relative_fisher(dsp.spin_pair).value == pytest.approx(1.515, abs=0.02)
    assert m_squared(dsp.spin_pair).value == pytest.approx(1.0, abs=0.05)


def test_d_bar_dispatch_paths():
    ladder = d_bar(SuperpositionPair(make_dicke(20, 0, K=8), make_dicke(20, 6, K=8)))
    assert ladder.value == pytest.approx(6.0, abs=1e-12)
    assert ladder.witness["method"] == "ladder"
    pm = SuperpositionPair(make_spin_coherent(1.0, 100), make_spin_coherent(-1.0, 100))
    ext = d_bar(pm)
    assert ext.witness["method"] == "extremal-ladder"
    assert ext.value == pytest.approx(4.0 * (1 - 1 / 100), rel=1e-10)
    dsp = family_state(FamilyId.DISPLACED_SINGLE_PHOTON, 4)
    lay = d_bar(dsp.spin_pair)
    assert lay.witness["method"] == "layering"
    assert lay.value == pytest.approx(1.0, abs=0.01)


def test_size_prefactor_closed_form():
    assert size_prefactor(2 / 3) == pytest.approx(2 * np.sqrt(2) * erfinv(1 / 3), rel=1e-12)
    assert size_prefactor(2 / 3) == pytest.approx(0.8616, abs=1e-3)
    with pytest.raises(ContractViolation):
        size_prefactor(0.5)  # no advantage over guessing
    with pytest.raises(ContractViolation):
        size_prefactor(1.0)


def test_size_photon_count_fock_pair():
    N = 10
    pair = branch_pair("fock-superposition", N=N)
    r = size_pg(pair, 2 / 3)
    assert r.value == pytest.approx(2 * N, rel=0.02)


def test_size_homodyne_cat_matches_gaussian_quadrature_form():
    pair = branch_pair("even-cat", alpha=2.0)
    r = size_pg(pair, 2 / 3, channel=Homodyne(0.0))
    # branch quadratures are Gaussians at +-sqrt(2)alpha with variance 1/2
    # + sigma^2 of the added blur, solvable for the threshold blur directly
    sig = np.sqrt(4.0 / erfinv(1 / 3) ** 2 - 0.5)
    want = size_prefactor(2 / 3) * sig
    assert r.value == pytest.approx(want, rel=1e-3)
    assert r.witness["sigmaStar"] == pytest.approx(sig, rel=1e-3)


def test_degenerate_superposition_raises():
    d = make_dicke(10, 2)
    with pytest.raises(DegeneratePairError):
        normalized_sum(SuperpositionPair(d, d.__class__(d.basis, -d.amps)))


def test_mixed_cat_closed_forms():
    a2, M = 4.0, 1600  # embedding defect is O(alpha^4/M), keep it ~1%
    for d in (0.25, 0.5, 1.0):
        rho = absorb_density(make_mixed_cat(np.sqrt(a2), d), M)
        assert n_eff(rho).value == pytest.approx(4 * d**2 * a2 + 1, rel=0.02)
        want_i = a2 * d**2 + (1 + d**2) / 4
        assert wigner_I_spin(rho).value == pytest.approx(want_i, rel=0.02)


def test_wigner_I_photonic_closed_forms():
    for N in (0, 1, 3):
        assert wigner_I_photonic(make_fock(N, cutoff=12)).value == pytest.approx(
            N + 0.5, rel=1e-12
        )
    assert wigner_I_photonic(make_coherent(1.5)).value == pytest.approx(0.5, abs=1e-9)


def test_wigner_I_displacement_invariance():
    cat = make_even_cat(1.5, cutoff=60)
    base = wigner_I_photonic(cat).value
    for alpha in (0.4, -0.9):
        moved = displace(cat, alpha)
        assert wigner_I_photonic(moved).value == pytest.approx(base, abs=1e-6)
    one = make_fock(1, cutoff=40)
    assert wigner_I_photonic(displace(one, 1.1)).value == pytest.approx(1.5, abs=1e-9)


def test_wigner_I_two_mode_pure_only():
    from macrosize import make_displaced_single_photon

    dsp = make_displaced_single_photon(2.0)
    assert wigner_I_photonic(dsp).value == pytest.approx(1.5, rel=1e-9)
    dim = dsp.basis.cutoff + 1
    m = np.zeros((dim * dim, dim * dim), dtype=complex)
    m[1, 1] = 0.5  # |0,1>
    m[dim, dim] = 0.5  # |1,0>
    rho = DensityOp(dsp.basis, m)
    with pytest.raises(ContractViolation):
        wigner_I_photonic(rho)


def test_measure_result_dict_shape():
    r = n_eff(make_ghz(8))
    d = r.to_dict()
    assert set(d) == {"measure", "value", "witness", "defined"}
    assert d["measure"] == "n-eff" and d["defined"] is True
