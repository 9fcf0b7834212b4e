"""State factories: amplitude laws, parity structure, truncation discipline."""

import numpy as np
import pytest
from scipy.special import gammaln

from macrosize import (
    ContractViolation,
    DensityOp,
    StateSpec,
    TruncationError,
    displace,
    make_coherent,
    make_dicke,
    make_displaced_single_photon,
    make_even_cat,
    make_fock,
    make_fock_superposition,
    make_ghz,
    make_mixed_cat,
    make_odd_cat,
    make_spin_coherent,
    mode_operator,
    state_from_dict,
    state_to_dict,
)


def poisson_amps(alpha, cutoff):
    n = np.arange(cutoff + 1)
    logs = n * np.log(abs(alpha) + 1e-300) - 0.5 * gammaln(n + 1.0) - 0.5 * abs(alpha) ** 2
    return np.exp(logs) * np.exp(1j * n * np.angle(alpha))


def test_fock_basis_vector():
    f = make_fock(3)
    assert f.basis.cutoff >= 5
    assert f.amps[3] == 1.0
    assert np.count_nonzero(f.amps) == 1


def test_coherent_amplitudes_and_mean():
    for alpha in (0.7, 1.5 + 0.5j):
        c = make_coherent(alpha)
        ref = poisson_amps(alpha, c.basis.cutoff)
        assert np.allclose(c.amps, ref / np.linalg.norm(ref), atol=1e-9)
        a = mode_operator(c.basis.cutoff)
        assert np.vdot(c.amps, a @ c.amps) == pytest.approx(alpha, abs=1e-8)


def test_even_cat_parity_and_weights():
    cat = make_even_cat(1.3)
    assert np.all(cat.amps[1::2] == 0)
    # even Fock weights proportional to the doubled Poisson terms
    ref = poisson_amps(1.3, cat.basis.cutoff)
    ref[1::2] = 0
    ref /= np.linalg.norm(ref)
    assert np.allclose(cat.amps, ref, atol=1e-10)
    odd = make_odd_cat(1.3)
    assert np.all(odd.amps[0::2] == 0)


def test_mixed_cat_limits():
    rho_pure = make_mixed_cat(2.0, 1.0)
    assert isinstance(rho_pure, DensityOp)
    ev = np.linalg.eigvalsh(rho_pure.matrix)
    assert ev[-1] == pytest.approx(1.0, abs=1e-10)  # d=1 is the pure cat
    rho_mix = make_mixed_cat(2.0, 0.0)
    ev = np.sort(np.linalg.eigvalsh(rho_mix.matrix))[::-1]
    # d=0 is the even/odd statistical mixture of two coherent branches
    assert ev[0] == pytest.approx(0.5, abs=0.02)
    assert np.trace(rho_mix.matrix).real == pytest.approx(1.0, abs=1e-12)


def test_fock_superposition_components():
    s = make_fock_superposition(4)
    assert s.basis.cutoff == 10
    assert s.amps[0] == pytest.approx(1 / np.sqrt(2))
    assert s.amps[8] == pytest.approx(1 / np.sqrt(2))
    assert np.count_nonzero(s.amps) == 2


def test_dicke_and_ghz():
    d = make_dicke(12, 3)
    assert d.amps[3] == 1.0 and np.count_nonzero(d.amps) == 1
    g = make_ghz(9)
    assert g.basis.K == 9
    assert g.amps[0] == pytest.approx(1 / np.sqrt(2))
    assert g.amps[9] == pytest.approx(1 / np.sqrt(2))


def test_spin_coherent_binomial_law():
    M, alpha = 30, 1.4
    s = make_spin_coherent(alpha, M, K=M)
    p = alpha**2 / M
    k = np.arange(M + 1)
    logpmf = (
        gammaln(M + 1.0)
        - gammaln(k + 1.0)
        - gammaln(M - k + 1.0)
        + k * np.log(p)
        + (M - k) * np.log1p(-p)
    )
    assert np.allclose(np.abs(s.amps) ** 2, np.exp(logpmf), atol=1e-12)
    # absorption phases: one factor of -i per excitation
    phases = s.amps / np.abs(np.where(np.abs(s.amps) > 0, s.amps, 1.0))
    assert np.allclose(phases, (-1j) ** k, atol=1e-10)
    with pytest.raises(ContractViolation):
        make_spin_coherent(6.0, 30)  # needs |alpha|^2 < M


def test_displace_vacuum_gives_coherent():
    vac = make_fock(0, cutoff=40)
    moved = displace(vac, 1.2)
    ref = make_coherent(1.2, cutoff=40)
    assert np.max(np.abs(moved.amps - ref.amps)) < 1e-10


def test_displace_norm_and_headroom_guard():
    cat = make_even_cat(2.0)
    with pytest.raises(TruncationError):
        displace(cat, 0.7)  # no room for the shifted tail
    roomy = make_even_cat(2.0, cutoff=cat.basis.cutoff + 25)
    out = displace(roomy, 0.7)
    assert np.linalg.norm(out.amps) == pytest.approx(1.0, abs=1e-10)


def test_displace_two_mode_acts_per_mode():
    dsp = make_displaced_single_photon(1.0)
    assert dsp.basis.modes == 2
    # displacing back on mode 0 recovers the bare two-mode singlet-like state
    undone = displace(dsp, -1.0, mode=0)
    dim = dsp.basis.cutoff + 1
    g = undone.amps.reshape(dim, dim)
    ref = np.zeros_like(g)
    ref[0, 1] = 1 / np.sqrt(2)
    ref[1, 0] = -1 / np.sqrt(2)
    assert np.max(np.abs(g - ref)) < 1e-8


def test_displaced_single_photon_mean():
    for alpha in (1.0, 2.0):
        dsp = make_displaced_single_photon(alpha)
        assert dsp.mean_photon == pytest.approx(alpha**2 + 1.0, rel=1e-9)


def test_state_spec_round_trip_all_names():
    params = {
        "fock": {"N": 2},
        "coherent": {"alpha": 1.1},
        "even-cat": {"alpha": 1.5},
        "odd-cat": {"alpha": 1.5},
        "mixed-cat": {"alpha": 1.5, "d": 0.5},
        "fock-superposition": {"N": 3},
        "displaced-single-photon": {"alpha": 1.0},
        "ghz": {"M": 8},
        "dicke": {"M": 8, "k": 2},
        "spin-coherent": {"alpha": 1.0, "M": 16},
    }
    for name in StateSpec._NAMES:
        built = StateSpec(name, params[name]).build()
        doc = state_to_dict(built)
        back = state_from_dict(doc)
        if hasattr(built, "amps"):
            assert np.allclose(back.amps, built.amps)
        else:
            assert np.allclose(back.matrix, built.matrix)


def test_state_spec_rejects_unknown():
    with pytest.raises(ContractViolation):
        StateSpec("squeezed", {"r": 1.0}).build()


def test_complex_alpha_as_pair():
    s = StateSpec("coherent", {"alpha": [1.0, 1.0]}).build()
    assert s.mean_photon == pytest.approx(2.0, rel=1e-9)
