"""Bipartite structure of symmetric states: ensemble splits, entanglement
entropy, negativity, reduced group states, and the Helstrom bound."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .symcore import (
    ContractViolation,
    DensityOp,
    DickeBasis,
    SymState,
    trace_norm,
)

NEGATIVITY_DIM_CAP = 16384


@dataclass(frozen=True)
class SplitState:
    """A symmetric state expanded over a (m_a, m_b) bipartition.

    coeffs[l, j] is the amplitude on |m_a, l> x |m_b, j>; labels above the
    parent truncation are dropped because their weight is exactly zero.
    """

    m_a: int
    m_b: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128)
        object.__setattr__(self, "coeffs", c)
        if self.m_a < 1 or self.m_b < 1:
            raise ContractViolation("both parts must hold at least one spin")
        norm = float(np.linalg.norm(c))
        if abs(norm - 1.0) > 1e-9:
            raise ContractViolation(f"split coefficients have norm {norm}, expected 1")

    @property
    def schmidt_values(self) -> np.ndarray:
        return np.linalg.svd(self.coeffs, compute_uv=False)


def split(phi: SymState, m_a: int) -> SplitState:
    """Expand phi over an (m_a, M - m_a) split of the spin ensemble.

    |M,k> = sum_l sqrt(C(m_a,l) C(m_b,k-l) / C(M,k)) |m_a,l> |m_b,k-l>;
    the weights are hypergeometric, evaluated in log space so splits of
    ensembles up to M ~ 1e5 stay finite.
    """
    M, K = phi.basis.M, phi.basis.K
    if not 1 <= m_a <= M - 1:
        raise ContractViolation(f"need 1 <= m_a <= M-1, got m_a={m_a}, M={M}")
    m_b = M - m_a
    la_max = min(K, m_a)
    lb_max = min(K, m_b)
    gl = gammaln(np.arange(M + 2))

    def logc(n, r):  # ln C(n, r) for vector r
        return gl[n + 1] - gl[r + 1] - gl[n - r + 1]

    coeffs = np.zeros((la_max + 1, lb_max + 1), dtype=np.complex128)
    for k in range(K + 1):
        a = phi.amps[k]
        if a == 0:
            continue
        lo = max(0, k - m_b)
        hi = min(k, m_a)
        if lo > hi:
            continue
        l = np.arange(lo, hi + 1)
        w = 0.5 * (logc(m_a, l) + logc(m_b, k - l) - logc(M, np.full_like(l, k)))
        coeffs[l, k - l] += a * np.exp(w)
    return SplitState(m_a, m_b, coeffs)


def entanglement_entropy(s: SplitState) -> float:
    """Base-2 entropy of the Schmidt weights; 0 for product states."""
    p = s.schmidt_values**2
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


def negativity(s: SplitState) -> float:
    """(||rho^(T_B)||_1 - 1)/2 for the pure split state."""
    da, db = s.coeffs.shape
    dim = da * db
    if dim > NEGATIVITY_DIM_CAP:
        raise ContractViolation(f"bipartite dimension {dim} above cap {NEGATIVITY_DIM_CAP}")
    vec = s.coeffs.reshape(-1)
    rho = np.outer(vec, vec.conj()).reshape(da, db, da, db)
    rho_tb = rho.transpose(0, 3, 2, 1).reshape(dim, dim)
    return float((trace_norm(rho_tb) - 1.0) / 2.0)


def reduced_group_state(phi: SymState, n: int) -> DensityOp:
    """State of a group of n spins traced out of the symmetric state phi.

    For phi = |M,k> the result is diagonal with hypergeometric weights
    C(k,l) C(M-k, n-l) / C(M,n).
    """
    if n == phi.basis.M:  # whole ensemble, nothing traced out
        return DensityOp.from_pure(phi)
    s = split(phi, n)
    rho = s.coeffs @ s.coeffs.conj().T
    return DensityOp(DickeBasis(n, s.coeffs.shape[0] - 1), rho)


def helstrom_ps(rho0: DensityOp, rho1: DensityOp) -> float:
    """Optimal equal-prior discrimination probability 1/2 + ||rho0 - rho1||_1 / 4."""
    if rho0.basis != rho1.basis:
        raise ContractViolation("states must share a basis to be discriminated")
    ps = 0.5 + 0.25 * trace_norm(rho0.matrix - rho1.matrix)
    if ps > 1.0 + 1e-9:
        raise ContractViolation(f"P_S = {ps} above 1; inputs are not states")
    return float(min(ps, 1.0))
