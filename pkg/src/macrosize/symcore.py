"""Symmetric-sector basis machinery, collective spin operators, and the dense
Hermitian linear-algebra kernels shared by every other module.

Conventions, stated once and used everywhere:

    Jz |M,k> = (-M + 2k) |M,k>
    J+ |M,k> = sqrt((k+1)(M-k)) |M,k+1>,   J- = (J+)^dagger
    Jx = J+ + J-,   Jy = -i (J+ - J-)

i.e. collective operators carry no 1/2 factors, [J+, J-] = Jz,
[Jz, J+-] = +-2 J+-, and J_n has spectral radius M on the full sector.
`k` counts excited spins, so k = 0 is the all-ground state.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

NORM_TOL = 1e-10
HERM_TOL = 1e-10
MIN_EIG_TOL = -1e-8
EIG_RESIDUAL_TOL = 1e-9


class ContractViolation(ValueError):
    """Input breaks a documented operation contract (non-Hermitian, bad norm...)."""


class TruncationError(ValueError):
    """A finite cutoff is too small to hold the requested state."""


class RegimeWarning(UserWarning):
    """State or cutoff sits outside the low-excitation regime the absorption map assumes."""


def default_spin_truncation(M: int, nbar: float) -> int:
    """Default Dicke-label cutoff K for states with mean excitation nbar."""
    return min(M, int(np.ceil(4.0 * nbar)) + 25)


@dataclass(frozen=True)
class DickeBasis:
    """Truncated symmetric sector of M spins: labels k = 0..K, dimension K+1."""

    M: int
    K: int

    def __post_init__(self):
        if self.M < 1:
            raise ContractViolation(f"need at least one spin, got M={self.M}")
        if not 0 <= self.K <= self.M:
            raise ContractViolation(f"label cutoff K={self.K} outside 0..M={self.M}")

    @property
    def dim(self) -> int:
        return self.K + 1


@dataclass(frozen=True)
class FockBasis:
    """Truncated Fock space: per-mode labels 0..cutoff, `modes` in {1, 2}."""

    cutoff: int
    modes: int = 1

    def __post_init__(self):
        if self.cutoff < 1:
            raise ContractViolation(f"cutoff must be >= 1, got {self.cutoff}")
        if self.modes not in (1, 2):
            raise ContractViolation(f"only 1- and 2-mode states supported, got {self.modes}")

    @property
    def dim(self) -> int:
        return (self.cutoff + 1) ** self.modes


@dataclass(frozen=True)
class SymState:
    """Pure symmetric spin state: complex amplitudes over |M,k>, k = 0..K."""

    basis: DickeBasis
    amps: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amps, dtype=np.complex128)
        object.__setattr__(self, "amps", amps)
        if amps.shape != (self.basis.dim,):
            raise ContractViolation(
                f"amplitude vector has shape {amps.shape}, basis needs ({self.basis.dim},)"
            )
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > NORM_TOL:
            raise ContractViolation(f"state norm {norm} deviates from 1 beyond {NORM_TOL}")

    @property
    def mean_excitation(self) -> float:
        """<k> = sum_k k |c_k|^2, the mean number of excited spins."""
        k = np.arange(self.basis.dim)
        return float(np.dot(k, np.abs(self.amps) ** 2))

    @property
    def in_low_excitation_regime(self) -> bool:
        """True when the truncation leaves headroom (K < M/4)."""
        return self.basis.K < self.basis.M / 4


@dataclass(frozen=True)
class PhotonicState:
    """Pure state of one or two bosonic modes on a shared per-mode cutoff.

    Two-mode amplitudes are stored row-major: index = n1*(cutoff+1) + n2.
    `tail_tol` is the truncation tolerance declared at construction; None marks
    states that are exactly supported away from nothing (finite superpositions)
    and skips the tail check.
    """

    basis: FockBasis
    amps: np.ndarray
    tail_tol: float | None = 1e-10

    def __post_init__(self):
        amps = np.asarray(self.amps, dtype=np.complex128)
        object.__setattr__(self, "amps", amps)
        if amps.shape != (self.basis.dim,):
            raise ContractViolation(
                f"amplitude vector has shape {amps.shape}, basis needs ({self.basis.dim},)"
            )
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > NORM_TOL:
            raise ContractViolation(f"state norm {norm} deviates from 1 beyond {NORM_TOL}")
        if self.tail_tol is not None and self.tail_mass > self.tail_tol:
            raise TruncationError(
                f"tail mass {self.tail_mass:.3e} above declared tolerance {self.tail_tol:.1e}"
            )

    @property
    def cutoff(self) -> int:
        return self.basis.cutoff

    @property
    def modes(self) -> int:
        return self.basis.modes

    @property
    def tail_mass(self) -> float:
        """Probability weight on per-mode labels n > cutoff - 2."""
        c = self.basis.cutoff
        p = np.abs(self.amps) ** 2
        if self.basis.modes == 1:
            return float(p[max(c - 1, 0):].sum())
        p = p.reshape(c + 1, c + 1)
        edge = max(c - 1, 0)
        return float(p[edge:, :].sum() + p[:edge, edge:].sum())

    @property
    def mean_photon(self) -> float:
        """Total mean photon number across modes."""
        p = np.abs(self.amps) ** 2
        n = np.arange(self.basis.cutoff + 1)
        if self.basis.modes == 1:
            return float(np.dot(n, p))
        p = p.reshape(self.basis.cutoff + 1, self.basis.cutoff + 1)
        return float(np.dot(n, p.sum(axis=1)) + np.dot(n, p.sum(axis=0)))


@dataclass(frozen=True)
class DensityOp:
    """Density matrix over a DickeBasis or FockBasis, validated at construction."""

    basis: DickeBasis | FockBasis
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.complex128)
        object.__setattr__(self, "matrix", m)
        d = self.basis.dim
        if m.shape != (d, d):
            raise ContractViolation(f"matrix shape {m.shape} does not match basis dim {d}")
        scale = max(1.0, float(np.abs(m).max()))
        if np.abs(m - m.conj().T).max() > HERM_TOL * scale:
            raise ContractViolation("density matrix is not Hermitian within tolerance")
        tr = complex(np.trace(m))
        if abs(tr - 1.0) > 1e-10:
            raise ContractViolation(f"trace {tr} deviates from 1 beyond 1e-10")
        if float(np.linalg.eigvalsh(m).min()) < MIN_EIG_TOL:
            raise ContractViolation("density matrix has an eigenvalue below -1e-8")

    @classmethod
    def from_pure(cls, state: SymState | PhotonicState) -> "DensityOp":
        v = state.amps
        return cls(state.basis, np.outer(v, v.conj()))


_TAGS = ("x", "y", "z", "plus", "minus")


@dataclass(frozen=True)
class CollectiveObservable:
    """A collective spin operator: either J along a unit direction n, or a ladder tag."""

    direction: tuple[float, float, float] | None = None
    tag: str | None = None

    def __post_init__(self):
        if (self.direction is None) == (self.tag is None):
            raise ContractViolation("give exactly one of direction or tag")
        if self.tag is not None and self.tag not in _TAGS:
            raise ContractViolation(f"unknown tag {self.tag!r}, expected one of {_TAGS}")
        if self.direction is not None:
            n = tuple(float(x) for x in self.direction)
            object.__setattr__(self, "direction", n)
            if abs(np.linalg.norm(n) - 1.0) > 1e-12:
                raise ContractViolation("direction must be a unit vector within 1e-12")

    @classmethod
    def along(cls, n) -> "CollectiveObservable":
        """Normalize n and wrap it; rejects the zero vector."""
        n = np.asarray(n, dtype=float)
        norm = np.linalg.norm(n)
        if norm == 0:
            raise ContractViolation("cannot normalize the zero direction")
        n = n / norm
        return cls(direction=(float(n[0]), float(n[1]), float(n[2])))


def log_binomial(n: int, k: int) -> float:
    """ln C(n, k) via log-gamma; exact to <= 1e-10 relative for n up to ~1e6."""
    if k < 0 or n < 0 or k > n:
        raise ContractViolation(f"log_binomial needs 0 <= k <= n, got n={n}, k={k}")
    return float(gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1))


def raising_coefficients(M: int, K: int) -> np.ndarray:
    """C+(k) = sqrt((k+1)(M-k)) for k = 0..K-1 (the J+ matrix band)."""
    k = np.arange(K, dtype=float)
    return np.sqrt((k + 1.0) * (M - k))


def collective_matrix(basis: DickeBasis, obs: CollectiveObservable) -> np.ndarray:
    """Dense complex matrix of the observable on the truncated Dicke basis.

    Commutators and the J^2 identity hold exactly on interior labels; the
    row/column at k = K is clipped by the truncation.
    """
    M, K = basis.M, basis.K
    cp = raising_coefficients(M, K)
    jp = np.zeros((K + 1, K + 1), dtype=np.complex128)
    jp[np.arange(1, K + 1), np.arange(K)] = cp  # <k+1| J+ |k>
    if obs.tag == "plus":
        return jp
    jm = jp.conj().T
    if obs.tag == "minus":
        return jm
    jz = np.diag((-M + 2.0 * np.arange(K + 1)).astype(np.complex128))
    if obs.tag == "z":
        return jz
    jx = jp + jm
    if obs.tag == "x":
        return jx
    jy = -1j * (jp - jm)
    if obs.tag == "y":
        return jy
    nx, ny, nz = obs.direction
    return nx * jx + ny * jy + nz * jz


def collective_xyz(basis: DickeBasis) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(Jx, Jy, Jz) matrices on the truncated basis."""
    return (
        collective_matrix(basis, CollectiveObservable(tag="x")),
        collective_matrix(basis, CollectiveObservable(tag="y")),
        collective_matrix(basis, CollectiveObservable(tag="z")),
    )


def self_adjoint_eig(H: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix; rejects non-Hermitian input.

    Returns (eigenvalues ascending, eigenvector columns). Reconstruction
    residual is covered by the LAPACK backend and checked in tests at 1e-9.
    """
    H = np.asarray(H)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ContractViolation(f"need a square matrix, got shape {H.shape}")
    scale = max(1.0, float(np.abs(H).max()))
    if np.abs(H - H.conj().T).max() > HERM_TOL * scale:
        raise ContractViolation("matrix is not Hermitian within tolerance")
    w, v = np.linalg.eigh(H)
    return w, v


def trace_norm(X: np.ndarray) -> float:
    """Sum of singular values; for Hermitian X computed as sum |eigenvalues|."""
    X = np.asarray(X)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise ContractViolation(f"need a square matrix, got shape {X.shape}")
    scale = max(1.0, float(np.abs(X).max()))
    if np.abs(X - X.conj().T).max() <= 1e-12 * scale:
        return float(np.abs(np.linalg.eigvalsh(X)).sum())
    return float(np.linalg.svd(X, compute_uv=False).sum())


def unitary_from_generator(H: np.ndarray, t: float) -> np.ndarray:
    """exp(-i H t) for Hermitian H, via the spectral decomposition."""
    w, v = self_adjoint_eig(H)
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def hermitian_exp(H: np.ndarray, s: float) -> np.ndarray:
    """exp(s H) for Hermitian H and real s (not unitary; used by identities)."""
    w, v = self_adjoint_eig(H)
    return (v * np.exp(s * w)) @ v.conj().T


def expectation(A: np.ndarray, vec: np.ndarray) -> complex:
    """<vec| A |vec> without assuming A Hermitian."""
    return complex(np.vdot(vec, A @ vec))


def rotate_state(state: SymState, axis, angle: float) -> SymState:
    """Collective Bloch rotation exp(-i (angle/2) J_n) applied to a SymState.

    Exact only when the basis is untruncated (K = M); rotations spread the
    excitation label, so callers on truncated bases must keep angles small.
    """
    obs = CollectiveObservable.along(axis)
    J = collective_matrix(state.basis, obs)
    U = unitary_from_generator(J, angle / 2.0)
    amps = U @ state.amps
    amps = amps / np.linalg.norm(amps)
    return SymState(state.basis, amps)
