"""Effective-size measures for superpositions of photonic and collective-spin
states: variance/Fisher measures, branch-distinguishability measures, the
phase-space interference measure I, and the coarse-grained detector size.

Spin-side measures optimize over collective directions J_n through the 3x3
covariance or Fisher matrix; photon-side measures act on truncated Fock
amplitudes. Conventions (spectral radius M, Jz = -M + 2k) follow symcore.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.signal import fftconvolve
from scipy.special import erfinv

from .entanglement import helstrom_ps, reduced_group_state
from .symcore import (
    ContractViolation,
    DensityOp,
    DickeBasis,
    FockBasis,
    PhotonicState,
    RegimeWarning,
    SymState,
    collective_xyz,
    self_adjoint_eig,
    trace_norm,
)

QFI_SPECTRAL_CUTOFF = 1e-12
DEGENERATE_PAIR_TOL = 1e-12
SMEAR_L1_ATOL = 1e-8
PS_TIE_TOL = 1e-12

MEASURE_IDS = (
    "max-variance",
    "index-p",
    "n-eff",
    "rel-fisher",
    "m2",
    "c-delta",
    "d-bar",
    "index-q",
    "i-wigner",
    "i-wigner-spin",
    "size-pg",
)


class DegeneratePairError(ContractViolation):
    """Raised when a pair measure's denominator is singular for this input."""


@dataclass(frozen=True)
class MeasureResult:
    """One measure evaluation: id, nonnegative value, witness payload.

    `defined` is False when the measure has no value for this input (e.g. the
    discrimination threshold is unreachable); `value` is then 0 and the
    witness carries the reason.
    """

    measure_id: str
    value: float
    witness: dict = field(default_factory=dict)
    defined: bool = True

    def __post_init__(self):
        if self.measure_id not in MEASURE_IDS:
            raise ContractViolation(f"unknown measure id {self.measure_id!r}")
        if self.defined and not (np.isfinite(self.value) and self.value >= 0):
            raise ContractViolation(
                f"{self.measure_id}: value {self.value!r} is not finite and nonnegative"
            )

    def to_dict(self) -> dict:
        return {
            "measure": self.measure_id,
            "value": float(self.value),
            "witness": dict(self.witness),
            "defined": self.defined,
        }


@dataclass(frozen=True)
class SuperpositionPair:
    """Equal-weight branch pair; components share one basis and are normalized.

    Branch global phases matter only through the normalized sum (they are part
    of how the superposition splits into branches).
    """

    psi0: SymState | PhotonicState
    psi1: SymState | PhotonicState

    def __post_init__(self):
        if type(self.psi0) is not type(self.psi1) or self.psi0.basis != self.psi1.basis:
            raise ContractViolation("pair components must live in the same basis")

    @property
    def overlap(self) -> complex:
        return complex(np.vdot(self.psi0.amps, self.psi1.amps))

    @property
    def is_spin(self) -> bool:
        return isinstance(self.psi0, SymState)


def normalized_sum(pair: SuperpositionPair):
    """(psi0 + psi1)/norm, in the component type of the pair."""
    s = pair.psi0.amps + pair.psi1.amps
    n2 = float(np.vdot(s, s).real)
    if n2 < DEGENERATE_PAIR_TOL:
        raise DegeneratePairError("branches cancel, the superposition is null")
    s = s / np.sqrt(n2)
    if pair.is_spin:
        return SymState(pair.psi0.basis, s)
    return PhotonicState(pair.psi0.basis, s, tail_tol=None)


def _require_spin(x, label: str) -> DickeBasis:
    if not isinstance(x.basis, DickeBasis):
        raise ContractViolation(f"{label} must live in the symmetric spin sector")
    return x.basis


def _require_spin_pair(pair: SuperpositionPair) -> DickeBasis:
    if not pair.is_spin:
        raise ContractViolation("this measure needs a spin-sector pair")
    return pair.psi0.basis


def mean_and_covariance(state: SymState | DensityOp) -> tuple[np.ndarray, np.ndarray]:
    """Collective means mu_a and covariance Cov_ab = Re<J_a J_b> - mu_a mu_b.

    The real part symmetrizes the product, so Cov is the 3x3 real matrix of
    second moments (1/2)<{J_a, J_b}> - <J_a><J_b>.
    """
    basis = _require_spin(state, "state")
    ops = collective_xyz(basis)
    if isinstance(state, SymState):
        vs = [J @ state.amps for J in ops]
        mu = np.array([np.vdot(state.amps, v).real for v in vs])
        sec = np.array([[np.vdot(va, vb).real for vb in vs] for va in vs])
    else:
        rj = [state.matrix @ J for J in ops]
        mu = np.array([np.trace(r).real for r in rj])
        sec = np.array([[np.sum(ra * Jb.T).real for Jb in ops] for ra in rj])
        sec = 0.5 * (sec + sec.T)
    return mu, sec - np.outer(mu, mu)


def covariance_matrix(state: SymState | DensityOp) -> np.ndarray:
    return mean_and_covariance(state)[1]


def max_variance_collective(phi: SymState) -> MeasureResult:
    """Largest variance of J_n over unit directions n, with the argmax."""
    _, cov = mean_and_covariance(phi)
    w, v = self_adjoint_eig(cov)
    return MeasureResult(
        "max-variance",
        float(max(w[-1], 0.0)),
        witness={"direction": [float(c) for c in v[:, -1].real]},
    )


def fisher_matrix(state: SymState | DensityOp) -> np.ndarray:
    """3x3 Fisher-information matrix over collective directions.

    Pure states: F = 4 Cov. Mixed states: spectral formula
    F_ab = 2 sum_{i,j} (l_i - l_j)^2 / (l_i + l_j) Re[A_a[i,j] conj(A_b[i,j])]
    restricted to eigenvalue pairs with l_i + l_j above a 1e-12 cutoff.
    """
    basis = _require_spin(state, "state")
    if isinstance(state, SymState):
        return 4.0 * mean_and_covariance(state)[1]
    lam, vec = self_adjoint_eig(state.matrix)
    ops = collective_xyz(basis)
    tilde = [vec.conj().T @ J @ vec for J in ops]
    s = lam[:, None] + lam[None, :]
    d = lam[:, None] - lam[None, :]
    w = np.where(s > QFI_SPECTRAL_CUTOFF, d * d / np.where(s > QFI_SPECTRAL_CUTOFF, s, 1.0), 0.0)
    F = np.empty((3, 3))
    for a in range(3):
        for b in range(a, 3):
            F[a, b] = F[b, a] = 2.0 * float(np.sum(w * (tilde[a] * tilde[b].conj()).real))
    return F


def n_eff(state: SymState | DensityOp) -> MeasureResult:
    """Metrological effective size: largest Fisher eigenvalue over 4M.

    For pure states this equals max_variance/M exactly (F = 4 Cov), and is
    computed that way so the identity holds to rounding.
    """
    basis = _require_spin(state, "state")
    if isinstance(state, SymState):
        mv = max_variance_collective(state)
        return MeasureResult("n-eff", mv.value / basis.M, witness=dict(mv.witness))
    F = fisher_matrix(state)
    w, v = self_adjoint_eig(F)
    return MeasureResult(
        "n-eff",
        float(max(w[-1], 0.0)) / (4.0 * basis.M),
        witness={"direction": [float(c) for c in v[:, -1].real]},
    )


def relative_fisher(pair: SuperpositionPair) -> MeasureResult:
    """n_eff of the superposition over the equal-weight branch average."""
    _require_spin_pair(pair)
    n0 = n_eff(pair.psi0).value
    n1 = n_eff(pair.psi1).value
    ns = n_eff(normalized_sum(pair)).value
    return MeasureResult(
        "rel-fisher",
        ns / (0.5 * (n0 + n1)),
        witness={"neffSum": ns, "neff0": n0, "neff1": n1},
    )


def m_squared(pair: SuperpositionPair) -> MeasureResult:
    """Squared mean gap over summed variance, each maximized over directions.

    Numerator: max_n (<J_n>_1 - <J_n>_0)^2 = |mu_1 - mu_0|^2. Denominator:
    largest eigenvalue of Cov_0 + Cov_1. Raises DegeneratePairError when the
    denominator vanishes (both branches are J_n eigenstates in every
    direction, which the truncated sector never realizes for M >= 1).
    """
    _require_spin_pair(pair)
    mu0, c0 = mean_and_covariance(pair.psi0)
    mu1, c1 = mean_and_covariance(pair.psi1)
    gap = mu1 - mu0
    den_w, den_v = self_adjoint_eig(c0 + c1)
    if den_w[-1] < DEGENERATE_PAIR_TOL:
        raise DegeneratePairError("both branches have vanishing collective variance")
    return MeasureResult(
        "m2",
        float(gap @ gap) / float(den_w[-1]),
        witness={
            "meanGap": [float(g) for g in gap],
            "varianceDirection": [float(c) for c in den_v[:, -1].real],
        },
    )


def c_delta(pair: SuperpositionPair, delta: float = 0.25) -> MeasureResult:
    """Relative size M/n_min from group-wise branch discrimination.

    n_min is the smallest group size n whose reduced branch states can be
    told apart with success probability P_S(n) = 1/2 + ||rho0 - rho1||_1/4
    at least 1 - delta. P_S is nondecreasing in n (larger groups carry more
    information), so n_min is located by doubling plus binary search. When
    even the full ensemble stays below threshold the measure is undefined.
    """
    basis = _require_spin_pair(pair)
    if not 0.0 < delta <= 0.5:
        raise ContractViolation(f"delta must lie in (0, 1/2], got {delta}")
    M = basis.M
    target = 1.0 - delta
    cache: dict[int, float] = {}

    def ps(n: int) -> float:
        if n not in cache:
            cache[n] = helstrom_ps(
                reduced_group_state(pair.psi0, n), reduced_group_state(pair.psi1, n)
            )
        return cache[n]

    def hits(n: int) -> bool:
        return ps(n) >= target - PS_TIE_TOL

    if hits(1):
        n_min = 1
    else:
        lo, hi = 1, 2
        while hi < M and not hits(hi):
            lo, hi = hi, min(2 * hi, M)
        if not hits(hi):
            return MeasureResult(
                "c-delta",
                0.0,
                witness={"delta": delta, "pSFull": ps(M), "reason": "threshold unreachable"},
                defined=False,
            )
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if hits(mid):
                hi = mid
            else:
                lo = mid
        n_min = hi
    return MeasureResult(
        "c-delta",
        M / n_min,
        witness={"nMin": n_min, "delta": delta, "pS": ps(n_min)},
    )


def _extremal_ladder_weights(
    phi0: SymState, phi1: SymState
) -> tuple[float, int, float] | None:
    """Layer weights when phi0 is an extremal (product) state, else None.

    For a product state the collective-operator layers around it are exactly
    the eigenvectors of J.n along its Bloch direction n, ordered from the
    extremal eigenvalue inward, so one Hermitian eigendecomposition replaces
    the iterated Krylov construction, whose forward error grows geometrically
    with depth and poisons deep ladders. When the other branch is a product
    state too, the group action gives the weights in closed form: binomial
    in the layer index with success (1 - n0.n1)/2, hence mean M(1 - n0.n1)/2,
    which also sidesteps the basis-truncation distortion of deep shells.
    """
    basis = phi0.basis
    mean0, _ = mean_and_covariance(phi0)
    len0 = float(np.linalg.norm(mean0))
    if len0 < (1.0 - 1e-8) * basis.M:
        return None
    mean1, _ = mean_and_covariance(phi1)
    len1 = float(np.linalg.norm(mean1))
    if len1 >= (1.0 - 1e-8) * basis.M:
        s = 0.5 * (1.0 - float(np.dot(mean0, mean1)) / (len0 * len1))
        return basis.M * s, basis.dim - 1, 1.0
    n = mean0 / len0
    jx, jy, jz = collective_xyz(basis)
    jn = n[0] * jx + n[1] * jy + n[2] * jz
    _, vecs = self_adjoint_eig(0.5 * (jn + jn.conj().T))
    shells = vecs[:, ::-1]  # phi0 sits at the largest J.n eigenvalue
    if abs(np.vdot(shells[:, 0], phi0.amps)) ** 2 < 1.0 - 1e-10:
        return None
    w = np.abs(shells.conj().T @ phi1.amps) ** 2
    return float(np.dot(np.arange(len(w)), w)), len(w) - 1, float(np.sum(w))


def _layer_weights(phi0: SymState, phi1: SymState) -> tuple[float, int, float]:
    """Mean layer index of phi1 in the collective-operator layering around phi0.

    Layer d is the span of d-fold products of {Jx, Jy, Jz} applied to phi0,
    orthogonalized against layers < d. Built iteratively with repeated
    Gram-Schmidt and an SVD rank cut; the sector is irreducible, so the
    layers exhaust it.
    """
    basis = phi0.basis
    ops = collective_xyz(basis)
    dim = basis.dim
    acc = phi0.amps[:, None].copy()
    cur = acc
    mean = 0.0
    covered = float(abs(np.vdot(phi0.amps, phi1.amps)) ** 2)
    d = 0
    while acc.shape[1] < dim:
        cand = np.hstack([J @ cur for J in ops])
        norms = np.linalg.norm(cand, axis=0)
        cand = cand[:, norms > 1e-12 * basis.M] / np.maximum(
            norms[norms > 1e-12 * basis.M], 1e-300
        )
        if cand.shape[1] == 0:
            break
        for _ in range(2):
            cand = cand - acc @ (acc.conj().T @ cand)
        u, s, _ = np.linalg.svd(cand, full_matrices=False)
        new = u[:, s > 1e-7]
        if new.shape[1] == 0:
            break
        d += 1
        w = float(np.sum(np.abs(new.conj().T @ phi1.amps) ** 2))
        mean += d * w
        covered += w
        acc = np.hstack([acc, new])
        cur = new
    if covered < 1.0 - 1e-8:
        raise ContractViolation(
            f"layering covered only {covered:.12f} of the target state's weight"
        )
    return mean, d, covered


def d_bar(pair: SuperpositionPair) -> MeasureResult:
    """Mean number of single-spin flips separating the branches.

    For a basis reference |M,k0> this is sum_k |c_k|^2 |k - k0| over the other
    branch's amplitudes; otherwise the flip layers are constructed explicitly
    from the reference by collective-operator products.
    """
    basis = _require_spin_pair(pair)
    a0 = pair.psi0.amps
    idx = np.nonzero(np.abs(a0) > 1e-12)[0]
    if len(idx) == 1:
        k0 = int(idx[0])
        k = np.arange(basis.dim)
        value = float(np.dot(np.abs(pair.psi1.amps) ** 2, np.abs(k - k0)))
        return MeasureResult("d-bar", value, witness={"k0": k0, "method": "ladder"})
    extremal = _extremal_ladder_weights(pair.psi0, pair.psi1)
    if extremal is not None:
        value, layers, covered = extremal
        return MeasureResult(
            "d-bar",
            value,
            witness={"layers": layers, "covered": covered, "method": "extremal-ladder"},
        )
    value, layers, covered = _layer_weights(pair.psi0, pair.psi1)
    return MeasureResult(
        "d-bar", value, witness={"layers": layers, "covered": covered, "method": "layering"}
    )


def _fibonacci_sphere(count: int) -> np.ndarray:
    i = np.arange(count)
    z = 1.0 - (2.0 * i + 1.0) / count
    r = np.sqrt(np.maximum(1.0 - z * z, 0.0))
    th = np.pi * (3.0 - np.sqrt(5.0)) * i
    return np.column_stack([r * np.cos(th), r * np.sin(th), z])


def index_q(state: SymState | DensityOp) -> MeasureResult:
    """Largest trace norm of the double commutator [J_n, [J_n, rho]] over n.

    Grid-seeded (Fisher eigenvector, axes, Fibonacci sphere) and polished
    with Nelder-Mead on spherical angles; the objective is direction-even
    and smooth at the optimum.
    """
    basis = _require_spin(state, "state")
    rho = DensityOp.from_pure(state) if isinstance(state, SymState) else state
    jx, jy, jz = collective_xyz(basis)
    m = rho.matrix

    def objective(n: np.ndarray) -> float:
        J = n[0] * jx + n[1] * jy + n[2] * jz
        jj = J @ J
        jr = J @ m
        A = jj @ m + m @ jj - 2.0 * (jr @ J)
        A = 0.5 * (A + A.conj().T)
        return trace_norm(A)

    seeds = [np.eye(3)[i] for i in range(3)]
    fw, fv = self_adjoint_eig(fisher_matrix(state))
    for col in range(3):
        v = fv[:, col].real
        nv = np.linalg.norm(v)
        if nv > 1e-12:
            seeds.append(v / nv)
    grid = np.vstack([np.array(seeds), _fibonacci_sphere(48)])
    scores = np.array([objective(n) for n in grid])
    order = np.argsort(scores)[::-1][:3]

    def neg_by_angles(x: np.ndarray) -> float:
        th, ph = x
        return -objective(np.array([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)]))

    best_val = float(scores[order[0]])
    best_dir = grid[order[0]]
    for i in order:
        n = grid[i]
        x0 = np.array([np.arccos(np.clip(n[2], -1.0, 1.0)), np.arctan2(n[1], n[0])])
        res = minimize(
            neg_by_angles,
            x0,
            method="Nelder-Mead",
            options={"xatol": 1e-7, "fatol": 1e-12 * max(1.0, scores[order[0]]), "maxiter": 600},
        )
        if -res.fun > best_val:
            best_val = float(-res.fun)
            th, ph = res.x
            best_dir = np.array(
                [np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)]
            )
    return MeasureResult(
        "index-q", best_val, witness={"direction": [float(c) for c in best_dir]}
    )


def _photonic_tail_check(state: PhotonicState | DensityOp):
    if isinstance(state, PhotonicState):
        tail = state.tail_mass
    else:
        c = state.basis.cutoff
        diag = np.abs(np.diag(state.matrix).real)
        lo = max(c - 1, 0)
        if state.basis.modes == 1:
            tail = float(diag[lo:].sum())
        else:
            # boundary mass = any mode occupying the top two levels
            grid = diag.reshape((c + 1,) * state.basis.modes)
            mask = np.zeros_like(grid, dtype=bool)
            for axis in range(grid.ndim):
                sl: list[slice] = [slice(None)] * grid.ndim
                sl[axis] = slice(lo, None)
                mask[tuple(sl)] = True
            tail = float(grid[mask].sum())
    if tail > 1e-8:
        warnings.warn(
            f"population {tail:.2e} on the truncation boundary; enlarge the cutoff",
            RegimeWarning,
            stacklevel=3,
        )


def wigner_I_photonic(state: PhotonicState | DensityOp) -> MeasureResult:
    """Phase-space interference measure for one- or two-mode photonic states.

    Pure states: sum_m (<n_m> - |<a_m>|^2) + 1/2. Mixed single-mode states:
    Tr(rho^2 n) - Tr(rho a rho a^dag) + Tr(rho^2)/2, which reduces to the
    pure form at rank one.
    """
    if not isinstance(state.basis, FockBasis):
        raise ContractViolation("wigner_I_photonic needs a Fock-basis state")
    _photonic_tail_check(state)
    c = state.basis.cutoff
    n = np.arange(c + 1, dtype=float)
    if isinstance(state, PhotonicState):
        if state.modes == 1:
            p = np.abs(state.amps) ** 2
            mean_n = float(np.dot(n, p))
            a = complex(np.sum(np.conj(state.amps[:-1]) * np.sqrt(n[1:]) * state.amps[1:]))
            value = mean_n - abs(a) ** 2 + 0.5
        else:
            g = state.amps.reshape(c + 1, c + 1)
            p = np.abs(g) ** 2
            value = 0.5
            for axis in (1, 0):
                pm = p.sum(axis=axis)
                value += float(np.dot(n, pm))
                if axis == 1:
                    a = complex(np.sum(np.conj(g[:-1, :]) * np.sqrt(n[1:, None]) * g[1:, :]))
                else:
                    a = complex(np.sum(np.conj(g[:, :-1]) * np.sqrt(n[None, 1:]) * g[:, 1:]))
                value -= abs(a) ** 2
        return MeasureResult("i-wigner", float(value), witness={"modes": state.modes})
    if state.basis.modes != 1:
        raise ContractViolation("mixed two-mode states are out of scope for this measure")
    rho = state.matrix
    am = np.zeros((c + 1, c + 1))
    am[np.arange(c), np.arange(1, c + 1)] = np.sqrt(n[1:])  # <n| a |n+1>
    rho2 = rho @ rho
    purity = float(np.trace(rho2).real)
    t_num = float(np.dot(np.diag(rho2).real, n))
    t_cross = float(np.sum((rho @ am) * (rho @ am.conj().T).T).real)
    return MeasureResult(
        "i-wigner", t_num - t_cross + 0.5 * purity, witness={"modes": 1, "purity": purity}
    )


def wigner_I_spin(state: SymState | DensityOp) -> MeasureResult:
    """Spin image of the interference measure: planar variances over 4M.

    Pure states: (V(Jx) + V(Jy))/(4M). Mixed states:
    (1/4M) sum_{a in x,y} [Tr(rho^2 Ja^2) - Tr((rho Ja)^2)], matching the
    pure reduction at rank one. Tied to the absorption frame (the x-y plane
    plays the photonic role), so not rotation invariant by construction.
    """
    basis = _require_spin(state, "state")
    jx, jy, _ = collective_xyz(basis)
    if isinstance(state, SymState):
        acc = 0.0
        for J in (jx, jy):
            v = J @ state.amps
            acc += float(np.vdot(v, v).real) - float(np.vdot(state.amps, v).real) ** 2
        return MeasureResult("i-wigner-spin", acc / (4.0 * basis.M), witness={})
    rho = state.matrix
    rho2 = rho @ rho
    acc = 0.0
    for J in (jx, jy):
        acc += float(np.sum(rho2 * (J @ J).T).real) - float(np.sum((rho @ J) * (rho @ J).T).real)
    return MeasureResult("i-wigner-spin", acc / (4.0 * basis.M), witness={})


@dataclass(frozen=True)
class PhotonCount:
    """Photon-number readout: outcome pmf p(n) = |c_n|^2."""


@dataclass(frozen=True)
class Homodyne:
    """Quadrature readout at angle theta, x = (a + a^dag)/sqrt(2), vacuum variance 1/2."""

    angle: float = 0.0


def size_prefactor(p_g: float) -> float:
    """2 sqrt(2) erfinv(2 P_g - 1): rescales the critical width to a size."""
    if not 0.5 < p_g < 1.0:
        raise ContractViolation(f"P_g must lie in (1/2, 1), got {p_g}")
    return float(2.0 * np.sqrt(2.0) * erfinv(2.0 * p_g - 1.0))


def _photon_l1(p0: np.ndarray, p1: np.ndarray, sigma: float, h: float) -> float:
    keep = np.nonzero((p0 > 1e-300) | (p1 > 1e-300))[0]
    diff = (p0 - p1)[keep]
    x = np.arange(-8.0 * sigma, keep[-1] + 8.0 * sigma + h, h)
    g = np.exp(-0.5 * ((x[:, None] - keep[None, :]) / sigma) ** 2) / (np.sqrt(2 * np.pi) * sigma)
    return float(np.abs(g @ diff).sum() * h)


def _quad_density(amps: np.ndarray, theta: float, x: np.ndarray) -> np.ndarray:
    """|sum_n c_n e^{-i n theta} phi_n(x)|^2 by the Hermite-function recurrence."""
    K = len(amps) - 1
    cp = amps * np.exp(-1j * theta * np.arange(K + 1))
    f_prev = np.pi ** -0.25 * np.exp(-0.5 * x * x)
    acc = cp[0] * f_prev
    if K >= 1:
        f_cur = np.sqrt(2.0) * x * f_prev
        acc = acc + cp[1] * f_cur
        for m in range(2, K + 1):
            f_prev, f_cur = f_cur, np.sqrt(2.0 / m) * x * f_cur - np.sqrt((m - 1.0) / m) * f_prev
            acc = acc + cp[m] * f_cur
    return np.abs(acc) ** 2


def _homodyne_l1(
    a0: np.ndarray, a1: np.ndarray, theta: float, sigma: float, h: float
) -> float:
    K = len(a0) - 1
    reach = np.sqrt(2.0 * K + 1.0) + 10.0 + 8.0 * sigma
    x = np.arange(-reach, reach + h, h)
    diff = _quad_density(a0, theta, x) - _quad_density(a1, theta, x)
    if sigma > 0.0:
        half = int(np.ceil(8.0 * sigma / h))
        t = np.arange(-half, half + 1) * h
        kernel = np.exp(-0.5 * (t / sigma) ** 2)
        diff = fftconvolve(diff, kernel / kernel.sum(), mode="same")
    return float(np.abs(diff).sum() * h)


def _refined_l1(eval_at, h0: float) -> float:
    prev = eval_at(h0)
    h = h0
    for _ in range(4):
        h *= 0.5
        cur = eval_at(h)
        if abs(cur - prev) <= SMEAR_L1_ATOL:
            return cur
        prev = cur
    return prev


def _channel_ps(pair: SuperpositionPair, channel, sigma: float) -> float:
    if isinstance(channel, PhotonCount):
        p0 = np.abs(pair.psi0.amps) ** 2
        p1 = np.abs(pair.psi1.amps) ** 2
        if sigma == 0.0:
            return 0.5 + 0.25 * float(np.abs(p0 - p1).sum())
        l1 = _refined_l1(lambda h: _photon_l1(p0, p1, sigma, h), sigma / 16.0)
    elif isinstance(channel, Homodyne):
        K = pair.psi0.basis.cutoff
        h0 = 1.0 / (8.0 * np.sqrt(2.0 * K + 1.0))
        if sigma > 0.0:
            h0 = min(h0, sigma / 16.0)
        l1 = _refined_l1(
            lambda h: _homodyne_l1(pair.psi0.amps, pair.psi1.amps, channel.angle, sigma, h), h0
        )
    else:
        raise ContractViolation(f"unknown readout channel {channel!r}")
    return 0.5 + 0.25 * l1


def size_pg(
    pair: SuperpositionPair,
    p_g: float,
    channel: PhotonCount | Homodyne = PhotonCount(),
    bisection_rtol: float = 1e-4,
) -> MeasureResult:
    """Coarse-grained detector size: widest Gaussian smearing that still
    discriminates the branches at success probability P_g, rescaled by
    2 sqrt(2) erfinv(2 P_g - 1).

    The smeared success probability P_S(sigma) is nonincreasing, so the
    critical width sigma* is bracketed by doubling and located by bisection.
    Branches indistinguishable already at sigma = 0 yield value 0 with a
    diagnostic witness.
    """
    if pair.is_spin or pair.psi0.basis.modes != 1:
        raise ContractViolation("size_pg needs a single-mode photonic pair")
    pref = size_prefactor(p_g)
    chan_tag = (
        {"channel": "photon-count"}
        if isinstance(channel, PhotonCount)
        else {"channel": "homodyne", "angle": channel.angle}
    )
    ps0 = _channel_ps(pair, channel, 0.0)
    if ps0 < p_g:
        return MeasureResult(
            "size-pg",
            0.0,
            witness={**chan_tag, "pG": p_g, "pSRaw": ps0, "reason": "branches indistinguishable"},
        )
    lo, hi = 0.0, 1.0
    while _channel_ps(pair, channel, hi) >= p_g:
        lo, hi = hi, 2.0 * hi
        if hi > 1e9:
            raise ContractViolation("no finite critical smearing found")
    while hi - lo > bisection_rtol * hi + 1e-12:
        mid = 0.5 * (lo + hi)
        if _channel_ps(pair, channel, mid) >= p_g:
            lo = mid
        else:
            hi = mid
    return MeasureResult(
        "size-pg",
        pref * lo,
        witness={**chan_tag, "pG": p_g, "sigmaStar": lo, "prefactor": pref, "pSRaw": ps0},
    )


def index_p_modified(family) -> "ScalingFit":
    """Exponent of max_variance/M in the family's excitation number."""
    from .scaling import sweep  # deferred: scaling builds on this module

    return sweep(family, "index-p").fit
