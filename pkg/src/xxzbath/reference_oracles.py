"""Brute-force ground truth used to validate the analytic modules.

Nothing in here reuses the formulas it is meant to check: the sector
Hamiltonian is assembled bond by bond from spin configurations, the
distillation round is simulated on two full copies of the register, and
the ODE / matrix-exponential / principal-value routines are generic
numerical tools.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.linalg import expm

from .bethe_core import ResourceCapError

__all__ = [
    "SectorHamiltonian", "build_sector_hamiltonian", "sector_spectrum",
    "eigenstate_residual", "ode_integrate", "matrix_exponential_small",
    "CnotRoundResult", "bilateral_cnot_round", "pv_quadrature",
    "AccuracyError", "StiffnessError", "translation_operator",
]


class AccuracyError(RuntimeError):
    pass


class StiffnessError(RuntimeError):
    pass


@dataclass(frozen=True)
class SectorHamiltonian:
    N: int
    l: int
    delta: float
    matrix: np.ndarray
    configs: tuple


def _configs(N, l):
    # strictly increasing 1-based positions, lexicographic
    return tuple(itertools.combinations(range(1, N + 1), l))


def build_sector_hamiltonian(N: int, l: int, delta: float) -> SectorHamiltonian:
    """Dense H restricted to the l-magnon sector of the periodic ring.

    Each bond (i, i+1 mod N) contributes -Delta/2 * sz sz (so +Delta/2 when
    anti-aligned) and, when anti-aligned, a hop of amplitude -1.
    """
    small = min(l, N - l) <= 2
    if (small and N > 16) or (not small and N > 12):
        raise ResourceCapError(f"sector Hamiltonian cap exceeded: N={N}, l={l}")
    configs = _configs(N, l)
    index = {c: i for i, c in enumerate(configs)}
    dim = len(configs)
    H = np.zeros((dim, dim))
    for i, c in enumerate(configs):
        spins = [0] * N
        for x in c:
            spins[x - 1] = 1
        for b in range(N if N > 2 else N - 1):
            s, t = b, (b + 1) % N
            if spins[s] == spins[t]:
                H[i, i] -= 0.5 * delta
            else:
                H[i, i] += 0.5 * delta
                flipped = spins.copy()
                flipped[s], flipped[t] = spins[t], spins[s]
                j = index[tuple(k + 1 for k in range(N) if flipped[k])]
                H[j, i] -= 1.0
    if N == 2:
        # the two bonds of a 2-ring connect the same pair of sites
        H = _two_site_ring(l, delta)
    return SectorHamiltonian(N, l, float(delta), H, configs)


def _two_site_ring(l, delta):
    if l in (0, 2):
        return np.array([[-delta]])
    # configs (1,), (2,): both bonds anti-aligned, each hops with -1
    return np.array([[delta, -2.0], [-2.0, delta]])


def sector_spectrum(N: int, l: int, delta: float) -> np.ndarray:
    return np.linalg.eigvalsh(build_sector_hamiltonian(N, l, delta).matrix)


def translation_operator(N: int, l: int) -> np.ndarray:
    """Permutation matrix of x -> x+1 (mod N) on the sector basis."""
    configs = _configs(N, l)
    index = {c: i for i, c in enumerate(configs)}
    T = np.zeros((len(configs),) * 2)
    for i, c in enumerate(configs):
        shifted = tuple(sorted((x % N) + 1 for x in c))
        T[index[shifted], i] = 1.0
    return T


def eigenstate_residual(state) -> float:
    """||H psi - eps psi||_2 with H from this module and eps from the Bethe formula."""
    from .bethe_core import dense_vector, state_energy
    H = build_sector_hamiltonian(state.chain.N, state.l, state.chain.delta).matrix
    psi = dense_vector(state)
    eps = state_energy(state)
    return float(np.linalg.norm(H @ psi - eps * psi))


def ode_integrate(generator, w0, t: float, tol: float = 1e-12) -> np.ndarray:
    """Integrate dw/dt = M w with an adaptive embedded Runge-Kutta pair (DOP853)."""
    M = np.asarray(generator, dtype=float)
    w0 = np.asarray(w0, dtype=float)
    if t == 0:
        return w0.copy()
    sol = solve_ivp(lambda _t, y: M @ y, (0.0, t), w0, method="DOP853",
                    rtol=tol, atol=tol)
    if not sol.success:
        raise StiffnessError(sol.message)
    return sol.y[:, -1]


def matrix_exponential_small(M, t: float) -> np.ndarray:
    """exp(M t) by scaling and squaring with a Pade approximant."""
    M = np.asarray(M)
    if M.shape[0] > 8:
        raise ResourceCapError("matrix_exponential_small is meant for dimension <= 8")
    return expm(M * t)


@dataclass(frozen=True)
class CnotRoundResult:
    """Unnormalized block coefficients after one successful round."""
    u: float
    w: float
    v: complex
    probability: float
    leakage: float
    trace_before: float


def _block_density(u, w, v, N):
    dim = 2**N
    rho = np.zeros((dim, dim), dtype=complex)
    allone = dim - 1
    rho[0, 0] = rho[allone, allone] = u / 2
    rho[0, allone] = v
    rho[allone, 0] = np.conj(v)
    if w:
        from .bethe_core import ChainSpec, MagnonState, dense_vector, sector_to_full
        ch = ChainSpec(N, 0.0)
        W = sector_to_full(dense_vector(MagnonState.one_magnon(ch, 0.0)), N, 1)
        Wbar = W[::-1].copy()  # flip every spin
        rho += w / 2 * (np.outer(W, W.conj()) + np.outer(Wbar, Wbar.conj()))
    return rho


def bilateral_cnot_round(u: float, w: float, v: complex, N: int) -> CnotRoundResult:
    """One bilateral-CNOT + collective parity round on two full copies.

    The control copy is re-expressed in {|0..0>, |W>, |W-bar>, |1..1>};
    `leakage` is the Frobenius weight of whatever lies outside that block form.
    """
    if N > 5:
        raise ResourceCapError("two-copy simulation limited to N <= 5")
    dim = 2**N
    rho = _block_density(u, w, v, N)
    big = np.kron(rho, rho)  # index = x * dim + y, x control, y target
    trace_before = float(np.real(np.trace(big)))
    xs, ys = np.divmod(np.arange(dim * dim), dim)
    perm = xs * dim + (xs ^ ys)  # |x>|y> -> |x>|x xor y>
    U = np.zeros((dim * dim, dim * dim))
    U[perm, np.arange(dim * dim)] = 1.0
    big = U @ big @ U.T
    P = np.zeros(dim)
    P[0] = P[dim - 1] = 1.0
    proj = np.kron(np.eye(dim), np.diag(P))
    big = proj @ big @ proj
    sigma = np.einsum("xtyt->xy", big.reshape(dim, dim, dim, dim))
    prob = float(np.real(np.trace(sigma)))
    allone = dim - 1
    u_new = float(np.real(sigma[0, 0] + sigma[allone, allone]))
    v_new = complex(sigma[0, allone])
    w_new = 0.0
    recon = np.zeros_like(sigma)
    recon[0, 0] = recon[allone, allone] = u_new / 2
    recon[0, allone], recon[allone, 0] = v_new, np.conj(v_new)
    if N >= 2:
        from .bethe_core import ChainSpec, MagnonState, dense_vector, sector_to_full
        W = sector_to_full(dense_vector(MagnonState.one_magnon(ChainSpec(N, 0.0), 0.0)), N, 1)
        Wbar = W[::-1].copy()
        w_new = float(np.real(W.conj() @ sigma @ W + Wbar.conj() @ sigma @ Wbar))
        recon += w_new / 2 * (np.outer(W, W.conj()) + np.outer(Wbar, Wbar.conj()))
    leakage = float(np.linalg.norm(sigma - recon))
    return CnotRoundResult(u_new, w_new, v_new, prob, leakage, trace_before)


def pv_quadrature(f, pole: float, window: float, tol: float = 1e-10,
                  eps0: float | None = None, max_halvings: int = 60) -> float:
    """Principal value of int_{pole-window}^{pole+window} f(x)/(x-pole) dx.

    The two sides are integrated separately with a symmetric hole of width
    2*eps around the pole; eps is halved and the sequence is Richardson
    extrapolated (the hole error is linear in eps) until successive
    estimates agree to `tol`.
    """
    if window <= 0:
        raise ValueError("window must be positive")
    eps = window / 8 if eps0 is None else eps0

    def excised(e):
        left, _ = quad(lambda x: f(x) / (x - pole), pole - window, pole - e, limit=200,
                       epsabs=tol / 10, epsrel=1e-13)
        right, _ = quad(lambda x: f(x) / (x - pole), pole + e, pole + window, limit=200,
                        epsabs=tol / 10, epsrel=1e-13)
        return left + right

    prev_raw = excised(eps)
    prev_rich = None
    for _ in range(max_halvings):
        eps /= 2
        raw = excised(eps)
        rich = 2 * raw - prev_raw
        if prev_rich is not None and abs(rich - prev_rich) < tol:
            return rich
        prev_raw, prev_rich = raw, rich
        if eps < 1e-12 * window:
            break
    raise AccuracyError("principal value did not settle before the excision hit quadrature resolution")
