"""Bethe-ansatz eigenstates of the periodic XXZ ring in the low magnon sectors.

Conventions
-----------
H = -1/2 sum_i (sx sx + sy sy + Delta sz sz) on a ring of N sites.  The
reference state has every spin up (|0>); a magnon is a down spin (|1>).
In the magnon basis the Hamiltonian hops a magnon to a neighbouring empty
site with amplitude -1 and the diagonal is -N*Delta/2 + Delta * (number of
anti-aligned bonds).

With this Hamiltonian the two-body S-matrix

    S(qj, qk) = -(cos(Q/2) - Delta e^{iq}) / (cos(Q/2) - Delta e^{-iq}),
    Q = qj + qk,  q = (qj - qk)/2,

enters the Bethe equations as

    N q_j = 2 pi I_j + sum_{k != j} Theta(q_j, q_k),    S = exp(i Theta),

and the wavefunction amplitudes are A_P = prod over inverted pairs
(a < b) of S(q_b, q_a).  For l = 2 at zero momentum this reads
psi(r) ~ e^{-iqr} + S(-q, q) e^{iqr} with r = x2 - x1.  Both signs were
fixed against exact diagonalization; see the decisions log for details.

Sector basis vectors are indexed by strictly increasing position tuples in
lexicographic order, positions running over 1..N.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

import numpy as np
from scipy.optimize import brentq

__all__ = [
    "BetheError", "DomainError", "SolverError", "DegenerateSolutionError",
    "ResourceCapError", "ChainSpec", "BetheRootSet", "MagnonState",
    "s_matrix", "scattering_phase", "lifted_phase", "cot_form_phase",
    "solve_bethe_roots", "bethe_residual", "zero_momentum_pair_roots",
    "sector_energy", "amplitude", "normalization_constant",
    "transition_amplitude_omega", "omega_closed_form", "dense_vector",
    "sector_basis", "sector_to_full", "bound_amplitude_limit",
    "edge_amplitude_abs2_exact", "ring_distance",
]

EDGE_SWITCH = 1e-6 * np.pi
DENSE_CAP_L2 = 24
DENSE_CAP_GENERAL = 16
ROOT_SCAN_CAP = 4096  # the bracketing scan is O(N^2)


class BetheError(Exception):
    """Base class for errors raised by the Bethe machinery."""


class DomainError(BetheError, ValueError):
    pass


class SolverError(BetheError):
    def __init__(self, msg, residual=np.inf, roots=None):
        super().__init__(f"{msg} (best residual {residual:.3e})")
        self.residual = residual
        self.roots = roots


class DegenerateSolutionError(BetheError):
    pass


class ResourceCapError(BetheError):
    pass


@dataclass(frozen=True)
class ChainSpec:
    N: int
    delta: float

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise DomainError(f"N must be an integer >= 2, got {self.N}")
        if not np.isfinite(self.delta):
            raise DomainError("delta must be finite")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "delta", float(self.delta))


@dataclass(frozen=True)
class BetheRootSet:
    l: int
    quantum_numbers: tuple
    roots: tuple
    residual: float

    def __post_init__(self):
        if not (len(self.roots) == len(self.quantum_numbers) == self.l):
            raise DomainError("root set length mismatch")

    @property
    def momentum(self) -> complex:
        return complex(sum(self.roots))


# --------------------------------------------------------------------------
# scattering data
# --------------------------------------------------------------------------

def _check_finite(*xs):
    for x in xs:
        if not np.all(np.isfinite(x)):
            raise DomainError("non-finite argument")


def s_matrix(qj, qk, delta):
    """Closed-form two-body S-matrix; accepts complex momenta."""
    _check_finite(qj, qk, delta)
    half_Q = 0.5 * (qj + qk)
    q = 0.5 * (qj - qk)
    c = np.cos(half_Q)
    num = c - delta * np.exp(1j * q)
    den = c - delta * np.exp(-1j * q)
    return -num / den


def scattering_phase(qj: float, qk: float, delta: float) -> float:
    """Principal-branch phase Theta with exp(i Theta) = S(qj, qk).

    The value lies in (-pi, pi]; an exact S = -1 maps to +pi.
    """
    S = complex(s_matrix(qj, qk, delta))
    theta = float(np.angle(S))
    if theta <= -np.pi:
        theta = np.pi
    if abs(S.imag) < 1e-300 and S.real < 0:
        theta = np.pi
    return theta


def _lifted_parts(qj, qk, delta):
    q = 0.5 * (qj - qk)
    hQ = 0.5 * (qj + qk)
    g = delta * np.sin(q)
    h = np.cos(hQ) - delta * np.cos(q)
    return q, hQ, g, h


def lifted_phase(qj, qk, delta):
    """Branch used by the root solver: pi - 2*atan2(D sin q, cos(Q/2) - D cos q).

    It agrees with the principal phase modulo 2 pi and is continuous in
    (qj, qk) away from the negative real axis of the denominator, which
    zero-momentum roots inside (0, pi) never reach.
    """
    _, _, g, h = _lifted_parts(qj, qk, delta)
    return np.pi - 2.0 * np.arctan2(g, h)


def _lifted_phase_grad(qj, qk, delta):
    q, hQ, g, h = _lifted_parts(qj, qk, delta)
    r2 = g * g + h * h
    # d/dqj and d/dqk of g and h
    dg_j, dg_k = 0.5 * delta * np.cos(q), -0.5 * delta * np.cos(q)
    dh_j = -0.5 * np.sin(hQ) + 0.5 * delta * np.sin(q)
    dh_k = -0.5 * np.sin(hQ) - 0.5 * delta * np.sin(q)
    dj = -2.0 * (h * dg_j - g * dh_j) / r2
    dk = -2.0 * (h * dg_k - g * dh_k) / r2
    return dj, dk


def cot_form_phase(qj, qk, delta):
    """The two-body phase written as 2*arccot(x), arccot taking values in (0, pi)."""
    x = delta * np.sin(0.5 * (qj - qk)) / (np.cos(0.5 * (qj + qk)) - delta * np.cos(0.5 * (qj - qk)))
    return 2.0 * (0.5 * np.pi - np.arctan(x))


# --------------------------------------------------------------------------
# Bethe equations
# --------------------------------------------------------------------------

def _reduced_quantum_number(I, N):
    """Integer I~ congruent to I mod N with 2 pi I~/N in [-pi, pi)."""
    I = int(I) % N
    return I - N if 2 * I >= N else I


def _bethe_F(q, Itil, N, delta):
    l = len(q)
    F = N * q - 2 * np.pi * Itil
    for j in range(l):
        for k in range(l):
            if k != j:
                F[j] -= lifted_phase(q[j], q[k], delta)
    return F


def _bethe_J(q, N, delta):
    l = len(q)
    J = np.zeros((l, l))
    for j in range(l):
        J[j, j] = N
        for k in range(l):
            if k == j:
                continue
            dj, dk = _lifted_phase_grad(q[j], q[k], delta)
            J[j, j] -= dj
            J[j, k] -= dk
    return J


def bethe_residual(roots, quantum_numbers, chain: ChainSpec) -> float:
    """Max defect of the Bethe equations with I_j taken modulo N."""
    q = np.asarray(roots, dtype=float)
    N = chain.N
    Itil = np.array([_reduced_quantum_number(I, N) for I in quantum_numbers], float)
    F = _bethe_F(q, Itil, N, chain.delta)
    period = 2 * np.pi * N
    F = (F + 0.5 * period) % period - 0.5 * period
    return float(np.max(np.abs(F))) if len(F) else 0.0


def solve_bethe_roots(chain: ChainSpec, l: int, quantum_numbers, tol: float = 1e-12,
                      max_iter: int = 200) -> BetheRootSet:
    """Solve the Bethe equations for real roots by damped Newton iteration.

    The start is the free-magnon guess 2 pi I_j / N folded into [-pi, pi);
    a step that increases the residual norm is halved until it does not.
    """
    N, delta = chain.N, chain.delta
    if not 0 <= l <= N:
        raise DomainError(f"magnon number {l} outside [0, {N}]")
    qn = tuple(int(I) for I in quantum_numbers)
    if len(qn) != l:
        raise DomainError("need one quantum number per magnon")
    if l == 0:
        return BetheRootSet(0, (), (), 0.0)
    Itil = np.array([_reduced_quantum_number(I, N) for I in qn], float)
    q = 2 * np.pi * Itil / N
    F = _bethe_F(q, Itil, N, delta)
    best = np.max(np.abs(F))
    for _ in range(max_iter):
        if best < tol:
            break
        try:
            step = np.linalg.solve(_bethe_J(q, N, delta), -F)
        except np.linalg.LinAlgError:
            raise SolverError("singular Jacobian", best, tuple(q))
        lam = 1.0
        while True:
            q_new = q + lam * step
            F_new = _bethe_F(q_new, Itil, N, delta)
            res_new = np.max(np.abs(F_new))
            if res_new <= best or lam < 1e-10:
                break
            lam *= 0.5
        if not res_new < best and lam < 1e-10:
            raise SolverError("damped Newton stalled", best, tuple(q))
        q, F, best = q_new, F_new, res_new
    if not best < tol:
        raise SolverError("Bethe iteration did not converge", best, tuple(q))
    wrapped = np.mod(q, 2 * np.pi)
    for a, b in itertools.combinations(range(l), 2):
        d = abs(wrapped[a] - wrapped[b])
        if min(d, 2 * np.pi - d) < 1e-8:
            raise DegenerateSolutionError(f"roots {a} and {b} collide at q={q[a]:.6g}")
    return BetheRootSet(l, qn, tuple(float(x) for x in q), float(best))


def zero_momentum_pair_roots(chain: ChainSpec) -> list:
    """All real zero-momentum two-magnon root pairs (q, -q) with q in (0, pi).

    Located by bracketing N q - Theta(q, -q) = 2 pi m on a fine grid; the
    quantum numbers of the pair are (m, N-1-m).
    """
    N, delta = chain.N, chain.delta
    if N > ROOT_SCAN_CAP:
        raise ResourceCapError(f"N={N} exceeds root-scan cap {ROOT_SCAN_CAP}")

    def phi(q):
        return N * q - lifted_phase(q, -q, delta)

    eps = 1e-9
    grid = np.linspace(eps, np.pi - eps, 64 * N + 1)
    vals = phi(grid) / (2 * np.pi)
    out = []
    for m in range(int(np.floor(vals.min())) - 1, int(np.ceil(vals.max())) + 2):
        g = vals - m
        idx = np.nonzero((g[:-1] <= 0) & (g[1:] > 0) | (g[:-1] >= 0) & (g[1:] < 0))[0]
        for i in idx:
            if g[i] == 0:
                q = grid[i]
            else:
                q = brentq(lambda x: phi(x) / (2 * np.pi) - m, grid[i], grid[i + 1],
                           xtol=1e-15, rtol=1e-15)
            qn = (m % N, (N - 1 - m) % N)
            roots = (q, -q)
            out.append(BetheRootSet(2, qn, roots, bethe_residual(roots, qn, chain)))
    out.sort(key=lambda rs: rs.roots[0])
    return out


# --------------------------------------------------------------------------
# states
# --------------------------------------------------------------------------

VACUUM, ONE, SCATTERING, EDGE, BOUND, SATURATED, GENERAL = (
    "vacuum", "one_magnon", "scattering", "edge", "bound", "saturated", "general")
EDGE_LIMITS = ("0+", "pi-")


@dataclass(frozen=True)
class MagnonState:
    """Tagged eigenstate descriptor; build it through the classmethods."""
    variant: str
    chain: ChainSpec
    q: float | None = None
    limit: str | None = None
    roots: BetheRootSet | None = None
    eta: float | None = field(default=None, compare=False)

    @classmethod
    def vacuum(cls, chain):
        return cls(VACUUM, chain)

    @classmethod
    def saturated(cls, chain):
        return cls(SATURATED, chain)

    @classmethod
    def one_magnon(cls, chain, q):
        return cls(ONE, chain, q=float(q))

    @classmethod
    def scattering(cls, chain, q):
        q = float(q)
        if not 0.0 < q < np.pi:
            raise DomainError("scattering momentum must lie strictly inside (0, pi)")
        if q < EDGE_SWITCH:
            return cls.edge(chain, "0+")
        if q > np.pi - EDGE_SWITCH:
            return cls.edge(chain, "pi-")
        return cls(SCATTERING, chain, q=q)

    @classmethod
    def edge(cls, chain, limit):
        if limit not in EDGE_LIMITS:
            raise DomainError(f"edge limit must be one of {EDGE_LIMITS}")
        return cls(EDGE, chain, limit=limit)

    @classmethod
    def bound(cls, chain):
        """Exact finite-N zero-momentum bound pair with roots (i eta, -i eta)."""
        if chain.delta <= 1.0:
            raise DomainError("two-magnon bound state requires delta > 1")
        return cls(BOUND, chain, eta=_bound_eta(chain))

    @classmethod
    def general(cls, chain, roots: BetheRootSet):
        return cls(GENERAL, chain, roots=roots)

    @property
    def l(self) -> int:
        return {VACUUM: 0, ONE: 1, SCATTERING: 2, EDGE: 2, BOUND: 2,
                SATURATED: self.chain.N}.get(self.variant, self.roots.l if self.roots else 0)

    def root_set(self) -> BetheRootSet:
        """Quasi-momenta as a root set (complex for the bound pair)."""
        if self.variant == VACUUM:
            return BetheRootSet(0, (), (), 0.0)
        if self.variant == ONE:
            return BetheRootSet(1, (0,), (self.q,), 0.0)
        if self.variant == SCATTERING:
            return BetheRootSet(2, (0, 0), (self.q, -self.q), np.nan)
        if self.variant == BOUND:
            return BetheRootSet(2, (0, 0), (1j * self.eta, -1j * self.eta), 0.0)
        if self.variant == GENERAL:
            return self.roots
        raise DomainError(f"{self.variant} state has no root set")


def _bound_eta(chain: ChainSpec) -> float:
    """Root of exp(-N eta) = S(i eta, -i eta) beyond ln(Delta)."""
    N, D = chain.N, chain.delta
    a = np.log(D)

    def g(eta):
        return np.exp(-N * eta) * (D * np.exp(eta) - 1.0) - (1.0 - D * np.exp(-eta))

    b = a + 1.0
    while g(b) > 0:
        b += 1.0
    if g(a) <= 0:
        return a
    return brentq(g, a, b, xtol=1e-16, rtol=1e-15, maxiter=500)


def sector_energy(roots: BetheRootSet, chain: ChainSpec) -> float:
    """epsilon_l = -N Delta/2 + 2 sum_j (Delta - cos q_j); complex roots allowed."""
    N, D = chain.N, chain.delta
    e = -0.5 * N * D + 2.0 * sum(D - np.cos(complex(q)) for q in roots.roots)
    return float(np.real(e))


def state_energy(state: MagnonState) -> float:
    N, D = state.chain.N, state.chain.delta
    if state.variant == SATURATED:
        return -0.5 * N * D
    if state.variant == EDGE:
        q = 0.0 if state.limit == "0+" else np.pi
        return -0.5 * N * D + 4.0 * (D - np.cos(q))
    return sector_energy(state.root_set(), state.chain)


# --------------------------------------------------------------------------
# amplitudes and vectors
# --------------------------------------------------------------------------

def sector_basis(N: int, l: int):
    return list(itertools.combinations(range(1, N + 1), l))


def ring_distance(x1: int, x2: int, N: int) -> int:
    r = abs(x2 - x1) % N
    return min(r, N - r)


def _pair_weights(q, delta):
    """Coefficient of e^{iqr} relative to e^{-iqr} in the zero-momentum pair."""
    return complex(s_matrix(-q, q, delta))


def _raw_amplitude(state: MagnonState, pos):
    N, D = state.chain.N, state.chain.delta
    v = state.variant
    if v in (VACUUM, SATURATED):
        return 1.0 + 0j
    if v == ONE:
        return np.exp(1j * state.q * pos[0]) / np.sqrt(N)
    x1, x2 = pos[0], pos[1]
    r = x2 - x1
    if v == SCATTERING:
        q = state.q
        return np.exp(-1j * q * r) + _pair_weights(q, D) * np.exp(1j * q * r)
    if v == EDGE:
        a = -1j * np.sqrt(3.0) / N**2 * ring_distance(x1, x2, N)
        return a * (-1) ** r if state.limit == "pi-" else a
    if v == BOUND:
        return np.cosh(state.eta * (r - 0.5 * N)) + 0j
    if v == GENERAL:
        q = np.asarray(state.roots.roots, dtype=complex)
        l = len(q)
        total = 0j
        for perm in itertools.permutations(range(l)):
            A = 1 + 0j
            for i in range(l):
                for j in range(i + 1, l):
                    a, b = perm[i], perm[j]
                    if a > b:
                        A *= s_matrix(q[a], q[b], D)
            total += A * np.exp(1j * sum(q[perm[i]] * pos[i] for i in range(l)))
        return total
    raise DomainError(f"unknown variant {v}")


def _check_positions(state, positions):
    pos = tuple(int(p) for p in positions)
    if len(pos) != state.l:
        raise DomainError(f"expected {state.l} positions, got {len(pos)}")
    N = state.chain.N
    if any(p < 1 or p > N for p in pos) or any(b <= a for a, b in zip(pos, pos[1:])):
        raise DomainError("positions must be strictly increasing within 1..N")
    return pos


def dense_vector(state: MagnonState) -> np.ndarray:
    """Unit-norm amplitudes over the lexicographic sector basis."""
    N, l = state.chain.N, state.l
    cap = DENSE_CAP_L2 if l <= 2 or l >= N - 2 else DENSE_CAP_GENERAL
    if N > cap:
        raise ResourceCapError(f"N={N} exceeds dense-vector cap {cap} for l={l}")
    basis = sector_basis(N, l)
    vec = np.array([_raw_amplitude(state, c) for c in basis], dtype=complex)
    nrm = np.linalg.norm(vec)
    if nrm == 0:
        raise DegenerateSolutionError("state vector vanishes identically")
    return vec / nrm


def _bound_norm(state):
    N = state.chain.N
    s = sum((N - r) * np.cosh(state.eta * (r - 0.5 * N)) ** 2 for r in range(1, N))
    return 1.0 / np.sqrt(s)


def amplitude(state: MagnonState, positions) -> complex:
    """Amplitude of the state on the configuration `positions`.

    Scattering, bound, one-magnon and general states are unit-normalized
    over the sector basis.  Edge states return the closed-form values
    -i sqrt(3)/N^2 * d, d the ring distance, (times (-1)^(x2-x1) for pi-);
    those carry the large-N normalization only, while dense_vector
    renormalizes them.
    """
    pos = _check_positions(state, positions)
    v = state.variant
    raw = _raw_amplitude(state, pos)
    if v == SCATTERING:
        return complex(normalization_constant(state.q, state.chain) * raw)
    if v == BOUND:
        return complex(_bound_norm(state) * raw)
    if v == GENERAL:
        vec_norm = np.linalg.norm([_raw_amplitude(state, c) for c in sector_basis(state.chain.N, state.l)])
        return complex(raw / vec_norm)
    return complex(raw)


def bound_amplitude_limit(chain: ChainSpec, x1: int, x2: int) -> float:
    """Large-N bound pair amplitude sqrt((D^2-1)/N) * D^-(x2-x1)."""
    D = chain.delta
    if D <= 1:
        raise DomainError("bound state requires delta > 1")
    return float(np.sqrt((D * D - 1.0) / chain.N) * D ** (-(x2 - x1)))


def edge_amplitude_abs2_exact(N: int, x1: int, x2: int) -> Fraction:
    """|amplitude|^2 of the edge closed form as an exact rational, 3 d^2 / N^4."""
    d = ring_distance(x1, x2, N)
    return Fraction(3 * d * d, N**4)


def normalization_constant(q: float, chain: ChainSpec, domain: str = "sector") -> float:
    """A_q for psi = A_q (e^{-iqr} + S(-q,q) e^{iqr}).

    domain="sector" normalizes over x1 < x2 <= N (weights N - r for each
    separation r); domain="pair" normalizes over the doubled range
    x1 = 1..N, x2 = x1+1..x1+N-1, where every separation occurs N times.
    """
    if not 0.0 < q < np.pi:
        raise DomainError("q must lie in (0, pi); use the edge states at the ends")
    N, D = chain.N, chain.delta
    S = _pair_weights(q, D)
    z = np.exp(2j * q)
    if domain == "sector":
        J1 = z / (1 - z) * ((N - 1) - z * (1 - z ** (N - 1)) / (1 - z))
        inv2 = N * (N - 1) + 2.0 * (S * J1).real
    elif domain == "pair":
        I1 = N * z * (1 - z ** (N - 1)) / (1 - z)
        inv2 = 2 * N * (N - 1) + 2.0 * (S * I1).real
    else:
        raise DomainError("domain must be 'sector' or 'pair'")
    if inv2 <= 0:
        raise DomainError("non-positive norm; q too close to an edge for this N")
    return float(1.0 / np.sqrt(inv2))


def transition_amplitude_omega(state2: MagnonState) -> complex:
    """<Psi_1(q=0)| sum_i sigma_i^+ |Psi_2> by direct summation.

    sigma^+ removes a magnon, so every pair configuration feeds the two
    one-magnon positions it contains: Omega = (2/sqrt N) sum_c psi_c.
    """
    if state2.l != 2 or state2.variant in (VACUUM, ONE, SATURATED):
        raise DomainError("Omega is defined for two-magnon states only")
    N = state2.chain.N
    return complex(2.0 / np.sqrt(N) * dense_vector(state2).sum())


def omega_closed_form(state2: MagnonState) -> complex:
    """Large-N closed forms used by the rate construction."""
    N, D = state2.chain.N, state2.chain.delta
    if state2.variant == EDGE:
        return (-1j if state2.limit == "0+" else 1j) * np.sqrt(3.0 * N)
    if state2.variant == BOUND:
        return complex(2.0 * np.sqrt((D + 1.0) / (D - 1.0)))
    raise DomainError("closed form available for edge and bound states only")


def sector_to_full(vec, N: int, l: int) -> np.ndarray:
    """Embed a sector-basis vector into the 2^N computational basis.

    Site 1 is the most significant bit; bit value 1 marks a magnon.
    """
    full = np.zeros(2**N, dtype=complex)
    for amp, c in zip(vec, sector_basis(N, l)):
        idx = sum(1 << (N - x) for x in c)
        full[idx] = amp
    return full


def sector_dimension(N: int, l: int) -> int:
    return comb(N, l)
