"""Bath-induced rates and closed-form population/coherence dynamics.

Rates are expressed through k = (pi/2) * gamma * f * n, the common prefactor
left once the sqrt(N) matrix elements and 1/N_b combine into f = N/N_b.
Gibbs factors use p(beta, w) = e^{-beta w} / (2 cosh(beta w)).

Channel map of the 4-level W-sector generator (column = source level):

    a1: |Psi0> -> |Psi1>        k   p(1 - D)
    b1: |Psi1> -> |Psi0>        k   p(D - 1)
    b2: |Psi1> -> |Psi2(0+)>    3k  p(1 - D)
    a2: |Psi2(0+)> -> |Psi1>    3k  p(D - 1)
    b3: |Psi1> -> |Psi2(pi-)>   3k  p(-3 - D)
    a3: |Psi2(pi-)> -> |Psi1>   3k  p(3 + D)

The factor 3 is |Omega|^2 / N for both two-magnon edge states.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.special import expit, gamma as gamma_fn

from .bethe_core import DomainError

__all__ = [
    "DipolarParams", "BathSpec", "GhzSectorState", "MarkovGenerator",
    "WPopulations", "SpectrumResult", "gibbs_population", "effective_gamma",
    "ghz_sector_evolve", "ghz_sector_rhs", "relaxation_population",
    "coherence_decay_extremal", "two_level_rates", "build_markov_generator",
    "generator_spectrum", "cubic_coefficients", "evolve_populations",
    "stationary_distribution", "critical_temperature", "lamb_shift_pv",
]


@dataclass(frozen=True)
class DipolarParams:
    C: float
    sigma0: float
    d: int
    nu: float
    a: float


@dataclass(frozen=True)
class BathSpec:
    beta: float
    gamma: float = 1.0
    f: float = 0.01
    n: float = 10.0
    dipolar: DipolarParams | None = None

    def __post_init__(self):
        if not self.beta >= 0:
            raise DomainError("beta must be >= 0")
        if not 0 < self.f < 1:
            raise DomainError("f = N/N_b must lie in (0, 1)")
        if not (self.gamma > 0 and self.n > 0):
            raise DomainError("gamma and n must be positive")
        if self.dipolar is not None and not 2 * self.dipolar.nu > self.dipolar.d:
            raise DomainError("dipolar bath needs 2 nu > d")

    @property
    def k(self) -> float:
        """(pi/2) gamma f n."""
        return 0.5 * np.pi * self.gamma * self.f * self.n


def gibbs_population(beta: float, omega: float) -> float:
    """p(beta, w) evaluated as 1 / (1 + e^{2 beta w}) to avoid overflow."""
    if beta == 0 or omega == 0:
        return 0.5
    return float(expit(-2.0 * beta * omega))


def effective_gamma(dip: DipolarParams) -> float:
    """gamma = C^2 sigma0 (2 pi^{d/2} / Gamma(d/2)) a^{d - 2 nu} / (2 nu - d)."""
    if not 2 * dip.nu > dip.d:
        raise DomainError("effective gamma diverges unless 2 nu > d")
    if dip.a <= 0:
        raise DomainError("cutoff a must be positive")
    area = 2 * np.pi ** (dip.d / 2) / gamma_fn(dip.d / 2)
    return float(dip.C**2 * dip.sigma0 * area * dip.a ** (dip.d - 2 * dip.nu) / (2 * dip.nu - dip.d))


# --------------------------------------------------------------------------
# GHZ sector
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class GhzSectorState:
    u: float
    v: float
    t: float
    physical: bool = True


def ghz_sector_evolve(t: float, bath: BathSpec, delta: float) -> GhzSectorState:
    """Closed-form u(t), v(t) of the evolved GHZ state.

    u = 1 - 2p (1 - e^{-pi gamma f n t}),  v = 1/2 exp(-pi gamma f n p t),
    with p = p(beta, 1 - delta).  `physical` is False when the pair no longer
    describes a positive state (u < 0 or |v| > u/2).
    """
    if t < 0:
        raise DomainError("t must be >= 0")
    p = gibbs_population(bath.beta, 1.0 - delta)
    lam = 2.0 * bath.k  # pi gamma f n
    u = 1.0 - 2.0 * p * (-np.expm1(-lam * t))
    v = 0.5 * np.exp(-lam * p * t)
    physical = bool(u >= 0 and abs(v) <= 0.5 * u + 1e-12)
    return GhzSectorState(float(u), float(v), float(t), physical)


def ghz_sector_rhs(t, y, bath: BathSpec, delta: float):
    """Right-hand side of the two-level relaxation (u) and coherence (v) equations."""
    p = gibbs_population(bath.beta, 1.0 - delta)
    lam = 2.0 * bath.k
    u, v = y
    return np.array([-lam * (u - (1.0 - 2.0 * p)), -lam * p * v])


def relaxation_population(t: float, rate_up: float, rate_down: float) -> float:
    """rho11(t) = 1 - [R_dn/(R_dn+R_up)] (1 - e^{-2t(R_dn+R_up)}), rho11(0) = 1.

    Solves d rho11/dt = 2 R_up (1 - rho11) - 2 R_dn rho11.
    """
    if rate_up < 0 or rate_down < 0:
        raise DomainError("rates must be non-negative")
    tot = rate_up + rate_down
    if tot == 0:
        return 1.0
    return float(1.0 - rate_down / tot * (-np.expm1(-2.0 * t * tot)))


def coherence_decay_extremal(t: float, rate: float, initial: float) -> float:
    """Re rho_0N(t) = Re rho_0N(0) e^{-2 t rate}; the imaginary part stays zero."""
    if rate < 0:
        raise DomainError("rate must be non-negative")
    return float(initial * np.exp(-2.0 * t * rate))


def two_level_rates(bath: BathSpec, delta: float):
    """(a1, b1): rates |Psi0> -> |Psi1> and back."""
    k = bath.k
    return (k * gibbs_population(bath.beta, 1.0 - delta),
            k * gibbs_population(bath.beta, delta - 1.0))


# --------------------------------------------------------------------------
# W sector
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class MarkovGenerator:
    a1: float
    a2: float
    a3: float
    b1: float
    b2: float
    b3: float

    def __post_init__(self):
        if min(self.a1, self.a2, self.a3, self.b1, self.b2, self.b3) < 0:
            raise DomainError("rates must be non-negative")

    @property
    def matrix(self) -> np.ndarray:
        a1, a2, a3, b1, b2, b3 = self.a1, self.a2, self.a3, self.b1, self.b2, self.b3
        return np.array([
            [-a1, b1, 0.0, 0.0],
            [a1, -(b1 + b2 + b3), a2, a3],
            [0.0, b2, -a2, 0.0],
            [0.0, b3, 0.0, -a3],
        ])

    @property
    def a(self):
        return np.array([self.a1, self.a2, self.a3])

    @property
    def b(self):
        return np.array([self.b1, self.b2, self.b3])


@dataclass(frozen=True)
class WPopulations:
    w0: float
    w1: float
    w2p: float
    w2m: float
    method: str = field(default="", compare=False)

    def __post_init__(self):
        w = self.as_array()
        if np.any(w < -1e-9) or np.any(w > 1 + 1e-9) or abs(w.sum() - 1) > 1e-9:
            raise DomainError(f"invalid population vector {w}")

    def as_array(self) -> np.ndarray:
        return np.array([self.w0, self.w1, self.w2p, self.w2m])

    @classmethod
    def from_array(cls, w, method=""):
        return cls(*(float(x) for x in w), method=method)


W_INITIAL = (0.0, 1.0, 0.0, 0.0)


def build_markov_generator(bath: BathSpec, delta: float, omega_sq_over_n: float = 3.0) -> MarkovGenerator:
    """Generator of the Bethe-basis populations (w0, w1, w2(0+), w2(pi-))."""
    k, beta = bath.k, bath.beta
    c = omega_sq_over_n * k
    return MarkovGenerator(
        a1=k * gibbs_population(beta, 1.0 - delta),
        b1=k * gibbs_population(beta, delta - 1.0),
        b2=c * gibbs_population(beta, 1.0 - delta),
        a2=c * gibbs_population(beta, delta - 1.0),
        b3=c * gibbs_population(beta, -3.0 - delta),
        a3=c * gibbs_population(beta, 3.0 + delta),
    )


def cubic_coefficients(M: MarkovGenerator):
    """(c2, c1, c0) of lambda^3 + c2 lambda^2 + c1 lambda + c0 for the non-zero modes.

    Nonzero eigenvalues satisfy 1 + sum_i b_i / (a_i + lambda) = 0, which
    clears to prod(a_i + lambda) + sum_i b_i prod_{j != i}(a_j + lambda) = 0.
    """
    a1, a2, a3 = M.a
    b1, b2, b3 = M.b
    c2 = a1 + a2 + a3 + b1 + b2 + b3
    c1 = a1 * a2 + a1 * a3 + a2 * a3 + b1 * (a2 + a3) + b2 * (a1 + a3) + b3 * (a1 + a2)
    c0 = a1 * a2 * a3 + a2 * a3 * b1 + a1 * a3 * b2 + a1 * a2 * b3
    return c2, c1, c0


def _real_cubic_roots(c2, c1, c0):
    """Three real roots of x^3 + c2 x^2 + c1 x + c0 (trigonometric form + Newton polish)."""
    s = c2 / 3.0
    p = c1 - c2 * c2 / 3.0
    q = 2.0 * c2**3 / 27.0 - c2 * c1 / 3.0 + c0
    if p >= 0:
        # only possible when the three roots coincide
        roots = np.full(3, -s)
    else:
        m = 2.0 * np.sqrt(-p / 3.0)
        arg = np.clip(3.0 * q / (p * m), -1.0, 1.0)
        th = np.arccos(arg) / 3.0
        roots = m * np.cos(th - 2.0 * np.pi * np.arange(3) / 3.0) - s
    scale = max(1.0, abs(c2))
    for _ in range(3):
        f = ((roots + c2) * roots + c1) * roots + c0
        df = (3.0 * roots + 2.0 * c2) * roots + c1
        ok = np.abs(df) > 1e-14 * scale**2
        roots = np.where(ok, roots - np.where(ok, f / np.where(ok, df, 1.0), 0.0), roots)
    return np.sort(roots)


@dataclass(frozen=True)
class SpectrumResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns
    degenerate: bool


def generator_spectrum(M: MarkovGenerator, degeneracy_tol: float = 1e-4) -> SpectrumResult:
    """lambda = 0 plus the cubic roots, eigenvectors (b1/(a1+l), 1, b2/(a2+l), b3/(a3+l)).

    A cubic with a (near) double root only fixes that root to ~sqrt(eps);
    when two roots lie within `degeneracy_tol` (relative) the eigenvalues are
    taken from a dense eigensolver instead and the result is flagged
    degenerate, which sends evolve_populations to the matrix exponential.
    """
    lam = np.concatenate([[0.0], _real_cubic_roots(*cubic_coefficients(M))])
    scale = max(np.max(np.abs(lam)), 1e-300)
    gaps = np.abs(np.subtract.outer(lam, lam))[np.triu_indices(4, 1)]
    degenerate = bool(np.min(gaps) <= degeneracy_tol * scale)
    if degenerate:
        lam = np.sort(np.linalg.eigvals(M.matrix).real)[::-1]
        lam[0] = 0.0
    a, b = M.a, M.b
    vecs = np.zeros((4, 4))
    for j, l in enumerate(lam):
        den = a + l
        small = np.abs(den) <= 1e-12 * scale
        if np.any(small):
            degenerate = True
            den = np.where(small, np.inf, den)
        vecs[:, j] = [b[0] / den[0], 1.0, b[1] / den[1], b[2] / den[2]]
    return SpectrumResult(lam, vecs, degenerate)


def evolve_populations(t: float, M: MarkovGenerator, w0=W_INITIAL, cond_cap: float = 1e12) -> WPopulations:
    """w(t) = sum_l c_l e^{lambda t} v_l with c fixed by w(0).

    Falls back to the matrix exponential when the spectrum is degenerate or
    the eigenvector basis is too ill-conditioned to expand w(0) accurately;
    the `method` field records which route produced the result.
    """
    if t < 0:
        raise DomainError("t must be >= 0")
    w0 = np.asarray(w0.as_array() if isinstance(w0, WPopulations) else w0, dtype=float)
    if t == 0:
        return WPopulations.from_array(w0, "initial")
    spec = generator_spectrum(M)
    method = "spectral"
    if not spec.degenerate:
        V = spec.eigenvectors
        if np.linalg.cond(V) < cond_cap:
            c = np.linalg.solve(V, w0)
            w = V @ (c * np.exp(spec.eigenvalues * t))
        else:
            method = "expm"
    else:
        method = "expm"
    if method == "expm":
        from scipy.linalg import expm
        w = expm(M.matrix * t) @ w0
    w = np.clip(w, 0.0, None)
    return WPopulations.from_array(w / w.sum(), method)


def stationary_distribution(M: MarkovGenerator) -> WPopulations:
    """Detailed-balance solution on the star-shaped transition graph centred on |Psi1>."""
    a1, a2, a3 = M.a
    b1, b2, b3 = M.b
    w = np.array([b1 * a2 * a3, a1 * a2 * a3, b2 * a1 * a3, b3 * a1 * a2])
    if w.sum() == 0:
        # some a_i vanish: use the nullspace directly
        _, _, vh = np.linalg.svd(M.matrix)
        w = np.abs(vh[-1])
    return WPopulations.from_array(w / w.sum(), "stationary")


# --------------------------------------------------------------------------
# temperature scale and Lamb shift
# --------------------------------------------------------------------------

def critical_temperature(omega: float, x: float = 0.007) -> float:
    """T_c with p(1/T_c, omega) = x, i.e. T_c = 2 omega / ln((1-x)/x)."""
    if omega <= 0:
        raise DomainError("omega must be positive")
    if not 0 < x < 0.5:
        raise DomainError("threshold x must lie in (0, 1/2)")
    return float(2.0 * omega / np.log((1.0 - x) / x))


def lamb_shift_pv(omega0: float, bath: BathSpec, window: float = 10.0, tol: float = 1e-10) -> float:
    """PV int p(beta, w) n / (2w - omega0) dw over |w - omega0/2| < window.

    Folding the two sides of the pole gives a smooth integrand, so the
    symmetric-excision limit is taken exactly rather than by shrinking a hole.
    Diagnostic only; the propagators above use on-shell rates.
    """
    if window <= 0:
        raise DomainError("window must be positive")
    w0 = 0.5 * omega0

    def folded(s):
        if s == 0:
            return 0.0
        return (gibbs_population(bath.beta, w0 + s) - gibbs_population(bath.beta, w0 - s)) / s

    val, err = quad(folded, 0.0, window, limit=400, epsabs=tol, epsrel=1e-12)
    if err > 100 * tol:
        from .reference_oracles import AccuracyError
        raise AccuracyError(f"principal value quadrature error {err:.2e}")
    return float(0.5 * bath.n * val)
