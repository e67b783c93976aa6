"""Geometric entanglement of the GHZ block, W and two-magnon edge states.

Vectors handed to the optimizers live in the full 2^N computational basis
(site 1 = most significant bit, bit 1 = magnon), as produced by
`bethe_core.sector_to_full`.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .bethe_core import DomainError, ResourceCapError, edge_amplitude_abs2_exact

__all__ = [
    "MeasureKind", "OverlapResult", "InconsistentStateError", "gme_ghz_block",
    "closed_form_measure", "two_magnon_lambda_max", "cme_upper_bound_mixture",
    "optimize_symmetric_product_overlap", "optimize_product_overlap",
    "max_bipartite_schmidt", "edge_block_weight_exact", "convex_roof_ghz_block",
    "INF",
]

INF = math.inf
PRODUCT_CAP = 14


class InconsistentStateError(ValueError):
    pass


class MeasureKind(enum.Enum):
    CME_W = "CME_W"
    GME_W = "GME_W"
    CME_2M = "CME_2M"
    GME_2M = "GME_2M"


@dataclass(frozen=True)
class OverlapResult:
    lambda_max: float
    optimizer: tuple  # per-site (theta, phi); symmetric results repeat one pair
    starts: int
    converged: bool

    @property
    def measure(self) -> float:
        return 1.0 - self.lambda_max


# --------------------------------------------------------------------------
# closed forms
# --------------------------------------------------------------------------

def gme_ghz_block(u: float, v: float) -> float:
    """(u/2)(1 - sqrt(1 - 4 v^2 / u^2)) for the block u/2(|0><0|+|1><1|) + v|0><1| + h.c."""
    v = abs(v)
    if u <= 0 or v == 0:
        return 0.0
    disc = 1.0 - 4.0 * v * v / (u * u)
    if disc < 0:
        if v > 0.5 * u + 1e-12:
            raise InconsistentStateError(f"|v|={v} exceeds u/2={u / 2}")
        disc = 0.0
    # 1 - sqrt(1 - x) written to keep precision for small x
    x = 4.0 * v * v / (u * u)
    return float(0.5 * u * x / (1.0 + math.sqrt(disc)))


def convex_roof_ghz_block(u: float, v: float, N: int = 4, seed: int = 0) -> float:
    """Average E_G over the two-element decomposition, each element brute-forced.

    The block is u/2 |psi1><psi1| + u/2 |psi2><psi2| with
    psi1 = cos t |0..0> + sin t |1..1>, psi2 = sin t |0..0> + cos t |1..1>
    and sin 2t = 2v/u; E_G of each pure element comes from
    optimize_product_overlap on the dense N-qubit vector.
    """
    if u <= 0:
        return 0.0
    t = 0.5 * math.asin(min(1.0, 2.0 * abs(v) / u))
    total = 0.0
    for a, b in ((math.cos(t), math.sin(t)), (math.sin(t), math.cos(t))):
        psi = np.zeros(2**N, dtype=complex)
        psi[0], psi[-1] = a, b
        total += 0.5 * u * optimize_product_overlap(psi, N, starts=8, seed=seed).measure
    return total


def two_magnon_lambda_max(N) -> float:
    """1 - 1/(4N) - 1/(2N^3): the printed largest reduced eigenvalue."""
    if N == INF:
        return 1.0
    return 1.0 - 1.0 / (4 * N) - 1.0 / (2 * N**3)


def closed_form_measure(kind: MeasureKind, N, convention: str = "squared", exact: bool = False):
    """Printed closed forms; N = INF selects the thermodynamic limit.

    `convention` only matters for GME_2M: "squared" returns 1 - lambda^2,
    "linear" returns 1 - lambda, with lambda from two_magnon_lambda_max.
    With exact=True a finite N returns a Fraction (every finite-N form is
    rational), so identities such as N * GME_W = 1 hold without rounding.
    """
    kind = MeasureKind(kind)
    minimum = 3 if kind in (MeasureKind.CME_W, MeasureKind.GME_W) else 4
    if N != INF and (int(N) != N or N < minimum):
        raise DomainError(f"{kind.value} needs integer N >= {minimum}")
    if convention not in ("squared", "linear"):
        raise DomainError("convention must be 'squared' or 'linear'")
    if N == INF:
        return {MeasureKind.CME_W: 1.0 - math.exp(-1.0), MeasureKind.GME_W: 0.0,
                MeasureKind.CME_2M: 1.0 - 3.0 * math.exp(-2.0), MeasureKind.GME_2M: 0.0}[kind]
    # exact powers of large N grow huge, so the float path avoids Fractions
    n = Fraction(int(N)) if exact else float(N)
    if kind is MeasureKind.CME_W:
        val = 1 - ((n - 1) / n) ** (int(N) - 1)
    elif kind is MeasureKind.GME_W:
        val = 1 / n
    elif kind is MeasureKind.CME_2M:
        val = 1 - 3 * (1 - 2 / n) ** (int(N) - 2)
    else:
        lam = 1 - 1 / (4 * n) - 1 / (2 * n**3)
        val = 1 - lam * lam if convention == "squared" else 1 - lam
    return val if exact else float(val)


def cme_upper_bound_mixture(w, N=INF) -> float:
    """CME_W * w1 + CME_2M * (w2(0+) + w2(pi-)); the vacuum adds nothing."""
    arr = w.as_array() if hasattr(w, "as_array") else np.asarray(w, dtype=float)
    return float(closed_form_measure(MeasureKind.CME_W, N) * arr[1]
                 + closed_form_measure(MeasureKind.CME_2M, N) * (arr[2] + arr[3]))


# --------------------------------------------------------------------------
# product-state optimizers
# --------------------------------------------------------------------------

def _check_vector(psi, N, cap):
    psi = np.asarray(psi, dtype=complex).ravel()
    if N > cap:
        raise ResourceCapError(f"N={N} exceeds cap {cap}")
    if psi.size != 2**N:
        raise DomainError(f"vector length {psi.size} is not 2^{N}")
    nrm = np.linalg.norm(psi)
    if nrm == 0:
        raise DomainError("zero vector")
    return psi / nrm


def _popcounts(N):
    idx = np.arange(2**N)
    return np.array([bin(i).count("1") for i in idx])


def _weight_sums(psi, N, staggered):
    """c_k = sum of amplitudes over basis states with k magnons (signed if staggered)."""
    pc = _popcounts(N)
    if staggered:
        # (-1)^(number of magnons on even sites)
        even_mask = sum(1 << (N - x) for x in range(2, N + 1, 2))
        sign = 1 - 2 * (_popcounts_masked(N, even_mask) % 2)
        psi = psi * sign
    return np.bincount(pc, weights=psi.real, minlength=N + 1) + 1j * np.bincount(
        pc, weights=psi.imag, minlength=N + 1)


def _popcounts_masked(N, mask):
    idx = np.arange(2**N) & mask
    return np.array([bin(i).count("1") for i in idx])


def optimize_symmetric_product_overlap(psi, N: int, staggered: bool = False,
                                       grid: int = 2001) -> OverlapResult:
    """max over theta of |<phi(theta)^{(x)N}|psi>|^2, phi = cos t|0> + sin t|1>.

    With `staggered` the even sites use cos t|0> - sin t|1>, the product
    family matching momentum-pi states.  Coarse scan, golden section,
    then Newton on the derivative.
    """
    psi = _check_vector(psi, N, 24)
    c = _weight_sums(psi, N, staggered)
    k = np.arange(N + 1)

    def f(t):
        s, co = math.sin(t), math.cos(t)
        return abs(np.sum(c * co ** (N - k) * s**k)) ** 2

    ts = np.linspace(0.0, 0.5 * np.pi, grid)
    vals = np.array([f(t) for t in ts])
    i = int(np.argmax(vals))
    lo, hi = ts[max(i - 1, 0)], ts[min(i + 1, grid - 1)]
    g = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    x1, x2 = b - g * (b - a), a + g * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > 1e-9:
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + g * (b - a)
            f2 = f(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - g * (b - a)
            f1 = f(x1)
    t = 0.5 * (a + b)
    converged = b - a <= 1e-9
    p0 = (c, N - k, k)
    p1 = _trig_poly_derivative(*p0)
    p2 = _trig_poly_derivative(*p1)
    for _ in range(30):
        g0, g1, g2 = (_trig_poly_eval(*q, t) for q in (p0, p1, p2))
        d1 = 2.0 * (np.conj(g0) * g1).real
        d2 = 2.0 * (abs(g1) ** 2 + (np.conj(g0) * g2).real)
        if d2 >= 0:
            break
        step = -d1 / d2
        t = min(max(t + step, lo), hi)
        if abs(step) < 1e-13:
            break
    best = max(f(t), vals[i])
    if vals[i] > f(t):
        t = ts[i]
    return OverlapResult(float(min(best, 1.0)), ((float(t), 0.0),), 1, converged)


def _trig_poly_derivative(coef, a, b):
    """d/dt of sum coef cos^a sin^b, returned in the same (coef, a, b) form."""
    coef = np.concatenate([coef * b, -coef * a])
    a2 = np.concatenate([a + 1, a - 1])
    b2 = np.concatenate([b - 1, b + 1])
    keep = coef != 0
    return coef[keep], a2[keep], b2[keep]


def _trig_poly_eval(coef, a, b, t):
    return np.sum(coef * math.cos(t) ** a.astype(float) * math.sin(t) ** b.astype(float))


def _site_environment(T, phis, i, N):
    """Contract every site except i with conj(phi_j); returns length-2 vector."""
    out = T
    # contract from the last axis down so axis indices stay valid
    for j in range(N - 1, -1, -1):
        if j == i:
            continue
        out = np.tensordot(out, phis[j].conj(), axes=([j], [0]))
    return out


def optimize_product_overlap(psi, N: int, starts: int = 32, seed: int = 0,
                             max_sweeps: int = 5000) -> OverlapResult:
    """max over all product states of |<phi_1...phi_N|psi>|^2.

    Alternating updates: with all other sites fixed the overlap is
    <phi_i|A> for a 2-vector A, maximized by phi_i = A/|A|.  Each start is
    a seeded random complex product state; the best start wins, ties going
    to the lowest index.
    """
    psi = _check_vector(psi, N, PRODUCT_CAP)
    T = psi.reshape((2,) * N)
    rng = np.random.default_rng(seed)
    best_val, best_phis, all_conv = -1.0, None, True
    for _ in range(starts):
        raw = rng.normal(size=(N, 2)) + 1j * rng.normal(size=(N, 2))
        phis = [r / np.linalg.norm(r) for r in raw]
        val, conv = 0.0, False
        for _ in range(max_sweeps):
            for i in range(N):
                A = _site_environment(T, phis, i, N)
                nrm = np.linalg.norm(A)
                if nrm > 0:
                    phis[i] = A / nrm
            new = float(nrm**2)
            if new - val <= 1e-13 * max(new, 1e-300):
                val, conv = max(val, new), True
                break
            val = new
        all_conv &= conv
        if val > best_val:
            best_val, best_phis = val, [p.copy() for p in phis]
    angles = []
    for p in best_phis:
        p = p * np.exp(-1j * np.angle(p[0])) if abs(p[0]) > 0 else p
        angles.append((float(math.atan2(abs(p[1]), abs(p[0]))), float(np.angle(p[1]))))
    return OverlapResult(float(min(best_val, 1.0)), tuple(angles), starts, all_conv)


def max_bipartite_schmidt(psi, N: int) -> float:
    """Largest reduced-state eigenvalue over all 2^(N-1) - 1 bipartitions.

    For a state of definite magnon number l the reshaped matrix is block
    diagonal in (magnons in A, magnons in B) = (k, l - k); each block is
    decomposed separately.  Mixed-number inputs use a full SVD per cut.
    """
    psi = _check_vector(psi, N, PRODUCT_CAP)
    pc = _popcounts(N)
    support = np.unique(pc[np.abs(psi) > 1e-15])
    l = int(support[0]) if support.size == 1 else None
    T = psi.reshape((2,) * N)
    best = 0.0
    # site 0 always in B, so each unordered cut is visited once
    for mask in range(1, 2 ** (N - 1)):
        A = [j for j in range(1, N) if mask >> (j - 1) & 1]
        B = [j for j in range(N) if j not in A]
        M = np.transpose(T, A + B).reshape(2 ** len(A), 2 ** len(B))
        if l is None:
            s = np.linalg.svd(M, compute_uv=False)[0]
        else:
            ra, rb = _popcounts(len(A)), _popcounts(len(B))
            s = 0.0
            for k in range(max(0, l - len(B)), min(l, len(A)) + 1):
                blk = M[np.ix_(ra == k, rb == l - k)]
                if blk.size:
                    s = max(s, np.linalg.svd(blk, compute_uv=False)[0])
        best = max(best, float(s * s))
    return best


def edge_block_weight_exact(N: int, sites) -> Fraction:
    """Exact weight of the edge closed form with a magnon inside `sites`, the other outside.

    Uses the rational |amplitude|^2 = 3 d^2 / N^4 of the printed edge
    amplitudes, which are not unit-normalized; for a single site this is
    1/(4N) + 1/(2N^3).
    """
    A = {int(s) for s in sites}
    if not A or any(s < 1 or s > N for s in A) or len(A) >= N:
        raise DomainError("sites must be a proper non-empty subset of 1..N")
    total = Fraction(0)
    for x1 in range(1, N + 1):
        for x2 in range(x1 + 1, N + 1):
            if (x1 in A) != (x2 in A):
                total += edge_amplitude_abs2_exact(N, x1, x2)
    return total
