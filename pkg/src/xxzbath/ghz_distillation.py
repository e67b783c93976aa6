"""Recurrence + hashing distillation of GHZ states from the evolved block form.

Block state: rho = u/2 (|0..0><0..0| + |1..1><1..1|) + v |0..0><1..1| + h.c.
+ w/2 (|W><W| + |W-bar><W-bar|).  One recurrence round (bilateral CNOT,
parity postselection on the target copy) maps the unnormalized
coefficients as u -> u^2, w -> w^2/N, v -> v^2 + |v|^2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bethe_core import DomainError

__all__ = [
    "BlockState", "ProtocolTrace", "recurrence_step", "run_protocol",
    "printed_success_probability", "stabilizer_populations", "binary_entropy",
    "hashing_rate", "distillable_rate", "R_MAX_DEFAULT",
]

R_MAX_DEFAULT = 30


@dataclass(frozen=True)
class BlockState:
    u: float
    v: complex
    w: float = 0.0
    N: float = math.inf

    def __post_init__(self):
        if self.u < -1e-12 or self.w < -1e-12:
            raise DomainError("u and w must be non-negative")
        if abs(self.v) > 0.5 * max(self.u, 0.0) + 1e-12:
            raise DomainError(f"|v|={abs(self.v)} exceeds u/2")
        if self.N != math.inf and (int(self.N) != self.N or self.N < 2):
            raise DomainError("N must be an integer >= 2 or infinity")

    @property
    def trace(self) -> float:
        return self.u + self.w

    def normalized(self) -> "BlockState":
        tr = self.trace
        if tr <= 0:
            raise DomainError("cannot normalize a zero-trace block")
        return BlockState(self.u / tr, self.v / tr, self.w / tr, self.N)


@dataclass(frozen=True)
class ProtocolTrace:
    rounds: list = field(default_factory=list)  # dicts with u, w, v, p
    cumulative_probability: float = 1.0


def recurrence_step(state: BlockState):
    """One round on the coefficients; returns (unnormalized output, probability).

    The probability is the trace of the postselected two-copy state,
    u^2 + w^2/N; for a normalized w = 0 input this is u^2.  The printed
    value 2u^2 is available from printed_success_probability.
    """
    u, w, v = state.u, state.w, complex(state.v)
    w_new = 0.0 if state.N == math.inf else w * w / state.N
    out = BlockState(u * u, v * v + abs(v) ** 2, w_new, state.N)
    return out, float(out.trace)


def printed_success_probability(u: float) -> float:
    """2u^2, the per-round success probability in its printed form."""
    return 2.0 * u * u


def run_protocol(state: BlockState, rounds: int, normalize: bool = True) -> ProtocolTrace:
    """Iterate recurrence_step.

    With normalize=True every postselected output is renormalized before the
    next round and p is the true per-round success probability.  With
    normalize=False the maps act on raw coefficients, as in the printed
    cumulative identity prod p_i = u^(2^(r+1)-2) (w = 0).
    """
    if rounds < 0:
        raise DomainError("rounds must be >= 0")
    cur = state.normalized() if normalize else state
    recs, cum = [], 1.0
    for _ in range(rounds):
        nxt, p = recurrence_step(cur)
        if p <= 0:
            recs.append({"u": 0.0, "w": 0.0, "v": 0j, "p": 0.0})
            cum = 0.0
            break
        cur = nxt.normalized() if normalize else nxt
        cum *= p
        recs.append({"u": cur.u, "w": cur.w, "v": complex(cur.v), "p": p})
    return ProtocolTrace(recs, cum)


def stabilizer_populations(r: int, v0: complex):
    """(P0, P1) = 1/2 [1 +- (2 Re v0)^(2^r)]."""
    if r < 0:
        raise DomainError("r must be >= 0")
    x = 2.0 * complex(v0).real
    if abs(x) > 1 + 1e-12:
        raise DomainError("|2 Re v0| must not exceed 1")
    x = max(-1.0, min(1.0, x))
    # x^(2^r) by repeated squaring keeps the even-power sign exact
    for _ in range(r):
        x *= x
    return 0.5 * (1.0 + x), 0.5 * (1.0 - x)


def binary_entropy(p0: float, p1: float | None = None) -> float:
    if p1 is None:
        p1 = 1.0 - p0
    h = 0.0
    for p in (p0, p1):
        if p > 0:
            h -= p * math.log2(p)
    return h


def hashing_rate(P_mu_entropy: float, P_nu_entropy: float) -> float:
    """1 - H(P_mu) - H(P_nu); can be negative."""
    if P_mu_entropy < 0 or P_nu_entropy < 0:
        raise DomainError("entropies must be non-negative")
    return 1.0 - P_mu_entropy - P_nu_entropy


def distillable_rate(u: float, v: complex, r_max: int = R_MAX_DEFAULT):
    """max_r u^(2^(r+1)-2) (1 - h(P0(r), P1(r))); returns (rate, best_r).

    Inputs are restricted to real v >= 0, the case produced by the dynamics.
    u <= 0 aborts with rate 0.  Ties go to the smaller r.
    """
    if r_max < 0:
        raise DomainError("r_max must be >= 0")
    v = complex(v)
    if v.imag != 0 or v.real < 0:
        raise DomainError("distillation inputs must have real v >= 0")
    if u <= 0:
        return 0.0, 0
    if v.real > 0.5 * u + 1e-12:
        raise DomainError("|v| exceeds u/2")
    best, best_r = 0.0, 0
    for r in range(r_max + 1):
        prob = u ** (2 ** (r + 1) - 2)
        if prob == 0.0:
            break
        P0, P1 = stabilizer_populations(r, v)
        val = prob * hashing_rate(0.0, binary_entropy(P0, P1))
        if val > best:
            best, best_r = val, r
    return float(min(max(best, 0.0), 1.0)), best_r


def _recurrence_v_closed_form(v: float, r: int) -> float:
    """v_r = 2^(2^r - 1) v^(2^r) for real v >= 0 after r normalized rounds (w = 0)."""
    return float(2.0 ** (2**r - 1) * v ** (2**r))


def rate_table(u: float, v: float, r_max: int = R_MAX_DEFAULT) -> np.ndarray:
    """Per-r objective values, for inspection."""
    out = []
    for r in range(r_max + 1):
        P0, P1 = stabilizer_populations(r, v)
        out.append(u ** (2 ** (r + 1) - 2) * (1.0 - binary_entropy(P0, P1)))
    return np.array(out)
