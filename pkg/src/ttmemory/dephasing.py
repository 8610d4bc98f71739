"""Closed-form pure-dephasing qubit family.

Pure dephasing keeps both populations fixed and multiplies the coherence
ρ_10 by a complex factor c with |c| <= 1 (ρ_01 by its conjugate).  In the
column-stacking convention the superoperator is simply
diag(1, c, conj(c), 1), which makes this family a fully analytic test bed:

* the two-point map between factors c1 and c2 is dephasing with c2/c1 and is
  completely positive iff |c2| <= |c1|;
* the two-step transfer tensor over an equally spaced grid is dephasing-like
  with factor c2 - c1² and vanishes iff c2 = c1².

Together these give the canonical counterexample of a map chain that admits
CPTP two-point divisors while its two-step transfer tensor is non-zero.

For a stationary environment the family is time translation invariant, so
the product-state propagation map over [t_j, t_k] is the dephasing map with
factor c(t_k - t_j) — not the ratio c(t_k)/c(t_j), which coincides with it
only for exponential decay.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .linalg import frobenius_norm
from .maps import is_cptp, intermediate_map
from .transfer import TTHierarchy, build_via_gamma, multistep_profile

__all__ = [
    "DephasingFamily",
    "dephasing_map",
    "counterexample_report",
    "CounterexampleReport",
    "semigroup_hierarchy_check",
    "dephasing_hierarchy",
]


@dataclass(frozen=True)
class DephasingFamily:
    """A dephasing function t -> c(t) with c(0) = 1 and |c(t)| <= 1."""

    func: Callable[[float], complex]

    def __call__(self, t: float) -> complex:
        c = complex(self.func(t))
        if abs(c) > 1 + 1e-12:
            raise ValueError(f"|c({t})| = {abs(c):g} exceeds 1")
        return c

    @classmethod
    def exponential(cls, rate: float) -> "DephasingFamily":
        if rate < 0:
            raise ValueError("decay rate must be non-negative")
        return cls(lambda t: np.exp(-rate * t))


def dephasing_map(c: complex) -> np.ndarray:
    """Superoperator fixing populations and scaling ρ_10 by c."""
    c = complex(c)
    if abs(c) > 1 + 1e-12:
        raise ValueError(f"dephasing factor must satisfy |c| <= 1, got |c| = {abs(c):g}")
    return np.diag([1.0, c, np.conj(c), 1.0]).astype(complex)


@dataclass
class CounterexampleReport:
    e21_cptp: bool
    e21_min_choi_eig: float
    t20_norm: float
    invertible: bool


def counterexample_report(c1: complex, c2: complex) -> CounterexampleReport:
    """Divisibility vs two-step-tensor status for a pair of coherence factors.

    Builds the maps with factors c1 (first step) and c2 (two steps), forms
    the two-point divisor E = Phi_2 Phi_1^{-1} and the two-step tensor
    T_{2,0} = Phi_2 - Phi_1², and reports the completely-positive check for
    the former alongside the norm of the latter.
    """
    c1, c2 = complex(c1), complex(c2)
    if c1 == 0:
        raise ValueError("c1 = 0 makes the one-step map non-invertible")
    phi1 = dephasing_map(c1)
    phi2 = dephasing_map(c2)
    inter = intermediate_map(phi2, phi1)
    rep = is_cptp(inter.map, tol=1e-12)
    t20 = phi2 - phi1 @ phi1
    return CounterexampleReport(
        e21_cptp=rep.cp,
        e21_min_choi_eig=rep.min_choi_eig,
        t20_norm=frobenius_norm(t20),
        invertible=inter.invertible,
    )


def dephasing_hierarchy(family: DephasingFamily, delta: float, steps: int) -> TTHierarchy:
    """Transfer-tensor table of a stationary-environment dephasing chain.

    Phi_k carries the factor c(k·delta); the product-state map over an
    n-step gap carries c(n·delta) by time-translation invariance.
    """
    gammas = {
        (k, j): dephasing_map(family((k - j) * delta))
        for k in range(1, steps + 1)
        for j in range(k)
    }
    return build_via_gamma(gammas, steps)


def semigroup_hierarchy_check(gamma_rate: float, delta: float, steps: int) -> float:
    """Largest multi-step tensor norm for an exponential dephasing chain.

    Exponential decay makes the chain a semigroup (Phi_k = Phi_1^k), so every
    entry beyond one step cancels; the returned maximum is zero up to
    roundoff.  Non-exponential families fed through
    :func:`dephasing_hierarchy` leave genuinely non-zero multi-step entries.
    """
    family = DephasingFamily.exponential(gamma_rate)
    hier = dephasing_hierarchy(family, delta, steps)
    return multistep_profile(hier).max_norm()
