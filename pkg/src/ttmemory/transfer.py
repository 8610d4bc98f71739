"""Unconditional transfer-tensor hierarchy and divisibility analysis.

Transfer tensors T_{k,j} relate the chain of reduced dynamical maps through

    Phi_k = sum_{j<k} T_{k,j} Phi_j ,

and the whole triangular table can be rebuilt from the product-state
propagation maps Gamma_{k|j} by the recursion (filled in increasing step
count n within each k)

    T_{k,k-n} = Gamma_{k|k-n} - sum_{j=1}^{n-1} T_{k,k-j} Gamma_{k-j|k-n} .

Multi-step entries (n >= 2) measure how much the reduced dynamics remembers
beyond the previous step; their vanishing is sufficient, but not necessary,
for the chain of maps to admit CPTP two-point divisors.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import frobenius_norm
from .maps import as_matrix, dynamical_map, gamma_map, intermediate_map, is_cptp

__all__ = [
    "TTHierarchy",
    "gamma_table",
    "phi_list",
    "build_via_gamma",
    "build_via_phi",
    "reconstruction_residuals",
    "multistep_profile",
    "MultistepProfile",
    "divisibility_report",
    "DivisibilityEntry",
]


@dataclass
class TTHierarchy:
    """Triangular table of transfer tensors T_{k,j}, 0 <= j < k <= num_steps."""

    tensors: dict[tuple[int, int], np.ndarray]
    num_steps: int
    dim: int
    route: str
    residuals: list[float] = field(default_factory=list)

    def tensor(self, k: int, j: int) -> np.ndarray:
        return self.tensors[(k, j)]


def gamma_table(model) -> dict[tuple[int, int], np.ndarray]:
    """All product-state propagation maps Gamma_{k|j} for 0 <= j < k <= M."""
    m = model.schedule.num_steps
    return {
        (k, j): gamma_map(model, k, j).matrix for k in range(1, m + 1) for j in range(k)
    }


def phi_list(model) -> list[np.ndarray]:
    """Dynamical maps [Phi_0, ..., Phi_M] of the unmeasured evolution."""
    m = model.schedule.num_steps
    return [dynamical_map(model, k).matrix for k in range(m + 1)]


def _require(table, key):
    if key not in table:
        raise KeyError(f"gamma table is missing entry {key}")
    return as_matrix(table[key])


def build_via_gamma(gammas: dict, num_steps: int) -> TTHierarchy:
    """Fill the hierarchy purely from the Gamma recursion.

    Needs Gamma_{k|j} for every 0 <= j < k <= num_steps; the k-step row uses
    Gamma_{k|0}, which for a product initial state coincides with Phi_k.
    """
    tensors: dict[tuple[int, int], np.ndarray] = {}
    dim = None
    for k in range(1, num_steps + 1):
        for n in range(1, k + 1):
            acc = _require(gammas, (k, k - n)).copy()
            if dim is None:
                dim = int(round(np.sqrt(acc.shape[0])))
            for j in range(1, n):
                acc -= tensors[(k, k - j)] @ _require(gammas, (k - j, k - n))
            tensors[(k, k - n)] = acc
    return TTHierarchy(tensors=tensors, num_steps=num_steps, dim=dim or 0, route="via-gamma")


def build_via_phi(phis: list, gammas: dict) -> TTHierarchy:
    """Fill the hierarchy from the dynamical maps plus multi-step Gammas.

    One-step and intermediate rows come from the Gamma recursion (the
    decomposition is underdetermined by the Phi chain alone); the k-step
    entry T_{k,0} is the residual that closes the reconstruction identity
    against the supplied Phi list.
    """
    num_steps = len(phis) - 1
    phis = [as_matrix(p) for p in phis]
    tensors: dict[tuple[int, int], np.ndarray] = {}
    dim = int(round(np.sqrt(phis[0].shape[0])))
    for k in range(1, num_steps + 1):
        for n in range(1, k):
            acc = _require(gammas, (k, k - n)).copy()
            for j in range(1, n):
                acc -= tensors[(k, k - j)] @ _require(gammas, (k - j, k - n))
            tensors[(k, k - n)] = acc
        acc = phis[k].copy()
        for j in range(1, k):
            acc -= tensors[(k, j)] @ phis[j]
        tensors[(k, 0)] = acc
    hier = TTHierarchy(tensors=tensors, num_steps=num_steps, dim=dim, route="via-phi")
    hier.residuals = reconstruction_residuals(hier, phis)
    return hier


def reconstruction_residuals(tt: TTHierarchy, phis: list) -> list[float]:
    """||Phi_k - sum_j T_{k,j} Phi_j||_F for k = 1..num_steps."""
    phis = [as_matrix(p) for p in phis]
    out = []
    for k in range(1, tt.num_steps + 1):
        acc = np.zeros_like(phis[0])
        for j in range(k):
            acc += tt.tensors[(k, j)] @ phis[j]
        out.append(frobenius_norm(phis[k] - acc))
    return out


@dataclass
class MultistepProfile:
    """Frobenius norms of the n >= 2 transfer tensors, keyed by (k, n)."""

    norms: dict[tuple[int, int], float]
    one_step_max: float

    def all_vanish(self, tol: float | None = None) -> bool:
        # "zero" is judged relative to the size of the one-step tensors
        if tol is None:
            tol = 1e-8 * max(1.0, self.one_step_max)
        if not self.norms:
            return True
        return max(self.norms.values()) <= tol

    def max_norm(self) -> float:
        return max(self.norms.values()) if self.norms else 0.0


def multistep_profile(tt: TTHierarchy) -> MultistepProfile:
    norms = {
        (k, k - j): frobenius_norm(t)
        for (k, j), t in tt.tensors.items()
        if k - j >= 2
    }
    one_step = [frobenius_norm(t) for (k, j), t in tt.tensors.items() if k - j == 1]
    return MultistepProfile(norms=norms, one_step_max=max(one_step, default=0.0))


@dataclass
class DivisibilityEntry:
    k: int
    j: int
    min_choi_eig: float
    cp: bool
    tp: bool
    invertible: bool


def divisibility_report(phis: list, tol: float = 1e-9) -> tuple[list[DivisibilityEntry], bool]:
    """CPTP status of every two-point map E_{k,j} with Phi_k = E_{k,j} Phi_j.

    Returns the per-pair entries and the overall flag (every pair cp and tp).
    The j = 0 column reduces to the maps Phi_k themselves.
    """
    phis = [as_matrix(p) for p in phis]
    entries = []
    overall = True
    for k in range(1, len(phis)):
        for j in range(k):
            inter = intermediate_map(phis[k], phis[j])
            rep = is_cptp(inter.map, tol=tol, tp_tol=max(tol, 1e-9))
            entries.append(
                DivisibilityEntry(
                    k=k,
                    j=j,
                    min_choi_eig=rep.min_choi_eig,
                    cp=rep.cp,
                    tp=rep.tp,
                    invertible=inter.invertible,
                )
            )
            overall = overall and rep.cp and rep.tp
    return entries, overall
