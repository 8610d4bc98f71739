"""Measurement-conditioned dynamics and stochastic transfer tensors.

A *branch* is one record of measurement outcomes (θ_1, ..., θ_j).  Along a
branch the open system evolves by alternating unitary legs with the
(sub-normalizing) conjugations M_θ · M_θ†.  The conditional map Φ̃_k sends
the initial system state to the reduced state at t_k just before the k-th
measurement; it is completely positive but in general not trace preserving,
and Tr[M_θ Φ̃_k[ρ_0] M_θ†] is the joint probability of the outcome record
(θ_1, ..., θ_k).

The conditioned hierarchy T̃_{k,j} decomposes Φ̃_k over the earlier
conditional maps,

    Φ̃_k = sum_{j<k} T̃_{k,j} · 𝓜_{θ_j} · Φ̃_j ,        (𝓜_{θ_0} = identity)

with the rows for 0 < n < k supplied by the recursion over the conditioned
product-state maps Γ̃ (built from the renormalized post-measurement
environment states),

    T̃_{k,k-n} = Γ̃_{k|k-n} - sum_{j=1}^{n-1} T̃_{k,k-j} 𝓜_{θ_{k-j}} Γ̃_{k-j|k-n} ,

while the k-step entry T̃_{k,0} is fixed by the reconstruction identity
itself: the correct k-step object for the from-t_0 slot is the conditional
map Φ̃ (substituting the unmeasured Γ̃_{k|0} there breaks the reconstruction
whenever an intermediate measurement disturbs the state).  With a
single-outcome identity instrument every tilde object collapses onto its
unconditional counterpart.

Implementation note: the initial environment state is pure (vacuum), so each
matrix-unit input E_ab ⊗ ρ_E factorizes as u_a u_b† into *seed vectors*, and
every pipeline step (unitary or measurement) is a conjugation that preserves
this rank-one structure.  Branches therefore propagate two seed vectors
instead of composite density matrices, and the conditional environment
states are kept as low-rank factor lists (their rank never exceeds twice the
rank of the initial system state), which keeps the Γ̃ construction at the
cost of a few matrix-vector products.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import matrix_norm
from .maps import (
    apply_superop,
    as_matrix,
    conjugation_superop,
    identity_superop,
    vec,
)
from .model import Instrument, SpinBosonModel

__all__ = [
    "Branch",
    "propagate_branch",
    "enumerate_branches",
    "joint_probability",
    "joint_probability_recursive",
    "gamma_tilde",
    "gamma_tilde_table",
    "StochasticTTHierarchy",
    "build_stochastic_tt",
    "stochastic_reconstruction_residuals",
    "quantifier_tk0",
    "quantifier_dk",
    "violation_norm",
    "branch_average",
    "BRANCH_CAP",
]

BRANCH_CAP = 10  # hard cap on the conditioning depth: at most 2^10 branches
_WEIGHT_FLOOR = 1e-14  # below this a branch is treated as impossible


def _cross_superop(w4: np.ndarray) -> np.ndarray:
    """Superoperator from propagated factor vectors w4[a, f, s, e].

    Column (b·2 + a) of the result is vec of sum_f Tr_E[w_{a,f} w_{b,f}†],
    i.e. the image of the matrix unit E_ab under the represented map.
    """
    r = np.einsum("afie,bfje->abij", w4, w4.conj(), optimize=True)
    s = np.empty((4, 4), dtype=complex)
    for b in range(2):
        for a in range(2):
            s[:, b * 2 + a] = vec(r[a, b])
    return s


@dataclass
class Branch:
    """One outcome record with everything recorded along its propagation.

    phi_tilde[k] is the conditional map at t_k (k = 0..num_steps);
    env_factors[j] holds vectors whose outer-product sum is the renormalized
    post-measurement environment state at t_j (j = 0 is the initial vacuum);
    weights[j] is the joint probability of the first j outcomes.  Seed
    vectors are kept pre and post measurement so composite states can be
    rebuilt on demand.
    """

    outcomes: tuple[str, ...]
    model: SpinBosonModel
    instrument: Instrument
    phi_tilde: dict[int, np.ndarray]
    env_factors: dict[int, np.ndarray]
    weights: dict[int, float]
    seeds_pre: dict[int, np.ndarray]
    seeds_post: dict[int, np.ndarray]
    truncation_flag: bool = False
    _gamma_cache: dict = field(default_factory=dict, repr=False)

    @property
    def depth(self) -> int:
        return len(self.outcomes)

    @property
    def weight(self) -> float:
        return self.weights[self.depth]

    def label(self) -> str:
        return "".join(self.outcomes) if self.outcomes else "(none)"

    def seeds(self, k: int, post: bool = False) -> np.ndarray:
        store = self.seeds_post if post else self.seeds_pre
        return store[k]

    def global_state(self, k: int, post: bool = False) -> np.ndarray:
        """Materialize the (sub-normalized) composite state at t_k."""
        u3 = self.seeds(k, post)
        u = u3.reshape(2, -1)
        rho0 = self.model.rho_spin0
        return np.einsum("ab,ax,by->xy", rho0, u, u.conj(), optimize=True)

    def reduced_spin(self, k: int, post: bool = False) -> np.ndarray:
        """Sub-normalized reduced spin state at t_k."""
        u3 = self.seeds(k, post)
        rho0 = self.model.rho_spin0
        return np.einsum("ab,ase,bte->st", rho0, u3, u3.conj(), optimize=True)

    def sigma_env_state(self, j: int) -> np.ndarray:
        """Renormalized post-measurement environment state at t_j as a matrix."""
        factors = self.env_factors.get(j)
        if factors is None:
            raise KeyError(
                f"no conditional environment state at step {j} "
                f"(depth {self.depth}, weight floor)"
            )
        return factors.T @ factors.conj()


def _env_factors_from_seeds(rho0: np.ndarray, u3: np.ndarray):
    """Factor vectors of the (unnormalized) environment reduction.

    The physical composite state is sum_i psi_i psi_i† with
    psi_i = sqrt(p_i) <chi_i| seeds; tracing out the spin leaves
    sum over (i, spin) of outer products of environment-sized slices.
    Returns (factors, weight) with sum_f f f† = Tr_S(state), trace = weight.
    """
    w, v = np.linalg.eigh(rho0)
    slices = []
    for i in range(len(w)):
        if w[i] > 1e-14:
            psi3 = np.tensordot(np.sqrt(w[i]) * v[:, i], u3, axes=([0], [0]))
            slices.append(psi3)  # (2, d_env): spin index, env index
    factors = np.concatenate(slices, axis=0)
    weight = float(np.einsum("fe,fe->", factors, factors.conj()).real)
    return factors, weight


def propagate_branch(model: SpinBosonModel, instrument: Instrument, outcomes) -> Branch:
    """Propagate one conditioning record of length <= num_steps - 1.

    The map Φ̃_k is recorded before the measurement at t_k is applied, so a
    record of j outcomes conditions the maps at steps j+1 and beyond.
    """
    outcomes = tuple(str(o) for o in outcomes)
    m = model.schedule.num_steps
    if len(outcomes) > m - 1:
        raise ValueError(
            f"conditioning record of length {len(outcomes)} exceeds num_steps-1 = {m - 1}"
        )
    for o in outcomes:
        instrument.operator(o)  # validate labels before any propagation
    delta = model.schedule.delta
    u_step = model.propagator(delta)
    dim_env = model.dim_env
    rho0 = model.rho_spin0
    vac = model.env_vacuum

    u = model.initial_seeds()
    phi_tilde = {0: identity_superop(2)}
    env_factors = {0: vac[np.newaxis, :].copy()}
    weights = {0: 1.0}
    seeds_pre = {0: u.reshape(2, 2, dim_env).copy()}
    seeds_post = {0: u.reshape(2, 2, dim_env).copy()}
    truncation = False

    for k in range(1, m + 1):
        u = u @ u_step.T
        u3 = u.reshape(2, 2, dim_env)
        seeds_pre[k] = u3.copy()
        phi_tilde[k] = _cross_superop(u3[:, np.newaxis, :, :])
        if k <= len(outcomes):
            m_op = instrument.operator(outcomes[k - 1])
            u3 = np.einsum("st,ate->ase", m_op, u3, optimize=True)
            u = u3.reshape(2, 2 * dim_env)
            seeds_post[k] = u3.copy()
            factors, w = _env_factors_from_seeds(rho0, u3)
            weights[k] = w
            if w > _WEIGHT_FLOOR:
                env_factors[k] = factors / np.sqrt(w)
                truncation = (
                    model.warn_if_truncated(factors, context=f"branch {outcomes}")
                    or truncation
                )

    return Branch(
        outcomes=outcomes,
        model=model,
        instrument=instrument,
        phi_tilde=phi_tilde,
        env_factors=env_factors,
        weights=weights,
        seeds_pre=seeds_pre,
        seeds_post=seeds_post,
        truncation_flag=truncation,
    )


def enumerate_branches(model: SpinBosonModel, instrument: Instrument, depth: int) -> list[Branch]:
    """All outcome records of the given conditioning depth.

    Enumeration is exhaustive; depths beyond BRANCH_CAP are refused rather
    than silently sampled.
    """
    if depth > BRANCH_CAP:
        raise ValueError(f"conditioning depth {depth} exceeds the cap of {BRANCH_CAP}")
    labels = instrument.labels
    records = [()]
    for _ in range(depth):
        records = [r + (l,) for r in records for l in labels]
    return [propagate_branch(model, instrument, r) for r in records]


def joint_probability(branch: Branch, instrument: Instrument, final_outcome, k: int | None = None) -> float:
    """q_k = Tr[M_θ Φ̃_k[ρ_0] M_θ†] with θ the outcome of the k-th measurement.

    ``k`` defaults to depth+1, i.e. the first measurement not already part of
    the conditioning record.
    """
    if k is None:
        k = branch.depth + 1
    if k < 1 or k > branch.model.schedule.num_steps:
        raise ValueError(f"step index {k} outside the schedule")
    if k <= branch.depth and str(final_outcome) != branch.outcomes[k - 1]:
        raise ValueError(
            f"outcome {final_outcome!r} contradicts the branch record at step {k}"
        )
    m_op = instrument.operator(final_outcome)
    state = apply_superop(branch.phi_tilde[k], branch.model.rho_spin0)
    return float(np.trace(m_op @ state @ m_op.conj().T).real)


def joint_probability_recursive(
    hierarchy: "StochasticTTHierarchy", instrument: Instrument, final_outcome, k: int
) -> float:
    """Same probability, but rebuilt through the transfer-tensor table.

    Reconstructs Φ̃_1..Φ̃_k recursively from the T̃ entries and the measured
    maps, then applies the final conjugation; an independent cross-check of
    the direct propagation route.
    """
    branch = hierarchy.branch
    rebuilt = {0: identity_superop(2)}
    for step in range(1, k + 1):
        acc = np.zeros((4, 4), dtype=complex)
        for j in range(step):
            acc += hierarchy.tensors[(step, j)] @ _measured(branch, instrument, j) @ rebuilt[j]
        rebuilt[step] = acc
    m_op = instrument.operator(final_outcome)
    state = apply_superop(rebuilt[k], branch.model.rho_spin0)
    return float(np.trace(m_op @ state @ m_op.conj().T).real)


def _measured(branch: Branch, instrument: Instrument, j: int) -> np.ndarray:
    """Superoperator of the measurement applied at t_j on this branch."""
    if j == 0:
        return identity_superop(2)
    return conjugation_superop(instrument.operator(branch.outcomes[j - 1]))


def gamma_tilde(model: SpinBosonModel, branch: Branch, k: int, k_minus_n: int) -> np.ndarray:
    """Conditioned product-state map Γ̃_{k|k-n} for this branch.

    Pairs a fresh system operator with the branch's renormalized environment
    state at t_{k-n} (the initial vacuum for k-n = 0) and propagates it
    unitarily to t_k; no measurement acts inside, so the map is CPTP.
    """
    j = k_minus_n
    if not (0 <= j < k <= model.schedule.num_steps):
        raise ValueError(f"need 0 <= j < k <= M, got (k, j) = ({k}, {j})")
    if j > branch.depth:
        raise KeyError(f"branch of depth {branch.depth} has no state at step {j}")
    factors = branch.env_factors.get(j)
    if factors is None:
        raise KeyError(f"branch weight vanished at step {j}; no conditional state")
    key = (k, j)
    cached = branch._gamma_cache.get(key)
    if cached is None:
        u = model.propagator((k - j) * model.schedule.delta)
        nf = factors.shape[0]
        dim_env = model.dim_env
        stacked = np.zeros((2, nf, 2 * dim_env), dtype=complex)
        stacked[0, :, :dim_env] = factors
        stacked[1, :, dim_env:] = factors
        w = stacked.reshape(2 * nf, -1) @ u.T
        cached = _cross_superop(w.reshape(2, nf, 2, dim_env))
        branch._gamma_cache[key] = cached
    return cached


def gamma_tilde_table(
    model: SpinBosonModel,
    branch: Branch,
    max_step: int | None = None,
    shared_cache: dict | None = None,
) -> dict[tuple[int, int], np.ndarray]:
    """All Γ̃_{k|j} entries needed for the hierarchy up to max_step.

    ``shared_cache`` (keyed by outcome prefix) lets branch ensembles reuse
    entries computed for a common conditioning prefix.
    """
    m = max_step if max_step is not None else model.schedule.num_steps
    table: dict[tuple[int, int], np.ndarray] = {}
    for k in range(1, m + 1):
        for j in range(min(k, branch.depth + 1)):
            if shared_cache is not None:
                skey = (branch.outcomes[:j], k - j, j)
                if skey not in shared_cache:
                    shared_cache[skey] = gamma_tilde(model, branch, k, j)
                table[(k, j)] = shared_cache[skey]
            else:
                table[(k, j)] = gamma_tilde(model, branch, k, j)
    return table


@dataclass
class StochasticTTHierarchy:
    """Triangular table of conditioned transfer tensors for one branch."""

    tensors: dict[tuple[int, int], np.ndarray]
    branch: Branch
    num_steps: int
    route: str
    residuals: list[float] = field(default_factory=list)

    def tensor(self, k: int, j: int) -> np.ndarray:
        return self.tensors[(k, j)]


def build_stochastic_tt(
    branch: Branch,
    gammas: dict,
    instrument: Instrument,
    route: str = "gamma",
    max_step: int | None = None,
) -> StochasticTTHierarchy:
    """Assemble the conditioned hierarchy along one branch.

    Both routes fill the rows 0 < n < k from the Γ̃ recursion.  They differ
    in how the k-step entry is formed: route "gamma" runs the recursion's
    final row with the conditional maps Φ̃ occupying the from-t_0 slots,
    route "residual" rearranges the reconstruction identity directly.  The
    two are algebraically identical and serve as numerical cross-checks.
    """
    model = branch.model
    m = max_step if max_step is not None else model.schedule.num_steps
    if m - 1 > branch.depth:
        raise ValueError(
            f"hierarchy up to step {m} needs a conditioning record of depth {m - 1}, "
            f"branch has {branch.depth}"
        )
    if route not in ("gamma", "residual"):
        raise ValueError(f"unknown route {route!r}")

    meas = {j: _measured(branch, instrument, j) for j in range(m)}
    tensors: dict[tuple[int, int], np.ndarray] = {}
    for k in range(1, m + 1):
        for n in range(1, k):
            acc = as_matrix(gammas[(k, k - n)]).copy()
            for j in range(1, n):
                acc -= tensors[(k, k - j)] @ meas[k - j] @ as_matrix(gammas[(k - j, k - n)])
            tensors[(k, k - n)] = acc
        if route == "gamma":
            # final recursion row, conditional maps in the from-t_0 slots
            acc = branch.phi_tilde[k].copy()
            for j in range(1, k):
                acc -= tensors[(k, k - j)] @ meas[k - j] @ branch.phi_tilde[k - j]
            tensors[(k, 0)] = acc
        else:
            acc = branch.phi_tilde[k].copy()
            for j in range(1, k):
                acc -= tensors[(k, j)] @ meas[j] @ branch.phi_tilde[j]
            tensors[(k, 0)] = acc
    hier = StochasticTTHierarchy(tensors=tensors, branch=branch, num_steps=m, route=route)
    hier.residuals = stochastic_reconstruction_residuals(hier, instrument)
    return hier


def stochastic_reconstruction_residuals(
    hierarchy: StochasticTTHierarchy, instrument: Instrument
) -> list[float]:
    """||Φ̃_k - sum_j T̃_{k,j} 𝓜_{θ_j} Φ̃_j||_F per step."""
    branch = hierarchy.branch
    out = []
    for k in range(1, hierarchy.num_steps + 1):
        acc = np.zeros((4, 4), dtype=complex)
        for j in range(k):
            acc += hierarchy.tensors[(k, j)] @ _measured(branch, instrument, j) @ branch.phi_tilde[j]
        out.append(float(np.linalg.norm(branch.phi_tilde[k] - acc)))
    return out


def quantifier_tk0(hierarchy: StochasticTTHierarchy, k: int, norm: str = "frobenius") -> float:
    """Size of the k-step tensor, ||T̃_{k,0}||; defined for k >= 2."""
    if k < 2:
        raise ValueError("the k-step quantifier needs k >= 2")
    return matrix_norm(hierarchy.tensors[(k, 0)], norm)


def quantifier_dk(
    hierarchy: StochasticTTHierarchy,
    branch: Branch,
    k: int,
    norm: str = "frobenius",
    paper_literal: bool = False,
) -> float:
    """Mean multi-step contribution over the decomposition of Φ̃_k.

    Averages ||T̃_{k,l} 𝓜_{θ_l} Φ̃_l|| over l = 0..k-2 (the one-step term is
    excluded).  The sum has k-1 terms, so the default prefactor is 1/(k-1);
    ``paper_literal`` switches to the historical 1/(k-2) for k >= 3, which is
    singular at k = 2, where the mean is kept instead.
    """
    if k < 2:
        raise ValueError("the multi-step quantifier needs k >= 2")
    instrument = branch.instrument
    terms = [
        matrix_norm(
            hierarchy.tensors[(k, l)] @ _measured(branch, instrument, l) @ branch.phi_tilde[l],
            norm,
        )
        for l in range(k - 1)
    ]
    if paper_literal and k >= 3:
        return float(sum(terms) / (k - 2))
    return float(sum(terms) / (k - 1))


def violation_norm(
    branch: Branch,
    gammas: dict,
    instrument: Instrument,
    k: int,
    j: int,
    norm: str = "frobenius",
) -> float:
    """Distance from the one-step-composable description on this branch.

    Compares Φ̃_k against the chain Γ̃_{k|k-1} 𝓜_{θ_{k-1}} ... Γ̃_{j+1|j}
    𝓜_{θ_j} Φ̃_j, both applied to the branch's initial system state.  The
    chain pairs each unitary leg with the branch's renormalized environment
    state, so the difference vanishes exactly when the composite state after
    each measurement factorizes (as for rank-one projective instruments) and
    is positive whenever system-environment correlations survive.
    """
    if not (0 <= j < k <= branch.model.schedule.num_steps):
        raise ValueError(f"need 0 <= j < k <= M, got (k, j) = ({k}, {j})")
    rho0 = branch.model.rho_spin0
    lhs = apply_superop(branch.phi_tilde[k], rho0)
    chain = _measured(branch, instrument, j) @ branch.phi_tilde[j]
    for i in range(j + 1, k + 1):
        chain = as_matrix(gammas[(i, i - 1)]) @ chain
        if i < k:
            chain = _measured(branch, instrument, i) @ chain
    rhs = apply_superop(chain, rho0)
    return matrix_norm(lhs - rhs, norm)


def branch_average(values, weights, tol: float = 1e-8):
    """Probability-weighted mean over branches.

    Weights must sum to one within ``tol`` before the defensive
    renormalization; the per-branch values are returned unchanged alongside.
    """
    values = list(values)
    weights = np.asarray(list(weights), dtype=float)
    if not values:
        raise ValueError("no branches to average")
    total = float(weights.sum())
    if abs(total - 1.0) > tol:
        raise ValueError(f"branch weights sum to {total}, expected 1")
    weights = weights / total
    avg = float(np.dot(weights, np.asarray(values, dtype=float)))
    return avg, values
