"""Superoperators, Choi matrices and channel verification.

Vectorization convention (fixed globally, column stacking)
----------------------------------------------------------
A matrix is vectorized by stacking its columns::

    A = [[a, b],
         [c, d]]      vec(A) = (a, c, b, d)^T

so ``vec(A)[j*d + i] = A[i, j]`` and the key identity reads
``vec(A X B) = (B^T ⊗ A) vec(X)``.  A superoperator is the d² × d² matrix S
acting as ``vec(out) = S vec(in)``; the conjugation ρ ↦ M ρ M† becomes
``conj(M) ⊗ M``.  The Choi matrix lives on (input ⊗ output); complete
positivity is positivity of the Choi matrix and trace preservation is
``Tr_out(Choi) = I``.  Every matrix in this package is interpreted only
under this convention, and the round-trip identities are pinned by tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import DimensionLayout

__all__ = [
    "vec",
    "unvec",
    "conjugation_superop",
    "identity_superop",
    "Superoperator",
    "superop_from_global",
    "dynamical_map",
    "gamma_map",
    "apply_superop",
    "choi_matrix",
    "superop_from_choi",
    "CPTPReport",
    "is_cptp",
    "IntermediateMap",
    "intermediate_map",
]


def vec(a: np.ndarray) -> np.ndarray:
    """Column-stack a matrix into a vector."""
    return np.asarray(a, dtype=complex).T.reshape(-1)


def unvec(v: np.ndarray) -> np.ndarray:
    """Inverse of :func:`vec` for square matrices."""
    v = np.asarray(v)
    d = int(round(np.sqrt(v.size)))
    if d * d != v.size:
        raise ValueError(f"vector of length {v.size} is not a vectorized square matrix")
    return v.reshape(d, d).T


def conjugation_superop(m: np.ndarray) -> np.ndarray:
    """Superoperator of ρ ↦ M ρ M† in the column-stacking convention."""
    m = np.asarray(m, dtype=complex)
    return np.kron(m.conj(), m)


def identity_superop(dim: int) -> np.ndarray:
    return np.eye(dim * dim, dtype=complex)


@dataclass
class Superoperator:
    """A linear map on system operators, stored as a d²×d² matrix.

    ``matrix`` follows the module-wide column-stacking convention.  ``t_from``
    and ``t_to`` record which time interval the map propagates across, and
    ``outcomes`` optionally tags the measurement record it is conditioned on.
    """

    matrix: np.ndarray
    dim: int
    t_from: float | None = None
    t_to: float | None = None
    outcomes: tuple = ()
    trace_preserving: bool | None = None

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        if self.matrix.shape != (self.dim * self.dim, self.dim * self.dim):
            raise ValueError(
                f"superoperator matrix shape {self.matrix.shape} does not match dim {self.dim}"
            )

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return unvec(self.matrix @ vec(rho))

    def choi(self) -> np.ndarray:
        return choi_matrix(self.matrix)

    def to_dict(self) -> dict:
        """JSON-serializable form with flattened complex entries."""
        return {
            "convention": "column-stacking",
            "dim": self.dim,
            "t_from": self.t_from,
            "t_to": self.t_to,
            "outcomes": list(self.outcomes),
            "matrix_real": self.matrix.real.reshape(-1).tolist(),
            "matrix_imag": self.matrix.imag.reshape(-1).tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Superoperator":
        if data.get("convention") != "column-stacking":
            raise ValueError("unsupported vectorization convention tag")
        d = int(data["dim"])
        mat = np.array(data["matrix_real"]).reshape(d * d, d * d) + 1j * np.array(
            data["matrix_imag"]
        ).reshape(d * d, d * d)
        return cls(
            matrix=mat,
            dim=d,
            t_from=data.get("t_from"),
            t_to=data.get("t_to"),
            outcomes=tuple(data.get("outcomes", ())),
        )


def as_matrix(s) -> np.ndarray:
    """Accept either a Superoperator or a raw superoperator matrix."""
    if isinstance(s, Superoperator):
        return s.matrix
    return np.asarray(s, dtype=complex)


def apply_superop(s, rho: np.ndarray) -> np.ndarray:
    return unvec(as_matrix(s) @ vec(rho))


def superop_from_unitary_env(u: np.ndarray, env_state: np.ndarray, dim_sys: int) -> np.ndarray:
    """Reduced map σ ↦ Tr_E[U (σ ⊗ env_state) U†] as a superoperator matrix.

    Equivalent to propagating the dim_sys² matrix units through the global
    conjugation, but assembled by contracting U against the environment state
    directly, which costs O(d_S² d_E³) instead of d_S² full conjugations.
    """
    u = np.asarray(u, dtype=complex)
    d = u.shape[0]
    if d % dim_sys != 0:
        raise ValueError(f"global dimension {d} incompatible with system dim {dim_sys}")
    de = d // dim_sys
    env_state = np.asarray(env_state, dtype=complex)
    if env_state.shape != (de, de):
        raise ValueError(f"environment state has shape {env_state.shape}, expected ({de},{de})")
    u4 = u.reshape(dim_sys, de, dim_sys, de)
    # Phi[E_ab][i,j] = sum_{e,f,g} U[(i,e),(a,f)] env[f,g] conj(U[(j,e),(b,g)])
    a4 = np.tensordot(u4, env_state, axes=([3], [0]))  # axes (i, e, a, g)
    a2 = a4.transpose(0, 2, 1, 3).reshape(dim_sys * dim_sys, de * de)
    b2 = u4.transpose(0, 2, 1, 3).reshape(dim_sys * dim_sys, de * de)
    c = (a2 @ b2.conj().T).reshape(dim_sys, dim_sys, dim_sys, dim_sys)  # (i, a, j, b)
    # S[(j,i), (b,a)] = Phi[E_ab][i,j] under column stacking
    return c.transpose(2, 0, 3, 1).reshape(dim_sys * dim_sys, dim_sys * dim_sys)


def superop_from_global(u: np.ndarray, env_state: np.ndarray, layout: DimensionLayout) -> Superoperator:
    """Channel induced on the first subsystem by a global unitary.

    ``layout.dims[0]`` is the system dimension; the environment is everything
    else, entering through ``env_state`` (unit trace, PSD).
    """
    dim_sys = layout.dims[0]
    if np.asarray(u).shape != (layout.total_dim, layout.total_dim):
        raise ValueError("unitary does not match the layout dimension")
    mat = superop_from_unitary_env(u, env_state, dim_sys)
    return Superoperator(matrix=mat, dim=dim_sys, trace_preserving=True)


def dynamical_map(model, k: int) -> Superoperator:
    """Reduced map of the unmeasured evolution from t_0 to t_k."""
    if k < 0 or k > model.schedule.num_steps:
        raise ValueError(f"step index {k} outside the schedule")
    dim_sys = model.layout.dims[0]
    if k == 0:
        s = Superoperator(identity_superop(dim_sys), dim_sys, 0.0, 0.0)
        s.trace_preserving = True
        return s
    t = k * model.schedule.delta
    mat = superop_from_unitary_env(model.propagator(t), model.env_initial_state(), dim_sys)
    return Superoperator(matrix=mat, dim=dim_sys, t_from=0.0, t_to=t, trace_preserving=True)


def gamma_map(model, k: int, k_minus_n: int) -> Superoperator:
    """Product-state propagation map between two schedule times.

    Pairs a fresh system operator with the environment state of the
    unmeasured evolution at t_{k-n} and propagates to t_k.  Requires
    0 <= k-n < k <= M; the degenerate case k-n == k is rejected.
    """
    j = k_minus_n
    if not (0 <= j < k <= model.schedule.num_steps):
        raise ValueError(f"need 0 <= j < k <= M, got (k, j) = ({k}, {j})")
    delta = model.schedule.delta
    sigma_e = model.env_state_unmeasured(j)
    dim_sys = model.layout.dims[0]
    mat = superop_from_unitary_env(model.propagator((k - j) * delta), sigma_e, dim_sys)
    return Superoperator(
        matrix=mat, dim=dim_sys, t_from=j * delta, t_to=k * delta, trace_preserving=True
    )


def choi_matrix(s) -> np.ndarray:
    """Reshuffle a superoperator into its (unnormalized) Choi matrix.

    The Choi matrix acts on input ⊗ output; the identity map reshuffles to
    the rank-one projector vec(I)vec(I)† with trace d.
    """
    m = as_matrix(s)
    d = int(round(np.sqrt(m.shape[0])))
    return m.reshape(d, d, d, d).transpose(3, 1, 2, 0).reshape(d * d, d * d)


def superop_from_choi(choi: np.ndarray) -> np.ndarray:
    """Inverse reshuffle; involutive with :func:`choi_matrix`."""
    return choi_matrix(choi)


def _trace_out_output(choi: np.ndarray, d: int) -> np.ndarray:
    return np.einsum("iaja->ij", choi.reshape(d, d, d, d))


@dataclass
class CPTPReport:
    cp: bool
    tp: bool
    min_choi_eig: float
    tp_residual: float
    hermiticity_residual: float = 0.0


def is_cptp(s, tol: float = 1e-9, tp_tol: float | None = None) -> CPTPReport:
    """Complete-positivity / trace-preservation check via the Choi matrix.

    cp holds when the smallest Choi eigenvalue is >= -tol, tp when
    ||Tr_out(Choi) - I||_F <= tp_tol (defaults to tol).  The raw numbers are
    always reported so callers can apply their own thresholds.
    """
    m = as_matrix(s)
    d = int(round(np.sqrt(m.shape[0])))
    choi = choi_matrix(m)
    herm_res = float(np.linalg.norm(choi - choi.conj().T))
    w = np.linalg.eigvalsh((choi + choi.conj().T) / 2)
    min_eig = float(w[0])
    tp_res = float(np.linalg.norm(_trace_out_output(choi, d) - np.eye(d)))
    if tp_tol is None:
        tp_tol = tol
    return CPTPReport(
        cp=min_eig >= -tol,
        tp=tp_res <= tp_tol,
        min_choi_eig=min_eig,
        tp_residual=tp_res,
        hermiticity_residual=herm_res,
    )


@dataclass
class IntermediateMap:
    map: np.ndarray
    invertible: bool
    condition_number: float


def intermediate_map(phi_k, phi_j, cond_threshold: float = 1e12) -> IntermediateMap:
    """Two-point map E with Phi_k = E · Phi_j.

    Uses the direct inverse of Phi_j while its condition number stays below
    ``cond_threshold``; beyond that it falls back to the pseudo-inverse and
    flags the result as non-invertible instead of raising.
    """
    mk = as_matrix(phi_k)
    mj = as_matrix(phi_j)
    if mk.shape != mj.shape:
        raise ValueError("maps act on different dimensions")
    cond = float(np.linalg.cond(mj))
    if np.isfinite(cond) and cond <= cond_threshold:
        e = mk @ np.linalg.inv(mj)
        return IntermediateMap(map=e, invertible=True, condition_number=cond)
    e = mk @ np.linalg.pinv(mj)
    return IntermediateMap(map=e, invertible=False, condition_number=cond)
