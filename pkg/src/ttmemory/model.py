"""Spin-boson composite system, measurement instruments and schedules.

A single spin couples to five harmonic oscillators through an
excitation-conserving exchange interaction,

    H = (1/2) σ_z ⊗ I_E  +  Σ_k ω_k b_k† b_k  +  Σ_k g_k (σ⁻ ⊗ b_k† + σ⁺ ⊗ b_k),

with each oscillator truncated to ``d_osc`` Fock levels (the truncated
annihilator sends the highest level to zero).

Spin basis convention: index 0 is the ground state, index 1 the excited
state.  σ⁻ = |g⟩⟨e| annihilates the spin excitation and σ_z here denotes the
splitting operator diag(-1, +1), so the ground state sits at energy -1/2 and
the total excitation number N = σ⁺σ⁻ + Σ_k b_k†b_k commutes with H.  The
ground⊗vacuum product state is then an exact eigenstate, which is why the
default initial spin state is the superposition |+⟩ = (|0⟩+|1⟩)/√2 — it is
the natural choice that produces non-trivial interacting dynamics.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .linalg import DimensionLayout, cached_eigh, kron, kron_all, psd_sqrt

__all__ = [
    "DEFAULT_OMEGAS",
    "DEFAULT_COUPLINGS",
    "SpinBosonParams",
    "Schedule",
    "Instrument",
    "GlobalState",
    "SpinBosonModel",
    "build_hamiltonian",
    "build_initial_state",
    "build_povm",
    "propagator",
    "apply_measurement",
    "annihilation_operator",
    "SPIN_LOWER",
    "SPIN_RAISE",
    "SPIN_SPLITTING",
    "KET_PLUS",
    "KET_MINUS",
]

# Case-study parameters: five oscillator frequencies and exchange couplings.
DEFAULT_OMEGAS = (1.99, 0.73, 0.89, 2.04, 1.58)
DEFAULT_COUPLINGS = (1.67, 1.32, 2.15, 2.70, 1.07)

SPIN_LOWER = np.array([[0, 1], [0, 0]], dtype=complex)  # |g><e|
SPIN_RAISE = np.array([[0, 0], [1, 0]], dtype=complex)  # |e><g|
SPIN_SPLITTING = np.array([[-1, 0], [0, 1]], dtype=complex)  # excited at +1

KET_PLUS = np.array([1, 1], dtype=complex) / np.sqrt(2)
KET_MINUS = np.array([1, -1], dtype=complex) / np.sqrt(2)

TRUNCATION_WARN_THRESHOLD = 1e-6


def annihilation_operator(dim: int) -> np.ndarray:
    """Truncated bosonic annihilator; the top Fock level maps to zero."""
    a = np.zeros((dim, dim), dtype=complex)
    for n in range(dim - 1):
        a[n, n + 1] = np.sqrt(n + 1)
    return a


@dataclass(frozen=True)
class SpinBosonParams:
    """Oscillator frequencies and couplings, in units with ħ = 1."""

    omegas: tuple[float, ...] = DEFAULT_OMEGAS
    couplings: tuple[float, ...] = DEFAULT_COUPLINGS
    d_osc: int = 3

    def __post_init__(self):
        object.__setattr__(self, "omegas", tuple(float(w) for w in self.omegas))
        object.__setattr__(self, "couplings", tuple(float(g) for g in self.couplings))
        if len(self.omegas) != len(self.couplings):
            raise ValueError("omegas and couplings must have equal length")
        if self.d_osc < 2:
            raise ValueError("d_osc must be at least 2")

    @property
    def num_oscillators(self) -> int:
        return len(self.omegas)


@dataclass(frozen=True)
class Schedule:
    """Measurement times t_k = k·delta for k = 1..num_steps."""

    delta: float = 1.0
    num_steps: int = 5
    substeps: int = 40

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if self.num_steps < 1:
            raise ValueError("num_steps must be at least 1")
        if self.substeps < 1:
            raise ValueError("substeps must be at least 1")

    @property
    def times(self) -> tuple[float, ...]:
        return tuple(k * self.delta for k in range(self.num_steps + 1))


class Instrument:
    """A finite collection of measurement operators {M_θ} on the spin.

    The effects F_θ = M_θ† M_θ must resolve the identity; each effect must be
    positive semidefinite.  Construction validates both.
    """

    def __init__(self, labels, operators, completeness_tol: float = 1e-12):
        self.labels = tuple(str(l) for l in labels)
        self.operators = [np.asarray(m, dtype=complex) for m in operators]
        if len(self.labels) != len(self.operators):
            raise ValueError("labels and operators must have equal length")
        if not self.operators:
            raise ValueError("instrument needs at least one outcome")
        d = self.operators[0].shape[0]
        total = sum(m.conj().T @ m for m in self.operators)
        if np.linalg.norm(total - np.eye(d)) > completeness_tol:
            raise ValueError("effects do not sum to the identity")
        for m in self.operators:
            w = np.linalg.eigvalsh(m.conj().T @ m)
            if w.min() < -1e-12:
                raise ValueError("an effect has a negative eigenvalue")
        self._by_label = dict(zip(self.labels, self.operators))

    @property
    def effects(self) -> list[np.ndarray]:
        return [m.conj().T @ m for m in self.operators]

    def operator(self, outcome) -> np.ndarray:
        try:
            return self._by_label[str(outcome)]
        except KeyError:
            raise KeyError(f"unknown outcome {outcome!r}; have {self.labels}") from None

    @property
    def num_outcomes(self) -> int:
        return len(self.labels)

    @classmethod
    def identity(cls, dim: int = 2) -> "Instrument":
        """Single-outcome instrument that leaves the state untouched."""
        return cls(("id",), [np.eye(dim, dtype=complex)])

    def __repr__(self):
        return f"Instrument(labels={self.labels})"


def build_povm(lam: float) -> Instrument:
    """Two-outcome family interpolating projective (λ=0) to trivial (λ=1).

    Effects F_± = (1-λ)|±⟩⟨±| + (λ/2) I with |±⟩ the σ_x eigenstates;
    measurement operators are the positive square roots M_± = F_±^{1/2}.
    """
    lam = float(lam)
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    proj_plus = np.outer(KET_PLUS, KET_PLUS.conj())
    proj_minus = np.outer(KET_MINUS, KET_MINUS.conj())
    eye = np.eye(2, dtype=complex)
    f_plus = (1 - lam) * proj_plus + lam / 2 * eye
    f_minus = (1 - lam) * proj_minus + lam / 2 * eye
    return Instrument(("+", "-"), [psd_sqrt(f_plus), psd_sqrt(f_minus)])


@dataclass
class GlobalState:
    """Density matrix on the composite space, possibly sub-normalized.

    ``weight`` tracks the trace; measurement branches carry their outcome
    probability here instead of renormalizing.
    """

    rho: np.ndarray
    layout: DimensionLayout
    weight: float = 1.0


def build_hamiltonian(params: SpinBosonParams) -> np.ndarray:
    """Assemble the composite Hamiltonian on dimension 2 · d_osc^n."""
    d = params.d_osc
    n_osc = params.num_oscillators
    a = annihilation_operator(d)
    n_op = a.conj().T @ a
    eye_osc = np.eye(d, dtype=complex)
    dim_env = d**n_osc

    h_env = np.zeros((dim_env, dim_env), dtype=complex)
    b_lower = np.zeros((dim_env, dim_env), dtype=complex)  # Σ g_k b_k
    for k in range(n_osc):
        ops_n = [eye_osc] * n_osc
        ops_n[k] = n_op
        ops_a = [eye_osc] * n_osc
        ops_a[k] = a
        h_env += params.omegas[k] * kron_all(ops_n)
        b_lower += params.couplings[k] * kron_all(ops_a)
    b_raise = b_lower.conj().T

    eye_env = np.eye(dim_env, dtype=complex)
    eye_sys = np.eye(2, dtype=complex)
    return (
        0.5 * kron(SPIN_SPLITTING, eye_env)
        + kron(eye_sys, h_env)
        + kron(SPIN_LOWER, b_raise)
        + kron(SPIN_RAISE, b_lower)
    )


def _spin_state(spin_init) -> np.ndarray:
    if isinstance(spin_init, str):
        kets = {
            "ground": np.array([1, 0], dtype=complex),
            "excited": np.array([0, 1], dtype=complex),
            "plus": KET_PLUS,
        }
        if spin_init not in kets:
            raise ValueError(f"unknown spin_init {spin_init!r}")
        ket = kets[spin_init]
        return np.outer(ket, ket.conj())
    rho = np.asarray(spin_init, dtype=complex)
    if rho.shape != (2, 2):
        raise ValueError("custom spin state must be a 2x2 density matrix")
    if np.linalg.norm(rho - rho.conj().T) > 1e-12:
        raise ValueError("custom spin state must be Hermitian")
    if abs(np.trace(rho) - 1.0) > 1e-10:
        raise ValueError("custom spin state must have unit trace")
    if np.linalg.eigvalsh(rho).min() < -1e-12:
        raise ValueError("custom spin state must be positive semidefinite")
    return rho


def build_initial_state(params: SpinBosonParams, spin_init="plus") -> GlobalState:
    """Product state ρ_S,init ⊗ |vac⟩⟨vac| on the composite space."""
    rho_s = _spin_state(spin_init)
    dim_env = params.d_osc**params.num_oscillators
    rho_env = np.zeros((dim_env, dim_env), dtype=complex)
    rho_env[0, 0] = 1.0
    layout = DimensionLayout((2,) + (params.d_osc,) * params.num_oscillators)
    return GlobalState(rho=kron(rho_s, rho_env), layout=layout, weight=1.0)


def propagator(h: np.ndarray, dt: float) -> np.ndarray:
    """U = exp(-i H dt) through a cached eigendecomposition of H."""
    w, v = cached_eigh(h)
    return (v * np.exp(-1j * w * dt)) @ v.conj().T


def apply_measurement(state: GlobalState, instrument: Instrument, outcome) -> GlobalState:
    """Conjugate by M_θ ⊗ I_E without renormalizing.

    The returned weight is the trace of the result, i.e. the joint
    probability of the branch so far.
    """
    m = instrument.operator(outcome)
    dim_sys = state.layout.dims[0]
    if m.shape != (dim_sys, dim_sys):
        raise ValueError("measurement operator does not match the system dimension")
    dim_env = state.layout.total_dim // dim_sys
    rho4 = state.rho.reshape(dim_sys, dim_env, dim_sys, dim_env)
    out = np.einsum("su,uevf,tv->setf", m, rho4, m.conj(), optimize=True)
    out = out.reshape(state.layout.total_dim, state.layout.total_dim)
    return GlobalState(rho=out, layout=state.layout, weight=float(np.trace(out).real))


class SpinBosonModel:
    """Bundles parameters, schedule and initial state with cached propagators.

    The Hamiltonian is diagonalised once; propagators for arbitrary dt come
    from exponentiating the cached spectrum.  Instances are immutable after
    construction apart from the write-once caches, which are safe for
    concurrent readers.
    """

    def __init__(self, params: SpinBosonParams | None = None,
                 schedule: Schedule | None = None, spin_init="plus"):
        self.params = params if params is not None else SpinBosonParams()
        self.schedule = schedule if schedule is not None else Schedule()
        self.spin_init = spin_init
        self.layout = DimensionLayout(
            (2,) + (self.params.d_osc,) * self.params.num_oscillators
        )
        self.dim_env = self.layout.total_dim // 2
        self.hamiltonian = build_hamiltonian(self.params)
        self._eigh = None
        self._propagators: dict[float, np.ndarray] = {}
        self._env_states: dict[int, np.ndarray] = {}
        self.rho_spin0 = _spin_state(spin_init)
        vac = np.zeros(self.dim_env, dtype=complex)
        vac[0] = 1.0
        self.env_vacuum = vac

    def with_schedule(self, schedule: Schedule) -> "SpinBosonModel":
        """Same physical system on a different measurement schedule.

        The Hamiltonian, its eigendecomposition and the propagator cache are
        shared (propagators are keyed by absolute time, so reuse is exact);
        schedule-dependent caches start fresh.
        """
        other = object.__new__(SpinBosonModel)
        other.params = self.params
        other.schedule = schedule
        other.spin_init = self.spin_init
        other.layout = self.layout
        other.dim_env = self.dim_env
        other.hamiltonian = self.hamiltonian
        other._eigh = self.eigensystem()
        other._propagators = self._propagators
        other._env_states = {}
        other.rho_spin0 = self.rho_spin0
        other.env_vacuum = self.env_vacuum
        return other

    # -- propagation ------------------------------------------------------

    def eigensystem(self):
        if self._eigh is None:
            self._eigh = np.linalg.eigh(self.hamiltonian)
        return self._eigh

    def propagator(self, dt: float) -> np.ndarray:
        dt = float(dt)
        u = self._propagators.get(dt)
        if u is None:
            w, v = self.eigensystem()
            u = (v * np.exp(-1j * w * dt)) @ v.conj().T
            self._propagators[dt] = u
        return u

    # -- states -----------------------------------------------------------

    def initial_state(self) -> GlobalState:
        return build_initial_state(self.params, self.spin_init)

    def env_initial_state(self) -> np.ndarray:
        return np.outer(self.env_vacuum, self.env_vacuum.conj())

    def initial_seeds(self) -> np.ndarray:
        """Seed vectors u_a = e_a ⊗ vac spanning the system matrix units.

        Because the environment starts pure, every matrix-unit input
        E_ab ⊗ ρ_E factorizes as u_a u_b†, and all conjugation-type pipeline
        steps preserve that rank-one structure.  Shape (2, total_dim).
        """
        u = np.zeros((2, self.layout.total_dim), dtype=complex)
        u[0, : self.dim_env] = self.env_vacuum
        u[1, self.dim_env :] = self.env_vacuum
        return u

    def env_state_unmeasured(self, k: int) -> np.ndarray:
        """Reduced environment state of the unmeasured evolution at t_k."""
        if k == 0:
            return self.env_initial_state()
        sig = self._env_states.get(k)
        if sig is None:
            u = self.initial_seeds() @ self.propagator(k * self.schedule.delta).T
            u3 = u.reshape(2, 2, self.dim_env)
            sig = np.einsum("ase,bsf->abef", u3, u3.conj(), optimize=True)
            sig = np.tensordot(self.rho_spin0, sig, axes=([0, 1], [0, 1]))
            sig = (sig + sig.conj().T) / 2
            sig = sig / np.trace(sig).real
            self._env_states[k] = sig
        return sig

    def reduced_spin(self, global_vectors) -> np.ndarray:
        """Reduced spin state of a mixture of (unnormalized) global vectors."""
        rho = np.zeros((2, 2), dtype=complex)
        for psi in np.atleast_2d(global_vectors):
            p2 = psi.reshape(2, self.dim_env)
            rho += p2 @ p2.conj().T
        return rho

    def top_level_population(self, vectors) -> float:
        """Largest per-oscillator occupancy of the highest Fock level.

        Accepts composite-sized or environment-sized amplitude vectors (rows)
        and is used to flag when the truncation ceiling starts to matter.
        """
        d = self.params.d_osc
        n_osc = self.params.num_oscillators
        total = 0.0
        pops = np.zeros(n_osc)
        for psi in np.atleast_2d(vectors):
            if psi.size == self.layout.total_dim:
                amp2 = np.abs(psi.reshape((2,) + (d,) * n_osc)) ** 2
                first_env_axis = 1
            elif psi.size == self.dim_env:
                amp2 = np.abs(psi.reshape((d,) * n_osc)) ** 2
                first_env_axis = 0
            else:
                raise ValueError(
                    "vector size matches neither the composite nor the environment"
                )
            total += float(amp2.sum())
            for k in range(n_osc):
                pops[k] += float(np.take(amp2, d - 1, axis=first_env_axis + k).sum())
        if total <= 0:
            return 0.0
        return float(pops.max() / total)

    def warn_if_truncated(self, vectors, context: str = "") -> bool:
        pop = self.top_level_population(vectors)
        if pop > TRUNCATION_WARN_THRESHOLD:
            warnings.warn(
                f"top Fock level population {pop:.3e} exceeds "
                f"{TRUNCATION_WARN_THRESHOLD:g}{' in ' + context if context else ''}; "
                "results may be truncation-limited",
                RuntimeWarning,
                stacklevel=2,
            )
            return True
        return False
