import itertools

import numpy as np
import pytest

from ttmemory.linalg import kron, kron_all, partial_trace
from ttmemory.model import (
    KET_MINUS,
    KET_PLUS,
    SPIN_LOWER,
    SPIN_RAISE,
    GlobalState,
    Instrument,
    Schedule,
    SpinBosonModel,
    SpinBosonParams,
    annihilation_operator,
    apply_measurement,
    build_hamiltonian,
    build_initial_state,
    build_povm,
    propagator,
)
from conftest import random_density_matrix


def _number_operator(params: SpinBosonParams) -> np.ndarray:
    """Total excitation count sigma+ sigma- + sum_k b_k† b_k."""
    d = params.d_osc
    n_osc = params.num_oscillators
    a = annihilation_operator(d)
    n_osc_op = a.conj().T @ a
    eye_osc = np.eye(d)
    dim_env = d**n_osc
    total = kron(SPIN_RAISE @ SPIN_LOWER, np.eye(dim_env))
    for k in range(n_osc):
        ops = [eye_osc] * n_osc
        ops[k] = n_osc_op
        total += kron(np.eye(2), kron_all(ops))
    return total


# ---------------------------------------------------------------------------
# Hamiltonian
# ---------------------------------------------------------------------------


def test_decoupled_spectrum_by_enumeration():
    params = SpinBosonParams(couplings=(0.0,) * 5, d_osc=2)
    h = build_hamiltonian(params)
    assert np.abs(h - h.conj().T).max() == 0.0
    # oracle: enumerate every occupation pattern
    expected = sorted(
        spin + sum(n * w for n, w in zip(ns, params.omegas))
        for spin in (-0.5, +0.5)
        for ns in itertools.product((0, 1), repeat=5)
    )
    assert np.allclose(np.linalg.eigvalsh(h), expected, atol=1e-12)


def test_default_parameters_give_hermitian_composite():
    params = SpinBosonParams(d_osc=2)
    assert params.omegas == (1.99, 0.73, 0.89, 2.04, 1.58)
    assert params.couplings == (1.67, 1.32, 2.15, 2.70, 1.07)
    h = build_hamiltonian(params)
    assert h.shape == (2 * 2**5, 2 * 2**5)
    assert np.abs(h - h.conj().T).max() < 1e-12


@pytest.mark.parametrize("d_osc", [2, 3])
def test_hamiltonian_conserves_excitations(d_osc):
    params = SpinBosonParams(d_osc=d_osc)
    h = build_hamiltonian(params)
    n = _number_operator(params)
    assert np.abs(h @ n - n @ h).max() < 1e-12


def test_params_validation():
    with pytest.raises(ValueError):
        SpinBosonParams(omegas=(1.0,), couplings=(1.0, 2.0))
    with pytest.raises(ValueError):
        SpinBosonParams(d_osc=1)


# ---------------------------------------------------------------------------
# initial states
# ---------------------------------------------------------------------------


def test_ground_initial_state_population():
    params = SpinBosonParams(d_osc=2)
    state = build_initial_state(params, "ground")
    assert abs(state.rho[0, 0] - 1.0) < 1e-15
    assert abs(np.trace(state.rho) - 1.0) < 1e-15


def test_plus_initial_state_reduced_spin():
    params = SpinBosonParams(d_osc=2)
    state = build_initial_state(params, "plus")
    red = partial_trace(state.rho, state.layout, keep=[0])
    assert abs(red[0, 0] - 0.5) < 1e-15
    assert abs(abs(red[0, 1]) - 0.5) < 1e-15


def test_ground_vacuum_is_stationary():
    model = SpinBosonModel(SpinBosonParams(d_osc=2), Schedule(delta=1.0, num_steps=3), "ground")
    rho0 = model.initial_state().rho
    for t in (0.7, 3.1):
        u = model.propagator(t)
        assert np.linalg.norm(u @ rho0 @ u.conj().T - rho0) < 1e-8


def test_custom_spin_state_validation():
    params = SpinBosonParams(d_osc=2)
    good = np.array([[0.25, 0.0], [0.0, 0.75]])
    state = build_initial_state(params, good)
    assert abs(np.trace(state.rho) - 1.0) < 1e-12
    with pytest.raises(ValueError):
        build_initial_state(params, np.array([[1.5, 0], [0, -0.5]]))  # not PSD
    with pytest.raises(ValueError):
        build_initial_state(params, np.array([[0.9, 0], [0, 0.3]]))  # trace != 1
    with pytest.raises(ValueError):
        build_initial_state(params, "sideways")


# ---------------------------------------------------------------------------
# instruments
# ---------------------------------------------------------------------------


def test_povm_projective_limit():
    inst = build_povm(0.0)
    proj_plus = np.outer(KET_PLUS, KET_PLUS.conj())
    proj_minus = np.outer(KET_MINUS, KET_MINUS.conj())
    assert np.abs(inst.operator("+") - proj_plus).max() < 1e-12
    assert np.abs(inst.operator("-") - proj_minus).max() < 1e-12


def test_povm_trivial_limit():
    inst = build_povm(1.0)
    for label in inst.labels:
        assert np.abs(inst.operator(label) - np.eye(2) / np.sqrt(2)).max() < 1e-12


@pytest.mark.parametrize("lam", [0.0, 0.13, 0.5, 0.77, 1.0])
def test_povm_completeness_and_positivity(lam):
    inst = build_povm(lam)
    total = sum(inst.effects)
    assert np.abs(total - np.eye(2)).max() < 1e-14
    for f in inst.effects:
        assert np.linalg.eigvalsh(f).min() > -1e-12


def test_povm_lambda_out_of_range():
    with pytest.raises(ValueError):
        build_povm(-0.1)
    with pytest.raises(ValueError):
        build_povm(1.1)


def test_instrument_rejects_incomplete_effects():
    with pytest.raises(ValueError):
        Instrument(("a",), [np.eye(2) * 0.5])
    with pytest.raises(ValueError):
        Instrument(("a", "b"), [np.eye(2)])


def test_identity_instrument():
    inst = Instrument.identity(2)
    assert inst.labels == ("id",)
    assert np.abs(inst.operator("id") - np.eye(2)).max() == 0.0


# ---------------------------------------------------------------------------
# propagators
# ---------------------------------------------------------------------------


def test_propagator_at_zero(small_model):
    assert np.abs(small_model.propagator(0.0) - np.eye(small_model.layout.total_dim)).max() < 1e-12


def test_propagator_group_property(small_model):
    ua = small_model.propagator(0.4)
    ub = small_model.propagator(0.9)
    uab = small_model.propagator(1.3)
    assert np.abs(ua @ ub - uab).max() < 1e-10


def test_propagator_unitary_and_spectrum_preserving(small_model, rng):
    u = small_model.propagator(1.0)
    dim = small_model.layout.total_dim
    assert np.linalg.norm(u.conj().T @ u - np.eye(dim)) < 1e-10
    rho_s = random_density_matrix(rng, 2)
    rho = kron(rho_s, small_model.env_initial_state())
    evolved = u @ rho @ u.conj().T
    assert abs(np.trace(evolved) - 1.0) < 1e-10
    assert np.allclose(
        np.linalg.eigvalsh(evolved), np.linalg.eigvalsh(rho), atol=1e-10
    )


def test_free_propagator_function_uses_spectral_route():
    h = build_hamiltonian(SpinBosonParams(d_osc=2))
    u1 = propagator(h, 0.5)
    u2 = propagator(h, 0.5)  # second call hits the content-addressed cache
    assert np.abs(u1 - u2).max() == 0.0
    assert np.linalg.norm(u1 @ u1.conj().T - np.eye(64)) < 1e-10


# ---------------------------------------------------------------------------
# measurements on composite states
# ---------------------------------------------------------------------------


def test_apply_measurement_projective_collapse(small_model):
    state = small_model.initial_state()
    u = small_model.propagator(1.0)
    evolved = GlobalState(u @ state.rho @ u.conj().T, state.layout, 1.0)
    inst = build_povm(0.0)
    post = apply_measurement(evolved, inst, "+")
    red = partial_trace(post.rho, post.layout, keep=[0]) / post.weight
    proj_plus = np.outer(KET_PLUS, KET_PLUS.conj())
    assert np.abs(red - proj_plus).max() < 1e-12


def test_apply_measurement_trivial_halves(small_model):
    state = small_model.initial_state()
    inst = build_povm(1.0)
    post = apply_measurement(state, inst, "-")
    assert np.abs(post.rho - state.rho / 2).max() < 1e-14
    assert abs(post.weight - 0.5) < 1e-14


def test_apply_measurement_total_weight(small_model):
    state = small_model.initial_state()
    u = small_model.propagator(1.0)
    evolved = GlobalState(u @ state.rho @ u.conj().T, state.layout, 1.0)
    inst = build_povm(0.37)
    total = sum(apply_measurement(evolved, inst, o).weight for o in inst.labels)
    assert abs(total - 1.0) < 1e-12


def test_apply_measurement_unknown_outcome(small_model):
    with pytest.raises(KeyError):
        apply_measurement(small_model.initial_state(), build_povm(0.5), "sideways")


# ---------------------------------------------------------------------------
# model-level invariants
# ---------------------------------------------------------------------------


def test_excitation_expectation_constant():
    model = SpinBosonModel(SpinBosonParams(d_osc=3), Schedule(delta=1.0, num_steps=2))
    n = _number_operator(model.params)
    rho0 = model.initial_state().rho
    expect0 = np.trace(n @ rho0).real
    for t in (0.5, 1.0, 2.0):
        u = model.propagator(t)
        evolved = u @ rho0 @ u.conj().T
        assert abs(np.trace(n @ evolved).real - expect0) < 1e-8


def test_truncation_warning_fires():
    model = SpinBosonModel(SpinBosonParams(d_osc=2), Schedule(delta=1.0, num_steps=3))
    from ttmemory.stochastic import propagate_branch

    with pytest.warns(RuntimeWarning, match="top Fock level"):
        propagate_branch(model, build_povm(0.0), ("+", "-"))


def test_with_schedule_shares_propagators(small_model):
    other = small_model.with_schedule(Schedule(delta=2.0, num_steps=3))
    assert other.schedule.delta == 2.0
    assert other._propagators is small_model._propagators
    assert np.abs(other.propagator(1.0) - small_model.propagator(1.0)).max() == 0.0
