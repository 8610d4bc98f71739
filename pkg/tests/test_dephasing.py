import numpy as np
import pytest

from ttmemory.dephasing import (
    CounterexampleReport,
    DephasingFamily,
    counterexample_report,
    dephasing_hierarchy,
    dephasing_map,
    semigroup_hierarchy_check,
)
from ttmemory.maps import apply_superop, choi_matrix, is_cptp
from ttmemory.transfer import multistep_profile, reconstruction_residuals
from conftest import random_density_matrix


def test_dephasing_map_identity_and_erasure(rng):
    assert np.abs(dephasing_map(1.0) - np.eye(4)).max() == 0.0
    rho = random_density_matrix(rng, 2)
    erased = apply_superop(dephasing_map(0.0), rho)
    assert abs(erased[0, 1]) < 1e-15 and abs(erased[1, 0]) < 1e-15
    assert abs(erased[0, 0] - rho[0, 0]) < 1e-15


def test_dephasing_map_scales_coherence(rng):
    c = 0.4 - 0.3j
    rho = random_density_matrix(rng, 2)
    out = apply_superop(dephasing_map(c), rho)
    assert abs(out[1, 0] - c * rho[1, 0]) < 1e-15
    assert abs(out[0, 1] - np.conj(c) * rho[0, 1]) < 1e-15


def test_dephasing_map_rejects_supra_unit_factor():
    with pytest.raises(ValueError):
        dephasing_map(1.2)


def test_dephasing_map_is_cp_for_contractive_factor():
    choi = choi_matrix(dephasing_map(np.exp(-0.3)))
    assert np.linalg.eigvalsh(choi).min() > -1e-14


def test_dephasing_multiplicativity(rng):
    c1, c2 = 0.8 * np.exp(0.3j), 0.5 * np.exp(-1.1j)
    composed = dephasing_map(c1) @ dephasing_map(c2)
    assert np.abs(composed - dephasing_map(c1 * c2)).max() < 1e-12


# ---------------------------------------------------------------------------
# counterexample report
# ---------------------------------------------------------------------------


def test_counterexample_semigroup_pair():
    c1 = np.exp(-0.5)
    rep = counterexample_report(c1, c1**2)
    assert rep.e21_cptp
    assert rep.t20_norm <= 1e-12


def test_counterexample_divisible_with_memory():
    rep = counterexample_report(0.8, 0.7)
    assert isinstance(rep, CounterexampleReport)
    assert rep.e21_cptp
    # direct 4x4 evaluation: T20 = diag(0, c2-c1^2, conj, 0)
    expected = np.sqrt(2.0) * abs(0.7 - 0.8**2)
    assert abs(rep.t20_norm - expected) < 1e-12
    assert rep.t20_norm > 0.01


def test_counterexample_non_divisible():
    rep = counterexample_report(0.3, 0.5)
    assert not rep.e21_cptp
    assert rep.e21_min_choi_eig < -1e-3


def test_counterexample_rejects_singular_first_step():
    with pytest.raises(ValueError):
        counterexample_report(0.0, 0.5)


def test_divisibility_iff_contraction(rng):
    # the CP condition of the two-point map is exactly |c2| <= |c1|
    for _ in range(20):
        c1 = (rng.uniform(0.05, 1.0)) * np.exp(1j * rng.uniform(0, 2 * np.pi))
        c2 = (rng.uniform(0.0, 1.0)) * np.exp(1j * rng.uniform(0, 2 * np.pi))
        rep = counterexample_report(c1, c2)
        assert rep.e21_cptp == (abs(c2) <= abs(c1) + 1e-12), (c1, c2, rep)


def test_t20_vanishes_iff_square(rng):
    for _ in range(20):
        c1 = rng.uniform(0.1, 1.0) * np.exp(1j * rng.uniform(0, 2 * np.pi))
        c2 = c1**2 if rng.uniform() < 0.5 else rng.uniform(0.0, 1.0)
        rep = counterexample_report(c1, c2)
        assert (rep.t20_norm <= 1e-12) == (abs(c2 - c1**2) <= 1e-12)


# ---------------------------------------------------------------------------
# hierarchy of the analytic family
# ---------------------------------------------------------------------------


def test_semigroup_hierarchy_vanishes():
    assert semigroup_hierarchy_check(0.0, 1.0, 4) == 0.0
    assert semigroup_hierarchy_check(0.5, 1.0, 4) <= 1e-10


def test_semigroup_power_law():
    family = DephasingFamily.exponential(0.5)
    phi1 = dephasing_map(family(1.0))
    for k in range(1, 5):
        assert np.abs(dephasing_map(family(float(k))) - np.linalg.matrix_power(phi1, k)).max() < 1e-10


def test_non_exponential_family_has_memory():
    family = DephasingFamily(lambda t: np.cos(t) * np.exp(-0.1 * t))
    hier = dephasing_hierarchy(family, 1.0, 4)
    assert multistep_profile(hier).max_norm() > 1e-4
    # the hierarchy still reconstructs its own map chain exactly
    phis = [dephasing_map(family(k * 1.0)) for k in range(5)]
    assert max(reconstruction_residuals(hier, phis)) < 1e-12


def test_family_guards():
    with pytest.raises(ValueError):
        DephasingFamily.exponential(-1.0)
    family = DephasingFamily(lambda t: 1.1)
    with pytest.raises(ValueError):
        family(1.0)


def test_dephasing_maps_pass_cptp_check():
    for c in (1.0, 0.5, 0.3 * np.exp(2j)):
        rep = is_cptp(dephasing_map(c), tol=1e-12)
        assert rep.cp and rep.tp
