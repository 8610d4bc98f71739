"""Experiment orchestration: trajectories, quantifiers, violations, reports.

Each ``run_*`` function turns an :class:`~ttmemory.config.ExperimentConfig`
into a :class:`~ttmemory.results.ResultTable`; the CLI writes those tables
to CSV.  Everything is deterministic - there is no randomness anywhere in
the pipeline, so identical configurations produce byte-identical files.
"""

from __future__ import annotations

import numpy as np

from .config import ExperimentConfig
from .dephasing import counterexample_report
from .model import Instrument, Schedule, SpinBosonModel, SpinBosonParams, build_povm
from .results import ResultTable
from .stochastic import (
    branch_average,
    build_stochastic_tt,
    enumerate_branches,
    gamma_tilde_table,
    quantifier_dk,
    quantifier_tk0,
    violation_norm,
)

__all__ = [
    "build_model",
    "build_instrument",
    "run_dynamics",
    "run_quantifiers",
    "run_violation",
    "run_dephasing_demo",
    "run_convergence",
    "ToleranceError",
]

VIOLATION_DEFAULT_DELTA = 2.0


class ToleranceError(RuntimeError):
    """A numerical identity failed at its configured tolerance."""


def build_model(config: ExperimentConfig, delta: float, d_osc: int | None = None) -> SpinBosonModel:
    params = SpinBosonParams(
        omegas=config.omegas,
        couplings=config.couplings,
        d_osc=d_osc if d_osc is not None else config.d_osc,
    )
    schedule = Schedule(delta=delta, num_steps=config.num_steps, substeps=config.substeps)
    return SpinBosonModel(params, schedule, spin_init=config.spin_init)


def build_instrument(config: ExperimentConfig, lam: float) -> Instrument:
    if config.instrument == "identity":
        return Instrument.identity(2)
    return build_povm(lam)


# ---------------------------------------------------------------------------
# dynamics (fine-grained monitored trajectories)
# ---------------------------------------------------------------------------


def _trajectory_rows(model: SpinBosonModel, instrument: Instrument, lam: float, delta: float):
    """Outcome-averaged spin trajectory on the substep grid.

    Branch states are carried as groups of unnormalized composite vectors
    (one group per outcome record, one vector per initial-state eigenvector);
    the population column is the non-selective average while the coherence
    column averages per-branch magnitudes, so a projective measurement pins
    both to 1/2 on every branch.
    """
    schedule = model.schedule
    rho0 = model.rho_spin0
    dim_env = model.dim_env

    w0, v0 = np.linalg.eigh(rho0)
    group = np.array(
        [np.sqrt(w0[i]) * np.kron(v0[:, i], model.env_vacuum) for i in range(len(w0)) if w0[i] > 1e-14]
    )
    groups = [group]

    u_sub = model.propagator(delta / schedule.substeps)
    rows = []
    ceiling = False

    def emit(t, post):
        rho11 = 0.0
        abs12 = 0.0
        for g in groups:
            red = model.reduced_spin(g)
            rho11 += red[0, 0].real
            abs12 += abs(red[0, 1])
        rows.append((delta, lam, float(t), rho11, abs12, int(post), int(ceiling)))

    emit(0.0, 0)
    for k in range(1, schedule.num_steps + 1):
        for s in range(1, schedule.substeps + 1):
            groups = [g @ u_sub.T for g in groups]
            t = (k - 1) * delta + s * delta / schedule.substeps
            if s < schedule.substeps:
                emit(t, 0)
        emit(k * delta, 0)
        split = []
        for g in groups:
            g3 = g.reshape(len(g), 2, dim_env)
            for label in instrument.labels:
                m_op = instrument.operator(label)
                split.append(np.einsum("st,ate->ase", m_op, g3, optimize=True).reshape(len(g), -1))
        groups = split
        ceiling = ceiling or any(
            model.top_level_population(g) > 1e-6 for g in groups
        )
        emit(k * delta, 1)
    return rows


def run_dynamics(config: ExperimentConfig, delta: float | None = None) -> ResultTable:
    """Population and coherence of the monitored spin on a fine time grid."""
    delta = float(delta) if delta is not None else config.deltas[0]
    table = ResultTable(
        columns=["delta", "lambda", "t", "rho11", "abs_rho12", "post_measurement", "ceiling_flag"],
        tag="dynamics",
        fingerprint=config.fingerprint(),
    )
    base = build_model(config, delta)
    for lam in config.lambdas:
        instrument = build_instrument(config, lam)
        for row in _trajectory_rows(base, instrument, lam, delta):
            table.append(*row)
    return table


# ---------------------------------------------------------------------------
# quantifiers (transfer-tensor memory measures)
# ---------------------------------------------------------------------------


def _branch_values(config, model, instrument, shared_cache):
    """Per-(k, branch) quantifier values with branch weights."""
    m = model.schedule.num_steps
    out = []
    for k in range(2, m + 1):
        branches = enumerate_branches(model, instrument, depth=k - 1)
        rows = []
        for branch in branches:
            gammas = gamma_tilde_table(model, branch, max_step=k, shared_cache=shared_cache)
            hier = build_stochastic_tt(branch, gammas, instrument, route="gamma", max_step=k)
            if max(hier.residuals) > config.tolerances.reconstruction:
                raise ToleranceError(
                    f"reconstruction residual {max(hier.residuals):.3e} exceeds "
                    f"{config.tolerances.reconstruction:g} on branch {branch.label()}"
                )
            rows.append(
                (
                    branch,
                    branch.weight,
                    quantifier_tk0(hier, k, norm=config.norm),
                    quantifier_dk(hier, branch, k, norm=config.norm,
                                  paper_literal=config.dk_paper_literal),
                )
            )
        out.append((k, rows))
    return out


def _report_rows(config, k, rows):
    """Apply the branch-reporting mode to per-branch (weight, value...) rows."""
    if config.branch_mode == "per-branch":
        return [
            (branch.label(), weight, tk0, dk) for branch, weight, tk0, dk in rows
        ]
    if config.branch_mode == "all-plus":
        target = rows[0][0].instrument.labels[0] * (k - 1)
        for branch, weight, tk0, dk in rows:
            if branch.label() == target or branch.depth == 0:
                return [(branch.label(), weight, tk0, dk)]
        raise RuntimeError(f"all-plus branch {target!r} not found")
    weights = [weight for _, weight, _, _ in rows]
    avg_tk0, _ = branch_average((tk0 for _, _, tk0, _ in rows), weights)
    avg_dk, _ = branch_average((dk for _, _, _, dk in rows), weights)
    return [("avg", 1.0, avg_tk0, avg_dk)]


def run_quantifiers(config: ExperimentConfig) -> ResultTable:
    """Memory quantifiers ||T̃_{k,0}|| and D_k over the (delta, lambda, k) grid."""
    table = ResultTable(
        columns=["delta", "lambda", "k", "branch", "q_branch", "norm_tk0", "dk"],
        tag="quantifiers",
        fingerprint=config.fingerprint(),
        metadata={"norm": config.norm, "branch_mode": config.branch_mode},
    )
    base = None
    for delta in config.deltas:
        if base is None:
            model = build_model(config, delta)
            base = model
        else:
            model = base.with_schedule(
                Schedule(delta=delta, num_steps=config.num_steps, substeps=config.substeps)
            )
        for lam in config.lambdas:
            instrument = build_instrument(config, lam)
            shared_cache: dict = {}
            for k, rows in _branch_values(config, model, instrument, shared_cache):
                for label, weight, tk0, dk in _report_rows(config, k, rows):
                    table.append(delta, lam, k, label, weight, tk0, dk)
    return table


# ---------------------------------------------------------------------------
# violation of the one-step-composable description
# ---------------------------------------------------------------------------


def run_violation(config: ExperimentConfig, delta: float | None = None) -> ResultTable:
    """Distance of Φ̃_k from its one-step Γ̃-chain description.

    Defaults to the j = 0 baseline on a single time spacing (2.0 unless
    overridden); ``violation_full_grid`` adds every (k, j) pair.
    """
    delta = float(delta) if delta is not None else VIOLATION_DEFAULT_DELTA
    table = ResultTable(
        columns=["delta", "lambda", "k", "j", "branch", "q_branch", "violation"],
        tag="violation",
        fingerprint=config.fingerprint(),
        metadata={"norm": config.norm, "branch_mode": config.branch_mode},
    )
    model = build_model(config, delta)
    m = config.num_steps
    for lam in config.lambdas:
        instrument = build_instrument(config, lam)
        shared_cache: dict = {}
        for k in range(2, m + 1):
            branches = enumerate_branches(model, instrument, depth=k - 1)
            j_values = range(k) if config.violation_full_grid else (0,)
            for j in j_values:
                rows = []
                for branch in branches:
                    gammas = gamma_tilde_table(
                        model, branch, max_step=k, shared_cache=shared_cache
                    )
                    value = violation_norm(branch, gammas, instrument, k, j, norm=config.norm)
                    rows.append((branch, branch.weight, value))
                if config.branch_mode == "per-branch":
                    for branch, weight, value in rows:
                        table.append(delta, lam, k, j, branch.label(), weight, value)
                elif config.branch_mode == "all-plus":
                    target = instrument.labels[0] * (k - 1)
                    for branch, weight, value in rows:
                        if branch.label() == target or branch.depth == 0:
                            table.append(delta, lam, k, j, branch.label(), weight, value)
                            break
                else:
                    weights = [weight for _, weight, _ in rows]
                    avg, _ = branch_average((v for _, _, v in rows), weights)
                    table.append(delta, lam, k, j, "avg", 1.0, avg)
    return table


# ---------------------------------------------------------------------------
# dephasing demonstration
# ---------------------------------------------------------------------------

DEPHASING_CASES = (
    ("semigroup", np.exp(-0.5), np.exp(-1.0)),
    ("divisible-with-memory", 0.8, 0.7),
    ("non-divisible", 0.3, 0.5),
)


def run_dephasing_demo(config: ExperimentConfig | None = None) -> ResultTable:
    """Three canonical dephasing pairs: semigroup, divisible yet with a
    non-zero two-step tensor, and non-divisible."""
    fingerprint = config.fingerprint() if config is not None else ""
    table = ResultTable(
        columns=[
            "case",
            "c1_re",
            "c1_im",
            "c2_re",
            "c2_im",
            "e21_cptp",
            "e21_min_choi_eig",
            "t20_norm",
        ],
        tag="dephasing-demo",
        fingerprint=fingerprint,
    )
    for name, c1, c2 in DEPHASING_CASES:
        rep = counterexample_report(c1, c2)
        table.append(
            name,
            float(np.real(c1)),
            float(np.imag(c1)),
            float(np.real(c2)),
            float(np.imag(c2)),
            rep.e21_cptp,
            rep.e21_min_choi_eig,
            rep.t20_norm,
        )
    return table


# ---------------------------------------------------------------------------
# truncation convergence report
# ---------------------------------------------------------------------------


def run_convergence(config: ExperimentConfig, delta: float | None = None) -> ResultTable:
    """Observable shifts between the configured truncation and one level up.

    Reports the post-measurement populations at the measurement times and
    the branch-averaged k-step quantifier for each lambda; the caller judges
    convergence from the reported deltas, nothing is asserted silently.
    """
    delta = float(delta) if delta is not None else config.deltas[0]
    table = ResultTable(
        columns=["quantity", "lambda", "index", "value_low", "value_high", "abs_delta"],
        tag="convergence",
        fingerprint=config.fingerprint(),
        metadata={"d_osc_low": str(config.d_osc), "d_osc_high": str(config.d_osc + 1)},
    )

    def observables(d_osc):
        model = build_model(config, delta, d_osc=d_osc)
        out = {}
        for lam in config.lambdas:
            instrument = build_instrument(config, lam)
            # post-measurement populations at t_k on the coarse grid
            coarse = ExperimentConfig(**{**_config_kwargs(config), "substeps": 1, "d_osc": d_osc})
            rows = _trajectory_rows(model, instrument, lam, delta)
            for r in rows:
                if r[5] == 1:  # post-measurement rows
                    out[("rho11_post", lam, r[2])] = r[3]
            shared: dict = {}
            for k, branch_rows in _branch_values(coarse, model, instrument, shared):
                weights = [w for _, w, _, _ in branch_rows]
                avg, _ = branch_average((t for _, _, t, _ in branch_rows), weights)
                out[("norm_tk0_avg", lam, float(k))] = avg
        return out

    low = observables(config.d_osc)
    high = observables(config.d_osc + 1)
    for key in sorted(low, key=str):
        quantity, lam, index = key
        a, b = low[key], high.get(key, float("nan"))
        table.append(quantity, lam, index, a, b, abs(a - b))
    return table


def _config_kwargs(config: ExperimentConfig) -> dict:
    return {
        "omegas": config.omegas,
        "couplings": config.couplings,
        "d_osc": config.d_osc,
        "spin_init": config.spin_init,
        "deltas": config.deltas,
        "num_steps": config.num_steps,
        "substeps": config.substeps,
        "lambdas": config.lambdas,
        "instrument": config.instrument,
        "norm": config.norm,
        "dk_paper_literal": config.dk_paper_literal,
        "branch_mode": config.branch_mode,
        "violation_full_grid": config.violation_full_grid,
        "tolerances": config.tolerances,
        "out_dir": config.out_dir,
    }
