"""Render figures from ttmemory CSV tables.

The plotting layer is strictly offline: it parses the delimited tables the
simulation CLI writes and never recomputes any physics.  Three figure kinds
are supported:

* ``dynamics``     - one panel per measurement strength, ground-state
                     population (solid) and coherence magnitude (dash-dotted)
                     against time, measurement instants marked;
* ``quantifiers``  - one panel per time spacing, the k-step tensor norm
                     (filled dots) and the mean multi-step contribution
                     (open markers) against the step index;
* ``violation``    - the one-step-composability violation against the step
                     index, one series per measurement strength.

Measurement strengths use a fixed color code (0 black, 0.25 red, 0.5 blue,
1 magenta); other values fall back to a deterministic palette.  Rendering is
reproducible: fixed figure geometry, no timestamps in the output.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

__all__ = ["FigureSpec", "RenderError", "load_table", "render"]

REQUIRED_COLUMNS = {
    "dynamics": {"delta", "lambda", "t", "rho11", "abs_rho12", "post_measurement"},
    "quantifiers": {"delta", "lambda", "k", "branch", "q_branch", "norm_tk0", "dk"},
    "violation": {"delta", "lambda", "k", "j", "branch", "q_branch", "violation"},
}

LAMBDA_COLORS = {0.0: "black", 0.25: "tab:red", 0.5: "tab:blue", 1.0: "magenta"}
FALLBACK_COLORS = ("tab:green", "tab:orange", "tab:purple", "tab:brown", "tab:gray")
DK_MARKERS = ("o", "s", "D", "x")


class RenderError(RuntimeError):
    """Input table missing, empty, or not matching the figure kind."""


@dataclass
class FigureSpec:
    kind: str
    inputs: list
    output: Path
    dpi: int = 150
    lambda_colors: dict = field(default_factory=lambda: dict(LAMBDA_COLORS))

    def __post_init__(self):
        if self.kind not in REQUIRED_COLUMNS:
            raise RenderError(f"unknown figure kind {self.kind!r}")
        self.inputs = [Path(p) for p in self.inputs]
        self.output = Path(self.output)


def load_table(path) -> tuple[dict, list, list]:
    """Parse a ttmemory CSV file: metadata lines, header, numeric rows."""
    path = Path(path)
    if not path.is_file():
        raise RenderError(f"input file not found: {path}")
    metadata: dict = {}
    columns: list = []
    rows: list = []
    with open(path, newline="", encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                metadata[key.strip()] = value.strip()
                continue
            cells = next(csv.reader([line]))
            if not cells or not any(cells):
                continue
            if not columns:
                columns = cells
                continue
            parsed = []
            for cell in cells:
                try:
                    parsed.append(float(cell))
                except ValueError:
                    parsed.append(cell)
            rows.append(parsed)
    return metadata, columns, rows


def _records(spec: FigureSpec) -> list[dict]:
    required = REQUIRED_COLUMNS[spec.kind]
    records: list[dict] = []
    for path in spec.inputs:
        _, columns, rows = load_table(path)
        missing = required - set(columns)
        if missing:
            raise RenderError(
                f"{path} does not look like a {spec.kind} table: "
                f"missing columns {sorted(missing)}"
            )
        records.extend(dict(zip(columns, row)) for row in rows)
    if not records:
        raise RenderError(f"no data rows in {[str(p) for p in spec.inputs]}")
    return records


def _lambda_color(spec: FigureSpec, lam: float, index: int) -> str:
    if lam in spec.lambda_colors:
        return spec.lambda_colors[lam]
    return FALLBACK_COLORS[index % len(FALLBACK_COLORS)]


def _render_dynamics(spec: FigureSpec, records: list[dict]):
    lambdas = sorted({r["lambda"] for r in records})
    fig, axes = plt.subplots(
        len(lambdas), 1, figsize=(6.4, 2.2 * len(lambdas)), sharex=True, squeeze=False
    )
    for ax, lam in zip(axes[:, 0], lambdas):
        rows = [r for r in records if r["lambda"] == lam]
        rows.sort(key=lambda r: (r["t"], r["post_measurement"]))
        ts = [r["t"] for r in rows]
        ax.plot(ts, [r["rho11"] for r in rows], color="tab:blue", lw=1.4,
                label=r"$\rho_{11}$")
        ax.plot(ts, [r["abs_rho12"] for r in rows], color="tab:red", lw=1.4,
                ls="-.", label=r"$|\rho_{12}|$")
        for t_meas in sorted({r["t"] for r in rows if r["post_measurement"] == 1}):
            ax.axvline(t_meas, color="0.8", lw=0.7, zorder=0)
        ax.set_ylabel(f"$\\lambda = {lam:g}$")
        ax.set_ylim(-0.02, 1.02)
    axes[0, 0].legend(loc="upper right", fontsize=8, ncol=2)
    axes[-1, 0].set_xlabel("t")
    fig.suptitle("Monitored spin: population and coherence")
    fig.tight_layout()
    return fig


def _render_quantifiers(spec: FigureSpec, records: list[dict]):
    deltas = sorted({r["delta"] for r in records})
    fig, axes = plt.subplots(
        1, len(deltas), figsize=(3.2 * len(deltas), 3.4), sharey=True, squeeze=False
    )
    for ax, delta in zip(axes[0], deltas):
        sub = [r for r in records if r["delta"] == delta]
        lambdas = sorted({r["lambda"] for r in sub})
        for i, lam in enumerate(lambdas):
            color = _lambda_color(spec, lam, i)
            rows = sorted((r for r in sub if r["lambda"] == lam), key=lambda r: r["k"])
            ks = [r["k"] for r in rows]
            ax.plot(ks, [r["norm_tk0"] for r in rows], ".", ms=9, color=color,
                    label=f"$\\lambda={lam:g}$")
            ax.plot(ks, [r["dk"] for r in rows], DK_MARKERS[i % len(DK_MARKERS)],
                    ms=6, mfc="none", color=color)
        ax.set_title(f"$\\Delta = {delta:g}$")
        ax.set_xlabel("k")
        ax.set_xticks(sorted({r["k"] for r in sub}))
    axes[0][0].set_ylabel(r"$\|\tilde T_{k,0}\|$ (dots),  $\mathcal{D}_k$ (open)")
    axes[0][0].legend(fontsize=7)
    fig.tight_layout()
    return fig


def _render_violation(spec: FigureSpec, records: list[dict]):
    baseline = [r for r in records if r["j"] == 0]
    if not baseline:
        raise RenderError("violation table holds no j = 0 baseline rows")
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    lambdas = sorted({r["lambda"] for r in baseline})
    for i, lam in enumerate(lambdas):
        rows = sorted((r for r in baseline if r["lambda"] == lam), key=lambda r: r["k"])
        ax.plot(
            [r["k"] for r in rows],
            [r["violation"] for r in rows],
            marker=DK_MARKERS[i % len(DK_MARKERS)],
            color=_lambda_color(spec, lam, i),
            lw=1.2,
            label=f"$\\lambda={lam:g}$",
        )
    deltas = sorted({r["delta"] for r in baseline})
    ax.set_xlabel("k")
    ax.set_ylabel("one-step composability violation")
    ax.set_title(f"$\\Delta = {deltas[0]:g}$" if len(deltas) == 1 else "")
    ax.set_xticks(sorted({r["k"] for r in baseline}))
    ax.legend(fontsize=8)
    fig.tight_layout()
    return fig


_RENDERERS = {
    "dynamics": _render_dynamics,
    "quantifiers": _render_quantifiers,
    "violation": _render_violation,
}


def render(spec: FigureSpec):
    """Render the figure and write it to ``spec.output``.

    Returns the matplotlib figure (tests inspect panel counts).  On any
    input problem a :class:`RenderError` is raised before the output file
    is touched.
    """
    records = _records(spec)
    fig = _RENDERERS[spec.kind](spec, records)
    spec.output.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(spec.output, dpi=spec.dpi, metadata=_stable_metadata(spec.output))
    plt.close(fig)
    return fig


def _stable_metadata(output: Path) -> dict | None:
    # PNG files carry a Software tag only; strip anything date-like so that
    # re-rendering is byte-stable. Other formats keep their defaults.
    if output.suffix.lower() == ".png":
        return {"Software": "ttfigures"}
    return None
