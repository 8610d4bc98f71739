"""Experiment configuration: INI-style files, validation, fingerprinting.

The on-disk format is key/value pairs grouped into sections (parsed with
:mod:`configparser`); lists are comma separated.  The canonical serialization
(sorted ``section.key = value`` lines with ``repr`` floats) defines the
configuration fingerprint that every result row carries, so results can
always be traced back to the exact configuration that produced them.
"""

from __future__ import annotations

import configparser
import hashlib
import io
from dataclasses import dataclass, field, fields

__all__ = ["Tolerances", "ExperimentConfig", "load_config", "save_config", "default_config"]

VALID_SPIN_INITS = ("ground", "excited", "plus")
VALID_NORMS = ("frobenius", "spectral")
VALID_BRANCH_MODES = ("average", "all-plus", "per-branch")
VALID_INSTRUMENTS = ("povm", "identity")


@dataclass(frozen=True)
class Tolerances:
    structural: float = 1e-10
    reconstruction: float = 1e-8
    psd_slack: float = 1e-9


@dataclass
class ExperimentConfig:
    # model
    omegas: tuple[float, ...] = (1.99, 0.73, 0.89, 2.04, 1.58)
    couplings: tuple[float, ...] = (1.67, 1.32, 2.15, 2.70, 1.07)
    d_osc: int = 3
    spin_init: str = "plus"
    # schedule
    deltas: tuple[float, ...] = (1.0, 2.0, 3.0)
    num_steps: int = 5
    substeps: int = 40
    # measurement
    lambdas: tuple[float, ...] = (0.0, 0.25, 0.5, 1.0)
    instrument: str = "povm"
    # analysis
    norm: str = "frobenius"
    dk_paper_literal: bool = False
    branch_mode: str = "average"
    violation_full_grid: bool = False
    # tolerances
    tolerances: Tolerances = field(default_factory=Tolerances)
    # output
    out_dir: str = "results"

    def __post_init__(self):
        self.omegas = tuple(float(w) for w in self.omegas)
        self.couplings = tuple(float(g) for g in self.couplings)
        self.deltas = tuple(float(d) for d in self.deltas)
        self.lambdas = tuple(float(l) for l in self.lambdas)
        if len(self.omegas) != len(self.couplings):
            raise ValueError("omegas and couplings must have equal length")
        if self.d_osc < 2:
            raise ValueError("d_osc must be at least 2")
        if self.spin_init not in VALID_SPIN_INITS:
            raise ValueError(f"spin_init must be one of {VALID_SPIN_INITS}")
        if any(d <= 0 for d in self.deltas) or not self.deltas:
            raise ValueError("deltas must be positive")
        if self.num_steps < 1:
            raise ValueError("num_steps must be at least 1")
        if self.substeps < 1:
            raise ValueError("substeps must be at least 1")
        if any(not 0.0 <= l <= 1.0 for l in self.lambdas) or not self.lambdas:
            raise ValueError("lambdas must lie in [0, 1]")
        if self.instrument not in VALID_INSTRUMENTS:
            raise ValueError(f"instrument must be one of {VALID_INSTRUMENTS}")
        if self.norm not in VALID_NORMS:
            raise ValueError(f"norm must be one of {VALID_NORMS}")
        if self.branch_mode not in VALID_BRANCH_MODES:
            raise ValueError(f"branch_mode must be one of {VALID_BRANCH_MODES}")

    # -- serialization ------------------------------------------------------

    def to_sections(self) -> dict[str, dict[str, str]]:
        def fmt_list(values):
            return ", ".join(repr(float(v)) for v in values)

        return {
            "model": {
                "omegas": fmt_list(self.omegas),
                "couplings": fmt_list(self.couplings),
                "d_osc": str(self.d_osc),
                "spin_init": self.spin_init,
            },
            "schedule": {
                "deltas": fmt_list(self.deltas),
                "num_steps": str(self.num_steps),
                "substeps": str(self.substeps),
            },
            "measurement": {
                "lambdas": fmt_list(self.lambdas),
                "instrument": self.instrument,
            },
            "analysis": {
                "norm": self.norm,
                "dk_paper_literal": str(self.dk_paper_literal).lower(),
                "branch_mode": self.branch_mode,
                "violation_full_grid": str(self.violation_full_grid).lower(),
            },
            "tolerances": {
                "structural": repr(self.tolerances.structural),
                "reconstruction": repr(self.tolerances.reconstruction),
                "psd_slack": repr(self.tolerances.psd_slack),
            },
            "output": {
                "out_dir": self.out_dir,
            },
        }

    def canonical_text(self) -> str:
        """Sorted section.key = value lines over the physics-relevant sections.

        The output location is deliberately excluded: it cannot influence any
        computed number, and the fingerprint should identify results, not
        where they were written.
        """
        lines = []
        for section, items in sorted(self.to_sections().items()):
            if section == "output":
                continue
            for key, value in sorted(items.items()):
                lines.append(f"{section}.{key} = {value}")
        return "\n".join(lines) + "\n"

    def fingerprint(self) -> str:
        return hashlib.sha256(self.canonical_text().encode()).hexdigest()[:12]

    def to_ini(self) -> str:
        parser = configparser.ConfigParser()
        for section, items in self.to_sections().items():
            parser[section] = items
        buf = io.StringIO()
        parser.write(buf)
        return buf.getvalue()


def _parse_float_list(text: str) -> tuple[float, ...]:
    return tuple(float(part.strip()) for part in text.split(",") if part.strip())


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"cannot parse boolean from {text!r}")


def config_from_parser(parser: configparser.ConfigParser) -> ExperimentConfig:
    defaults = ExperimentConfig()

    def get(section, key, fallback):
        if parser.has_option(section, key):
            return parser.get(section, key)
        return fallback

    tol = Tolerances(
        structural=float(get("tolerances", "structural", defaults.tolerances.structural)),
        reconstruction=float(
            get("tolerances", "reconstruction", defaults.tolerances.reconstruction)
        ),
        psd_slack=float(get("tolerances", "psd_slack", defaults.tolerances.psd_slack)),
    )
    raw_omegas = get("model", "omegas", None)
    raw_couplings = get("model", "couplings", None)
    raw_deltas = get("schedule", "deltas", None)
    raw_lambdas = get("measurement", "lambdas", None)
    return ExperimentConfig(
        omegas=_parse_float_list(raw_omegas) if raw_omegas else defaults.omegas,
        couplings=_parse_float_list(raw_couplings) if raw_couplings else defaults.couplings,
        d_osc=int(get("model", "d_osc", defaults.d_osc)),
        spin_init=str(get("model", "spin_init", defaults.spin_init)),
        deltas=_parse_float_list(raw_deltas) if raw_deltas else defaults.deltas,
        num_steps=int(get("schedule", "num_steps", defaults.num_steps)),
        substeps=int(get("schedule", "substeps", defaults.substeps)),
        lambdas=_parse_float_list(raw_lambdas) if raw_lambdas else defaults.lambdas,
        instrument=str(get("measurement", "instrument", defaults.instrument)),
        norm=str(get("analysis", "norm", defaults.norm)),
        dk_paper_literal=_parse_bool(str(get("analysis", "dk_paper_literal", "false"))),
        branch_mode=str(get("analysis", "branch_mode", defaults.branch_mode)),
        violation_full_grid=_parse_bool(str(get("analysis", "violation_full_grid", "false"))),
        tolerances=tol,
        out_dir=str(get("output", "out_dir", defaults.out_dir)),
    )


def load_config(path) -> ExperimentConfig:
    parser = configparser.ConfigParser()
    with open(path, "r", encoding="utf-8") as fh:
        parser.read_file(fh)
    return config_from_parser(parser)


def loads_config(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser()
    parser.read_string(text)
    return config_from_parser(parser)


def save_config(config: ExperimentConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(config.to_ini())


def default_config() -> ExperimentConfig:
    return ExperimentConfig()
