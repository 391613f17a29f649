"""Experiment config files: a JSON key-value tree with an explicit schema.

Configs are diffable and citable: every run directory embeds the config
hash, and unknown keys are rejected rather than ignored so that typos never
silently change an experiment.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

from .gaussian import LongMemorySpec
from .model import SvModel, VolatilityFn
from .tails import LeverageCoupling, TailLaw
from .verify import ExperimentPlan, StatisticSpec

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "config_hash"]

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Schema violation in an experiment config."""


_SECTIONS = {
    "schema_version": None,
    "name": None,
    "seed": None,
    "gaussian": {"coeff_law", "hurst", "truncation_m", "ell_const", "coeffs", "decay"},
    "tail": {"alpha", "beta", "family", "x_min", "scale", "skew", "centered"},
    "coupling": {"kind", "psi1", "psi2", "u_law"},
    "volatility": {"kind", "power", "coeffs"},
    "statistic": {"kind", "p", "lag", "centered"},
    "plan": {
        "n_grid",
        "replicates",
        "distance",
        "affine_fit",
        "synthesis",
        "exponent_tol",
        "reference_size",
    },
    "simulate": {"n", "synthesis"},
    "scan": {"p", "h_grid", "statistic", "lag", "replicates", "n_grid"},
    "pointprocess": {"n_grid", "replicates", "h", "threshold", "norm_nsim_factor"},
    "strict": None,
}


def _require_known(mapping: dict, allowed: set, where: str) -> None:
    unknown = set(mapping) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")


@dataclass
class ExperimentConfig:
    raw: dict
    name: str
    seed: int
    model: SvModel
    statistic: StatisticSpec | None
    plan_args: dict
    simulate_args: dict
    scan_args: dict
    pointprocess_args: dict
    strict: bool

    def build_plan(self, **overrides) -> ExperimentPlan:
        if self.statistic is None:
            raise ConfigError("config has no [statistic] section")
        args = dict(
            model=self.model,
            statistic=self.statistic,
            n_grid=tuple(self.plan_args.get("n_grid", (2**12, 2**14, 2**16))),
            replicates=int(self.plan_args.get("replicates", 500)),
            master_seed=self.seed,
            distance=self.plan_args.get("distance", "ks"),
            affine_fit=bool(self.plan_args.get("affine_fit", True)),
            synthesis=self.plan_args.get("synthesis", "auto"),
            exponent_tol=float(self.plan_args.get("exponent_tol", 0.07)),
            reference_size=int(self.plan_args.get("reference_size", 2000)),
        )
        args.update(overrides)
        return ExperimentPlan(**args)

    def hash(self) -> str:
        return config_hash(self.raw)


def config_hash(raw: dict) -> str:
    return hashlib.sha256(json.dumps(raw, sort_keys=True).encode()).hexdigest()


def _build_gaussian(sec: dict) -> LongMemorySpec:
    _require_known(sec, _SECTIONS["gaussian"], "gaussian")
    kw = dict(sec)
    if kw.get("coeffs") is not None:
        kw["coeffs"] = tuple(kw["coeffs"])
    try:
        return LongMemorySpec(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"gaussian section: {exc}") from exc


def _build_tail(sec: dict) -> TailLaw:
    _require_known(sec, _SECTIONS["tail"], "tail")
    try:
        return TailLaw(**sec)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"tail section: {exc}") from exc


def _build_coupling(sec: dict) -> LeverageCoupling:
    _require_known(sec, _SECTIONS["coupling"], "coupling")
    kw = dict(sec)
    for key in ("psi1", "psi2"):
        if key in kw:
            kw[key] = tuple(kw[key])
    try:
        return LeverageCoupling(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"coupling section: {exc}") from exc


def _build_volatility(sec: dict) -> VolatilityFn:
    _require_known(sec, _SECTIONS["volatility"], "volatility")
    kw = dict(sec)
    if "coeffs" in kw:
        kw["coeffs"] = tuple(kw["coeffs"])
    try:
        return VolatilityFn(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"volatility section: {exc}") from exc


def load_config(path: str) -> ExperimentConfig:
    """Parse and validate an experiment config file."""
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be an object")
    _require_known(raw, set(_SECTIONS), "config root")
    version = raw.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"schema_version must be {SCHEMA_VERSION}, got {version!r}")
    for required in ("gaussian", "tail"):
        if required not in raw:
            raise ConfigError(f"missing required section: {required}")
    gaussian = _build_gaussian(raw["gaussian"])
    tail = _build_tail(raw["tail"])
    coupling = _build_coupling(raw.get("coupling", {}))
    volatility = _build_volatility(raw.get("volatility", {"kind": "exp"}))
    model = SvModel(gaussian=gaussian, tail=tail, coupling=coupling, volatility=volatility)
    statistic = None
    if "statistic" in raw:
        sec = raw["statistic"]
        _require_known(sec, _SECTIONS["statistic"], "statistic")
        try:
            statistic = StatisticSpec(**sec)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"statistic section: {exc}") from exc
    for name in ("plan", "simulate", "scan", "pointprocess"):
        if name in raw:
            _require_known(raw[name], _SECTIONS[name], name)
    seed = raw.get("seed", 0)
    if not isinstance(seed, int):
        raise ConfigError("seed must be an integer")
    return ExperimentConfig(
        raw=raw,
        name=str(raw.get("name", "experiment")),
        seed=seed,
        model=model,
        statistic=statistic,
        plan_args=dict(raw.get("plan", {})),
        simulate_args=dict(raw.get("simulate", {})),
        scan_args=dict(raw.get("scan", {})),
        pointprocess_args=dict(raw.get("pointprocess", {})),
        strict=bool(raw.get("strict", False)),
    )
