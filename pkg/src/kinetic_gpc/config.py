"""JSON scenario configuration with a versioned, closed schema.

Unknown keys are hard errors: a silent typo in a tolerance or a scale
parameter would invalidate a study, so the schema is a whitelist.
"""

from __future__ import annotations

import json

from .collision import KERNEL_FAMILIES, KernelSpec
from .solver import InitParams, Scenario

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Malformed or out-of-schema configuration."""


_TOP_KEYS = {
    "schema_version", "kernel", "epsilon", "nx", "nv", "k_gpc", "quad_order",
    "t_end", "cfl", "init", "scheme", "diag_every", "z_family", "z_value",
    "sweep", "scaling", "limit", "regularity",
}
_KERNEL_KEYS = {"family", "params", "sigma_min", "sigma_max"}
_INIT_KEYS = {"c0", "c1", "alpha", "delta"}
_SWEEP_KEYS = {"k_list", "eps_list", "q_ref", "t_end"}
_SCALING_KEYS = {"eps_list", "t_end"}
_LIMIT_KEYS = {"eps_list", "t_end"}
_REGULARITY_KEYS = {"eps_list", "k_max", "t_end"}


def _check_keys(obj: dict, allowed: set, where: str):
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) {unknown} in {where}")


def load_config(path: str) -> dict:
    """Parse and validate a config file; returns the raw dict."""
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a JSON object")
    _check_keys(cfg, _TOP_KEYS, "config")
    if cfg.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(f"config must declare schema_version = {SCHEMA_VERSION}")
    if "kernel" not in cfg:
        raise ConfigError("config requires a kernel section")
    _check_keys(cfg["kernel"], _KERNEL_KEYS, "kernel")
    for key in ("family", "params", "sigma_min", "sigma_max"):
        if key not in cfg["kernel"]:
            raise ConfigError(f"kernel section requires {key!r}")
    if cfg["kernel"]["family"] not in KERNEL_FAMILIES:
        raise ConfigError(f"unknown kernel family {cfg['kernel']['family']!r}; "
                          f"choose from {sorted(KERNEL_FAMILIES)}")
    if "init" in cfg:
        _check_keys(cfg["init"], _INIT_KEYS, "init")
    for section, allowed in (("sweep", _SWEEP_KEYS), ("scaling", _SCALING_KEYS),
                             ("limit", _LIMIT_KEYS), ("regularity", _REGULARITY_KEYS)):
        if section in cfg:
            _check_keys(cfg[section], allowed, section)
    return cfg


def kernel_from_config(cfg: dict) -> KernelSpec:
    sec = cfg["kernel"]
    try:
        return KernelSpec(family=sec["family"], params=dict(sec["params"]),
                          sigma_min=float(sec["sigma_min"]),
                          sigma_max=float(sec["sigma_max"]))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def scenario_from_config(cfg: dict) -> Scenario:
    kernel = kernel_from_config(cfg)
    init_cfg = cfg.get("init", {})
    init = InitParams(c0=float(init_cfg.get("c0", 1.0)),
                      c1=float(init_cfg.get("c1", 0.5)),
                      alpha=float(init_cfg.get("alpha", 0.3)),
                      delta=float(init_cfg.get("delta", 0.0)))
    scn = Scenario(
        kernel=kernel,
        eps=float(cfg.get("epsilon", 1.0)),
        nx=int(cfg.get("nx", 32)),
        nv=int(cfg.get("nv", 16)),
        k_gpc=int(cfg.get("k_gpc", 8)),
        quad_order=(int(cfg["quad_order"]) if "quad_order" in cfg else None),
        t_end=float(cfg.get("t_end", 0.5)),
        cfl=float(cfg.get("cfl", 0.45)),
        z_family=str(cfg.get("z_family", "legendre")),
        scheme=str(cfg.get("scheme", "micromacro_sg")),
        diag_every=int(cfg.get("diag_every", 1)),
        init=init,
        z_value=float(cfg.get("z_value", 0.0)),
    )
    try:
        scn.validate()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return scn


def default_config() -> dict:
    """Config dict for the default scenario, suitable for json.dump."""
    return {
        "schema_version": SCHEMA_VERSION,
        "kernel": {"family": "affine_z", "params": {"sigma0": 1.0, "a": 0.5},
                   "sigma_min": 0.5, "sigma_max": 1.5},
        "epsilon": 1.0,
        "nx": 32,
        "nv": 16,
        "k_gpc": 8,
        "t_end": 0.5,
        "cfl": 0.45,
        "init": {"c0": 1.0, "c1": 0.5, "alpha": 0.3, "delta": 0.0},
        "scheme": "micromacro_sg",
        "diag_every": 1,
    }
