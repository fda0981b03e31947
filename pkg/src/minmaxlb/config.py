"""
Experiment configuration files.

Configs are INI files read with :mod:`configparser` (keys are case
sensitive).  Grammar::

    [instance]          ; required
    L = 1.0             ; smoothness target
    mu = 1e-5           ; strong concavity target
    Delta = 700         ; initial suboptimality budget
    eps = 0.1           ; target accuracy
    sigma = 1e4         ; optional; omit (or 'none') for a deterministic oracle
    R1 = 2              ; optional box radius (boxed variant)
    R2 = 60             ; optional box radius (boxed variant)
    variant = deterministic | stochastic   ; optional, inferred from sigma
    seed = 0

    [run]               ; optional
    algorithm = gda | sgda | greedy | best-response
    eta_x = 0.5         ; optional step sizes
    eta_y = 0.5
    ratio = 1e-6        ; sgda only: eta_x / eta_y
    budget = 60         ; optional; defaults to the lower-bound horizon
    replicas = 1
    p = 0.1             ; optional override of the oracle probability
    workers = 1
    output = results/run  ; prefix for .csv, .jsonl and .meta.json

    [sweep]             ; sweep only: comma-separated grids
    kappa = 1e5, 2e5
    eps = 0.1, 0.05
    sigma = none, 1e4

Values ``none`` or empty mean "absent".
"""

import configparser
from dataclasses import dataclass, field, fields

from .instances import USER_KEYS, InstanceSpec

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "dump_spec", "spec_from_params"]


class ConfigError(ValueError):
    pass


def _none(value):
    return value is None or value.strip().lower() in ("", "none")


def _num(value, kind=float):
    if _none(value):
        return None
    try:
        return kind(float(value)) if kind is int else kind(value)
    except ValueError:
        raise ConfigError(f"cannot parse {value!r} as {kind.__name__}") from None


def _grid(value, kind=float):
    if value is None:
        return None
    return [_num(v, kind) for v in value.split(",")]


INSTANCE_TYPES = {
    "L": float,
    "mu": float,
    "Delta": float,
    "eps": float,
    "sigma": float,
    "R1": float,
    "R2": float,
    "variant": str,
    "seed": int,
}


@dataclass
class ExperimentConfig:
    instance: dict
    algorithm: str = "gda"
    algorithm_params: dict = field(default_factory=dict)
    budget: int = None
    replicas: int = 1
    p: float = None
    workers: int = 1
    output: str = None
    sweep: dict = None

    def __post_init__(self):
        from .algorithms import ALGORITHMS

        if self.replicas < 1:
            raise ConfigError("replicas must be >= 1")
        if self.budget is not None and self.budget < 1:
            raise ConfigError("budget must be >= 1")
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}; choose from {sorted(ALGORITHMS)}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    @property
    def seed(self):
        return int(self.instance.get("seed") or 0)

    def spec(self, **overrides):
        return spec_from_params({**self.instance, **overrides})


def spec_from_params(params):
    kwargs = {k: v for k, v in params.items() if k in USER_KEYS and v is not None}
    missing = [k for k in ("L", "mu", "Delta", "eps") if k not in kwargs]
    if missing:
        raise ConfigError(f"missing instance keys: {', '.join(missing)}")
    return InstanceSpec(**kwargs)


def _parser():
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    cp.optionxform = str
    return cp


def load_config(path):
    cp = _parser()
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    if not cp.has_section("instance"):
        raise ConfigError("config needs an [instance] section")
    inst = {}
    for key, value in cp.items("instance"):
        if key not in INSTANCE_TYPES:
            raise ConfigError(f"unknown instance key {key!r}")
        kind = INSTANCE_TYPES[key]
        inst[key] = None if _none(value) else (value.strip() if kind is str else _num(value, kind))

    run = dict(cp.items("run")) if cp.has_section("run") else {}
    known = {"algorithm", "eta_x", "eta_y", "ratio", "scale", "budget", "replicas", "p", "workers", "output"}
    unknown = set(run) - known
    if unknown:
        raise ConfigError(f"unknown run keys: {', '.join(sorted(unknown))}")
    algo_params = {k: _num(run[k]) for k in ("eta_x", "eta_y", "ratio", "scale") if k in run and not _none(run[k])}

    sweep = None
    if cp.has_section("sweep"):
        sw = dict(cp.items("sweep"))
        unknown = set(sw) - {"kappa", "eps", "sigma"}
        if unknown:
            raise ConfigError(f"unknown sweep keys: {', '.join(sorted(unknown))}")
        sweep = {k: _grid(sw.get(k)) for k in ("kappa", "eps", "sigma")}

    return ExperimentConfig(
        instance=inst,
        algorithm=run.get("algorithm", "gda").strip(),
        algorithm_params=algo_params,
        budget=_num(run.get("budget"), int),
        replicas=_num(run.get("replicas"), int) or 1,
        p=_num(run.get("p")),
        workers=_num(run.get("workers"), int) or 1,
        output=None if _none(run.get("output")) else run["output"].strip(),
        sweep=sweep,
    )


def dump_spec(spec, fh):
    """Write the user-level parameters of ``spec`` as an [instance] section."""
    cp = _parser()
    cp["instance"] = {k: "none" if v is None else repr(v) if isinstance(v, float) else str(v)
                      for k, v in spec.user_params().items()}
    cp.write(fh)
