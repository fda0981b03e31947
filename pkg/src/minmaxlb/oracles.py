"""First-order oracles over scaled instances.

The stochastic oracle perturbs only the next undiscovered chain coordinate:
its gradient entry is multiplied by ``xi / p`` with ``xi ~ Bernoulli(p)``.
Bernoulli draws come from a Philox stream keyed by ``(seed, call index)``, so
a replica is reproducible and independent replicas never share draws.
"""

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "OracleResponse",
    "StochasticOracleConfig",
    "DeterministicOracle",
    "StochasticOracle",
    "ProbabilityPReport",
    "deterministic_oracle",
    "next_coordinate",
    "stochastic_oracle",
    "bernoulli_draw",
    "verify_probability_p",
]


@dataclass
class OracleResponse:
    value: float
    gradient: np.ndarray
    support: np.ndarray
    revealed: bool = None

    @classmethod
    def build(cls, value, gradient, revealed=None):
        return cls(float(value), gradient, np.flatnonzero(gradient), revealed)


@dataclass(frozen=True)
class StochasticOracleConfig:
    p: float
    seed: int = 0
    G_bound: float = math.inf

    def __post_init__(self):
        if not 0.0 < self.p <= 1.0:
            raise ValueError(f"p must lie in (0, 1], got {self.p}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def variance_bound(self):
        return self.G_bound**2 * (1.0 - self.p) / self.p


def next_coordinate(v):
    """Smallest chain index holding a zero, or None if every entry is nonzero."""
    v = v.flatten() if hasattr(v, "flatten") and not isinstance(v, np.ndarray) else np.asarray(v)
    zeros = np.flatnonzero(v == 0)
    return int(zeros[0]) if zeros.size else None


def _flat(v):
    return v.flatten() if not isinstance(v, np.ndarray) else v


def deterministic_oracle(instance, v):
    value, grad = instance.evaluate(_flat(v))
    return OracleResponse.build(value, grad)


def bernoulli_draw(seed, counter, p):
    """Bernoulli(p) keyed by (seed, counter); one Philox block per call."""
    raw = int(np.random.Philox(key=int(seed), counter=int(counter)).random_raw())
    return (raw >> 11) * 2.0**-53 < p


def stochastic_oracle(instance, cfg, v, call_index=0):
    v = _flat(v)
    value, grad = instance.evaluate(v)
    i = next_coordinate(v)
    if i is None or grad[i] == 0.0:
        # perturbing an exact zero is a no-op; nothing can be revealed
        return OracleResponse.build(value, grad, revealed=False)
    xi = bernoulli_draw(cfg.seed, call_index, cfg.p)
    grad[i] = grad[i] / cfg.p if xi else 0.0
    return OracleResponse.build(value, grad, revealed=bool(xi))


class DeterministicOracle:
    """Callable wrapper that counts calls."""

    stochastic = False

    def __init__(self, instance):
        self.instance = instance
        self.calls = 0

    def __call__(self, v):
        self.calls += 1
        return deterministic_oracle(self.instance, v)


class StochasticOracle:
    """Stateful stochastic oracle for one replica; not shared across threads."""

    stochastic = True

    def __init__(self, instance, cfg):
        if cfg.G_bound == math.inf and instance.boxed:
            cfg = StochasticOracleConfig(cfg.p, cfg.seed, instance.gradient_bound)
        self.instance = instance
        self.cfg = cfg
        self.calls = 0

    def __call__(self, v):
        resp = stochastic_oracle(self.instance, self.cfg, v, call_index=self.calls)
        self.calls += 1
        return resp


@dataclass
class ProbabilityPReport:
    trials: int
    escapes: int
    frequency: float
    bound: float
    support_ok: bool
    frontier_nonzero: int

    @property
    def passed(self):
        return self.support_ok and self.frequency <= self.bound


def _prefix_point(instance, rng, i, low=0.6):
    """Random point, fully supported on chain indices [0, i), inside the box.

    Magnitudes are at least ``low`` (unscaled) so that every psi switch on the
    prefix is active and the frontier gradient is generically nonzero.
    """
    v = np.zeros(instance.dim)
    top = np.minimum(instance.radii[:i] / instance.lam, 1.5)
    v[:i] = instance.lam * rng.uniform(low, top) * rng.choice([-1.0, 1.0], size=i)
    return v


def verify_probability_p(instance, cfg, trials, rng=None):
    """Estimate how often the stochastic gradient escapes a prefix support.

    Each trial draws a random chain position ``i`` and a point supported
    exactly on ``[0, i)``.  An escape is any nonzero gradient entry at index
    ``>= i``; support must never reach index ``i + 1``.
    """
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    escapes = 0
    frontier_nonzero = 0
    support_ok = True
    for t in range(trials):
        i = int(rng.integers(0, instance.dim))
        v = _prefix_point(instance, rng, i)
        resp = stochastic_oracle(instance, cfg, v, call_index=t)
        _, true_grad = instance.evaluate(v)
        frontier_nonzero += bool(true_grad[i] != 0.0)
        sup = resp.support
        if sup.size and sup[-1] > i:
            support_ok = False
        if sup.size and sup[-1] >= i:
            escapes += 1
    freq = escapes / trials
    bound = cfg.p + 3.0 * math.sqrt(cfg.p * (1.0 - cfg.p) / trials)
    return ProbabilityPReport(trials, escapes, freq, bound, support_ok, frontier_nonzero)
