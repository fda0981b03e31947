"""
Zero-respecting algorithm harness, box projections and stationarity.

An algorithm is any object with ``reset(instance, rng)`` and
``step(t, v, response, allowed) -> proposal``.  The harness projects each
proposal onto the instance box and rejects it if its support leaves the
union of all supports seen so far (iterates and oracle gradients).
"""

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

__all__ = [
    "BoxDomain",
    "ZeroRespectingViolation",
    "TrajectoryRecord",
    "project",
    "stationarity",
    "measure_fm_stationarity",
    "gda_step",
    "ProjectedGDA",
    "TwoTimescaleSGDA",
    "GreedyFrontier",
    "SubchainBestResponse",
    "ALGORITHMS",
    "make_algorithm",
    "run_zero_respecting",
]


class ZeroRespectingViolation(RuntimeError):
    def __init__(self, index, iteration):
        super().__init__(f"iterate {iteration} makes chain coordinate {index} nonzero before it was discovered")
        self.index = index
        self.iteration = iteration


@dataclass(frozen=True)
class BoxDomain:
    """Per-coordinate radii (``inf`` for unconstrained coordinates)."""

    radius: np.ndarray

    @classmethod
    def uniform(cls, dim, r=math.inf):
        return cls(np.full(dim, float(r)))

    @property
    def bounded(self):
        return bool(np.any(np.isfinite(self.radius)))


def project(domain, v):
    r = domain.radius
    return np.clip(v, -r, r)


def stationarity(domain, grad, point, scale_L):
    """``scale_L * || P(point - grad/scale_L) - point ||_2``."""
    if not scale_L > 0:
        raise ValueError("scale_L must be positive")
    if not domain.bounded:
        return float(np.linalg.norm(grad))
    return float(scale_L * np.linalg.norm(project(domain, point - grad / scale_L) - point))


def measure_fm_stationarity(instance, x, z):
    """Stationarity of the envelope in the minimization pair (x, z)."""
    _, (gx, gz) = instance.fm(x, z)
    g = np.concatenate([gx, gz])
    if not instance.boxed:
        return float(np.linalg.norm(g))
    w = np.concatenate([x, z])
    return stationarity(BoxDomain.uniform(w.size, instance.xz_radius), g, w, instance.fm_smoothness)


def _min_mask(instance):
    mask = getattr(instance, "_min_mask", None)
    if mask is None:
        n = instance.n
        block = np.zeros(n + 2, dtype=bool)
        block[0] = block[-1] = True
        mask = np.concatenate([np.tile(block, instance.T - 1), [True]])
        instance._min_mask = mask
    return mask


def gda_step(instance, point, eta_x, eta_y, grad=None):
    """Simultaneous projected step: descend (x, z), ascend ybar."""
    if not (eta_x > 0 and eta_y > 0):
        raise ValueError("step sizes must be positive")
    if grad is None:
        _, grad = instance.evaluate(point)
    step = np.where(_min_mask(instance), -eta_x * grad, eta_y * grad)
    return np.clip(point + step, -instance.radii, instance.radii)


# --------------------------------------------------------------------------
# Baseline and adversarial algorithms
# --------------------------------------------------------------------------


class ProjectedGDA:
    name = "gda"

    def __init__(self, eta_x=None, eta_y=None):
        self.eta_x = eta_x
        self.eta_y = eta_y

    def reset(self, instance, rng):
        self.instance_ = instance
        L = instance.spec.L
        self._eta_x = self.eta_x or 1.0 / (2.0 * L)
        self._eta_y = self.eta_y or 1.0 / (2.0 * L)

    def step(self, t, v, response, allowed):
        return gda_step(self.instance_, v, self._eta_x, self._eta_y, grad=response.gradient)


class TwoTimescaleSGDA(ProjectedGDA):
    """GDA with ``eta_x = ratio * eta_y``; ratio defaults to 1/(16 kappa^2)."""

    name = "sgda"

    def __init__(self, eta_y=None, ratio=None):
        super().__init__(None, eta_y)
        self.ratio = ratio

    def reset(self, instance, rng):
        self.instance_ = instance
        spec = instance.spec
        self._eta_y = self.eta_y or 1.0 / (2.0 * spec.L)
        ratio = self.ratio if self.ratio is not None else 1.0 / (16.0 * spec.kappa**2)
        self._eta_x = ratio * self._eta_y


def _fresh(v, allowed):
    return allowed & (v == 0)


class GreedyFrontier(ProjectedGDA):
    """GDA that immediately pushes every newly allowed coordinate to magnitude
    ``scale * lambda`` (past the psi switch), chasing the chain as fast as the
    support constraint permits."""

    name = "greedy"

    def __init__(self, scale=1.5, eta_x=None, eta_y=None):
        super().__init__(eta_x, eta_y)
        self.scale = scale

    def step(self, t, v, response, allowed):
        inst = self.instance_
        new = gda_step(inst, v, self._eta_x, self._eta_y, grad=response.gradient)
        fresh = _fresh(v, allowed)
        g = response.gradient
        direction = np.where(_min_mask(inst), -np.sign(g), np.sign(g))
        direction[direction == 0] = 1.0
        new[fresh] = direction[fresh] * self.scale * inst.lam
        return new


class SubchainBestResponse(GreedyFrontier):
    """Greedy on (x, z); every y sub-chain jumps to its exact maximizer
    restricted to the coordinates already discovered in that block."""

    name = "best-response"

    def reset(self, instance, rng):
        super().reset(instance, rng)
        self._M = instance.chain.operator.dense()

    def step(self, t, v, response, allowed):
        inst = self.instance_
        new = super().step(t, v, response, allowed)
        x, z, Y = inst.split(new)
        _, _, A = inst.split(allowed.astype(float))
        w, s = inst.chain.weights()
        n = inst.n
        for i in range(inst.T - 1):
            k = int(A[i].sum())
            if k == 0:
                continue
            rhs = np.zeros(k)
            rhs[0] = s * x[i] / inst.lam
            if k == n:
                rhs[-1] -= 0.5 * s * z[i] / inst.lam
            Y[i, :] = 0.0
            Y[i, :k] = inst.lam * np.linalg.solve(w * self._M[:k, :k], rhs)
        new = inst.join(x, z, Y)
        return np.clip(new, -inst.radii, inst.radii)


ALGORITHMS = {cls.name: cls for cls in (ProjectedGDA, TwoTimescaleSGDA, GreedyFrontier, SubchainBestResponse)}


def make_algorithm(name, **params):
    try:
        cls = ALGORITHMS[name]
    except KeyError:
        raise ValueError(f"unknown algorithm {name!r}; choose from {sorted(ALGORITHMS)}") from None
    return cls(**params)


# --------------------------------------------------------------------------
# Harness
# --------------------------------------------------------------------------


@dataclass
class TrajectoryRecord:
    """Per-iteration log; entry t describes iterate t (entry 0 is the start).

    ``first_discovery_complete`` is the first iterate in which z_T (the last
    minimization coordinate before x_T) is nonzero.
    """

    calls: list = field(default_factory=list)
    new_indices: list = field(default_factory=list)
    frontier: list = field(default_factory=list)
    stationarity: list = field(default_factory=list)
    fm_value: list = field(default_factory=list)
    revealed: list = field(default_factory=list)
    first_discovery_complete: int = None
    first_eps_stationary: int = None
    eps: float = None

    def discovery_calls(self):
        """Oracle-call counts at which the discovered frontier advanced."""
        f = np.asarray(self.frontier)
        return [self.calls[t] for t in range(1, len(f)) if f[t] > f[t - 1]]

    def to_jsonl(self, fh, **extra):
        for t in range(len(self.calls)):
            row = {
                **extra,
                "iteration": t,
                "calls": self.calls[t],
                "new_indices": self.new_indices[t],
                "frontier": self.frontier[t],
            }
            if self.stationarity:
                row["stationarity"] = self.stationarity[t]
                row["fm_value"] = self.fm_value[t]
            fh.write(json.dumps(row) + "\n")

    def summary(self):
        d = asdict(self)
        return {k: d[k] for k in ("first_discovery_complete", "first_eps_stationary", "eps")} | {
            "iterations": len(self.calls) - 1
        }


def run_zero_respecting(alg, instance, oracle, budget, seed=0, eps=None, track_stationarity=True):
    """Run ``alg`` for ``budget`` oracle calls starting from the origin."""
    if budget < 1:
        raise ValueError("budget must be >= 1")
    rng = np.random.default_rng(seed)
    alg.reset(instance, rng)
    eps = instance.spec.eps if eps is None else eps
    rec = TrajectoryRecord(eps=eps)
    v = np.zeros(instance.dim)
    allowed = np.zeros(instance.dim, dtype=bool)

    def log(t, new, revealed):
        rec.calls.append(t)
        rec.new_indices.append(new)
        rec.frontier.append(int(np.flatnonzero(allowed)[-1]) if allowed.any() else -1)
        rec.revealed.append(revealed)
        if v[instance.z_last] != 0 and rec.first_discovery_complete is None:
            rec.first_discovery_complete = t
        if track_stationarity:
            x, z, _ = instance.split(v)
            meas = measure_fm_stationarity(instance, x, z)
            rec.stationarity.append(meas)
            rec.fm_value.append(float(instance.fm(x, z)[0]))
            if meas <= eps and rec.first_eps_stationary is None:
                rec.first_eps_stationary = t

    log(0, [], None)
    for t in range(budget):
        resp = oracle(v)
        before = allowed.copy()
        allowed |= resp.gradient != 0
        proposal = np.asarray(alg.step(t, v, resp, allowed.copy()), dtype=np.float64)
        proposal = np.clip(proposal, -instance.radii, instance.radii)
        bad = np.flatnonzero((proposal != 0) & ~allowed)
        if bad.size:
            raise ZeroRespectingViolation(int(bad[0]), t + 1)
        v = proposal
        allowed |= v != 0
        log(t + 1, np.flatnonzero(allowed & ~before).tolist(), resp.revealed)
    return rec
