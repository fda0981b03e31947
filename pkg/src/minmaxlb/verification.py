"""
Randomized verification of the structural lemmas behind the hard instances.

Each check returns a :class:`LemmaEntry` whose ``worst_margin`` is the
smallest observed slack of the checked inequality (positive means the
inequality held everywhere on the sample).  The samplers are shared with
the test-suite.
"""

import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import minimize

from .instances import (
    HardChain,
    InstanceSpec,
    NesterovInstance,
    _fm_eval,
    _join_flat,
    _joint_eval,
    _split_flat,
    argmax_y,
    build_scaled,
    estimate_constants,
    eval_nc,
    eval_sc,
)
from .oracles import StochasticOracleConfig, _prefix_point, stochastic_oracle, verify_probability_p
from .special_functions import BOUNDS, phi, phi_prime, psi, psi_prime
from .tridiagonal import TridiagOperator, first_column_closed_form, hm_coefficients, solve

__all__ = [
    "LemmaEntry",
    "VerificationReport",
    "sample_unfinished",
    "min_fm_gradient",
    "verify_all",
    "CHECKS",
]


@dataclass
class LemmaEntry:
    lemma: str
    samples: int
    worst_margin: float
    passed: bool
    runtime: float
    detail: dict = field(default_factory=dict)


@dataclass
class VerificationReport:
    entries: list
    seed: int

    @property
    def passed(self):
        return all(e.passed for e in self.entries)

    def to_dict(self):
        return {"passed": self.passed, "seed": self.seed, "entries": [asdict(e) for e in self.entries]}


# --------------------------------------------------------------------------
# Samplers
# --------------------------------------------------------------------------


def sample_unfinished(rng, size, T, radius=None):
    """Points (x, z) with |z_j| < 1 for a random j and the prefix "solved".

    Before j the links sit near the chain's own fixed points (|z| >= 1 and
    x_{k-1} close to z_k / 2) so the gradient can only come from the first
    unfinished link.  That is the hard case for the gradient floor.  With a
    ``radius`` every coordinate is clipped to [-radius, radius].
    """
    top = 3.0 if radius is None else radius
    x = rng.uniform(-top, top, (size, T))
    z = rng.uniform(-top, top, (size, T - 1))
    j = rng.integers(0, T - 1, size)
    cols = np.arange(T - 1)
    before = cols[None, :] < j[:, None]
    big = rng.uniform(1.0, top, (size, T - 1)) * rng.choice([-1.0, 1.0], (size, T - 1))
    z = np.where(before, big, z)
    # x_{k} tracks z_{k+1}/2 on solved links (x index k pairs with z[k])
    x[:, :-1] = np.where(before, 0.5 * z + rng.normal(0.0, 0.05, z.shape), x[:, :-1])
    # first unfinished link: anything inside the open unit interval
    z[np.arange(size), j] = rng.uniform(-0.999, 0.999, size)
    # half the sample also balances the quadratic term of the unfinished link
    half = rng.random(size) < 0.5
    rows = np.flatnonzero(half)
    x[rows, j[rows]] = 0.5 * z[rows, j[rows]] + rng.normal(0.0, 0.02, rows.size)
    if radius is not None:
        x = np.clip(x, -radius, radius)
        z = np.clip(z, -radius, radius)
    return x, z, j


def _grad_fm_flat(x, z):
    _, gx, gz = _fm_eval(x, z)
    return np.concatenate([gx, gz], axis=-1)


def min_fm_gradient(rng, T, starts=8):
    """Local minimization of ||grad f_m||^2 subject to |z_j| <= 0.999.

    Returns the smallest gradient norm found.  An adversarial complement to
    random sampling.
    """
    best = math.inf
    for _ in range(starts):
        x0, z0, j = sample_unfinished(rng, 1, T)
        j = int(j[0])
        w0 = np.concatenate([x0[0], z0[0]])
        bounds = [(-6.0, 6.0)] * T + [(-6.0, 6.0)] * (T - 1)
        bounds[T + j] = (-0.999, 0.999)

        def obj(w):
            g = _grad_fm_flat(w[:T], w[T:])
            return float(g @ g)

        res = minimize(obj, w0, method="L-BFGS-B", bounds=bounds)
        best = min(best, math.sqrt(res.fun))
    return best


def _fm_box_stationarity(x, z, R1, ellm):
    w = np.concatenate([x, z], axis=-1)
    g = _grad_fm_flat(x, z)
    step = np.clip(w - g / ellm, -R1, R1) - w
    return ellm * np.linalg.norm(step, axis=-1)


# --------------------------------------------------------------------------
# Individual checks
# --------------------------------------------------------------------------


def _entry(name, samples, margins, t0, **detail):
    worst = float(np.min(margins))
    return LemmaEntry(name, int(samples), worst, bool(worst > 0), time.perf_counter() - t0, detail)


def check_smooth_switches(rng, samples):
    t0 = time.perf_counter()
    x = rng.uniform(1.0, 10.0, samples)
    y = rng.uniform(-1.0, 1.0, samples)
    prod = psi(x) * phi_prime(y)
    # the upper bounds are strict but approached in the tails, so the
    # ranges stay where float64 still separates value and bound
    u = rng.uniform(-50.0, 50.0, samples)
    w = rng.uniform(-6.0, 6.0, samples)
    b = BOUNDS
    margins = [
        prod.min() - 1.0,
        b.psi_sup - psi(u).max(),
        b.psi_prime_sup - psi_prime(u).max(),
        b.phi_sup - phi(w).max(),
        b.phi_prime_sup - phi_prime(w[w != 0.0]).max(),
    ]
    # Phi > 0 everywhere; beyond |u| ~ 38 the true value underflows float64
    tail = phi(rng.uniform(-30.0, 30.0, samples)).min()
    margins.append(1.0 if tail > 0 else -1.0)
    flat = np.abs(psi(-np.abs(u))).max() + np.abs(psi_prime(-np.abs(u))).max()
    margins.append(1.0 if flat == 0.0 else -flat)
    return _entry("smooth_switches", 2 * samples, margins, t0, min_psi_phi_prime=float(prod.min()))


def check_discovery_tail(rng, samples, K=40, p=0.1):
    """z_T needs K successive reveals; each call reveals with probability p."""
    t0 = time.perf_counter()
    replicas = max(100, samples // 10)
    finish = rng.geometric(p, (replicas, K)).sum(axis=1)
    horizon = (K - math.log(2.0)) / (2.0 * p)
    frac = float(np.mean(finish > horizon))
    need = 0.5 - 3.0 * math.sqrt(0.25 / replicas)
    return _entry("discovery_tail", replicas, [frac - need], t0, fraction_unfinished=frac, horizon=horizon)


def _small_boxed_instance():
    spec = InstanceSpec(L=1.0, mu=1.0 / 8e5, Delta=2600.0, eps=0.1, sigma=1e3)
    return build_scaled(spec)


def check_oracle_moments(rng, samples):
    """Unbiasedness, variance bound and the probability-p escape rate."""
    t0 = time.perf_counter()
    inst = _small_boxed_instance()
    margins, detail = [], {}
    draws = max(2000, samples)
    for p in (0.05, 0.5):
        cfg = StochasticOracleConfig(p, seed=int(rng.integers(2**63)), G_bound=inst.gradient_bound)
        i = int(rng.integers(1, inst.dim))
        v = _prefix_point(inst, rng, i)
        _, true = inst.evaluate(v)
        acc = np.zeros_like(true)
        acc2 = np.zeros_like(true)
        for c in range(draws):
            g = stochastic_oracle(inst, cfg, v, call_index=c).gradient
            acc += g
            acc2 += g * g
        mean = acc / draws
        var = acc2 / draws - mean**2
        se = np.sqrt(np.maximum(var, 0.0) / draws)
        # only the frontier entry is random; the rest must be exact
        others = np.arange(true.size) != i
        margins.append(1.0 if np.allclose(mean[others], true[others], rtol=1e-10, atol=0) else -1.0)
        margins.append(1.0 - abs(mean[i] - true[i]) / (5.0 * se[i]) if se[i] > 0 else -1.0)
        margins.append(cfg.variance_bound - float(var.sum()))
        rep = verify_probability_p(inst, cfg, trials=max(1000, samples // 5), rng=rng)
        margins.append(rep.bound - rep.frequency)
        margins.append(1.0 if rep.support_ok else -1.0)
        detail[f"p={p}"] = {"escape_frequency": rep.frequency, "variance": float(var.sum())}
    return _entry("oracle_moments", 2 * draws, margins, t0, **detail)


def check_hm_closed_form(rng, samples):
    t0 = time.perf_counter()
    errs = []
    for n in (10, 100):
        co = hm_coefficients(n)
        op = TridiagOperator(n, 1.0 / n**2)
        k = samples // 2
        x, z = rng.uniform(-5.0, 5.0, (2, k))
        b = np.zeros((n, k))
        b[0] = x
        b[-1] = -0.5 * z
        y = solve(op, b)
        # max_y (C/n)^{1/2} b.y - y.My/2 with y* = (C/n)^{1/2} M^{-1} b, value (C/n) b.M^{-1}b / 2
        brute = 0.5 * co.C / n * np.sum(b * y, axis=0)
        closed = co.hm(x, z)
        errs.append(np.abs(brute - closed) / (1.0 + np.abs(closed)))
    worst = float(np.max(np.concatenate(errs)))
    return _entry("hm_closed_form", samples, [1e-8 - worst], t0, max_relative_error=worst)


def check_gradient_floor(rng, samples, T=6):
    t0 = time.perf_counter()
    x, z, _ = sample_unfinished(rng, samples, T)
    norms = np.linalg.norm(_grad_fm_flat(x, z), axis=-1)
    opt = min_fm_gradient(rng, T, starts=6)
    worst = min(float(norms.min()), opt)
    return _entry("gradient_floor", samples + 6, [worst - 1.0 / 3.0], t0, min_gradient_norm=worst)


def check_value_gap(rng, samples, T=6):
    t0 = time.perf_counter()
    x = rng.uniform(-6.0, 6.0, (samples, T))
    z = rng.uniform(-6.0, 6.0, (samples, T - 1))
    vals = _fm_eval(x, z)[0]
    lo = float(vals.min())
    for _ in range(4):
        w0 = rng.uniform(-3.0, 3.0, 2 * T - 1)
        res = minimize(lambda w: float(_fm_eval(w[:T], w[T:])[0]), w0, method="L-BFGS-B",
                       jac=lambda w: _grad_fm_flat(w[:T], w[T:]))
        lo = min(lo, float(res.fun))
    gap = float(_fm_eval(np.zeros(T), np.zeros(T - 1))[0]) - lo
    return _entry("value_gap", samples + 4, [12.0 * T - gap], t0, gap=gap, T=T)


def check_first_column(rng, samples):
    t0 = time.perf_counter()
    margins, detail = [], {}
    for n in (10, 50, 100, 500):
        op = TridiagOperator(n, 1.0 / n**2)
        e1 = np.zeros(n)
        e1[0] = 1.0
        col = solve(op, e1)
        closed = first_column_closed_form(op)
        rel = float(np.max(np.abs(closed - col) / np.abs(col)))
        margins += [col.min() - 0.1 * n, 20.0 * n - col.max(), 1e-8 - rel]
        detail[str(n)] = {"min": float(col.min() / n), "max": float(col.max() / n), "closed_form_rel_err": rel}
    return _entry("first_column", 4, margins, t0, **detail)


def _curvature(rng, grad_fn, sampler, samples, h=1e-5):
    """Largest observed ||grad(v + h d) - grad(v - h d)|| / (2h) over unit d."""
    v = sampler(samples)
    d = rng.normal(size=v.shape)
    # half the directions are sparse (one or two coordinates)
    k = samples // 2
    mask = np.zeros_like(d[:k])
    idx = rng.integers(0, d.shape[1], (k, 2))
    np.put_along_axis(mask, idx, 1.0, axis=1)
    d[:k] *= mask
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    ratio = np.linalg.norm(grad_fn(v + h * d) - grad_fn(v - h * d), axis=1) / (2 * h)
    return float(ratio.max())


def _chain_sampler(rng, chain, boxed):
    T, n = chain.T, chain.n

    def draw(size):
        R = chain.R1 if boxed else 3.0
        x = rng.uniform(-R, R, (size, T))
        z = rng.uniform(-R, R, (size, T - 1))
        Yr = chain.n * chain.R2 if boxed else 30.0
        Y = rng.uniform(-Yr, Yr, (size, T - 1, n))
        return np.concatenate([x, z, Y.reshape(size, -1)], axis=1)

    return draw


def _chain_grad(chain, boxed):
    T, n = chain.T, chain.n

    def g(v):
        x, z, Y = v[:, :T], v[:, T:2 * T - 1], v[:, 2 * T - 1:].reshape(-1, T - 1, n)
        _, gx, gz, gY = _joint_eval(chain, x, z, Y, boxed)
        return np.concatenate([gx, gz, gY.reshape(len(v), -1)], axis=1)

    return g


def check_certified_constants(rng, samples):
    """Certified constants dominate sampled curvature and gradients."""
    t0 = time.perf_counter()
    det = estimate_constants("deterministic")
    sto = estimate_constants("stochastic", 2.0, 60.0)
    margins, detail = [sto.ellm - 1.0], {}
    for n in (10, 40):
        chain = HardChain(4, n)
        curv = _curvature(rng, _chain_grad(chain, False), _chain_sampler(rng, chain, False), samples // 4)
        margins.append(det.ell0 - curv)
        bchain = HardChain(4, n, boxed=True)
        curv_b = _curvature(rng, _chain_grad(bchain, True), _chain_sampler(rng, bchain, True), samples // 4)
        margins.append(sto.ell0 - curv_b)
        v = _chain_sampler(rng, bchain, True)(samples // 4)
        # push half the sample to random box corners
        corner = np.concatenate([np.full(2 * 4 - 1, bchain.R1), np.full((4 - 1) * n, n * bchain.R2)])
        half = len(v) // 2
        v[:half] = np.sign(v[:half]) * corner
        gmax = float(np.abs(_chain_grad(bchain, True)(v)).max())
        margins.append(sto.G - gmax)
        detail[str(n)] = {"curvature": curv, "curvature_boxed": curv_b, "max_grad_inf": gmax}

    def fm_grad(w):
        return _grad_fm_flat(w[:, :4], w[:, 4:])

    curv_m = _curvature(rng, fm_grad, lambda s: rng.uniform(-3.0, 3.0, (s, 7)), samples)
    margins.append(det.ellm - curv_m)
    detail.update(ell0=det.ell0, ell0_boxed=sto.ell0, ellm=det.ellm, G=sto.G, fm_curvature=curv_m)
    return _entry("certified_constants", samples * 2, margins, t0, **detail)


def check_domain_containment(rng, samples, R1=2.0, R2=60.0):
    t0 = time.perf_counter()
    margins, worst = [], 0.0
    for n in (10, 50, 200):
        chain = HardChain(2, n, boxed=True, R1=R1, R2=R2)
        k = samples // 3
        x, z = rng.uniform(-R1, R1, (2, k))
        x[:4] = [R1, R1, -R1, -R1]
        z[:4] = [R1, -R1, R1, -R1]
        b = np.zeros((n, k))
        b[0] = x
        b[-1] = -0.5 * z
        y = solve(chain.operator, b)
        m = float(np.abs(y).max())
        worst = max(worst, m / n)
        margins += [30.0 * n * R1 - m, n * R2 - m]
        # maximizer agrees with the single-pair helper
        single = argmax_y(chain, float(x[0]), float(z[0]))
        margins.append(1e-10 * (1 + np.abs(single).max()) - float(np.abs(single - y[:, 0]).max()))
    return _entry("domain_containment", samples, margins, t0, max_abs_y_over_n=worst)


def check_boxed_gradient_floor(rng, samples, T=6, R1=2.0):
    t0 = time.perf_counter()
    ellm = estimate_constants("stochastic", R1, 60.0).ellm
    x, z, _ = sample_unfinished(rng, samples, T, radius=R1)
    meas = _fm_box_stationarity(x, z, R1, ellm)
    worst = float(meas.min())
    return _entry("boxed_gradient_floor", samples, [worst - 1.0 / 3.0], t0, min_stationarity=worst)


def check_zero_chain(rng, samples):
    """Gradient support never runs more than one chain index past the prefix."""
    t0 = time.perf_counter()
    bad = 0
    sc = NesterovInstance(mu=1.0, kappa=100.0, d=30)
    for _ in range(samples // 10):
        i = int(rng.integers(0, 30))
        x = np.zeros(30)
        x[:i] = rng.normal(size=i)
        g = eval_sc(sc, x)[1]
        bad += np.any(g[i + 1:] != 0)
        xn = np.zeros(8)
        k = int(rng.integers(0, 8))
        xn[:k] = rng.uniform(-3, 3, k)
        bad += np.any(eval_nc(8, xn)[1][k + 1:] != 0)
    for boxed in (False, True):
        chain = HardChain(3, 10, boxed=boxed)
        v = _chain_sampler(rng, chain, boxed)(samples // 10)
        # convert the sampler's block layout into chain order, then cut prefixes
        T, n = chain.T, chain.n
        x, z, Y = v[:, :T], v[:, T:2 * T - 1], v[:, 2 * T - 1:].reshape(-1, T - 1, n)
        flat = _join_flat(x, z, Y)
        cut = rng.integers(0, flat.shape[1], len(flat))
        flat[np.arange(flat.shape[1])[None, :] >= cut[:, None]] = 0.0
        xs, zs, Ys = _split_flat(flat, T, n)
        _, gx, gz, gY = _joint_eval(chain, xs, zs, Ys, boxed)
        gflat = _join_flat(gx, gz, gY)
        beyond = np.arange(flat.shape[1])[None, :] > cut[:, None]
        bad += int(np.count_nonzero(gflat[beyond]))
    return _entry("zero_chain", samples, [1.0 if bad == 0 else -float(bad)], t0, violations=int(bad))


CHECKS = {
    "smooth_switches": check_smooth_switches,
    "discovery_tail": check_discovery_tail,
    "oracle_moments": check_oracle_moments,
    "hm_closed_form": check_hm_closed_form,
    "gradient_floor": check_gradient_floor,
    "value_gap": check_value_gap,
    "first_column": check_first_column,
    "domain_containment": check_domain_containment,
    "certified_constants": check_certified_constants,
    "boxed_gradient_floor": check_boxed_gradient_floor,
    "zero_chain": check_zero_chain,
}


def verify_all(samples=10_000, seed=0, only=None):
    entries = []
    for name, fn in CHECKS.items():
        if only and name not in only:
            continue
        entries.append(fn(np.random.default_rng([seed, len(entries)]), samples))
    return VerificationReport(entries, seed)
