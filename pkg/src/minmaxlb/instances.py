"""
Hard instances for nonconvex-strongly-concave min-max problems.

Four unscaled families are provided:

* ``eval_sc``           -- truncated strongly-convex quadratic chain
* ``eval_nc``           -- the psi/phi nonconvex chain
* ``eval_ncsc_unscaled``    -- nonconvex main chain with quadratic y sub-chains
* ``eval_ncsc_sg_unscaled`` -- the boxed variant whose gradient is bounded

plus the envelope ``f_m = max_y f`` (``eval_fm``) and the rescaled instance
(``build_scaled``) that lands in the target class for given (L, mu, Delta, eps).

Joint variables are ``ChainPoint`` objects.  Their flattened *chain order* is::

    x_1, y^(1)_1..n, z_2, x_2, y^(2)_1..n, z_3, ..., z_T, x_T

which makes the Hessian tridiagonal.  Chain indices in this package are
0-based.
"""

import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np

from .special_functions import BOUNDS, _psi_pair, phi, phi_prime, psi, psi_prime
from .tridiagonal import (
    RegimeError,
    TridiagOperator,
    hm_coefficients,
    hm_limit_coefficients,
    solve,
)

__all__ = [
    "DomainError",
    "RegimeError",
    "ChainPoint",
    "HardChain",
    "Constants",
    "InstanceSpec",
    "NesterovInstance",
    "ScaledInstance",
    "eval_sc",
    "eval_nc",
    "eval_ncsc_unscaled",
    "eval_ncsc_sg_unscaled",
    "argmax_y",
    "eval_fm",
    "build_scaled",
    "estimate_constants",
]

DETERMINISTIC = "deterministic"
STOCHASTIC = "stochastic"


class DomainError(ValueError):
    """A query point lies outside the instance domain."""


# --------------------------------------------------------------------------
# Joint variable
# --------------------------------------------------------------------------


@dataclass
class ChainPoint:
    """Joint variable ``(x, z; ybar)``.

    ``z[k]`` holds z_{k+2} and ``ybar[k]`` the sub-chain y^(k+1), so ``z[i]``
    and ``ybar[i]`` both belong to the link between x_{i+1} and x_{i+2}.
    """

    x: np.ndarray
    z: np.ndarray
    ybar: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        self.z = np.asarray(self.z, dtype=np.float64)
        self.ybar = np.asarray(self.ybar, dtype=np.float64)
        T = self.x.shape[-1]
        if T < 2 or self.z.shape[-1] != T - 1 or self.ybar.shape[-2] != T - 1:
            raise ValueError(
                f"inconsistent shapes x{self.x.shape} z{self.z.shape} ybar{self.ybar.shape}"
            )

    @property
    def T(self):
        return self.x.shape[-1]

    @property
    def n(self):
        return self.ybar.shape[-1]

    @classmethod
    def zeros(cls, T, n):
        return cls(np.zeros(T), np.zeros(T - 1), np.zeros((T - 1, n)))

    @classmethod
    def from_flat(cls, flat, T, n):
        flat = np.asarray(flat, dtype=np.float64)
        if flat.shape[-1] != chain_length(T, n):
            raise ValueError(f"flat vector has length {flat.shape[-1]}, expected {chain_length(T, n)}")
        body = flat[..., :-1].reshape(flat.shape[:-1] + (T - 1, n + 2))
        x = np.concatenate([body[..., 0], flat[..., -1:]], axis=-1)
        return cls(x, body[..., -1].copy(), body[..., 1:-1].copy())

    def flatten(self):
        T, n = self.T, self.n
        lead = self.x.shape[:-1]
        body = np.empty(lead + (T - 1, n + 2))
        body[..., 0] = self.x[..., :-1]
        body[..., 1:-1] = self.ybar
        body[..., -1] = self.z
        return np.concatenate([body.reshape(lead + (-1,)), self.x[..., -1:]], axis=-1)

    def support(self):
        return np.flatnonzero(self.flatten())


def chain_length(T, n):
    return T + (n + 1) * (T - 1)


def x_index(i, n):
    """Chain index of x_i (1-based index i)."""
    return (i - 1) * (n + 2)


def z_index(i, n):
    """Chain index of z_i, 2 <= i <= T."""
    return (i - 1) * (n + 2) - 1


def y_index(i, k, n):
    """Chain index of y^(i)_k."""
    return (i - 1) * (n + 2) + k


def _split_flat(flat, T, n):
    """Views (x, z, Y) into a flat chain-ordered array (x is a copy)."""
    body = flat[..., :-1].reshape(flat.shape[:-1] + (T - 1, n + 2))
    x = np.concatenate([body[..., 0], flat[..., -1:]], axis=-1)
    return x, body[..., -1], body[..., 1:-1]


def _join_flat(x, z, Y):
    T, n = x.shape[-1], Y.shape[-1]
    lead = x.shape[:-1]
    body = np.empty(lead + (T - 1, n + 2))
    body[..., 0] = x[..., :-1]
    body[..., 1:-1] = Y
    body[..., -1] = z
    return np.concatenate([body.reshape(lead + (-1,)), x[..., -1:]], axis=-1)


# --------------------------------------------------------------------------
# Classical chains
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class NesterovInstance:
    """Truncated strongly-convex chain with condition number kappa."""

    mu: float
    kappa: float
    d: int = None

    def __post_init__(self):
        if self.mu <= 0 or self.kappa < 1:
            raise ValueError("need mu > 0 and kappa >= 1")
        if self.d is None:
            object.__setattr__(self, "d", self.default_dimension(self.kappa))

    @property
    def q(self):
        r = math.sqrt(self.kappa)
        return (r - 1.0) / (r + 1.0)

    @staticmethod
    def default_dimension(kappa, tol=1e-12):
        r = math.sqrt(kappa)
        q = (r - 1.0) / (r + 1.0)
        if q <= 0.0:
            return 1
        return max(1, math.ceil(math.log(tol) / math.log(q)))

    def minimizer(self):
        """Geometric minimizer of the untruncated chain, cut to length d."""
        return self.q ** np.arange(1, self.d + 1)


def eval_sc(inst, x):
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != inst.d:
        raise ValueError(f"expected dimension {inst.d}, got {x.shape[-1]}")
    k = inst.mu * (inst.kappa - 1.0)
    d = np.diff(x, axis=-1)
    value = (
        k / 8.0 * ((x[..., 0] - 1.0) ** 2 + np.sum(d * d, axis=-1) + x[..., -1] ** 2)
        + 0.5 * inst.mu * np.sum(x * x, axis=-1)
    )
    Ax = 2.0 * x
    Ax[..., 1:] -= x[..., :-1]
    Ax[..., :-1] -= x[..., 1:]
    Ax[..., 0] -= 1.0
    return value, k / 4.0 * Ax + inst.mu * x


def eval_nc(T, x):
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != T:
        raise ValueError(f"expected dimension {T}, got {x.shape[-1]}")
    prev, cur = x[..., :-1], x[..., 1:]
    pp, pm = psi(prev), psi(-prev)
    value = -phi(x[..., 0]) + np.sum(pm * phi(-cur) - pp * phi(cur), axis=-1)
    grad = np.zeros_like(x)
    grad[..., 0] = -phi_prime(x[..., 0])
    grad[..., 1:] += -pm * phi_prime(-cur) - pp * phi_prime(cur)
    grad[..., :-1] += -psi_prime(-prev) * phi(-cur) - psi_prime(prev) * phi(cur)
    return value, grad


# --------------------------------------------------------------------------
# Min-max chain
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class HardChain:
    """Geometry of an unscaled min-max chain.

    ``T`` links on the main chain, quadratic sub-chains of length ``n``.  With
    ``boxed=True`` the sub-chain coupling is the bounded-gradient variant and
    the domain is ``|x|, |z| <= R1``, ``|y| <= n R2``.
    """

    T: int
    n: int
    boxed: bool = False
    R1: float = 2.0
    R2: float = 60.0

    def __post_init__(self):
        if self.T < 2:
            raise RegimeError(f"chain needs T >= 2, got T={self.T}")
        if self.n < 10:
            raise RegimeError(f"sub-chain needs n >= 10, got n={self.n}")

    @cached_property
    def coeffs(self):
        return hm_coefficients(self.n)

    @property
    def alpha(self):
        return 1.0 / self.n**2

    @cached_property
    def operator(self):
        return TridiagOperator(self.n, self.alpha)

    @property
    def dim(self):
        return chain_length(self.T, self.n)

    def weights(self, boxed=None):
        """(w, s): y-curvature weight and x/z coupling weight."""
        boxed = self.boxed if boxed is None else boxed
        return self._weights[bool(boxed)]

    @cached_property
    def _weights(self):
        return {False: self._raw_weights(False), True: self._raw_weights(True)}

    def _raw_weights(self, boxed):
        C = self.coeffs.C
        if boxed:
            return C / self.n, C / self.n
        return 1.0, math.sqrt(C / self.n)

    def radii(self):
        """Box radius of every chain coordinate (inf when unconstrained)."""
        if not self.boxed:
            return np.full(self.dim, np.inf)
        return ChainPoint(
            np.full(self.T, self.R1),
            np.full(self.T - 1, self.R1),
            np.full((self.T - 1, self.n), self.n * self.R2),
        ).flatten()


def _as_chain(spec):
    return spec.chain if hasattr(spec, "chain") else spec


def _joint_eval(chain, x, z, Y, boxed):
    """Value and gradient blocks of the joint objective (no domain checks)."""
    co = chain.coeffs
    w, s = chain.weights(boxed)
    T = x.shape[-1]
    xh, xm = x[..., 1:], x[..., :-1]
    # one call each for Psi(+-z) and Phi(x), Phi(-x_{i+1})
    pv, dv = _psi_pair(np.stack([z, -z]))
    pz, pmz, dpz, dpmz = pv[0], pv[1], dv[0], dv[1]
    ph_all = phi(np.concatenate([x, -xh], axis=-1))
    ph, phm = ph_all[..., 1:T], ph_all[..., T:]
    dphi = phi_prime(x)
    MY = chain.operator.matvec(Y)
    link = (
        pmz * phm
        - pz * ph
        - 0.5 * w * np.einsum("...k,...k->...", Y, MY)
        + s * (xm * Y[..., 0] - 0.5 * z * Y[..., -1])
        + co.c1 * xm * xm
        + co.c2 * z * z
    )
    value = link.sum(axis=-1) - ph_all[..., 0]
    gx = np.empty_like(x)
    gx[..., 0] = -dphi[..., 0]
    # phi' is even
    gx[..., 1:] = -(pmz + pz) * dphi[..., 1:]
    gx[..., :-1] += s * Y[..., 0] + 2.0 * co.c1 * xm
    gz = -dpmz * phm - dpz * ph - 0.5 * s * Y[..., -1] + 2.0 * co.c2 * z
    gY = -w * MY
    gY[..., 0] += s * xm
    gY[..., -1] -= 0.5 * s * z
    return value, gx, gz, gY


def _fm_eval(x, z):
    """Closed-form envelope value and gradient (no domain checks)."""
    xh, xm = x[..., 1:], x[..., :-1]
    pz, pmz = psi(z), psi(-z)
    ph, phm = phi(xh), phi(-xh)
    r = xm - 0.5 * z
    value = -phi(x[..., 0]) + np.sum(pmz * phm - pz * ph, axis=-1) + 6.0 * np.sum(r * r, axis=-1)
    gx = np.empty_like(x)
    gx[..., 0] = -phi_prime(x[..., 0])
    gx[..., 1:] = -pmz * phi_prime(-xh) - pz * phi_prime(xh)
    gx[..., :-1] += 12.0 * r
    gz = -psi_prime(-z) * phm - psi_prime(z) * ph - 6.0 * r
    return value, gx, gz


def _check_dims(chain, v):
    if v.T != chain.T or v.n != chain.n:
        raise ValueError(f"point has (T, n)=({v.T}, {v.n}), instance has ({chain.T}, {chain.n})")


def _check_box(chain, x, z, Y=None):
    R1 = chain.R1
    if np.any(np.abs(x) > R1) or np.any(np.abs(z) > R1):
        raise DomainError(f"x, z must satisfy |.| <= R1 = {R1}")
    if Y is not None and np.any(np.abs(Y) > chain.n * chain.R2):
        raise DomainError(f"ybar must satisfy |.| <= n R2 = {chain.n * chain.R2}")


def eval_ncsc_unscaled(spec, v):
    chain = _as_chain(spec)
    _check_dims(chain, v)
    value, gx, gz, gY = _joint_eval(chain, v.x, v.z, v.ybar, boxed=False)
    return value, ChainPoint(gx, gz, gY)


def eval_ncsc_sg_unscaled(spec, v):
    chain = _as_chain(spec)
    _check_dims(chain, v)
    _check_box(chain, v.x, v.z, v.ybar)
    value, gx, gz, gY = _joint_eval(chain, v.x, v.z, v.ybar, boxed=True)
    return value, ChainPoint(gx, gz, gY)


def argmax_y(spec, x_i, z_ip1):
    """Inner maximizer of one sub-chain for fixed scalars (x_i, z_{i+1})."""
    chain = _as_chain(spec)
    if chain.boxed and (abs(x_i) > chain.R1 or abs(z_ip1) > chain.R1):
        raise DomainError(f"|x|, |z| must be <= R1 = {chain.R1}")
    b = np.zeros(chain.n)
    b[0] = x_i
    b[-1] -= 0.5 * z_ip1
    y = solve(chain.operator, b)
    if not chain.boxed:
        y *= math.sqrt(chain.coeffs.C / chain.n)
    return y


def eval_fm(spec, x, z):
    chain = _as_chain(spec)
    x = np.asarray(x, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if x.shape[-1] != chain.T or z.shape[-1] != chain.T - 1:
        raise ValueError(f"expected x of length {chain.T} and z of length {chain.T - 1}")
    if chain.boxed:
        _check_box(chain, x, z)
    value, gx, gz = _fm_eval(x, z)
    return value, (gx, gz)


# --------------------------------------------------------------------------
# Certified constants
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Constants:
    ell0: float
    ellm: float
    G: float


@lru_cache(maxsize=None)
def _coefficient_sups(n_max=2000):
    """Suprema over n >= 10 of the n-dependent sub-chain quantities.

    |c1|, |c2| and C increase monotonically towards their n -> inf limits while
    sqrt(C/n) and C/n decrease, so sampling n in [10, n_max] plus the limit
    captures every supremum.
    """
    rows = [hm_coefficients(n) for n in range(10, n_max + 1)]
    lim = hm_limit_coefficients()
    C = max([r.C for r in rows] + [lim.C])
    return {
        "C": C,
        "c1": max([abs(r.c1) for r in rows] + [abs(lim.c1)]),
        "c2": max([abs(r.c2) for r in rows] + [abs(lim.c2)]),
        "s_det": max(math.sqrt(r.C / r.n) for r in rows),
        "s_box": max(r.C / r.n for r in rows),
        "alpha": 1.0 / 100.0,
    }


def _row_sums_joint(boxed):
    b = BOUNDS
    sup = _coefficient_sups()
    s = sup["s_box"] if boxed else sup["s_det"]
    w = sup["s_box"] if boxed else 1.0
    a = sup["alpha"]
    cross = b.psi_prime_sup * b.phi_prime_sup
    return {
        "x_first": b.phi_second_sup + 2 * sup["c1"] + s,
        "x_mid": b.psi_sup * b.phi_second_sup + 2 * sup["c1"] + cross + s,
        "x_last": b.psi_sup * b.phi_second_sup + cross,
        "z": b.psi_second_sup * b.phi_sup + 2 * sup["c2"] + cross + 0.5 * s,
        "y_end": w * (a + 1) + w + s,
        "y_mid": w * (a + 2) + 2 * w,
    }


def _row_sums_fm():
    b = BOUNDS
    cross = b.psi_prime_sup * b.phi_prime_sup
    return {
        "x_first": b.phi_second_sup + 12.0 + 6.0,
        "x_mid": b.psi_sup * b.phi_second_sup + 12.0 + cross + 6.0,
        "x_last": b.psi_sup * b.phi_second_sup + cross,
        "z": b.psi_second_sup * b.phi_sup + 3.0 + cross + 6.0,
    }


def _gradient_bound_box(R1, R2):
    b = BOUNDS
    sup = _coefficient_sups()
    C, a = sup["C"], sup["alpha"]
    return max(
        b.phi_prime_sup + C * R2 + 2 * sup["c1"] * R1,
        b.psi_sup * b.phi_prime_sup + C * R2 + 2 * sup["c1"] * R1,
        b.psi_prime_sup * b.phi_sup + 0.5 * C * R2 + 2 * sup["c2"] * R1,
        # y rows: (C/n) |((alpha I + A) y)_k - b_k| with |y| <= n R2, n >= 10
        C * ((a + 2) * R2 + R1 / 10.0),
        C * (a + 4) * R2,
    )


@lru_cache(maxsize=None)
def estimate_constants(variant=DETERMINISTIC, R1=2.0, R2=60.0):
    """Gershgorin smoothness bounds and the boxed gradient bound.

    Valid uniformly over every sub-chain length n >= 10.  ``G`` is infinite
    for the unconstrained variant.
    """
    boxed = variant == STOCHASTIC
    ell0 = max(_row_sums_joint(boxed).values())
    ellm = max(_row_sums_fm().values())
    G = _gradient_bound_box(R1, R2) if boxed else math.inf
    return Constants(ell0=ell0, ellm=ellm, G=G)


# --------------------------------------------------------------------------
# Instance specification and scaling
# --------------------------------------------------------------------------

USER_KEYS = ("L", "mu", "Delta", "eps", "sigma", "R1", "R2", "variant", "seed")


@dataclass(frozen=True)
class InstanceSpec:
    """User parameters plus every derived constant of the scaled instance.

    ``variant`` defaults to ``"stochastic"`` when ``sigma`` is given.
    """

    L: float
    mu: float
    Delta: float
    eps: float
    sigma: float = None
    R1: float = 2.0
    R2: float = 60.0
    variant: str = None
    seed: int = 0

    kappa: float = field(init=False)
    n: int = field(init=False)
    T: int = field(init=False)
    lam: float = field(init=False)
    ell0: float = field(init=False)
    ellm: float = field(init=False)
    G: float = field(init=False)
    p: float = field(init=False)

    def __post_init__(self):
        variant = self.variant or (STOCHASTIC if self.sigma is not None else DETERMINISTIC)
        if variant not in (DETERMINISTIC, STOCHASTIC):
            raise ValueError(f"unknown variant {variant!r}")
        set_ = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        set_("variant", variant)
        for name in ("L", "mu", "Delta", "eps"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.sigma is not None and not self.sigma > 0:
            raise ValueError("sigma must be positive when given")
        if self.L < self.mu:
            raise RegimeError(f"kappa = L/mu must be >= 1, got {self.L / self.mu}")
        stochastic = variant == STOCHASTIC
        if stochastic and (self.R1 < 2 or self.R2 < 30 * self.R1):
            raise RegimeError(f"boxed instance needs R1 >= 2 and R2 >= 30 R1, got R1={self.R1}, R2={self.R2}")

        const = estimate_constants(variant, float(self.R1), float(self.R2))
        L, mu, eps = self.L, self.mu, self.eps
        ratio = L / (mu * const.ell0)
        if stochastic:
            n = math.floor(ratio ** (1.0 / 3.0))
            lam = 6.0 * const.ell0 * eps / L
            T = math.floor(L * self.Delta / (432.0 * const.ell0 * eps**2))
            p = 1.0 if self.sigma is None else min(1.0, 36.0 * eps**2 * const.G**2 / self.sigma**2)
            need_kappa, t_div = 1000.0 * const.ell0, 432.0
        else:
            n = math.floor(math.sqrt(ratio))
            lam = 3.0 * const.ell0 * eps / L
            T = math.floor(L * self.Delta / (108.0 * const.ell0 * eps**2))
            p = 1.0
            need_kappa, t_div = 100.0 * const.ell0, 108.0
        if n < 10:
            raise RegimeError(
                f"sub-chain length n = {n} < 10; requires kappa >= {need_kappa:.6g} "
                f"(got kappa = {L / mu:.6g})"
            )
        if T < 2:
            need_delta = 2.0 * t_div * const.ell0 * eps**2 / L
            raise RegimeError(
                f"chain length T = {T} < 2; requires Delta >= {need_delta:.6g} (got Delta = {self.Delta:.6g})"
            )
        set_("kappa", L / mu)
        set_("n", n)
        set_("T", T)
        set_("lam", lam)
        set_("ell0", const.ell0)
        set_("ellm", const.ellm)
        set_("G", const.G)
        set_("p", p)

    @property
    def stochastic(self):
        return self.variant == STOCHASTIC

    @cached_property
    def chain(self):
        return HardChain(self.T, self.n, boxed=self.stochastic, R1=self.R1, R2=self.R2)

    @property
    def coeffs(self):
        return hm_coefficients(self.n)

    def user_params(self):
        return {k: getattr(self, k) for k in USER_KEYS}

    def metadata(self):
        co = self.coeffs
        return {
            **self.user_params(),
            "kappa": self.kappa,
            "n": self.n,
            "T": self.T,
            "lambda": self.lam,
            "p": self.p,
            "ell0": self.ell0,
            "ellm": self.ellm,
            "G": None if math.isinf(self.G) else self.G,
            "a1": co.a1,
            "a2": co.a2,
            "C": co.C,
            "c1": co.c1,
            "c2": co.c2,
            "chain_length": chain_length(self.T, self.n),
            "witness_budget": self.n * (self.T - 1),
        }


class ScaledInstance:
    """``f(v) = (L lam^2 / ell0) * fbar(v / lam)`` over flat chain-ordered vectors."""

    def __init__(self, spec):
        self.spec = spec
        self.chain = spec.chain
        self.T, self.n = spec.T, spec.n
        self.lam = spec.lam
        self.value_scale = spec.L * spec.lam**2 / spec.ell0
        self.grad_scale = spec.L * spec.lam / spec.ell0
        self.radii = self.chain.radii() * self.lam
        self.dim = self.chain.dim
        self.z_last = z_index(self.T, self.n)

    @property
    def boxed(self):
        return self.chain.boxed

    @property
    def gradient_bound(self):
        """Certified infinity-norm bound of the scaled gradient."""
        return self.spec.G * self.grad_scale

    @property
    def fm_smoothness(self):
        return self.spec.ellm * self.spec.L / self.spec.ell0

    @property
    def xz_radius(self):
        return self.lam * self.chain.R1 if self.boxed else np.inf

    def metadata(self):
        return self.spec.metadata()

    def in_domain(self, v):
        return bool(np.all(np.abs(v) <= self.radii))

    def check_domain(self, v):
        if v.shape[-1] != self.dim:
            raise ValueError(f"expected a chain vector of length {self.dim}, got {v.shape[-1]}")
        if self.boxed and not self.in_domain(v):
            bad = int(np.flatnonzero(np.abs(v) > self.radii)[0])
            raise DomainError(f"coordinate {bad} = {v[bad]} exceeds radius {self.radii[bad]}")

    def split(self, v):
        x, z, Y = _split_flat(np.asarray(v, dtype=np.float64), self.T, self.n)
        return x, np.array(z), np.array(Y)

    def join(self, x, z, Y):
        return _join_flat(np.asarray(x), np.asarray(z), np.asarray(Y))

    def evaluate(self, v):
        """Value and flat gradient at a flat chain-ordered point."""
        v = np.asarray(v, dtype=np.float64)
        self.check_domain(v)
        x, z, Y = _split_flat(v / self.lam, self.T, self.n)
        value, gx, gz, gY = _joint_eval(self.chain, x, z, Y, boxed=self.boxed)
        return self.value_scale * value, self.grad_scale * _join_flat(gx, gz, gY)

    def fm(self, x, z):
        """Envelope ``max_y f`` and its gradient in (x, z)."""
        x = np.asarray(x, dtype=np.float64)
        z = np.asarray(z, dtype=np.float64)
        if self.boxed:
            r = self.xz_radius
            if np.any(np.abs(x) > r) or np.any(np.abs(z) > r):
                raise DomainError(f"x, z must satisfy |.| <= {r}")
        value, gx, gz = _fm_eval(x / self.lam, z / self.lam)
        return self.value_scale * value, (self.grad_scale * gx, self.grad_scale * gz)

    def argmax_y(self, x_i, z_ip1):
        return self.lam * argmax_y(self.chain, x_i / self.lam, z_ip1 / self.lam)

    def witness_budget(self):
        """Oracle calls before which z_T is provably still zero."""
        return self.n * (self.T - 1)

    def stochastic_horizon(self, p, delta=0.5):
        """Horizon below which z_T stays zero with probability >= 1 - delta."""
        return (self.n * (self.T - 1) - math.log(1.0 / delta)) / (2.0 * p)


def build_scaled(spec):
    return ScaledInstance(spec)
