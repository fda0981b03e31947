"""
Tridiagonal operators ``alpha*I + A`` used by the quadratic sub-chains.

Two stencils are supported: ``FREE_ENDS`` (Laplacian with corner entries 1,
the sub-chain coupling matrix) and ``FIXED_ENDS`` (corner entries 2, the
truncated strongly-convex chain).
"""

import enum
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
from scipy.linalg import solveh_banded

__all__ = [
    "Variant",
    "TridiagOperator",
    "HmCoefficients",
    "RegimeError",
    "solve",
    "first_column_closed_form",
    "hm_coefficients",
    "hm_limit_coefficients",
]


class RegimeError(ValueError):
    """Raised when parameters fall outside the regime where a bound is proven."""


class Variant(str, enum.Enum):
    FREE_ENDS = "free"
    FIXED_ENDS = "fixed"


@dataclass(frozen=True)
class TridiagOperator:
    """The symmetric positive definite matrix ``alpha*I_n + A``."""

    n: int
    alpha: float
    variant: Variant = Variant.FREE_ENDS

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be positive, got {self.n}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        object.__setattr__(self, "variant", Variant(self.variant))

    @cached_property
    def diagonal(self):
        d = np.full(self.n, self.alpha + 2.0)
        if self.variant is Variant.FREE_ENDS:
            # corner entries of A are 1 (a single corner when n == 1)
            d[0] = d[-1] = self.alpha + 1.0
        d.flags.writeable = False
        return d

    def matvec(self, y):
        """Apply ``alpha*I + A`` along the last axis of ``y``."""
        y = np.asarray(y, dtype=np.float64)
        out = self.diagonal * y
        out[..., 1:] -= y[..., :-1]
        out[..., :-1] -= y[..., 1:]
        return out

    def dense(self):
        return (
            np.diag(self.diagonal)
            - np.diag(np.ones(self.n - 1), 1)
            - np.diag(np.ones(self.n - 1), -1)
        )

    def _banded(self):
        ab = np.empty((2, self.n))
        ab[0, 0] = 0.0
        ab[0, 1:] = -1.0
        ab[1] = self.diagonal
        return ab


def solve(op, b):
    """Solve ``(alpha*I + A) y = b``.

    ``b`` may be a vector of length n or an (n, k) array of right-hand sides.
    """
    b = np.asarray(b, dtype=np.float64)
    if b.shape[0] != op.n:
        raise ValueError(f"right-hand side has length {b.shape[0]}, operator has n={op.n}")
    if op.n == 1:
        return b / op.diagonal[0]
    return solveh_banded(op._banded(), b, check_finite=False)


def first_column_closed_form(op):
    """First column of ``(alpha*I + A)^{-1}`` from the determinant/cofactor recurrences.

    With ``p, q = 1 + alpha/2 +- sqrt(alpha + alpha^2/4)`` (so ``q = 1/p``) the
    entries are ``M_{1,i} / det``.  Numerator and denominator are both divided by
    ``p^{n-1}`` so only non-positive powers of ``p`` are ever formed.
    """
    if Variant(op.variant) is not Variant.FREE_ENDS:
        raise ValueError("closed form is only available for the free-ends stencil")
    n, a = op.n, float(op.alpha)
    if n < 2:
        raise ValueError(f"closed form needs n >= 2, got {n}")
    r = math.sqrt(a + a * a / 4.0)
    logp = math.log1p(a / 2.0 + r)
    # det / p^{n-1}
    tail = math.exp(-2.0 * (n - 1) * logp)
    det_s = ((a + a * a / 2.0) * (1.0 - tail) + a * r * (1.0 + tail)) / (2.0 * r)
    i = np.arange(1, n + 1)
    up = np.exp((1 - i) * logp)  # p^{n-i} / p^{n-1}
    down = np.exp((i + 1 - 2 * n) * logp)  # q^{n-i} / p^{n-1}
    m_s = (0.5 * a * (up - down) + r * (up + down)) / (2.0 * r)
    return m_s / det_s


def growth_factor(n):
    """``p^{n-1}`` for ``alpha = 1/n^2`` (lies in [2, 8] once n >= 10)."""
    a = 1.0 / n**2
    return math.exp((n - 1) * math.log1p(a / 2.0 + math.sqrt(a + a * a / 4.0)))


@dataclass(frozen=True)
class HmCoefficients:
    """Quadratic coefficients of the maximized sub-chain.

    ``h_m(x, z) = C * (a1/2 x^2 - a2/2 x z + a1/8 z^2)`` and the correction
    weights ``c1, c2`` collapse ``h_m + c1 x^2 + c2 z^2`` to ``6 (x - z/2)^2``.
    """

    n: int
    a1: float
    a2: float
    C: float
    c1: float
    c2: float

    @classmethod
    def from_a(cls, n, a1, a2):
        C = 12.0 / a2
        return cls(n=n, a1=a1, a2=a2, C=C, c1=C * (a2 - a1) / 2.0, c2=C * (a2 - a1) / 8.0)

    def hm(self, x, z):
        return self.C * (0.5 * self.a1 * x * x - 0.5 * self.a2 * x * z + self.a1 / 8.0 * z * z)


@lru_cache(maxsize=None)
def hm_coefficients(n):
    if n < 10:
        raise RegimeError(f"h_m coefficients are only bounded for n >= 10, got n={n}")
    op = TridiagOperator(n, 1.0 / n**2)
    e1 = np.zeros(n)
    e1[0] = 1.0
    col = solve(op, e1)
    return HmCoefficients.from_a(n, float(col[0]) / n, float(col[-1]) / n)


def hm_limit_coefficients():
    """The n -> infinity limit: a1 -> coth(1), a2 -> 1/sinh(1)."""
    return HmCoefficients.from_a(math.inf, 1.0 / math.tanh(1.0), 1.0 / math.sinh(1.0))
