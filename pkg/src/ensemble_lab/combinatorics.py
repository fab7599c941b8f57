"""Log-domain and exact combinatorial primitives.

Every finite-length probability in the package is carried as a natural
logarithm, with ``-inf`` standing for an exact zero.  :class:`LogReal` wraps
such a scalar; bulk work uses plain numpy arrays of logs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

import numpy as np
from scipy.special import gammaln, logsumexp

# Below this n binomials come from exact integers, above it from log-gamma.
EXACT_BINOMIAL_LIMIT = 64
ENTROPY_CLAMP = 1e-12


class DomainError(ValueError):
    """Argument lies outside the domain of a function."""


@dataclass(frozen=True, order=True)
class LogReal:
    """A nonnegative real stored as its natural log; ``log == -inf`` is zero."""

    log: float

    @classmethod
    def zero(cls) -> LogReal:
        return cls(-math.inf)

    @classmethod
    def one(cls) -> LogReal:
        return cls(0.0)

    @classmethod
    def from_value(cls, x: float | int | Fraction) -> LogReal:
        if x < 0:
            raise DomainError(f"LogReal cannot hold negative value {x}")
        if x == 0:
            return cls.zero()
        if isinstance(x, (int, Fraction)):
            return cls(_log_exact(x))
        return cls(math.log(x))

    @property
    def is_zero(self) -> bool:
        return self.log == -math.inf

    @property
    def value(self) -> float:
        """Linear-domain value; overflows to ``inf`` beyond float range."""
        try:
            return math.exp(self.log)
        except OverflowError:
            return math.inf

    def __mul__(self, other: LogReal) -> LogReal:
        return LogReal(self.log + other.log)

    def __truediv__(self, other: LogReal) -> LogReal:
        if other.is_zero:
            raise ZeroDivisionError("division by a zero LogReal")
        return LogReal(self.log - other.log)

    def __add__(self, other: LogReal) -> LogReal:
        return LogReal(float(np.logaddexp(self.log, other.log)))

    def __float__(self) -> float:
        return self.value

    def isclose(self, other: LogReal, rel_tol: float = 1e-12) -> bool:
        if self.is_zero or other.is_zero:
            return self.is_zero and other.is_zero
        # relative tolerance on the magnitude is absolute tolerance on the log
        return abs(self.log - other.log) <= rel_tol


def log_sum(terms: Iterable[LogReal]) -> LogReal:
    """Max-shifted sum of LogReals."""
    logs = np.fromiter((t.log for t in terms), dtype=float)
    if logs.size == 0:
        return LogReal.zero()
    return LogReal(float(logsumexp(logs)))


def _log_exact(x: int | Fraction) -> float:
    x = Fraction(x)
    # math.log accepts arbitrarily large ints without overflow
    return math.log(x.numerator) - math.log(x.denominator)


def exact_binomial(n: int, k: int) -> int:
    """Exact C(n, k); zero when k is out of range."""
    if n < 0:
        raise DomainError(f"n must be nonnegative, got {n}")
    if k < 0 or k > n:
        return 0
    return math.comb(n, k)


def log_binomial(n: int, k: int) -> LogReal:
    """log C(n, k) as a LogReal; exact zero when k is out of range."""
    if n < 0:
        raise DomainError(f"n must be nonnegative, got {n}")
    if k < 0 or k > n:
        return LogReal.zero()
    if n <= EXACT_BINOMIAL_LIMIT:
        return LogReal(math.log(math.comb(n, k)))
    return LogReal(float(gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)))


_EXACT_LOG_TABLE = np.full((EXACT_BINOMIAL_LIMIT + 1, EXACT_BINOMIAL_LIMIT + 1), -np.inf)
for _n in range(EXACT_BINOMIAL_LIMIT + 1):
    for _k in range(_n + 1):
        _EXACT_LOG_TABLE[_n, _k] = math.log(math.comb(_n, _k))


def log_binomial_array(n, k) -> np.ndarray:
    """Vectorised log C(n, k) with ``-inf`` wherever k < 0, k > n or n < 0."""
    n, k = np.broadcast_arrays(np.asarray(n, dtype=np.int64), np.asarray(k, dtype=np.int64))
    out = np.full(n.shape, -np.inf)
    valid = (n >= 0) & (k >= 0) & (k <= n)
    small = valid & (n <= EXACT_BINOMIAL_LIMIT)
    large = valid & ~small
    out[small] = _EXACT_LOG_TABLE[n[small], k[small]]
    nl, kl = n[large], k[large]
    out[large] = gammaln(nl + 1.0) - gammaln(kl + 1.0) - gammaln(nl - kl + 1.0)
    return out


def binary_entropy_nats(x: float) -> float:
    """H(x) = -x ln x - (1-x) ln(1-x), with H(0) = H(1) = 0.

    Inputs within 1e-12 outside [0, 1] are clamped; anything further out
    raises :class:`DomainError`.
    """
    if x < -ENTROPY_CLAMP or x > 1 + ENTROPY_CLAMP or math.isnan(x):
        raise DomainError(f"entropy argument {x} outside [0, 1]")
    if x <= 0.0 or x >= 1.0:
        return 0.0
    return -x * math.log(x) - (1.0 - x) * math.log1p(-x)


def binary_entropy_array(x) -> np.ndarray:
    """Vectorised :func:`binary_entropy_nats`; out-of-domain entries become nan."""
    x = np.asarray(x, dtype=float)
    bad = (x < -ENTROPY_CLAMP) | (x > 1 + ENTROPY_CLAMP)
    xc = np.clip(x, 0.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -xc * np.log(xc) - (1.0 - xc) * np.log1p(-xc)
    h = np.where((xc <= 0.0) | (xc >= 1.0), 0.0, h)
    return np.where(bad, np.nan, h)


def stirling_phi(lam: float, ell: int) -> float:
    """exp(ell (ell - 1) / (2 lam)), the correction factor in the
    falling-factorial bound N^ell / phi_N(ell) <= N (N-1) ... (N-ell+1)."""
    if lam <= 0:
        raise DomainError(f"lambda must be positive, got {lam}")
    return math.exp(ell * (ell - 1) / (2.0 * lam))


def log_hypergeometric(n: int, n_keep: int, d: int, d_keep: int) -> LogReal:
    """log of C(d, d') C(n-d, n'-d') / C(n, n').

    Probability that keeping a uniformly random ``n_keep``-subset of ``n``
    positions retains exactly ``d_keep`` of ``d`` marked positions.
    """
    if not (0 <= d <= n and 0 <= n_keep <= n):
        raise DomainError(f"invalid hypergeometric parameters N={n}, N'={n_keep}, d={d}")
    num = log_binomial(d, d_keep) * log_binomial(n - d, n_keep - d_keep)
    if num.is_zero:
        return num
    return num / log_binomial(n, n_keep)


def exact_hypergeometric(n: int, n_keep: int, d: int, d_keep: int) -> Fraction:
    return Fraction(
        exact_binomial(d, d_keep) * exact_binomial(n - d, n_keep - d_keep),
        exact_binomial(n, n_keep),
    )
