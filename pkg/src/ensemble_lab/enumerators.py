"""Finite-length ensemble-average weight enumerators of RMA codes.

A repeat-multiple-accumulate (RMA) encoder repeats each of ``K`` information
bits ``q`` times, then passes the length ``N = qK`` word through ``M``
accumulators 1/(1+D), each preceded by a uniform interleaver.  Optionally the
output is randomly punctured down to ``N'`` symbols.

Everything here is exact in the integer weights (no ceil/floor smoothing).
Floating-point results are log-domain; the ``*_exact`` functions return
:class:`fractions.Fraction` and exist so the brute-force oracle can be
compared without rounding.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.special import logsumexp

from .combinatorics import (
    DomainError,
    LogReal,
    exact_binomial,
    exact_hypergeometric,
    log_binomial,
    log_binomial_array,
    log_hypergeometric,
)

DEFAULT_BUDGET = 4096
_CHUNK_CELLS = 1 << 22


class BudgetExceeded(RuntimeError):
    """Requested computation is larger than the configured budget."""


@dataclass(frozen=True)
class EnsembleSpec:
    """One RMA ensemble: repetition ``q``, ``M`` accumulators, ``K`` info bits.

    ``n_kept`` is the punctured length N'; ``None`` means unpunctured.
    """

    q: int
    M: int
    K: int
    n_kept: int | None = None

    def __post_init__(self):
        if self.q < 2:
            raise DomainError(f"q must be >= 2, got {self.q}")
        if self.M < 1:
            raise DomainError(f"M must be >= 1, got {self.M}")
        if self.K < 1:
            raise DomainError(f"K must be >= 1, got {self.K}")
        if self.n_kept is not None and not 1 <= self.n_kept <= self.N:
            raise DomainError(f"N' must satisfy 1 <= N' <= N={self.N}, got {self.n_kept}")

    @classmethod
    def punctured_to_rate(cls, q: int, M: int, K: int, rate: float) -> EnsembleSpec:
        """Ensemble punctured so that K / N' is (as close as possible to) ``rate``."""
        if not 0 < rate < 1:
            raise DomainError(f"punctured rate must be in (0, 1), got {rate}")
        return cls(q, M, K, n_kept=round(K / rate))

    @property
    def N(self) -> int:
        return self.q * self.K

    @property
    def rate(self) -> float:
        return 1.0 / self.q

    @property
    def punctured(self) -> bool:
        return self.n_kept is not None and self.n_kept != self.N

    @property
    def block_length(self) -> int:
        return self.N if self.n_kept is None else self.n_kept

    @property
    def punctured_rate(self) -> float:
        return self.K / self.block_length

    @property
    def eta(self) -> float:
        return self.block_length / self.N

    def unpunctured(self) -> EnsembleSpec:
        return EnsembleSpec(self.q, self.M, self.K)


@dataclass(frozen=True)
class IoweQuery:
    """Input weight ``w``, per-accumulator output weights ``d`` and an
    optional weight ``d_prime`` after puncturing."""

    w: int
    d: tuple[int, ...]
    d_prime: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "d", tuple(int(x) for x in self.d))

    def satisfies_constraints(self, spec: EnsembleSpec) -> bool:
        N = spec.N
        prev = spec.q * self.w
        for d in self.d:
            if not (0 <= d <= N and (prev + 1) // 2 <= d and prev // 2 <= N - d):
                return False
            prev = d
        if self.d_prime is not None:
            n_keep = spec.block_length
            if not (0 <= self.d_prime <= min(prev, n_keep) and n_keep - self.d_prime <= N - prev):
                return False
        return True


def _log_transition(N: int, w, d) -> np.ndarray:
    """log Pr(output weight d | input weight w) of a length-N accumulator."""
    w, d = np.broadcast_arrays(np.asarray(w, dtype=np.int64), np.asarray(d, dtype=np.int64))
    out = (
        log_binomial_array(d - 1, (w + 1) // 2 - 1)
        + log_binomial_array(N - d, w // 2)
        - log_binomial_array(N, w)
    )
    out = np.where((w == 0) | (d == 0), -np.inf, out)
    return np.where((w == 0) & (d == 0), 0.0, out)


def accumulator_log_kernel(N: int) -> np.ndarray:
    """(N+1) x (N+1) matrix of log Pr(d | w), rows indexed by w."""
    w = np.arange(N + 1)
    return _log_transition(N, w[:, None], w[None, :])


def acc_conditional_log_prob(N: int, w_in: int, d_out: int) -> LogReal:
    """Pr(d | w) for one accumulator behind a uniform interleaver of length N.

    C(d-1, ceil(w/2)-1) C(N-d, floor(w/2)) / C(N, w) for w, d >= 1; one for
    w = d = 0 and zero for every other impossible transition.
    """
    if not (0 <= w_in <= N and 0 <= d_out <= N):
        return LogReal.zero()
    if w_in == 0 or d_out == 0:
        return LogReal.one() if w_in == d_out else LogReal.zero()
    num = log_binomial(d_out - 1, (w_in + 1) // 2 - 1) * log_binomial(N - d_out, w_in // 2)
    if num.is_zero:
        return num
    return num / log_binomial(N, w_in)


def acc_conditional_prob_exact(N: int, w_in: int, d_out: int) -> Fraction:
    if not (0 <= w_in <= N and 0 <= d_out <= N):
        return Fraction(0)
    if w_in == 0 or d_out == 0:
        return Fraction(int(w_in == d_out))
    return Fraction(
        exact_binomial(d_out - 1, (w_in + 1) // 2 - 1) * exact_binomial(N - d_out, w_in // 2),
        exact_binomial(N, w_in),
    )


def _check_dimension(spec: EnsembleSpec, query: IoweQuery) -> None:
    if len(query.d) != spec.M:
        raise ValueError(f"query has {len(query.d)} stage weights, ensemble has M={spec.M}")


def rma_conditional_log_prob(spec: EnsembleSpec, query: IoweQuery) -> LogReal:
    """Pr(d_1, ..., d_M [, d'] | w) as a product of per-stage kernels."""
    _check_dimension(spec, query)
    N = spec.N
    total = LogReal.one()
    prev = spec.q * query.w
    for d in query.d:
        total = total * acc_conditional_log_prob(N, prev, d)
        if total.is_zero:
            return total
        prev = d
    if query.d_prime is not None:
        if not 0 <= query.d_prime <= spec.block_length:
            return LogReal.zero()
        total = total * log_hypergeometric(N, spec.block_length, prev, query.d_prime)
    return total


def rma_conditional_prob_exact(spec: EnsembleSpec, query: IoweQuery) -> Fraction:
    _check_dimension(spec, query)
    total = Fraction(1)
    prev = spec.q * query.w
    for d in query.d:
        total *= acc_conditional_prob_exact(spec.N, prev, d)
        if not total:
            return total
        prev = d
    if query.d_prime is not None:
        if not 0 <= query.d_prime <= spec.block_length:
            return Fraction(0)
        total *= exact_hypergeometric(spec.N, spec.block_length, prev, query.d_prime)
    return total


def _check_input_weight(spec: EnsembleSpec, w: int) -> None:
    if not 0 <= w <= spec.K:
        raise DomainError(f"input weight must lie in [0, K={spec.K}], got {w}")


def expected_iowe(spec: EnsembleSpec, query: IoweQuery) -> LogReal:
    """E(A_{d, w}) = C(K, w) Pr(d | w), averaged over all interleavers."""
    _check_input_weight(spec, query.w)
    return log_binomial(spec.K, query.w) * rma_conditional_log_prob(spec, query)


def expected_iowe_exact(spec: EnsembleSpec, query: IoweQuery) -> Fraction:
    _check_input_weight(spec, query.w)
    return exact_binomial(spec.K, query.w) * rma_conditional_prob_exact(spec, query)


def exact_iowe_table(spec: EnsembleSpec) -> dict[tuple[int, tuple[int, ...]], Fraction]:
    """All nonzero cells of the exact ensemble IOWE.

    Keys are ``(w, (d_1, ..., d_M))``; for a punctured spec the weight after
    puncturing is appended, ``(w, (d_1, ..., d_M, d'))``.  Intended for the
    tiny block lengths the brute-force oracle can reach.
    """
    N = spec.N
    table: dict[tuple[int, tuple[int, ...]], Fraction] = {}
    for w in range(spec.K + 1):
        # frontier: partial weight vectors with their probability so far
        frontier = {(): (spec.q * w, Fraction(exact_binomial(spec.K, w)))}
        for _ in range(spec.M):
            nxt = {}
            for path, (prev, p) in frontier.items():
                for d in range(N + 1):
                    t = acc_conditional_prob_exact(N, prev, d)
                    if t:
                        nxt[path + (d,)] = (d, p * t)
            frontier = nxt
        for path, (last, p) in frontier.items():
            if spec.n_kept is None:
                table[(w, path)] = p
                continue
            for dp in range(spec.n_kept + 1):
                h = exact_hypergeometric(N, spec.n_kept, last, dp)
                if h:
                    table[(w, path + (dp,))] = p * h
    return table


@dataclass(frozen=True)
class WeightSpectrum:
    """Expected codeword counts E(A_d) stored as logs.

    ``log_counts[d]`` is log E(A_d) for ``d = 0 .. len(log_counts) - 1``.  The
    array may stop short of ``block_length`` when only low weights were
    requested.  Entry 0 is the all-zero codeword and is exactly 1.
    """

    block_length: int
    log_counts: np.ndarray

    @property
    def max_weight(self) -> int:
        return len(self.log_counts) - 1

    def expected_count(self, d: int) -> LogReal:
        if not 0 <= d <= self.block_length:
            raise DomainError(f"weight {d} outside [0, {self.block_length}]")
        if d > self.max_weight:
            raise BudgetExceeded(f"spectrum truncated at weight {self.max_weight}")
        return LogReal(float(self.log_counts[d]))

    def cumulative(self, delta: int) -> LogReal:
        """E(A_{d <= delta}) summed from d = 1 (the zero word is excluded)."""
        if not 0 <= delta <= self.block_length:
            raise DomainError(f"delta {delta} outside [0, {self.block_length}]")
        if delta > self.max_weight:
            raise BudgetExceeded(f"spectrum truncated at weight {self.max_weight}")
        if delta == 0:
            return LogReal.zero()
        return LogReal(float(logsumexp(self.log_counts[1 : delta + 1])))

    def cumulative_logs(self) -> np.ndarray:
        """log E(A_{d <= delta}) for every delta, ``-inf`` at delta = 0."""
        out = np.logaddexp.accumulate(np.concatenate(([-np.inf], self.log_counts[1:])))
        return out

    def total(self) -> LogReal:
        return self.cumulative(self.max_weight)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["d", "log_expected_count", "expected_count_if_representable"])
        for d, lg in enumerate(self.log_counts):
            if lg == -np.inf:
                linear = "0"
            elif lg < math.log(np.finfo(float).max):
                linear = f"{math.exp(lg):.12g}"
            else:
                linear = ""
            writer.writerow([d, f"{lg:.12g}", linear])
        return buf.getvalue()


def cumulative_wef(spectrum: WeightSpectrum, delta: int) -> LogReal:
    return spectrum.cumulative(delta)


def _propagate(N: int, rows: np.ndarray, vals: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """One accumulator stage: out[c] = logsumexp_r vals[r] + log Pr(cols[c] | rows[r])."""
    out = np.full(cols.shape, -np.inf)
    step = max(1, _CHUNK_CELLS // max(1, cols.size))
    for start in range(0, rows.size, step):
        r = rows[start : start + step, None]
        block = vals[start : start + step, None] + _log_transition(N, r, cols[None, :])
        out = np.logaddexp(out, logsumexp(block, axis=0))
    return out


def _check_budget(spec: EnsembleSpec, max_weight: int | None, budget: int) -> None:
    # a single truncated stage costs O(K * max_weight) and is always allowed
    if spec.M == 1 and max_weight is not None and spec.n_kept is None:
        return
    if spec.N > budget:
        raise BudgetExceeded(f"block length N={spec.N} exceeds budget {budget}")


def weight_spectrum(
    spec: EnsembleSpec, max_weight: int | None = None, budget: int = DEFAULT_BUDGET
) -> WeightSpectrum:
    """Ensemble-average WEF of the unpunctured mother code.

    The weight distribution is pushed forward one accumulator at a time, so
    memory stays O(N) per stage and the cost is O(M N^2).  ``max_weight``
    truncates the last stage.
    """
    _check_budget(spec, max_weight, budget)
    N = spec.N
    w = np.arange(1, spec.K + 1)
    rows = spec.q * w
    vals = log_binomial_array(spec.K, w)
    for stage in range(spec.M):
        last = stage == spec.M - 1
        top = N if (max_weight is None or not last) else min(max_weight, N)
        cols = np.arange(top + 1)
        out = _propagate(N, rows, vals, cols)
        keep = np.isfinite(out)
        rows, vals = cols[keep], out[keep]
    out[0] = 0.0
    return WeightSpectrum(block_length=N, log_counts=out)


def punctured_spectrum(spec: EnsembleSpec, budget: int = DEFAULT_BUDGET) -> WeightSpectrum:
    """WEF after random puncturing to N' symbols via the hypergeometric kernel."""
    if spec.n_kept is None:
        raise DomainError("ensemble has no puncturing")
    if spec.N > budget:
        raise BudgetExceeded(f"block length N={spec.N} exceeds budget {budget}")
    mother = weight_spectrum(spec.unpunctured(), budget=budget)
    N, n_keep = spec.N, spec.n_kept
    d = np.arange(N + 1)
    dp = np.arange(n_keep + 1)
    out = np.full(dp.shape, -np.inf)
    step = max(1, _CHUNK_CELLS // dp.size)
    log_norm = log_binomial_array(N, n_keep)
    for start in range(0, d.size, step):
        dc = d[start : start + step, None]
        kernel = log_binomial_array(dc, dp[None, :]) + log_binomial_array(N - dc, n_keep - dp[None, :]) - log_norm
        block = mother.log_counts[start : start + step, None] + kernel
        out = np.logaddexp(out, logsumexp(block, axis=0))
    return WeightSpectrum(block_length=n_keep, log_counts=out)


def ensemble_spectrum(spec: EnsembleSpec, budget: int = DEFAULT_BUDGET) -> WeightSpectrum:
    """Spectrum of the code actually transmitted (punctured if configured)."""
    if spec.n_kept is None:
        return weight_spectrum(spec, budget=budget)
    return punctured_spectrum(spec, budget=budget)


def exact_weight_spectrum(spec: EnsembleSpec) -> dict[int, Fraction]:
    """Exact E(A_d) (or E(A'_{d'})) from the closed form; tiny N only."""
    wef: dict[int, Fraction] = {}
    for (w, dvec), value in exact_iowe_table(spec).items():
        if w >= 1:
            wef[dvec[-1]] = wef.get(dvec[-1], Fraction(0)) + value
    return wef


def finite_length_dmin_bound(
    spec: EnsembleSpec, fraction: float = 0.5, budget: int = DEFAULT_BUDGET
) -> int:
    """Largest delta with E(A_{d <= delta}) < ``fraction``.

    By the first-moment (Markov) argument at least ``1 - fraction`` of the
    ensemble then has minimum distance larger than delta.
    """
    if not 0 < fraction < 1:
        raise DomainError(f"fraction must be in (0, 1), got {fraction}")
    cum = ensemble_spectrum(spec, budget=budget).cumulative_logs()
    reached = np.nonzero(cum[1:] >= math.log(fraction))[0]
    if reached.size == 0:
        return spec.block_length
    return int(reached[0])


def theorem1_delta(N: int, q: int, eps: float) -> int:
    """floor(N^((q-2)/q - eps)), the sublinear distance scale for RA codes."""
    return math.floor(N ** ((q - 2) / q - eps))

