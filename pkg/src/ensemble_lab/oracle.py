"""Exhaustive ground truth for tiny block lengths.

Nothing here uses the closed-form enumerators.  Codewords are built bit by
bit (repeat, permute, accumulate, puncture) and averaged over every
interleaver and puncturing pattern in exact rational arithmetic.

Words are stored as integer bit masks, bit ``i`` holding position ``i``.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from fractions import Fraction

from .enumerators import BudgetExceeded, EnsembleSpec

MAX_ACCUMULATOR_N = 14
MAX_INTERLEAVER_N = {1: 7, 2: 6}


def accumulate(mask: int, n: int) -> int:
    """Run an unterminated 1/(1+D) accumulator: v_i = v_{i-1} xor u_i, v_{-1} = 0."""
    out, state = 0, 0
    for i in range(n):
        state ^= (mask >> i) & 1
        out |= state << i
    return out


def permute(mask: int, perm: tuple[int, ...]) -> int:
    """Apply an interleaver: output position i takes input position perm[i]."""
    out = 0
    for i, src in enumerate(perm):
        out |= ((mask >> src) & 1) << i
    return out


def repeat(mask: int, k: int, q: int) -> int:
    out = 0
    for i in range(k):
        if (mask >> i) & 1:
            out |= ((1 << q) - 1) << (q * i)
    return out


def weight(mask: int) -> int:
    return bin(mask).count("1")


def brute_accumulator_iowe(n: int) -> Counter:
    """Tally of (input weight, output weight) over all 2^n accumulator inputs."""
    if n > MAX_ACCUMULATOR_N:
        raise BudgetExceeded(f"accumulator enumeration limited to N <= {MAX_ACCUMULATOR_N}")
    return Counter((weight(u), weight(accumulate(u, n))) for u in range(1 << n))


@dataclass(frozen=True)
class ExactSpectrum:
    """Exact ensemble-average IOWE.

    ``counts[(w, dvec)]`` is the expected number of (input, codeword) pairs
    with input weight ``w`` and per-stage output weights ``dvec``.  For
    punctured ensembles the weight after puncturing is appended to ``dvec``.
    """

    K: int
    counts: dict[tuple[int, tuple[int, ...]], Fraction]

    def total_for_input_weight(self, w: int) -> Fraction:
        return sum((v for (wi, _), v in self.counts.items() if wi == w), Fraction(0))

    def wef(self) -> dict[int, Fraction]:
        """E(A_d) for the transmitted weight, nonzero inputs only."""
        out: dict[int, Fraction] = defaultdict(Fraction)
        for (w, dvec), v in self.counts.items():
            if w >= 1:
                out[dvec[-1]] += v
        return dict(out)


class _Stage:
    """Memoised output distribution of interleaver + accumulator per input word."""

    def __init__(self, n: int, full_permutations: bool):
        self.n = n
        self.full = full_permutations
        self._cache: dict[int, dict[int, Fraction]] = {}
        self._perms = list(itertools.permutations(range(n))) if full_permutations else None

    def __call__(self, mask: int) -> dict[int, Fraction]:
        if mask not in self._cache:
            self._cache[mask] = self._compute(mask)
        return self._cache[mask]

    def _compute(self, mask: int) -> dict[int, Fraction]:
        tally: Counter = Counter()
        if self.full:
            for perm in self._perms:
                tally[accumulate(permute(mask, perm), self.n)] += 1
            total = len(self._perms)
        else:
            # a uniform permutation maps a weight-j word to a uniform weight-j word
            j = weight(mask)
            for pos in itertools.combinations(range(self.n), j):
                tally[accumulate(sum(1 << p for p in pos), self.n)] += 1
            total = math.comb(self.n, j)
        return {out: Fraction(c, total) for out, c in tally.items()}


def _codeword_distribution(spec: EnsembleSpec, full_permutations: bool):
    """For each input word: {(final mask, stage weights): probability}."""
    stage = _Stage(spec.N, full_permutations)
    for u in range(1 << spec.K):
        dist = {(repeat(u, spec.K, spec.q), ()): Fraction(1)}
        for _ in range(spec.M):
            nxt: dict = defaultdict(Fraction)
            for (mask, path), p in dist.items():
                for out, t in stage(mask).items():
                    nxt[(out, path + (weight(out),))] += p * t
            dist = nxt
        yield weight(u), dist


def _check_budget(spec: EnsembleSpec) -> None:
    limit = MAX_INTERLEAVER_N.get(spec.M)
    if limit is None or spec.N > limit:
        raise BudgetExceeded(f"exhaustive interleaver average not available for M={spec.M}, N={spec.N}")


def brute_uniform_interleaver(spec: EnsembleSpec, full_permutations: bool = True) -> ExactSpectrum:
    """Average the true IOWE over every interleaver tuple (N!)^M.

    With ``full_permutations=False`` each stage instead averages over all
    equal-weight images of its input, which yields the same ensemble.
    """
    _check_budget(spec)
    counts: dict = defaultdict(Fraction)
    for w, dist in _codeword_distribution(spec, full_permutations):
        for (_, path), p in dist.items():
            counts[(w, path)] += p
    return ExactSpectrum(spec.K, dict(counts))


def brute_punctured(spec: EnsembleSpec, full_permutations: bool = True) -> ExactSpectrum:
    """Additionally average over all C(N, N') sets of kept positions."""
    _check_budget(spec)
    if spec.n_kept is None:
        raise ValueError("ensemble has no puncturing")
    keep_sets = [sum(1 << p for p in c) for c in itertools.combinations(range(spec.N), spec.n_kept)]
    share = Fraction(1, len(keep_sets))
    counts: dict = defaultdict(Fraction)
    for w, dist in _codeword_distribution(spec, full_permutations):
        for (mask, path), p in dist.items():
            for keep in keep_sets:
                counts[(w, path + (weight(mask & keep),))] += p * share
    return ExactSpectrum(spec.K, dict(counts))
