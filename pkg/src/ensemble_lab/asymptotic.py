"""Asymptotic spectral-shape analysis of RMA ensembles.

Weights are normalised by the block length: ``alpha = w/K`` for the input,
``betas[l] = d_{l+1}/N`` for the inner accumulators and ``rho = d_M/N`` for
the output.  The ensemble-average IOWE behaves like ``exp(N f(gamma))`` and
the minimum-distance growth-rate bound is the smallest ``rho`` at which the
maximum of ``f`` over the remaining weights turns nonnegative.

The stationarity conditions make the maximisation one-dimensional: for a
given ``alpha`` every further weight follows from a closed-form recursion
(:func:`beta_chain`).  For a target ``rho`` the stationary points are the
roots in ``alpha`` of ``chain_rho(alpha) - rho``; the largest exponent among
them is the interior maximum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.optimize import bisect, brentq, minimize_scalar

from .combinatorics import DomainError, binary_entropy_array, binary_entropy_nats as H

LN2 = math.log(2.0)
REGION_TOL = 1e-12
ALPHA_MIN = 1e-9
DEFAULT_TOL = 1e-6
_GRID_POINTS = 1500


@dataclass(frozen=True)
class NormalizedWeights:
    """gamma = [alpha, beta_1 .. beta_{M-1}, rho], plus rho' and eta when punctured."""

    alpha: float
    betas: tuple[float, ...]
    rho: float
    rho_prime: float | None = None
    eta: float | None = None

    @classmethod
    def from_vector(cls, gamma: Sequence[float], **kw) -> NormalizedWeights:
        gamma = [float(g) for g in gamma]
        if len(gamma) < 2:
            raise DomainError("gamma needs at least alpha and rho")
        return cls(gamma[0], tuple(gamma[1:-1]), gamma[-1], **kw)

    @property
    def M(self) -> int:
        return len(self.betas) + 1

    def vector(self) -> tuple[float, ...]:
        return (self.alpha, *self.betas, self.rho)

    def in_region(self, tol: float = REGION_TOL) -> bool:
        g = self.vector()
        if any(x < -tol or x > 1 + tol for x in g):
            return False
        for prev, cur in zip(g[:-1], g[1:]):
            if cur - prev / 2 < -tol or (1 - prev) - (cur - prev / 2) < -tol:
                return False
        if self.rho_prime is not None:
            eta = 1.0 if self.eta is None else self.eta
            kept = eta * self.rho_prime
            if kept < -tol or kept > self.rho + tol or eta - kept > 1 - self.rho + tol:
                return False
        return True

    def to_dict(self) -> dict:
        out = {"alpha": self.alpha, "betas": list(self.betas), "rho": self.rho}
        if self.rho_prime is not None:
            out["rho_prime"] = self.rho_prime
        return out


def _gamma(gamma) -> tuple[float, ...]:
    if isinstance(gamma, NormalizedWeights):
        return gamma.vector()
    return tuple(float(g) for g in gamma)


def _stage_term(prev: float, cur: float) -> float:
    """(1 - prev) H((cur - prev/2) / (1 - prev)) for one accumulator stage."""
    num, den = cur - prev / 2, 1.0 - prev
    if num < -REGION_TOL or num > den + REGION_TOL:
        raise DomainError(f"weights ({prev}, {cur}) violate the accumulator ordering")
    if den <= 0.0:
        return 0.0
    return den * H(min(max(num / den, 0.0), 1.0))


def exponent_raa(alpha: float, beta: float, rho: float, q: int) -> float:
    """Spectral-shape exponent f(alpha, beta, rho) of the RAA ensemble, in nats."""
    return (
        H(alpha) / q
        - H(beta)
        - H(rho)
        + _stage_term(alpha, beta)
        + alpha * LN2
        + _stage_term(beta, rho)
        + beta * LN2
    )


def exponent_rma(gamma, q: int) -> float:
    """Spectral-shape exponent f(gamma) for M = len(gamma) - 1 accumulators.

    The -H terms run over every accumulator output including rho; this is
    what makes M = 2 coincide with :func:`exponent_raa`.
    """
    g = _gamma(gamma)
    if any(x < -REGION_TOL or x > 1 + REGION_TOL for x in g):
        raise DomainError(f"normalized weights {g} outside [0, 1]")
    value = H(min(max(g[0], 0.0), 1.0)) / q
    for prev, cur in zip(g[:-1], g[1:]):
        value += _stage_term(prev, cur) - H(min(max(cur, 0.0), 1.0)) + prev * LN2
    return value


def puncture_exponent(rho: float, rho_prime: float, eta: float) -> float:
    """Exponent of the hypergeometric puncturing kernel.

    ``rho`` is the weight before puncturing (per N), ``rho_prime`` the weight
    after puncturing per N' and ``eta = N'/N``.
    """
    if not (0 < eta <= 1 + REGION_TOL and 0 <= rho <= 1):
        raise DomainError(f"invalid puncturing parameters rho={rho}, eta={eta}")
    kept_ones, kept_zeros = eta * rho_prime, eta * (1 - rho_prime)
    value = -H(min(eta, 1.0))
    for mass, kept in ((rho, kept_ones), (1 - rho, kept_zeros)):
        if kept < -REGION_TOL or kept > mass + REGION_TOL:
            raise DomainError(f"puncturing infeasible: rho={rho}, rho'={rho_prime}, eta={eta}")
        if mass > 0:
            value += mass * H(min(max(kept / mass, 0.0), 1.0))
    return value


def appendix_F_check(rho: float, beta: float) -> float:
    """F_rho(beta) = beta ln2 + (1-beta) H((rho - beta/2)/(1 - beta)) - H(rho).

    This is the exponent when the first two weights are linear and the input
    weight is sublinear; it is negative for rho < 1/2 and identically zero on
    the rho = 1/2 ridge.
    """
    if not (0 < beta <= 2 * rho + REGION_TOL and rho <= 0.5):
        raise DomainError(f"need 0 < beta <= 2 rho and rho <= 1/2, got rho={rho}, beta={beta}")
    return beta * LN2 + _stage_term(beta, rho) - H(rho)


# -- stationary-point chain ------------------------------------------------


def _first_beta(alpha, q):
    with np.errstate(invalid="ignore", divide="ignore"):
        s = 1.0 - (alpha / (1.0 - alpha)) ** (2.0 / q)
    return s


def _next_beta(prev, cur):
    with np.errstate(invalid="ignore", divide="ignore"):
        t = (1.0 - cur) / cur * (cur - prev / 2.0) / (1.0 - cur - prev / 2.0)
    return 1.0 - t * t


def _sqrt_clamped(s):
    s = np.where((s < 0) & (s > -1e-12), 0.0, s)
    with np.errstate(invalid="ignore"):
        return np.sqrt(s)


def beta_chain_array(alpha, q: int, M: int) -> np.ndarray:
    """Vectorised chain; row ``i`` is [alpha_i, beta_1, ..., rho] or nan."""
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    out = np.full((alpha.size, M + 1), np.nan)
    out[:, 0] = alpha
    out[:, 1] = 0.5 - (1.0 - alpha) / 2.0 * _sqrt_clamped(_first_beta(alpha, q))
    for ell in range(1, M):
        prev, cur = out[:, ell - 1], out[:, ell]
        out[:, ell + 1] = 0.5 - (1.0 - cur) / 2.0 * _sqrt_clamped(_next_beta(prev, cur))
    return out


def beta_chain(alpha: float, q: int, M: int) -> list[float] | None:
    """Weights [beta_1, ..., beta_{M-1}, rho] of the stationary point at ``alpha``.

    Returns ``None`` when a square-root argument goes negative, i.e. there is
    no stationary point for this alpha.
    """
    if not 0 < alpha <= 0.5:
        raise DomainError(f"alpha must lie in (0, 1/2], got {alpha}")
    row = beta_chain_array(alpha, q, M)[0]
    if not np.all(np.isfinite(row)):
        return None
    return [float(x) for x in row[1:]]


def punctured_weight(beta_last: float, rho, eta: float):
    """rho' (per N') solving dF/drho = 0 for given rho and preceding weight."""
    with np.errstate(invalid="ignore", divide="ignore"):
        c = (1 - rho) ** 2 * (rho - beta_last / 2) / (rho**2 * (1 - rho - beta_last / 2))
        kept = (rho * (c + 1) + eta - 1) / (1 + c)
    return kept / eta


def exponent_gradient(gamma, q: int) -> np.ndarray:
    """Partial derivatives of f(gamma) w.r.t. alpha, beta_1..beta_{M-1}, rho."""
    g = _gamma(gamma)
    M = len(g) - 1
    x = [None] + [(g[l] - g[l - 1] / 2) / (1 - g[l - 1]) for l in range(1, M + 1)]
    grad = np.empty(M + 1)
    grad[0] = math.log((1 - g[0]) / g[0]) / q
    for l in range(1, M + 1):
        grad[l] = math.log(g[l] / (1 - g[l])) + math.log((1 - x[l]) / x[l])
        # stage l feeds the next one through its input weight
        grad[l - 1] += 0.5 * math.log(x[l] * (1 - x[l])) + LN2
    return grad


def stationarity_residual(gamma, q: int) -> np.ndarray:
    """Partials of f w.r.t. alpha and beta_1..beta_{M-1} (rho held fixed)."""
    return exponent_gradient(gamma, q)[:-1]


def puncture_rho_derivative(gamma, q: int, rho_prime: float, eta: float) -> float:
    """dF/drho for F = f + puncture exponent."""
    g = _gamma(gamma)
    rho = g[-1]
    kept = eta * rho_prime
    return exponent_gradient(g, q)[-1] + math.log(rho / (rho - kept)) + math.log(
        (1 - rho - eta + kept) / (1 - rho)
    )


def concavity_check(alpha0: float, beta: float, q: int) -> float:
    """Second derivative of f in alpha along a line of constant beta.

    Equals -1/(q a (1-a)) + (1-2x)/(x(1-x)) (2 beta - 1) / (4 (1-a)^2) with
    x = (beta - a/2)/(1 - a); both terms are <= 0 whenever x lies in (0, 1).
    """
    a = alpha0
    x = (beta - a / 2) / (1 - a)
    if not (0 < a < 1 and 0 < x < 1):
        raise DomainError(f"(alpha, beta)=({alpha0}, {beta}) not interior")
    return -1.0 / (q * a * (1 - a)) + (1 - 2 * x) / (x * (1 - x)) * (2 * beta - 1) / (4 * (1 - a) ** 2)


# -- vectorised exponents for grid certificates ----------------------------


def _stage_term_array(prev, cur):
    num, den = cur - prev / 2, 1.0 - prev
    bad = (num < -REGION_TOL) | (num > den + REGION_TOL)
    with np.errstate(invalid="ignore", divide="ignore"):
        x = np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)
    term = den * binary_entropy_array(np.clip(x, 0.0, 1.0))
    return np.where(bad, np.nan, term)


def exponent_rma_array(gammas: np.ndarray, q: int) -> np.ndarray:
    """f for every row of ``gammas`` (shape (..., M+1)); nan outside the region."""
    g = np.asarray(gammas, dtype=float)
    value = binary_entropy_array(g[..., 0]) / q
    for l in range(1, g.shape[-1]):
        prev, cur = g[..., l - 1], g[..., l]
        value = value + _stage_term_array(prev, cur) - binary_entropy_array(cur) + prev * LN2
    return value


def puncture_exponent_array(rho, rho_prime: float, eta: float) -> np.ndarray:
    rho = np.asarray(rho, dtype=float)
    kept1, kept0 = eta * rho_prime, eta * (1 - rho_prime)
    bad = (kept1 > rho + REGION_TOL) | (kept0 > 1 - rho + REGION_TOL)
    with np.errstate(invalid="ignore", divide="ignore"):
        a = np.clip(kept1 / rho, 0.0, 1.0)
        b = np.clip(kept0 / (1 - rho), 0.0, 1.0)
    val = rho * binary_entropy_array(a) + (1 - rho) * binary_entropy_array(b) - H(min(eta, 1.0))
    return np.where(bad, np.nan, val)


# -- one-dimensional maximisation -------------------------------------------


@dataclass(frozen=True)
class _ChainProfile:
    """Chain outputs on a log-spaced alpha grid for fixed (q, M, eta)."""

    q: int
    M: int
    eta: float | None
    alphas: np.ndarray
    target: np.ndarray  # rho(alpha), or rho'(alpha) when punctured
    alpha_at_min: float
    minimum: float

    def target_at(self, alpha: float) -> float:
        row = beta_chain_array(alpha, self.q, self.M)[0]
        if self.eta is None:
            return float(row[-1])
        return float(punctured_weight(row[-2], row[-1], self.eta))


def _target_array(alphas, q, M, eta):
    chain = beta_chain_array(alphas, q, M)
    if eta is None:
        return chain[:, -1]
    # left unmasked: rho' may dip below zero between feasible roots
    return punctured_weight(chain[:, -2], chain[:, -1], eta)


@lru_cache(maxsize=64)
def _chain_profile(q: int, M: int, eta: float | None, points: int = _GRID_POINTS) -> _ChainProfile:
    alphas = np.geomspace(ALPHA_MIN, 0.5, points)
    target = _target_array(alphas, q, M, eta)
    if not np.any(np.isfinite(target)):
        return _ChainProfile(q, M, eta, alphas, target, math.nan, math.inf)
    i = int(np.nanargmin(target))
    lo, hi = math.log(alphas[max(i - 1, 0)]), math.log(alphas[min(i + 1, points - 1)])

    def obj(la):
        v = _target_array(np.array([math.exp(la)]), q, M, eta)[0]
        # finite sentinel keeps Brent's parabolic step well defined
        return v if np.isfinite(v) else 1e3

    res = minimize_scalar(obj, bounds=(lo, hi), method="bounded", options={"xatol": 1e-13})
    a_min, t_min = math.exp(res.x), float(res.fun)
    if not t_min <= target[i]:
        a_min, t_min = float(alphas[i]), float(target[i])
    # make the minimiser a grid node so both roots near it are bracketed
    j = np.searchsorted(alphas, a_min)
    alphas = np.insert(alphas, j, a_min)
    target = np.insert(target, j, t_min)
    return _ChainProfile(q, M, eta, alphas, target, a_min, t_min)


def _weights_at(alpha: float, q: int, M: int, eta: float | None) -> NormalizedWeights:
    row = beta_chain_array(alpha, q, M)[0]
    if eta is None:
        return NormalizedWeights(float(row[0]), tuple(float(b) for b in row[1:-1]), float(row[-1]))
    rp = float(punctured_weight(row[-2], row[-1], eta))
    return NormalizedWeights(
        float(row[0]), tuple(float(b) for b in row[1:-1]), float(row[-1]), rho_prime=rp, eta=eta
    )


def _total_exponent(nw: NormalizedWeights, q: int) -> float:
    value = exponent_rma(nw, q)
    if nw.rho_prime is not None:
        value += puncture_exponent(nw.rho, nw.rho_prime, nw.eta)
    return value


@dataclass(frozen=True)
class MaxExponent:
    """Maximum of the exponent over the region for one target weight.

    ``stationary`` is False when no interior stationary point exists; then
    ``value`` is the largest sampled value from the grid certificate (or
    ``-inf`` if certification was skipped) and ``certified_negative`` says
    whether every sample was negative.
    """

    value: float
    arg_max: NormalizedWeights | None
    stationary: bool
    stationary_points: int
    certified_negative: bool | None = None

    @property
    def positive(self) -> bool:
        return self.stationary and self.value > 0


def _check_target(rho: float) -> None:
    if not 0 < rho < 0.5:
        raise DomainError(f"target weight must lie in (0, 1/2), got {rho}")


def max_exponent_at_rho(
    rho: float, q: int, M: int, eta: float | None = None, certify: bool = True
) -> MaxExponent:
    """Interior maximum of f (or F = f + puncture exponent) at fixed output weight.

    Unpunctured, ``rho`` is d/N.  Punctured (``eta`` given), ``rho`` is the
    weight after puncturing d'/N' and the pre-puncturing weight is a free
    variable eliminated through dF/drho = 0.
    """
    _check_target(rho)
    prof = _chain_profile(q, M, eta)
    resid = prof.target - rho
    best: NormalizedWeights | None = None
    best_val = -math.inf
    roots = 0
    for i in range(len(resid) - 1):
        r0, r1 = resid[i], resid[i + 1]
        if not (np.isfinite(r0) and np.isfinite(r1)):
            continue
        if r0 == 0.0:
            a = float(prof.alphas[i])
        elif r0 * r1 < 0:
            a = brentq(
                lambda x: prof.target_at(x) - rho,
                prof.alphas[i],
                prof.alphas[i + 1],
                xtol=1e-15,
                rtol=4 * np.finfo(float).eps,
            )
        else:
            continue
        nw = _weights_at(a, q, M, eta)
        if eta is not None:
            nw = NormalizedWeights(nw.alpha, nw.betas, nw.rho, rho_prime=rho, eta=eta)
        else:
            nw = NormalizedWeights(nw.alpha, nw.betas, rho)
        try:
            val = _total_exponent(nw, q)
        except DomainError:
            continue
        roots += 1
        if val > best_val:
            best, best_val = nw, val
    if roots:
        return MaxExponent(best_val, best, True, roots)
    if not certify:
        return MaxExponent(-math.inf, None, False, 0)
    sup = region_grid_max(rho, q, M, eta)
    if M == 2 and eta is None:
        sup = max(sup, max(v for v in boundary_scan(rho, q).maxima.values() if v is not None))
    return MaxExponent(sup, None, False, 0, certified_negative=bool(sup < 0))


def max_exponent_profile(rho: float, q: int, M: int, eta: float | None = None) -> MaxExponent:
    """Alternative route: maximise the exponent directly along the chain.

    With the target weight held fixed the chain gives every weight except
    the last free one, leaving a one-dimensional function of alpha whose
    local maxima are the stationary points.  Each grid local maximum is
    refined with a bounded Brent search.
    """
    _check_target(rho)
    alphas = np.geomspace(ALPHA_MIN, 0.5, _GRID_POINTS)

    def h(log_alpha: float) -> float:
        row = beta_chain_array(math.exp(log_alpha), q, M)[0]
        if eta is None:
            row[-1] = rho
            val = exponent_rma_array(row, q)
        else:
            val = exponent_rma_array(row, q) + puncture_exponent_array(row[-1], rho, eta)
        val = float(val)
        return val if np.isfinite(val) else -math.inf

    logs = np.log(alphas)
    vals = np.array([h(la) for la in logs])
    best_val, best_alpha, found = -math.inf, None, 0
    for i in range(1, len(vals) - 1):
        if not np.all(np.isfinite(vals[i - 1 : i + 2])):
            continue
        if vals[i] >= vals[i - 1] and vals[i] >= vals[i + 1]:
            res = minimize_scalar(
                lambda la: -h(la), bounds=(logs[i - 1], logs[i + 1]), method="bounded",
                options={"xatol": 1e-12},
            )
            found += 1
            if -res.fun > best_val:
                best_val, best_alpha = -res.fun, math.exp(res.x)
    if best_alpha is None:
        return MaxExponent(-math.inf, None, False, 0)
    nw = _weights_at(best_alpha, q, M, None)
    if eta is None:
        nw = NormalizedWeights(nw.alpha, nw.betas, rho)
    else:
        nw = NormalizedWeights(nw.alpha, nw.betas, nw.rho, rho_prime=rho, eta=eta)
    return MaxExponent(best_val, nw, True, found)


def region_grid_max(
    rho: float, q: int, M: int, eta: float | None = None, total_points: int = 40_000
) -> float:
    """Largest exponent over a uniform grid of the region (origin excluded)."""
    free = M if eta is None else M + 1
    per_axis = max(8, int(round(total_points ** (1.0 / free))))
    axes = [np.linspace(0, 1, per_axis + 1)[1:]]  # alpha
    axes += [np.linspace(0, 1, per_axis + 1)[1:-1]] * (M - 2)  # beta_1 .. beta_{M-2}
    if eta is None:
        axes.append(np.linspace(0, 2 * rho, per_axis + 1)[1:])  # beta_{M-1}
    else:
        axes.append(np.linspace(0, 1, per_axis + 1)[1:-1])
        lo, hi = eta * rho, 1 - eta * (1 - rho)
        axes.append(np.linspace(lo, hi, per_axis + 2)[1:-1])  # rho before puncturing
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, free)
    if eta is None:
        gammas = np.concatenate([mesh, np.full((mesh.shape[0], 1), rho)], axis=1)
        vals = exponent_rma_array(gammas, q)
    else:
        vals = exponent_rma_array(mesh, q) + puncture_exponent_array(mesh[:, -1], rho, eta)
    return float(np.nanmax(vals))


# -- boundaries of the RAA region ------------------------------------------


@dataclass(frozen=True)
class BoundaryReport:
    """Per-boundary maxima of f(alpha, beta, rho) for the RAA region.

    Keys ``a``-``d``; boundary ``d`` only exists for rho > 1/4 and is None
    otherwise.
    """

    rho: float
    q: int
    maxima: dict[str, float | None]
    arg_max: dict[str, tuple[float, float] | None] = field(default_factory=dict)


def _raa_array(alpha, beta, rho, q):
    alpha, beta = np.broadcast_arrays(np.asarray(alpha, float), np.asarray(beta, float))
    g = np.stack([alpha, beta, np.full(alpha.shape, rho)], axis=-1)
    return exponent_rma_array(g, q)


def boundary_scan(rho: float, q: int, points: int = 10_000) -> BoundaryReport:
    """Sample the four boundaries of the RAA region at fixed ``rho``.

    (a) alpha = 0, 0 < beta <= 2 rho; (b) beta = alpha/2, 0 < alpha <=
    min(1, 4 rho); (c) beta = 2 rho, 0 < alpha <= min(2 - 4 rho, 4 rho);
    (d) beta = 1 - alpha/2, 2(1 - 2 rho) <= alpha <= 1, only for rho > 1/4.
    The origin itself (where f = 0) is excluded.
    """
    if not 0 < rho <= 0.5:
        raise DomainError(f"rho must lie in (0, 1/2], got {rho}")
    lines: dict[str, tuple[np.ndarray, np.ndarray] | None] = {}
    beta = np.linspace(0, 2 * rho, points + 1)[1:]
    lines["a"] = (np.zeros_like(beta), beta)
    alpha = np.linspace(0, min(1.0, 4 * rho), points + 1)[1:]
    lines["b"] = (alpha, alpha / 2)
    alpha = np.linspace(0, min(2 - 4 * rho, 4 * rho), points + 1)[1:]
    lines["c"] = (alpha, np.full_like(alpha, 2 * rho))
    if rho > 0.25:
        alpha = np.linspace(2 * (1 - 2 * rho), 1.0, points)
        lines["d"] = (alpha, 1 - alpha / 2)
    else:
        lines["d"] = None
    maxima, args = {}, {}
    for key, line in lines.items():
        if line is None:
            maxima[key], args[key] = None, None
            continue
        vals = _raa_array(line[0], line[1], rho, q)
        i = int(np.nanargmax(vals))
        maxima[key] = float(vals[i])
        args[key] = (float(line[0][i]), float(line[1][i]))
    return BoundaryReport(rho, q, maxima, args)


# -- growth rate -----------------------------------------------------------


def gvb_growth_rate(rate: float) -> float:
    """Relative distance rho in (0, 1/2) with rate = 1 - H_2(rho)."""
    if not 0 < rate < 1:
        raise DomainError(f"rate must lie in (0, 1), got {rate}")
    return float(bisect(lambda r: 1 - H(r) / LN2 - rate, 1e-15, 0.5, xtol=1e-13))


def is_proved(q: int, M: int, punctured: bool) -> bool:
    """Whether a linear-distance lower bound is established for this ensemble."""
    if M >= 3:
        return True
    if M == 2:
        return punctured or q >= 3
    return False


@dataclass(frozen=True)
class GrowthRateResult:
    q: int
    M: int
    rho_min_hat: float
    rho0: float
    arg_max: NormalizedWeights | None
    bracket: tuple[float, float]
    evaluations: int
    tolerance: float
    proved: bool
    eta: float | None = None

    @property
    def rate(self) -> float:
        return 1.0 / self.q

    @property
    def rate_punctured(self) -> float | None:
        return None if self.eta is None else self.rate / self.eta

    @property
    def gvb(self) -> float:
        return gvb_growth_rate(self.rate if self.eta is None else self.rate_punctured)

    def to_dict(self) -> dict:
        out = {
            "q": self.q,
            "M": self.M,
            "rate": self.rate,
            "rho_min_hat": self.rho_min_hat,
            "rho0": self.rho0,
            "gvb": self.gvb,
            "arg_max": None if self.arg_max is None else self.arg_max.to_dict(),
            "tolerance": self.tolerance,
            "evaluations": self.evaluations,
            "bracket": list(self.bracket),
            "proved": self.proved,
        }
        if self.eta is not None:
            out["rate_punctured"] = self.rate_punctured
            out["eta"] = self.eta
        return out


def eta_for_rates(q: int, rate_punctured: float) -> float:
    """N'/N for a rate-1/q mother code punctured to ``rate_punctured``."""
    if not 1.0 / q <= rate_punctured < 1:
        raise DomainError(f"punctured rate must lie in [1/q, 1), got {rate_punctured}")
    return (1.0 / q) / rate_punctured


def growth_rate(
    q: int, M: int, rate_punctured: float | None = None, tol: float = DEFAULT_TOL
) -> GrowthRateResult:
    """Lower bound on d_min / N (or d'_min / N' when punctured).

    Bisects on the sign of the interior maximum between the threshold rho_0,
    below which no stationary point exists, and the first grid value where
    the maximum is positive.  Ensembles without a proof of linear growth
    (RA, and RAA with q = 2) are still evaluated but flagged ``proved=False``.
    """
    if q < 2 or M < 1:
        raise DomainError(f"need q >= 2 and M >= 1, got q={q}, M={M}")
    eta = None if rate_punctured is None else eta_for_rates(q, rate_punctured)
    prof = _chain_profile(q, M, eta)
    rho0 = max(prof.minimum, 0.0)
    evaluations = 0

    def positive(r: float) -> bool:
        nonlocal evaluations
        evaluations += 1
        return max_exponent_at_rho(r, q, M, eta, certify=False).positive

    lo = min(max(rho0, 1e-9), 0.5 - 1e-9)
    hi = None
    for r in np.arange(lo + 0.01, 0.5, 0.01):
        if positive(float(r)):
            hi = float(r)
            break
        lo = float(r)
    if hi is None:
        hi = 0.5 - 1e-9
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if positive(mid):
            hi = mid
        else:
            lo = mid
    rho_hat = 0.5 * (lo + hi)
    at = max_exponent_at_rho(rho_hat, q, M, eta, certify=False)
    return GrowthRateResult(
        q=q,
        M=M,
        rho_min_hat=rho_hat,
        rho0=rho0,
        arg_max=at.arg_max,
        bracket=(lo, hi),
        evaluations=evaluations,
        tolerance=tol,
        proved=is_proved(q, M, eta is not None),
        eta=eta,
    )
