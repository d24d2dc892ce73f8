"""Ordered eigenvalue laws of complex central Wishart matrices.

The unordered eigenvalues of ``Omega ~ CW(n, I_m)`` have joint density

    C/m! * prod_j x_j^theta e^{-x_j} * det[x_j^{i-1}]^2,

with ``C = 1 / (prod (m-j)! prod (n-j)!)``. Expanding the squared Vandermonde
over permutation pairs and integrating out all but a subset of ``k``
eigenvalues gives the density of the smallest member of that subset as a sum
of ``x^N e^{-k x}`` terms. The i-th largest eigenvalue is an alternating
binomial combination of those subset-minimum densities, so every quantity
needed downstream (pdf, CDF, inverse moment, log-weighted inverse moment)
is a term-by-term transform of one merged list.
"""

from __future__ import annotations

import itertools
import logging
import math
import threading
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from . import _kernels
from .special import (
    FACTORIALS,
    MAX_ORDER,
    jmath_shifted,
    lower_inc_gamma_int,
    upper_inc_gamma_int,
)

__all__ = [
    "MAX_M",
    "ChannelDims",
    "ExpansionTerm",
    "TermList",
    "MarginalExpansion",
    "ConfigurationTooLarge",
    "NumericConsistencyError",
    "AnalyticFormUnavailable",
    "build_min_subset_density",
    "marginal_expansion",
    "ordered_eigen_pdf",
    "outage_cdf",
    "inverse_moment_tail",
    "log_tail_integral",
]

log = logging.getLogger(__name__)

MAX_M = 6
ROUNDOFF = 1e-9
CONDITION_WARN = 1e6


class ConfigurationTooLarge(ValueError):
    """Raised when the permutation expansion would be unreasonably large."""


class NumericConsistencyError(ArithmeticError):
    """A density or probability left its range by more than roundoff."""


class AnalyticFormUnavailable(ArithmeticError):
    """The closed form hits an order-zero term it cannot express."""


@dataclass(frozen=True)
class ChannelDims:
    """Antenna configuration. ``m``, ``n`` and ``theta`` are derived."""

    n_t: int
    n_r: int

    def __post_init__(self):
        for name in ("n_t", "n_r"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")

    @property
    def m(self) -> int:
        return min(self.n_t, self.n_r)

    @property
    def n(self) -> int:
        return max(self.n_t, self.n_r)

    @property
    def theta(self) -> int:
        return self.n - self.m

    def check_index(self, i: int) -> int:
        if int(i) != i or not 1 <= i <= self.m:
            raise ValueError(f"stream index must be in [1, {self.m}], got {i!r}")
        return int(i)


class ExpansionTerm(NamedTuple):
    """One monomial ``coeff * x**exponent * exp(-rate * x)``."""

    coeff: float
    exponent: int
    rate: int


@dataclass(frozen=True)
class TermList:
    """Merged expansion of the subset-minimum density f_min:k."""

    dims: ChannelDims
    k: int
    terms: tuple[ExpansionTerm, ...]
    exact: tuple[Fraction, ...]

    def __call__(self, x: float) -> float:
        return math.fsum(t.coeff * x ** t.exponent * math.exp(-t.rate * x)
                         for t in self.terms)

    def normalization(self) -> float:
        return math.fsum(t.coeff * FACTORIALS[t.exponent] / t.rate ** (t.exponent + 1)
                         for t in self.terms)

    def exact_normalization(self) -> Fraction:
        k = self.k
        return sum((c * math.factorial(t.exponent) / Fraction(k) ** (t.exponent + 1)
                    for c, t in zip(self.exact, self.terms)), Fraction(0))

    def condition_number(self) -> float:
        """Sum of absolute term masses; 1 means no cancellation at all."""
        return math.fsum(abs(t.coeff) * FACTORIALS[t.exponent] / t.rate ** (t.exponent + 1)
                         for t in self.terms)


_cache: dict[tuple[int, int, int], TermList] = {}
_cache_lock = threading.Lock()


def _perm_sign(perm) -> int:
    sign = 1
    seen = [False] * len(perm)
    for start in range(len(perm)):
        if seen[start]:
            continue
        j, length = start, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def _poly_mul(a: list[int], b: list[int]) -> list[int]:
    out = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                out[i + j] += ai * bj
    return out


def _truncated_exp_poly(a: int) -> list[int]:
    # a! * sum_{tau=0}^{a} x^tau / tau!, integer coefficients
    return [math.factorial(a) // math.factorial(tau) for tau in range(a + 1)]


def _build(dims: ChannelDims, k: int) -> TermList:
    m, n, theta = dims.m, dims.n, dims.theta
    perms = list(itertools.permutations(range(m)))
    signs = [_perm_sign(p) for p in perms]
    fact = [math.factorial(j) for j in range(theta + 2 * m)]

    # Group permutation pairs by what the tau-sum actually depends on: the
    # multiset of exponents in positions < k and the exponent at position k.
    # Positions > k only contribute the integer factor A_k.
    weights: dict[tuple, int] = defaultdict(int)
    for pa, sa in zip(perms, signs):
        for pm, sm in zip(perms, signs):
            a = [theta + pa[j] + pm[j] for j in range(m)]  # theta + alpha + mu - 2
            a_k = 1
            for j in range(k, m):
                a_k *= fact[a[j]]
            weights[(tuple(sorted(a[:k - 1])), a[k - 1])] += sa * sm * a_k

    poly_cache: dict[tuple, list[int]] = {}
    merged: dict[int, int] = defaultdict(int)
    for (head, last), w in weights.items():
        if w == 0:
            continue
        poly = poly_cache.get(head)
        if poly is None:
            poly = [1]
            for a in head:
                poly = _poly_mul(poly, _truncated_exp_poly(a))
            poly_cache[head] = poly
        for tau_sum, c in enumerate(poly):
            if c:
                merged[last + tau_sum] += w * c

    denom = math.factorial(m)
    for j in range(1, m + 1):
        denom *= math.factorial(m - j) * math.factorial(n - j)
    scale = Fraction(k, denom)

    exponents = sorted(e for e, c in merged.items() if c != 0)
    if exponents and exponents[-1] > MAX_ORDER:
        raise ConfigurationTooLarge(
            f"expansion reaches x^{exponents[-1]}, beyond the {MAX_ORDER}! factorial table")
    exact = tuple(scale * merged[e] for e in exponents)
    terms = tuple(ExpansionTerm(float(c), e, k) for c, e in zip(exact, exponents))
    return TermList(dims=dims, k=k, terms=terms, exact=exact)


def build_min_subset_density(dims: ChannelDims, k: int) -> TermList:
    """Density of the smallest of ``k`` eigenvalues picked from the ``m``.

    Results are cached per ``(n_t, n_r, k)``; the first build for a key holds
    a lock so concurrent callers never construct it twice.
    """
    if dims.m > MAX_M:
        raise ConfigurationTooLarge(
            f"m = {dims.m} exceeds the supported maximum of {MAX_M}")
    if int(k) != k or not 1 <= k <= dims.m:
        raise ValueError(f"subset size must be in [1, {dims.m}], got {k!r}")
    key = (dims.m, dims.n, int(k))
    cached = _cache.get(key)
    if cached is not None:
        return cached
    with _cache_lock:
        cached = _cache.get(key)
        if cached is None:
            cached = _build(ChannelDims(dims.m, dims.n), int(k))
            cond = cached.condition_number()
            if cond > CONDITION_WARN:
                log.warning("f_min:%d for m=%d, n=%d has condition number %.3g; "
                            "expect cancellation", k, dims.m, dims.n, cond)
            _cache[key] = cached
    return cached


@dataclass(frozen=True)
class MarginalExpansion:
    """Flat term list for the i-th largest eigenvalue density.

    ``coeffs[j] * x**exponents[j] * exp(-rates[j] * x)`` summed over ``j``.
    """

    dims: ChannelDims
    i: int
    coeffs: np.ndarray
    exponents: np.ndarray
    rates: np.ndarray

    def __iter__(self):
        return zip(self.coeffs.tolist(), self.exponents.tolist(), self.rates.tolist())


_marginal_cache: dict[tuple[int, int, int], MarginalExpansion] = {}


def marginal_expansion(dims: ChannelDims, i: int) -> MarginalExpansion:
    i = dims.check_index(i)
    key = (dims.m, dims.n, i)
    cached = _marginal_cache.get(key)
    if cached is not None:
        return cached
    m = dims.m
    coeffs, exps, rates = [], [], []
    for k in range(i, m + 1):
        weight = (-1) ** (k - i) * math.comb(k - 1, i - 1) * math.comb(m, k)
        for term in build_min_subset_density(dims, k).terms:
            coeffs.append(weight * term.coeff)
            exps.append(term.exponent)
            rates.append(term.rate)
    expansion = MarginalExpansion(
        dims=dims,
        i=i,
        coeffs=np.array(coeffs, dtype=np.float64),
        exponents=np.array(exps, dtype=np.int64),
        rates=np.array(rates, dtype=np.float64),
    )
    for arr in (expansion.coeffs, expansion.exponents, expansion.rates):
        arr.setflags(write=False)
    with _cache_lock:
        _marginal_cache.setdefault(key, expansion)
    return _marginal_cache[key]


def _clamp(value: float, lo: float, hi: float, what: str) -> float:
    if value < lo:
        if value < lo - ROUNDOFF:
            raise NumericConsistencyError(f"{what} = {value!r} below {lo}")
        return lo
    if value > hi:
        if value > hi + ROUNDOFF:
            raise NumericConsistencyError(f"{what} = {value!r} above {hi}")
        return hi
    return value


def ordered_eigen_pdf(dims: ChannelDims, i: int, x):
    """Density of the i-th largest eigenvalue (1 = largest).

    ``x`` may be a scalar or an array; arrays go through the batch kernel.
    """
    exp = marginal_expansion(dims, i)
    if np.ndim(x) == 0:
        x = float(x)
        if x < 0.0:
            return 0.0
        value = math.fsum(c * x ** e * math.exp(-r * x) for c, e, r in exp)
        return _clamp(value, 0.0, math.inf, "pdf")
    x = np.asarray(x, dtype=np.float64)
    values = _kernels.eval_expansion(np.maximum(x, 0.0), exp.coeffs, exp.exponents, exp.rates)
    if values.size and values.min() < -ROUNDOFF:
        raise NumericConsistencyError(f"pdf = {values.min()!r} below 0")
    values = np.maximum(values, 0.0)
    values[x < 0.0] = 0.0
    return values


def outage_cdf(dims: ChannelDims, i: int, lambda_thr: float) -> float:
    """P(lambda_i < lambda_thr)."""
    if lambda_thr < 0.0:
        raise ValueError(f"threshold must be >= 0, got {lambda_thr!r}")
    exp = marginal_expansion(dims, i)
    if lambda_thr == 0.0:
        return 0.0
    value = math.fsum(c * lower_inc_gamma_int(e + 1, r * lambda_thr) / r ** (e + 1)
                      for c, e, r in exp)
    return _clamp(value, 0.0, 1.0, "outage probability")


def inverse_moment_tail(dims: ChannelDims, i: int, lambda_lo: float) -> float:
    """Integral of f_i(x) / x over [lambda_lo, inf)."""
    if not lambda_lo > 0.0:
        raise ValueError(f"lower limit must be > 0, got {lambda_lo!r}")
    exp = marginal_expansion(dims, i)
    value = math.fsum(c * upper_inc_gamma_int(e, r * lambda_lo) / r ** e
                      for c, e, r in exp)
    return _clamp(value, 0.0, math.inf, "inverse moment tail")


def log_tail_integral(dims: ChannelDims, i: int, lambda_lo: float, delta: float) -> float:
    """Integral of ln(x delta / lambda_lo) f_i(x) / x over [lambda_lo, inf).

    Raises :class:`AnalyticFormUnavailable` when the expansion contains an
    ``x^0`` term (square arrays), which the closed form cannot handle.
    """
    if not lambda_lo > 0.0:
        raise ValueError(f"lower limit must be > 0, got {lambda_lo!r}")
    if not 0.0 < delta <= 1.0:
        raise ValueError(f"delta must lie in (0, 1], got {delta!r}")
    exp = marginal_expansion(dims, i)
    if (exp.exponents == 0).any():
        raise AnalyticFormUnavailable(
            f"order-zero term in the expansion for m={dims.m}, n={dims.n}, i={i}")
    return math.fsum(c * jmath_shifted(e, r * lambda_lo, delta) / r ** e
                     for c, e, r in exp)
