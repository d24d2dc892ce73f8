"""Scalar special functions on integer orders.

Everything here works on plain Python floats. The incomplete gamma functions
are restricted to integer order, where the upper function reduces to a finite
series (or to the exponential integral for order zero).
"""

import math

from scipy.optimize import brentq
from scipy.special import log_ndtr

__all__ = [
    "FACTORIALS",
    "MAX_ORDER",
    "gaussian_q",
    "inverse_q",
    "exp1",
    "upper_inc_gamma_int",
    "lower_inc_gamma_int",
    "jmath",
    "jmath_shifted",
]

# Largest n with n! finite in double precision.
MAX_ORDER = 170
FACTORIALS = tuple(float(math.factorial(j)) for j in range(MAX_ORDER + 1))

_EULER_GAMMA = 0.57721566490153286061
_SQRT2 = math.sqrt(2.0)


def gaussian_q(x):
    """Gaussian tail probability Q(x) = P(Z > x) for standard normal Z.

    Uses the C library ``erfc`` (about 1 ulp), so the relative error is
    dominated by the rounding of ``x / sqrt(2)``: below 1e-14 for |x| <= 8.
    """
    return 0.5 * math.erfc(x / _SQRT2)


def inverse_q(p):
    """Inverse of :func:`gaussian_q` on (0, 1/2].

    Root-finds ``log Q(x) = log p`` on a bracket so the result is accurate in
    relative terms even for very small ``p``.
    """
    if not (0.0 < p <= 0.5):
        raise ValueError(f"inverse_q needs 0 < p <= 0.5, got {p!r}")
    if p == 0.5:
        return 0.0
    target = math.log(p)
    hi = 1.0
    while _log_q(hi) > target:
        hi *= 2.0
    return brentq(lambda x: _log_q(x) - target, 0.0, hi,
                  xtol=1e-300, rtol=1e-15, maxiter=500)


def _log_q(x):
    # log_ndtr stays finite far beyond where Q itself underflows
    return float(log_ndtr(-x))


def exp1(x):
    """Exponential integral E1(x) for x > 0.

    Power series below 1, modified Lentz continued fraction above.
    """
    if not x > 0.0:
        raise ValueError(f"exp1 diverges at x={x!r}")
    if x < 1.0:
        # E1(x) = -gamma - ln x - sum_{k>=1} (-x)^k / (k k!)
        total = 0.0
        term = 1.0
        k = 0
        while True:
            k += 1
            term *= -x / k
            inc = term / k
            total += inc
            if abs(inc) < 1e-17 * abs(total):
                break
        return -_EULER_GAMMA - math.log(x) - total
    if x > 740.0:
        return 0.0
    # E1(x) = e^{-x} / (x + 1 - 1/(x + 3 - 4/(x + 5 - ...)))
    tiny = 1e-300
    b = x + 1.0
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for j in range(1, 1000):
        a = -float(j * j)
        b += 2.0
        d = 1.0 / (a * d + b)
        c = b + a / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    else:
        raise ArithmeticError(f"exp1 continued fraction did not converge at x={x!r}")
    return h * math.exp(-x)


def _check_order(q):
    if q < 0 or q != int(q):
        raise ValueError(f"order must be a nonnegative integer, got {q!r}")
    if q > MAX_ORDER + 1:
        raise ValueError(f"order {q} exceeds the factorial table ({MAX_ORDER}!)")
    return int(q)


def _poisson_terms(x, start, stop):
    """Yield e^{-x} x^j / j! for j in [start, stop)."""
    if start >= stop:
        return
    if x == 0.0:
        if start == 0:
            yield 1.0
        return
    log_x = math.log(x)
    if x < 700.0 and start == 0:
        term = math.exp(-x)
        for j in range(stop):
            if j:
                term *= x / j
            yield term
    else:
        # log-space seed avoids both underflow of e^{-x} and overflow of x^j
        term = math.exp(start * log_x - math.lgamma(start + 1.0) - x)
        for j in range(start, stop):
            if j > start:
                term *= x / j
            yield term


def upper_inc_gamma_int(q, x):
    """Upper incomplete gamma Gamma(q, x) for integer q >= 0.

    For q >= 1 this is the finite sum (q-1)! e^{-x} sum_{j<q} x^j/j!, whose
    terms are all positive; they are added with ``math.fsum``. Order zero is
    the exponential integral.
    """
    q = _check_order(q)
    if x < 0.0:
        raise ValueError(f"x must be >= 0, got {x!r}")
    if q == 0:
        if x == 0.0:
            raise ValueError("Gamma(0, 0) diverges")
        return exp1(x)
    return FACTORIALS[q - 1] * math.fsum(_poisson_terms(x, 0, q))


def lower_inc_gamma_int(q, x):
    """Lower incomplete gamma gamma(q, x) = (q-1)! - Gamma(q, x), q >= 1.

    Below x = q + 1 the complement cancels badly, so the tail series
    (q-1)! e^{-x} sum_{j>=q} x^j/j! is summed directly instead.
    """
    q = _check_order(q)
    if q < 1:
        raise ValueError("lower incomplete gamma needs q >= 1")
    if x < 0.0:
        raise ValueError(f"x must be >= 0, got {x!r}")
    if x == 0.0:
        return 0.0
    if x >= q + 1.0:
        return max(FACTORIALS[q - 1] - upper_inc_gamma_int(q, x), 0.0)
    terms = []
    for term in _poisson_terms(x, q, q + 10_000):
        terms.append(term)
        if term < 1e-18 * terms[0]:
            break
    return FACTORIALS[q - 1] * math.fsum(terms)


def _gamma_over_fact_sum(n, x):
    # sum_{k=0}^{n-1} Gamma(k, x) / k!
    return math.fsum(upper_inc_gamma_int(k, x) / FACTORIALS[k] for k in range(n))


def jmath(q, x):
    """Log-weighted Laplace tail: integral_1^inf t^{q-1} ln(t) e^{-x t} dt.

    Closed form ((q-1)!/x^q) * sum_{k=0}^{q-1} Gamma(k, x)/k!.
    """
    q = _check_order(q)
    if q < 1:
        raise ValueError("jmath needs q >= 1")
    if not x > 0.0:
        raise ValueError(f"jmath needs x > 0, got {x!r}")
    scale = math.exp(math.lgamma(q) - q * math.log(x))
    return scale * _gamma_over_fact_sum(q, x)


def jmath_shifted(n, y, delta):
    """y^n * integral_1^inf t^{n-1} (ln t + ln delta) e^{-y t} dt.

    Equals (n-1)! sum_{k<n} Gamma(k, y)/k! + Gamma(n, y) ln(delta). The
    ``(n-1)!`` prefactor makes n = 0 meaningless, so that order is rejected.
    """
    n = _check_order(n)
    if n < 1:
        raise ValueError("jmath_shifted is undefined for n = 0")
    if not y > 0.0:
        raise ValueError(f"jmath_shifted needs y > 0, got {y!r}")
    if not (0.0 < delta <= 1.0):
        raise ValueError(f"delta must lie in (0, 1], got {delta!r}")
    head = FACTORIALS[n - 1] * _gamma_over_fact_sum(n, y)
    if delta == 1.0:
        return head
    return head + upper_inc_gamma_int(n, y) * math.log(delta)
