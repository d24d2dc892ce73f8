"""Reference computations that share no code with the package.

Eigenvalue probabilities come from the Andreief identity for the Laguerre
unitary ensemble, evaluated with mpmath at 40 digits:

    E[prod_j g(x_j)] = det[ int t^(theta+a+b) e^-t g(t) dt ]_{a,b} / det[Gamma(theta+a+b+1)]

With g(t) = 1 + (z - 1) 1{t > x} the left side is the generating function of
the number of eigenvalues above x, so P(lambda_i < x) = P(at most i-1 above x)
is read off its polynomial coefficients.
"""

import mpmath as mp

mp.mp.dps = 40


def count_above_distribution(m, n, x):
    """[P(exactly j eigenvalues > x) for j = 0..m] for CW(n, I_m)."""
    theta = n - m
    x = mp.mpf(x)

    def gen(z):
        a = mp.matrix(m, m)
        b = mp.matrix(m, m)
        for r in range(m):
            for c in range(m):
                q = theta + r + c + 1
                a[r, c] = mp.gammainc(q, 0, x) + z * mp.gammainc(q, x, mp.inf)
                b[r, c] = mp.gamma(q)
        return mp.det(a) / mp.det(b)

    nodes = [mp.mpf(j) for j in range(m + 1)]
    vander = mp.matrix([[z ** p for p in range(m + 1)] for z in nodes])
    values = mp.matrix([gen(z) for z in nodes])
    return [c for c in mp.lu_solve(vander, values)]


def ordered_cdf(m, n, i, x):
    """P(lambda_i < x), lambda_1 the largest."""
    if x == 0:
        return mp.mpf(0)
    probs = count_above_distribution(m, n, x)
    return mp.fsum(probs[:i])


def smallest_cdf_khatri(m, n, x):
    theta = n - m
    a = mp.matrix(m, m)
    b = mp.matrix(m, m)
    for r in range(m):
        for c in range(m):
            q = theta + r + c + 1
            a[r, c] = mp.gammainc(q, mp.mpf(x), mp.inf)
            b[r, c] = mp.gamma(q)
    return 1 - mp.det(a) / mp.det(b)


def normal_tail(x):
    return mp.quad(lambda t: mp.exp(-t * t / 2) / mp.sqrt(2 * mp.pi), [x, mp.inf])


def log_laplace_tail(q, x, delta=1):
    """int_1^inf t^(q-1) (ln t + ln delta) e^(-x t) dt."""
    x = mp.mpf(x)
    ld = mp.log(delta)
    return mp.quad(lambda t: t ** (q - 1) * (mp.log(t) + ld) * mp.exp(-x * t),
                   [1, 1 + 1 / x, 1 + 10 / x, mp.inf])
