"""Hot loops, each with a numba and a pure-numpy implementation.

The backend is picked once at import time. ``EIGENWAVE_NUMBA=0`` forces the
numpy path; otherwise numba is used when it can be imported. Both
implementations are always importable as ``<name>_numpy`` / ``<name>_numba``
so they can be compared directly (see ``benchmarks/bench_kernels.py``).

Stream accumulators return one row of per-chunk statistics:

    n, n_out, mean_p, m2_p, n_tx, mean_ber, m2_ber, mean_chernoff, m2_chernoff

where ``m2`` is the sum of squared deviations about the mean. ``n_tx`` counts
realizations with lambda > lambda_out; the two BER moments are over those
realizations only.
"""

import math
import os

import numpy as np
from scipy.special import erfc

__all__ = [
    "BACKEND",
    "N_STATS",
    "eval_expansion",
    "accumulate_stream",
    "eval_expansion_numpy",
    "accumulate_stream_numpy",
    "eval_expansion_numba",
    "accumulate_stream_numba",
]

N_STATS = 9
_SQRT2 = math.sqrt(2.0)


def _numba_requested():
    flag = os.environ.get("EIGENWAVE_NUMBA", "1").strip().lower()
    return flag not in ("0", "false", "no", "off")


def eval_expansion_numpy(x, coeffs, exponents, rates):
    x = np.asarray(x, dtype=np.float64)
    flat = x.reshape(-1, 1)
    vals = coeffs * flat ** exponents * np.exp(-rates * flat)
    return vals.sum(axis=1).reshape(x.shape)


def _moments(values):
    if values.size == 0:
        return 0.0, 0.0
    mean = values.mean()
    return float(mean), float(((values - mean) ** 2).sum())


def accumulate_stream_numpy(lam, lam_out, lam_mea, delta, snr_hat, snr_tilde,
                            xi, beta, dynamic):
    lam = np.asarray(lam, dtype=np.float64)
    tx = lam > lam_out
    lt = lam[tx]
    snr = np.full(lt.shape, snr_hat)
    if dynamic:
        snr[lt > lam_mea] = snr_tilde
    p_tx = snr / lt + (2.0 / (beta * lt)) * np.log(lt * delta / lam_out)
    p = np.zeros_like(lam)
    p[tx] = p_tx
    gain = beta * p_tx * lt
    ber = xi * 0.5 * erfc(np.sqrt(gain) / _SQRT2)
    chern = 0.5 * xi * np.exp(-0.5 * gain)
    out = np.empty(N_STATS)
    out[0] = lam.size
    out[1] = lam.size - lt.size
    out[2], out[3] = _moments(p)
    out[4] = lt.size
    out[5], out[6] = _moments(ber)
    out[7], out[8] = _moments(chern)
    return out


eval_expansion_numba = None
accumulate_stream_numba = None

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

if numba is not None:

    @numba.njit(cache=True, nogil=True)
    def _eval_expansion_jit(x, coeffs, exponents, rates):
        # rates are the integers 1..m and exponents are small, so each x
        # needs one table of powers and one of exponentials
        max_e = 0
        max_r = 0
        for t in range(coeffs.size):
            max_e = max(max_e, exponents[t])
            max_r = max(max_r, rates[t])
        pw = np.empty(max_e + 1)
        ex = np.empty(max_r + 1)
        out = np.empty(x.size)
        for j in range(x.size):
            xj = x[j]
            pw[0] = 1.0
            for e in range(1, max_e + 1):
                pw[e] = pw[e - 1] * xj
            base = math.exp(-xj)
            ex[0] = 1.0
            for r in range(1, max_r + 1):
                ex[r] = ex[r - 1] * base
            acc = 0.0
            for t in range(coeffs.size):
                acc += coeffs[t] * pw[exponents[t]] * ex[rates[t]]
            out[j] = acc
        return out

    def eval_expansion_numba(x, coeffs, exponents, rates):
        x = np.asarray(x, dtype=np.float64)
        flat = np.ascontiguousarray(x.reshape(-1))
        return _eval_expansion_jit(flat, coeffs, exponents.astype(np.int64),
                                   rates.astype(np.int64)).reshape(x.shape)

    @numba.njit(cache=True, nogil=True)
    def _accumulate_jit(lam, lam_out, lam_mea, delta, snr_hat, snr_tilde,
                        xi, beta, dynamic):
        # Welford updates; p is accumulated over all samples, BER over
        # transmitting ones only.
        n = 0
        mean_p = 0.0
        m2_p = 0.0
        n_tx = 0
        mean_b = 0.0
        m2_b = 0.0
        mean_c = 0.0
        m2_c = 0.0
        sqrt2 = math.sqrt(2.0)
        for j in range(lam.size):
            lj = lam[j]
            n += 1
            if lj > lam_out:
                snr = snr_hat
                if dynamic and lj > lam_mea:
                    snr = snr_tilde
                p = snr / lj + (2.0 / (beta * lj)) * math.log(lj * delta / lam_out)
                gain = beta * p * lj
                ber = xi * 0.5 * math.erfc(math.sqrt(gain) / sqrt2)
                chern = 0.5 * xi * math.exp(-0.5 * gain)
                n_tx += 1
                d = ber - mean_b
                mean_b += d / n_tx
                m2_b += d * (ber - mean_b)
                d = chern - mean_c
                mean_c += d / n_tx
                m2_c += d * (chern - mean_c)
            else:
                p = 0.0
            d = p - mean_p
            mean_p += d / n
            m2_p += d * (p - mean_p)
        out = np.empty(9)
        out[0] = n
        out[1] = n - n_tx
        out[2] = mean_p
        out[3] = m2_p
        out[4] = n_tx
        out[5] = mean_b
        out[6] = m2_b
        out[7] = mean_c
        out[8] = m2_c
        return out

    def accumulate_stream_numba(lam, lam_out, lam_mea, delta, snr_hat, snr_tilde,
                                xi, beta, dynamic):
        lam = np.ascontiguousarray(lam, dtype=np.float64)
        return _accumulate_jit(lam, float(lam_out), float(lam_mea), float(delta),
                               float(snr_hat), float(snr_tilde), float(xi),
                               float(beta), bool(dynamic))


if numba is not None and _numba_requested():
    BACKEND = "numba"
    eval_expansion = eval_expansion_numba
    accumulate_stream = accumulate_stream_numba
else:
    BACKEND = "numpy"
    eval_expansion = eval_expansion_numpy
    accumulate_stream = accumulate_stream_numpy
