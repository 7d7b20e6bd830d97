"""Reference implementations written independently of the package.

They trade speed for transparency: explicit matrices, exhaustive search,
arbitrary-precision sums and a textbook scalar GA recursion.
"""
import itertools
from functools import reduce

import mpmath
import numpy as np
from scipy.optimize import brentq
from scipy.stats import norm


def bitrev_index(i, n):
    return int(format(i, f"0{n}b")[::-1], 2) if n else 0


def generator_matrix(N):
    """``B_N F^{(x)n}`` over GF(2) by explicit Kronecker products."""
    n = N.bit_length() - 1
    F = np.array([[1, 0], [1, 1]], dtype=np.int64)
    G = reduce(np.kron, [F] * n, np.ones((1, 1), dtype=np.int64))
    B = np.zeros((N, N), dtype=np.int64)
    for i in range(N):
        B[i, bitrev_index(i, n)] = 1
    return (B @ G) % 2


def encode(u):
    u = np.asarray(u, dtype=np.int64)
    return (u @ generator_matrix(u.shape[-1])) % 2


def ml_decode(info_positions, N, y, sigma):
    """Exhaustive ML decoding of BPSK (0 -> +1) over AWGN; returns the info word."""
    K = len(info_positions)
    G = generator_matrix(N)[list(info_positions)]
    words = np.array(list(itertools.product((0, 1), repeat=K)), dtype=np.int64)
    codewords = (words @ G) % 2
    metric = (1 - 2 * codewords) @ np.asarray(y).T  # correlation, shape (2^K, batch)
    return words[np.argmax(metric, axis=0)]


def pam_llr(points, labels, y, sigma, level, known):
    """LLR of bit ``level`` (1-based) with arbitrary precision.

    ``labels[b]`` is the bit tuple of ``points[b]``; ``known`` maps level to
    value and restricts the sums.
    """
    with mpmath.workdps(50):
        num = mpmath.mpf(0)
        den = mpmath.mpf(0)
        for p, lab in zip(points, labels):
            if any(lab[j - 1] != v for j, v in known.items()):
                continue
            d = mpmath.mpf(float(y)) - mpmath.mpf(float(p))
            w = mpmath.exp(-d**2 / (2 * mpmath.mpf(float(sigma)) ** 2))
            if lab[level - 1] == 0:
                num += w
            else:
                den += w
        return float(mpmath.log(num / den))


# ------------------------------------------------------------ scalar GA

def _small(x):
    return -0.4527 * x**0.86 + 0.0218


def _large(x):
    return 0.5 * np.log(np.pi / x) - x / 4 + np.log(1 - 10 / (7 * x))


def _log_phi(x):
    if x <= 0:
        return 0.0
    if x < 0.1:
        return x / 0.1 * _small(0.1)
    if x < 10:
        return _small(x)
    return min(_large(x), _small(10.0))


def phi(x):
    """GA fit, log-linear on [0, 0.1] and capped just above 10."""
    return float(np.exp(_log_phi(x)))


def phi_inv(y):
    """Smallest preimage under :func:`phi`."""
    if y >= 1.0:
        return 0.0
    ly = np.log(y)
    if ly >= _small(10.0):
        return brentq(lambda x: _log_phi(x) - ly, 0.0, 10.0 - 1e-12, xtol=1e-14, rtol=1e-15)
    return brentq(lambda x: _large(x) - ly, 10.0, 5000.0, xtol=1e-13, rtol=1e-15)


def homogeneous_ga(N, mean):
    """Per-index LLR means for ``N`` uses of one channel, textbook recursion.

    Index ``i`` is read MSB first; a 0 bit applies the check-node update
    and a 1 bit the variable-node update.
    """
    n = N.bit_length() - 1
    out = np.empty(N)
    for i in range(N):
        m = mean
        for b in format(i, f"0{n}b") if n else "":
            p = phi(m)
            m = phi_inv(p * (2 - p)) if b == "0" else 2 * m
        out[i] = m
    return out


def q_function(x):
    return float(norm.sf(x))
