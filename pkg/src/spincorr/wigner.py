"""Wigner rotation matrices d^j_{m',m}(theta) and z-rotation phases.

Rows and columns are ordered with m descending from +j, so index ``i`` holds
``m = j - i``. Spins are passed as ints, floats, or ``Fraction`` values and
must be integer or half-integer.
"""

from fractions import Fraction
from functools import lru_cache
from math import factorial, isfinite

import mpmath
import numpy as np

ORACLE_JMAX = 60


class SpinDomainError(ValueError):
    """Raised for spin labels that are not positive (half-)integers."""


class OracleRangeError(ValueError):
    """Raised when the direct formula is asked for j beyond its range."""


def twice_spin(j):
    """Return ``2j`` as an int after validating ``j``."""
    try:
        two_j = Fraction(j) * 2
    except (TypeError, ValueError) as exc:
        raise SpinDomainError(f"invalid spin {j!r}") from exc
    if two_j.denominator != 1 or two_j < 1:
        raise SpinDomainError(f"spin must be a positive integer or half-integer, got {j!r}")
    return int(two_j)


def m_values(j):
    """Magnetic quantum numbers ``j, j-1, ..., -j`` as floats."""
    n = twice_spin(j) + 1
    return 0.5 * (n - 1) - np.arange(n, dtype=float)


def z_phase(j, phi):
    """Diagonal of exp(-i phi J_z): entry ``i`` is ``exp(-i m phi)``."""
    if not isfinite(phi):
        raise ValueError("phi must be finite")
    return np.exp(-1j * m_values(j) * phi)


@lru_cache(maxsize=64)
def _half_turn(two_j):
    """d^j(pi/2) by the three-term recursion in m', cached per spin."""
    n = two_j + 1
    j = two_j / 2.0
    m = m_values(j)
    # a[i] couples rows i and i+1:  sqrt((j - m'_{i+1})(j + m'_{i+1} + 1))
    a = np.sqrt((j - m[1:]) * (j + m[1:] + 1.0))

    # top row: d_{j,m}(pi/2) = (-1)^(j-m) sqrt(C(2j, j-m)) / 2^(j)
    k = np.arange(n)
    log_binom = _log_binom_row(two_j)
    top = np.exp(0.5 * log_binom - j * np.log(2.0)) * np.where(k % 2, -1.0, 1.0)

    d = np.zeros((n, n))
    d[0] = top
    half = n // 2  # rows 0..half cover m' >= 0
    # At theta=pi/2 the recursion reads
    #   a_{m'} d_{m'+1} + a_{m'-1} d_{m'-1} = 2 m d_{m'}
    # and is run downward from m' = j, where the solution grows, to m' = 0.
    for i in range(0, half):
        above = d[i - 1] * a[i - 1] if i > 0 else 0.0
        d[i + 1] = (2.0 * m * d[i] - above) / a[i]
    # d_{-m',m}(pi/2) = (-1)^(j-m) d_{m',m}(pi/2)
    col_sign = np.where(k % 2, -1.0, 1.0)
    for i in range(half + 1, n):
        d[i] = col_sign * d[n - 1 - i]
    d.setflags(write=False)
    return d


def _log_binom_row(two_j):
    from scipy.special import gammaln

    k = np.arange(two_j + 1)
    return gammaln(two_j + 1.0) - gammaln(k + 1.0) - gammaln(two_j - k + 1.0)


def little_d(j, theta):
    """Wigner matrix ``d^j(theta)`` with entries ``<j,m'|exp(-i theta J_y)|j,m>``.

    The quarter-turn matrix Delta = d^j(pi/2) comes from a column recursion
    seeded by the closed-form top row. General angles use the factorisation
    ``exp(-i theta J_y) = Z Delta exp(-i theta J_z) Delta^T Z^dagger`` with
    ``Z = exp(-i pi J_z / 2)``, which stays accurate at small ``sin theta``.
    """
    two_j = twice_spin(j)
    if not isfinite(theta):
        raise ValueError("theta must be finite")
    n = two_j + 1
    theta = float(theta)
    t = np.mod(theta, 4.0 * np.pi)
    if t == 0.0:
        return np.eye(n)
    delta = _half_turn(two_j)
    if t == 0.5 * np.pi:
        return np.array(delta)
    m = m_values(two_j / 2.0)
    # d_{m'm} = i^{m-m'} sum_k Delta_{m'k} Delta_{mk} e^{-i k theta}, real up
    # to rounding, so the imaginary residue is discarded.
    w = delta * np.exp(-1j * m * theta)[None, :]
    core = w @ delta.T
    diff = (m[None, :] - m[:, None])  # m - m'
    out = (core * np.exp(0.5j * np.pi * diff)).real
    return out


def little_d_direct(j, theta):
    """Wigner's factorial-sum formula, used as an independent oracle.

    Coefficients are exact rationals; the sum is evaluated in extended
    precision and, when its a-priori cancellation bound is too loose, at
    arbitrary precision. Refuses ``j > 60``.
    """
    two_j = twice_spin(j)
    if two_j > 2 * ORACLE_JMAX:
        raise OracleRangeError(f"direct formula limited to j <= {ORACLE_JMAX}")
    if not isfinite(theta):
        raise ValueError("theta must be finite")
    n = two_j + 1
    terms = _direct_terms(two_j)
    ld = np.longdouble
    c = np.cos(ld(theta) / 2)
    s = np.sin(ld(theta) / 2)
    cp = c ** np.arange(two_j + 1, dtype=ld)
    sp = s ** np.arange(two_j + 1, dtype=ld)
    vals = terms["coef_ld"] * cp[terms["pc"]] * sp[terms["ps"]]
    absvals = np.abs(vals)
    sums = np.zeros(n * n, dtype=ld)
    bound = np.zeros(n * n, dtype=ld)
    np.add.at(sums, terms["flat"], vals)
    np.add.at(bound, terms["flat"], absvals)
    eps = np.finfo(ld).eps
    out = sums.astype(float).reshape(n, n)
    loose = np.nonzero(bound * eps * 8 > 1e-11)[0]
    if loose.size:
        out_flat = out.reshape(-1)
        for idx in loose:
            out_flat[idx] = _direct_entry_mp(two_j, idx // n, idx % n, theta)
    return out


@lru_cache(maxsize=128)
def _direct_terms(two_j):
    """Flattened term table for the factorial sum at spin ``two_j / 2``."""
    n = two_j + 1
    flat, coef, pc, ps = [], [], [], []
    fac = [factorial(i) for i in range(two_j + 1)]
    with mpmath.workdps(40):
        _fill_terms(two_j, n, fac, flat, coef, pc, ps)
        coef_ld = np.array([np.longdouble(mpmath.nstr(x, 25)) for x in coef])
    return {
        "flat": np.array(flat, dtype=np.int64),
        "coef_ld": coef_ld,
        "pc": np.array(pc, dtype=np.int64),
        "ps": np.array(ps, dtype=np.int64),
    }


def _fill_terms(two_j, n, fac, flat, coef, pc, ps):
    for r in range(n):
        a = two_j - r  # a = j + m'
        for col in range(n):
            b = two_j - col  # b = j + m
            num = fac[a] * fac[two_j - a] * fac[b] * fac[two_j - b]
            root = mpmath.sqrt(mpmath.mpf(num))
            for k in range(max(0, b - a), min(b, two_j - a) + 1):
                den = fac[b - k] * fac[k] * fac[two_j - a - k] * fac[k - b + a]
                sign = -1 if (k - b + a) % 2 else 1
                flat.append(r * n + col)
                coef.append(sign * root / den)
                pc.append(two_j + b - a - 2 * k)
                ps.append(2 * k - b + a)


def _direct_entry_mp(two_j, r, col, theta):
    fac = factorial
    a, b = two_j - r, two_j - col
    with mpmath.workdps(30 + two_j):
        th = mpmath.mpf(theta)
        c, s = mpmath.cos(th / 2), mpmath.sin(th / 2)
        root = mpmath.sqrt(mpmath.mpf(fac(a) * fac(two_j - a) * fac(b) * fac(two_j - b)))
        total = mpmath.mpf(0)
        for k in range(max(0, b - a), min(b, two_j - a) + 1):
            den = fac(b - k) * fac(k) * fac(two_j - a - k) * fac(k - b + a)
            sign = -1 if (k - b + a) % 2 else 1
            total += sign * c ** (two_j + b - a - 2 * k) * s ** (2 * k - b + a) / den
        return float(root * total)
