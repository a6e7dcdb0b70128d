"""Riccati-Bessel functions of integer order.

Conventions: ``jhat(rho) = rho * j_l(rho)`` and ``nhat(rho) = rho * n_l(rho)``
with ``n_0(rho) = -cos(rho)/rho``, so that ``jhat_0 = sin`` and
``nhat_0 = -cos``. With these signs the Wronskian
``jhat * nhat' - nhat * jhat'`` equals +1.

The regular function is generated by Miller's downward recurrence where the
upward recurrence is unstable (rho < l); above the turning point both
directions are stable and the cheaper upward pass is used. The irregular
function is always generated upward. Derivatives come from the lowering
relation ``w_l' = w_{l-1} - (l/rho) w_l`` and the free radial equation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import ValidationError

#: Largest supported angular momentum.
ELL_CAP = 60

_RESCALE = 1e200


@dataclass(frozen=True)
class BesselPair:
    """Values and first two derivatives of ``jhat_l`` and ``nhat_l``.

    All array fields share the shape of ``rho`` (scalars stay scalars).
    """

    rho: np.ndarray
    ell: int
    jhat: np.ndarray
    nhat: np.ndarray
    jhat_d: np.ndarray
    nhat_d: np.ndarray
    jhat_dd: np.ndarray
    nhat_dd: np.ndarray

    def wronskian(self):
        return self.jhat * self.nhat_d - self.nhat * self.jhat_d


def _check(ell, rho):
    if int(ell) != ell or ell < 0:
        raise ValidationError(f"specfun: ell must be a non-negative integer, got {ell!r}")
    if ell > ELL_CAP:
        raise ValidationError(f"specfun: ell={ell} exceeds the supported cap ELL_CAP={ELL_CAP}")
    rho = np.asarray(rho, dtype=float)
    if not np.all(np.isfinite(rho)) or np.any(rho <= 0.0):
        raise ValidationError("specfun: rho must be finite and strictly positive")
    return int(ell), rho


def _nhat_pair(ell, rho):
    """Return ``(nhat_{l-1}, nhat_l)`` by upward recurrence."""
    s, c = np.sin(rho), np.cos(rho)
    prev, cur = s, -c  # nhat_{-1} = sin, nhat_0 = -cos
    for m in range(ell):
        prev, cur = cur, (2 * m + 1) / rho * cur - prev
    return prev, cur


def _jhat_upward(ell, rho):
    s, c = np.sin(rho), np.cos(rho)
    prev, cur = c, s  # jhat_{-1} = cos, jhat_0 = sin
    for m in range(ell):
        prev, cur = cur, (2 * m + 1) / rho * cur - prev
    return prev, cur


def _jhat_miller(ell, rho):
    """Return ``(jhat_{l-1}, jhat_l)`` by normalized downward recurrence."""
    n_start = ell + int(math.sqrt(160.0 * (ell + 1))) + 16
    upper = np.zeros_like(rho)
    cur = np.full_like(rho, 1e-300)
    log_scale = np.zeros_like(rho)  # sum of log rescale factors applied so far
    snaps = {}
    for m in range(n_start, 0, -1):
        # jhat_{m-1} = (2m+1)/rho jhat_m - jhat_{m+1}
        upper, cur = cur, (2 * m + 1) / rho * cur - upper
        big = np.abs(cur) > _RESCALE
        if np.any(big):
            fac = np.where(big, 1.0 / _RESCALE, 1.0)
            cur = cur * fac
            upper = upper * fac
            log_scale = log_scale + np.log(fac)
        if m - 1 in (ell, ell - 1):
            snaps[m - 1] = (cur.copy(), log_scale.copy())
    # cur ~ jhat_0, upper ~ jhat_1 up to a common factor
    s, c = np.sin(rho), np.cos(rho)
    j0, j1 = s, s / rho - c
    d = np.maximum(np.abs(cur), np.abs(upper))
    cur, upper = cur / d, upper / d
    log_scale = log_scale - np.log(d)
    norm = (j0 * cur + j1 * upper) / (cur * cur + upper * upper)

    def restore(order):
        snap, at = snaps[order]
        with np.errstate(divide="ignore"):
            mag = np.log(np.abs(snap)) + (log_scale - at) + np.log(np.abs(norm))
        return np.sign(snap) * np.sign(norm) * np.exp(mag)

    return restore(ell - 1), restore(ell)


def _jhat_pair(ell, rho):
    if ell == 0:
        return np.cos(rho), np.sin(rho)
    jm, j = _jhat_upward(ell, rho)
    small = rho < ell
    if np.any(small):
        rs = rho[small] if rho.ndim else rho
        jm_s, j_s = _jhat_miller(ell, np.atleast_1d(rs))
        if rho.ndim:
            jm = np.array(jm, copy=True)
            j = np.array(j, copy=True)
            jm[small] = jm_s
            j[small] = j_s
        else:
            jm, j = jm_s[0], j_s[0]
    return jm, j


def riccati_bessel(ell, rho):
    """Evaluate ``jhat_l``, ``nhat_l`` and their first two derivatives at ``rho``.

    Parameters
    ----------
    ell : int
        Angular momentum, ``0 <= ell <= ELL_CAP``.
    rho : float or array_like
        Strictly positive arguments.

    Raises
    ------
    ValidationError
        If ``rho <= 0`` anywhere or ``ell`` is outside ``[0, ELL_CAP]``.
    """
    ell, rho = _check(ell, rho)
    scalar = rho.ndim == 0
    r = np.atleast_1d(rho)
    jm, j = _jhat_pair(ell, r)
    nm, n = _nhat_pair(ell, r)
    jd = jm - ell / r * j
    nd = nm - ell / r * n
    q = ell * (ell + 1) / (r * r) - 1.0
    vals = (r, j, n, jd, nd, q * j, q * n)
    if scalar:
        vals = tuple(float(v[0]) for v in vals)
    return BesselPair(vals[0], ell, *vals[1:])


def double_factorial(n):
    """``n!!`` with the convention ``(-1)!! = 0!! = 1``."""
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out


def small_rho_behavior(ell, rho):
    """Leading small-argument monomials ``(a rho^(l+1), c rho^(-l))``.

    ``a = 1/(2l+1)!!`` and ``c = -(2l-1)!!``.
    """
    if int(ell) != ell or ell < 1:
        raise ValidationError("specfun: small_rho_behavior needs ell >= 1")
    rho = float(rho)
    if not 0.0 < rho <= 0.1:
        raise ValidationError("specfun: small_rho_behavior needs 0 < rho <= 0.1")
    a = 1.0 / double_factorial(2 * ell + 1)
    c = -float(double_factorial(2 * ell - 1))
    return a * rho ** (ell + 1), c * rho ** (-ell)


def asymptotic_riccati(ell, rho):
    """Two-term large-argument forms of ``(jhat_l, nhat_l)``."""
    rho = np.asarray(rho, dtype=float)
    ph = rho - 0.5 * math.pi * ell
    corr = ell * (ell + 1) / (2.0 * rho)  # (l+1)!/(l-1)! / (2 rho)
    jhat = np.sin(ph) + corr * np.cos(ph)
    nhat = -(np.cos(ph) - corr * np.sin(ph))
    return jhat, nhat


def jhat_zeros(ell, x_max):
    """Positive zeros of ``jhat_l`` on ``(0, x_max]``, located by bracketing."""
    ell = int(ell)
    if x_max <= 0:
        return np.empty(0)
    # zeros are spaced by at least ~pi; 16 samples per pi avoids missing any
    n = max(64, int(16 * x_max / math.pi) + 2)
    lo = min(1e-3, x_max / 2)
    xs = np.linspace(lo, x_max, n)
    vals = riccati_bessel(ell, xs).jhat
    roots = []
    f = lambda x: riccati_bessel(ell, x).jhat  # noqa: E731
    for a, b, fa, fb in zip(xs[:-1], xs[1:], vals[:-1], vals[1:]):
        if fa == 0.0:
            roots.append(a)
        elif fa * fb < 0.0:
            roots.append(brentq(f, a, b, xtol=1e-14, rtol=1e-14))
    if vals[-1] == 0.0:
        roots.append(xs[-1])
    # jhat_l ~ rho^(l+1) has no zeros below the first sample
    return np.asarray(roots)
