"""Bound-state counting and location by node counting.

For ``E <= 0`` the number of eigenvalues below ``E`` in channel ``l`` equals
the number of nodes on ``(0, inf)`` of the regular solution at ``E``. Nodes
inside the support are counted on the grid; whether a further node lies
outside follows from comparing the log-derivative just past the support
with that of the decaying exterior solution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ToleranceNotReachedError, ValidationError
from .potential import Potential
from .radial import solve_batch

LEVEL_TOL = 1e-10
MAX_BISECTIONS = 200
#: grid points across the support; level energies converge as ``h^3`` (jump-limited)
POINTS_PER_SUPPORT = 8000


def decaying_log_derivative(ell, x):
    """``khat_l'(x) / khat_l(x)`` for the decaying modified Riccati-Bessel function.

    ``khat_l(x) = x k_l(x) ~ e^(-x)``; with ``q_0 = 1`` and
    ``q_{l+1} = 1 / (q_l + (2l+1)/x)`` the ratio is ``-l/x - q_l``.
    """
    q = 1.0
    for m in range(ell):
        q = 1.0 / (q + (2 * m + 1) / x)
    return -ell / x - q


def channel_cutoff(v: Potential):
    """Smallest ``l`` whose centrifugal barrier at ``rs`` exceeds ``sup |V_-|``.

    No channel at or above it can bind: there ``V + l(l+1)/r^2 >= 0`` for
    every ``r <= rs``.
    """
    depth = -v.v_min
    ell = 0
    while ell * (ell + 1) / v.support_radius**2 < depth:
        ell += 1
    return ell


class _Counter:
    """Node-count oracle ``N(E)`` for one channel on a fixed grid."""

    def __init__(self, v, ell, points_per_support=POINTS_PER_SUPPORT):
        self.v = v
        self.ell = int(ell)
        n_s = max(points_per_support, 2 * ell + 16)
        self.h = v.support_radius / n_s
        self.i_b = n_s + 2  # two cells past rs: the stencil sees only the exterior
        self.n = self.i_b + 3
        self.calls = 0

    def counts(self, energies):
        e = np.atleast_1d(np.asarray(energies, dtype=float))
        self.calls += e.size
        _, f, _ = solve_batch(self.v, self.ell, e, self.n, self.h)
        i, h = self.i_b, self.h
        out = np.empty(e.size, dtype=int)
        r_b = i * h
        for m in range(e.size):
            row = f[m]
            s = np.sign(row[: i + 1])
            s = s[s != 0]
            interior = int(np.count_nonzero(s[1:] != s[:-1]))
            fb = row[i]
            fp = (row[i - 2] - 8 * row[i - 1] + 8 * row[i + 1] - row[i + 2]) / (12 * h)
            if e[m] < 0:
                kappa = math.sqrt(-e[m])
                target = kappa * decaying_log_derivative(self.ell, kappa * r_b)
            else:
                target = -self.ell / r_b
            out[m] = interior + int((fp - target * fb) * fb < 0)
        return out

    def count(self, energy):
        return int(self.counts([energy])[0])


def count_channel(v: Potential, ell: int, points_per_support=POINTS_PER_SUPPORT):
    """Number of bound states ``n_l`` (levels with ``E < 0``) in channel ``l``."""
    if int(ell) != ell or ell < 0:
        raise ValidationError("boundstates: ell must be a non-negative integer")
    return _Counter(v, ell, points_per_support).count(0.0)


def locate_levels(v: Potential, ell: int, tol=LEVEL_TOL, e_min=None, points_per_support=POINTS_PER_SUPPORT):
    """Energies of the bound levels of channel ``l``, ascending.

    Each level is bracketed by the node count and bisected until the
    bracket is narrower than ``tol``.

    Raises
    ------
    ToleranceNotReachedError
        If a bracket does not shrink below ``tol`` within the iteration cap.
    """
    if not tol > 0:
        raise ValidationError("boundstates: tol must be > 0")
    counter = _Counter(v, ell, points_per_support)
    n = counter.count(0.0)
    if e_min is None:
        e_min = v.v_min - 1.0
    if n and counter.count(e_min) != 0:
        raise ValidationError("boundstates: e_min lies above the ground level")
    known = {e_min: 0, 0.0: n}
    levels = []
    for target in range(1, n + 1):
        lo = max(e for e, c in known.items() if c < target)
        hi = min(e for e, c in known.items() if c >= target)
        it = 0
        while hi - lo > tol:
            if it >= MAX_BISECTIONS:
                raise ToleranceNotReachedError(
                    f"boundstates: level {target} of ell={ell} bracket {hi - lo:.3e} above tol={tol!r}"
                )
            mid = 0.5 * (lo + hi)
            if mid in (lo, hi):
                raise ToleranceNotReachedError(
                    f"boundstates: level {target} of ell={ell} cannot be resolved to tol={tol!r} in double precision"
                )
            c = counter.count(mid)
            known[mid] = c
            if c >= target:
                hi = mid
            else:
                lo = mid
            it += 1
        levels.append(0.5 * (lo + hi))
    return np.array(levels)


@dataclass(frozen=True)
class BoundStateTable:
    """Bound levels per channel for ``l = 0 .. ell_max``.

    ``n_b`` counts states with their ``2l+1`` degeneracy; ``n_b_radial``
    counts radial levels only.
    """

    ell_max: int
    levels: tuple  # levels[l] is an ndarray of energies
    counts: tuple
    e_fermi: float | None = None

    @property
    def n_b(self):
        return int(sum((2 * l + 1) * n for l, n in enumerate(self.counts)))

    @property
    def n_b_radial(self):
        return int(sum(self.counts))

    def count(self, ell):
        return self.counts[ell] if ell < len(self.counts) else 0

    def node_check(self, v, points_per_support=POINTS_PER_SUPPORT):
        """Zero-energy node count minus tabulated count, per channel (should be all 0)."""
        return [count_channel(v, l, points_per_support) - n for l, n in enumerate(self.counts)]

    def rows(self):
        for ell, lv in enumerate(self.levels):
            for i, e in enumerate(lv):
                yield ell, i + 1, float(e)


def build_table(v: Potential, e_fermi=None, ell_max=None, tol=LEVEL_TOL, points_per_support=POINTS_PER_SUPPORT):
    """Locate every bound level of ``v``.

    ``ell_max`` defaults to the last channel below :func:`channel_cutoff`
    (at least 0).
    """
    if ell_max is None:
        ell_max = max(0, channel_cutoff(v) - 1)
    levels = tuple(locate_levels(v, l, tol, points_per_support=points_per_support) for l in range(ell_max + 1))
    return BoundStateTable(int(ell_max), levels, tuple(len(x) for x in levels), e_fermi)


def total_excess_bound(v: Potential, ell_max=None):
    """``N_b = sum_l (2l+1) n_l`` without locating the levels."""
    if ell_max is None:
        ell_max = max(0, channel_cutoff(v) - 1)
    return int(sum((2 * l + 1) * count_channel(v, l) for l in range(ell_max + 1)))


def square_well_levels(v0, a, ell=0):
    """Reference s-wave levels of a square well from ``k' cot(k' a) = -kappa``.

    ``v0 < 0``; roots found by bracketing on each branch of the cotangent.
    """
    from scipy.optimize import brentq

    if ell != 0:
        raise ValidationError("boundstates: reference levels are s-wave only")
    depth = -v0
    k0 = math.sqrt(depth)

    def f(kp):
        kappa = math.sqrt(max(depth - kp * kp, 0.0))
        return kp * math.cos(kp * a) + kappa * math.sin(kp * a)

    out = []
    # one root per interval ((n - 1/2) pi / a, n pi / a] that lies below k0
    n = 1
    while (n - 0.5) * math.pi / a < k0:
        lo = (n - 0.5) * math.pi / a
        hi = min(n * math.pi / a, k0)
        if f(lo) * f(hi) < 0:
            kp = brentq(f, lo, hi, xtol=1e-15, rtol=1e-15)
            out.append(kp * kp - depth)
        n += 1
    return np.array(out)
