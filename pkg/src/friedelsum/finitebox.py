"""Level counting in a hard-wall ball of radius L.

The Dirichlet levels of channel ``l`` below ``E_F`` are the nodes of the
regular solution at ``E_F`` strictly inside ``(0, L)``. One integration
out to the largest radius therefore yields the count for every ``L`` at
once. The scan tracks ``D(L) = sum_l (2l+1) [N^V_l(L) - N^0_l(L)]``, whose
fluctuations do not die out as ``L`` grows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BudgetError, ValidationError
from .friedel import _map
from .potential import Potential, zero_potential
from .radial import default_step, solve_batch

DEFAULT_BUDGET = 20000
EXTRA_CHANNELS = 10


def _sign_crossings(f):
    """Cumulative count of sign changes up to each index (zeros carry the previous sign)."""
    s = np.sign(f)
    nz = np.nonzero(s)[0]
    if nz.size == 0:
        return np.zeros(f.size, dtype=np.int64)
    # forward-fill zeros with the last nonzero sign
    idx = np.maximum.accumulate(np.where(s != 0, np.arange(f.size), -1))
    filled = np.where(idx >= 0, s[np.maximum(idx, 0)], 0)
    change = np.zeros(f.size, dtype=np.int64)
    change[1:] = (filled[1:] != filled[:-1]) & (filled[:-1] != 0)
    return np.cumsum(change)


class _ChannelCounter:
    """Node counts of one channel's ``E_F`` solution as a function of ``L``."""

    def __init__(self, v, ell, e_fermi, L_max):
        self.h = default_step(v, ell, e_fermi)
        n = int(math.ceil(L_max / self.h)) + 4
        _, f, _ = solve_batch(v, ell, [e_fermi], n, self.h)
        self.f = f[0]
        self.cum = _sign_crossings(self.f)

    def count(self, L):
        """Sign changes strictly inside ``(0, L)``."""
        x = L / self.h
        i = int(math.floor(x + 1e-9))
        c = int(self.cum[i])
        if abs(x - i) <= 1e-9:
            # a zero sitting exactly at L is only counted once f changes sign after it
            return c
        # partial cell: linear sign test is enough, f has at most one zero per cell
        fl = self.f[i] + (x - i) * (self.f[i + 1] - self.f[i])
        return c + int(fl * self.f[i] < 0)


def count_levels_in_box(v: Potential | None, ell: int, L: float, e_fermi: float):
    """Dirichlet levels of channel ``l`` strictly below ``E_F`` in the ball of radius ``L``.

    ``v=None`` means the free case.

    Raises
    ------
    ValidationError
        If ``L`` does not exceed the support radius or ``E_F <= 0``.
    """
    if v is None:
        v = zero_potential(min(1.0, L / 2))
    if not L > v.support_radius:
        raise ValidationError(f"finitebox: L={L!r} must exceed support_radius={v.support_radius!r}")
    if not e_fermi > 0:
        raise ValidationError("finitebox: e_fermi must be > 0")
    return _ChannelCounter(v, int(ell), e_fermi, L).count(L)


def ell_cap(k_fermi, L):
    """``ceil(k_F L) + 10``; higher channels have no levels below ``E_F``."""
    return int(math.ceil(k_fermi * L)) + EXTRA_CHANNELS


@dataclass(frozen=True)
class BoxCountScan:
    L_grid: np.ndarray
    e_fermi: float
    ell_max: np.ndarray
    d_values: np.ndarray
    window: int

    @property
    def window_amplitude(self):
        """``max - min`` of ``D`` over the trailing ``window`` samples at each ``L``."""
        d = self.d_values
        out = np.empty(d.size, dtype=np.int64)
        for i in range(d.size):
            w = d[max(0, i - self.window + 1) : i + 1]
            out[i] = w.max() - w.min()
        return out

    @property
    def fluctuation_stats(self):
        d = self.d_values
        n = d.size
        third = max(1, n // 3)
        first, last = d[:third], d[n - third :]
        return {
            "min": int(d.min()),
            "max": int(d.max()),
            "amplitude": int(d.max() - d.min()),
            "first_third_amplitude": int(first.max() - first.min()),
            "last_third_amplitude": int(last.max() - last.min()),
            "last_third_distinct": int(np.unique(last).size),
        }


def scan(v: Potential, e_fermi: float, L_min: float, L_max: float, step: float, *, window=None, budget=DEFAULT_BUDGET, workers=None):
    """Scan ``D(L)`` on ``L = L_min, L_min + step, ..., <= L_max``.

    Each channel is integrated once, with and without ``V``, out to
    ``L_max``; ``budget`` caps the number of such integrations.

    Raises
    ------
    BudgetError
        If ``2 (ell_max(L_max) + 1)`` exceeds ``budget``.
    """
    if not e_fermi > 0:
        raise ValidationError("finitebox: e_fermi must be > 0")
    if not L_min > v.support_radius:
        raise ValidationError(f"finitebox: L_min={L_min!r} must exceed support_radius={v.support_radius!r}")
    if not (step > 0 and L_max >= L_min):
        raise ValidationError("finitebox: need step > 0 and L_max >= L_min")
    n = int(math.floor((L_max - L_min) / step + 1e-9)) + 1
    L = L_min + step * np.arange(n)
    k_f = math.sqrt(e_fermi)
    caps = np.array([ell_cap(k_f, x) for x in L])
    top = int(caps.max())
    if 2 * (top + 1) > budget:
        raise BudgetError(
            f"finitebox: scan needs {2 * (top + 1)} channel integrations, budget is {budget}"
        )
    free = zero_potential(v.support_radius)
    zero = v.is_zero

    def channel(ell):
        cv = _ChannelCounter(v, ell, e_fermi, L[-1])
        c0 = cv if zero else _ChannelCounter(free, ell, e_fermi, L[-1])
        return np.array([(2 * ell + 1) * (cv.count(x) - c0.count(x)) if ell <= cap else 0 for x, cap in zip(L, caps)])

    contrib = _map(channel, range(top + 1), workers)
    d = np.sum(contrib, axis=0).astype(np.int64)
    if window is None:
        window = max(3, n // 10)
    return BoxCountScan(L, float(e_fermi), caps, d, int(window))
