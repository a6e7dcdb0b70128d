"""Partial-wave phase shifts on the continuous branch with ``eta(inf) = 0``.

Beyond the support the regular solution is
``f = sqrt(2) [jhat(kr) cos(eta) - nhat(kr) sin(eta)]``. The principal value
of ``eta`` follows from ``f`` and ``f'`` at a matching radius. Two devices
fix the branch:

* a high-k anchor where ``|eta|`` is provably small, from which the curve is
  marched downward with bisection wherever adjacent samples jump too much;
* a Prufer winding count: the continuous Prufer angle of the regular
  solution at the matching radius, minus the same angle for ``V = 0``,
  lands in ``[m pi, (m+1) pi)`` exactly when ``eta`` does. The march must
  agree with it at every sample, which rules out a narrow resonance hiding
  between two samples. Within roundoff of a multiple of pi the winding
  cannot tell the two sides apart and the march alone decides.

Every phase is reported relative to the same extraction applied to the
numerically integrated free solution, so ``V = 0`` gives exactly zero and
the dispersion error of the integrator largely cancels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import MatchingError, UnwrapError, ValidationError
from .potential import Potential, zero_potential
from .radial import asymptotic_coefficients, solve_batch, step_rule
from .specfun import ELL_CAP

ANCHOR_TOL = 0.05
MATCH_TOL = 1e-6
K_MIN = 1e-3
MAX_JUMP = 0.5
MAX_DEPTH = 40
AMBIGUOUS_BAND = 1e-6
#: target phase error of the integrator, as a fraction of ``MATCH_TOL``
_PHASE_BUDGET = 1e-2


@dataclass(frozen=True)
class PhaseSample:
    """Extraction result at one wavenumber."""

    k: float
    eta: float  # principal value in (-pi/2, pi/2]
    eta_branch: float  # continuous-branch value from the Prufer winding
    eta_second: float  # principal value from the second matching radius
    amplitude: float  # A with f_stored = A * sqrt(2) [jhat cos - nhat sin]
    match_radius: float
    second_radius: float
    #: ``eta`` lies within ``AMBIGUOUS_BAND`` of a multiple of pi, where the
    #: winding cannot separate ``m pi - 0`` from ``m pi + 0``
    branch_ambiguous: bool = False


def _principal(x):
    """Wrap to (-pi/2, pi/2]."""
    y = x - math.pi * np.round(x / math.pi)
    return np.where(y <= -math.pi / 2, y + math.pi, y)


def _prufer(f, fp, k, nodes):
    theta = np.mod(np.arctan2(k * f, fp), math.pi)
    return math.pi * nodes + theta


def _branch(principal, dphi):
    q = np.mod(principal, math.pi)
    m = np.floor(dphi / math.pi)
    frac = dphi - m * math.pi
    eta = m * math.pi + q
    eps = 1e-7
    eta = np.where((frac < eps) & (q > math.pi - eps), eta - math.pi, eta)
    eta = np.where((frac > math.pi - eps) & (q < eps), eta + math.pi, eta)
    return eta


def matching_radii(v, h):
    """Grid points nearest ``rs + 1`` and ``rs + 2``."""
    i1 = int(round((v.support_radius + 1.0) / h))
    i2 = int(round((v.support_radius + 2.0) / h))
    return i1, i2


def phase_step(v, ell, k, tol=MATCH_TOL):
    """Numerov step meeting both the step rule and a phase-error budget.

    The integrator's dispersion error over a length ``L`` is about
    ``k L (kh)^4 / 240``; ``h`` is chosen so that this stays below
    ``_PHASE_BUDGET * tol`` up to the second matching radius.
    """
    h = step_rule(v, ell, k * k)
    length = v.support_radius + 2.5
    kh = (240.0 * _PHASE_BUDGET * tol / (k * length)) ** 0.25
    h = min(h, kh / k)
    return v.aligned_step(h)


def _stencil_at(f, i, h):
    return (f[:, i - 2] - 8 * f[:, i - 1] + 8 * f[:, i + 1] - f[:, i + 2]) / (12 * h)


def _extract_group(v, free, ell, ks, h, match_tol):
    i1, i2 = matching_radii(v, h)
    n = i2 + 3
    e = ks * ks
    _, fv, _ = solve_batch(v, ell, e, n, h)
    _, f0, _ = solve_batch(free, ell, e, n, h)
    out = {}
    for tag, f in (("v", fv), ("0", f0)):
        res = []
        for i in (i1, i2):
            val, der = f[:, i], _stencil_at(f, i, h)
            c1, c2 = asymptotic_coefficients(ks, ell, i * h, val, der)
            nodes = np.array([_nodes(row[: i + 1]) for row in f])
            res.append((c1, c2, _prufer(val, der, ks, nodes)))
        out[tag] = res
    (c1, c2, phi_v), (d1, d2, _) = out["v"]
    (e1, e2, phi_0), (g1, g2, _) = out["0"]
    p_v1 = np.arctan2(-c2, c1)
    p_01 = np.arctan2(-e2, e1)
    p1 = _principal(p_v1 - p_01)
    p2 = _principal(np.arctan2(-d2, d1) - np.arctan2(-g2, g1))
    dphi = phi_v - phi_0
    # the free solution's own phase error is removed from the winding too
    branch = _branch(p1, dphi - _principal(p_01))
    amp = np.sqrt(0.5 * (c1 * c1 + c2 * c2))
    mismatch = np.abs(_principal(p1 - p2))
    bad = mismatch > match_tol
    if np.any(bad):
        j = int(np.argmax(mismatch))
        raise MatchingError(
            f"phaseshift: matching radii disagree by {mismatch[j]:.3e} rad at k={ks[j]!r}, ell={ell}"
            f" (match_tol={match_tol!r})"
        )
    return p1, branch, p2, amp, i1 * h, i2 * h


def _nodes(vals):
    s = np.sign(vals)
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))


def phase_samples(v: Potential, ell: int, ks, match_tol=MATCH_TOL):
    """Vectorized extraction; returns a :class:`PhaseSample` per wavenumber."""
    if int(ell) != ell or ell < 0 or ell > ELL_CAP:
        raise ValidationError(f"phaseshift: ell must be in [0, {ELL_CAP}]")
    ks = np.asarray(ks, dtype=float)
    if np.any(ks <= 0) or not np.all(np.isfinite(ks)):
        raise ValidationError("phaseshift: wavenumbers must be finite and > 0")
    free = zero_potential(v.support_radius)
    steps = np.array([phase_step(v, ell, k, match_tol) for k in ks])
    result = [None] * ks.size
    for h in np.unique(steps):
        idx = np.nonzero(steps == h)[0]
        p1, br, p2, amp, r1, r2 = _extract_group(v, free, ell, ks[idx], float(h), match_tol)
        q = np.mod(p1, math.pi)
        amb = np.minimum(q, math.pi - q) < AMBIGUOUS_BAND
        for j, i in enumerate(idx):
            result[i] = PhaseSample(
                float(ks[i]), float(p1[j]), float(br[j]), float(p2[j]), float(amp[j]), r1, r2, bool(amb[j])
            )
    return result


def extract_phase_shift(v: Potential, ell: int, k: float, match_tol=MATCH_TOL):
    """Principal-branch phase shift at one wavenumber, with diagnostics.

    The coefficients of ``jhat`` and ``nhat`` are obtained through the unit
    Wronskian, which is equivalent to the log-derivative formula
    ``tan eta = (beta jhat - k jhat') / (beta nhat - k nhat')`` but never
    divides by ``f``, so a node at the matching radius needs no special case.

    Raises
    ------
    MatchingError
        If the two matching radii disagree by more than ``match_tol`` mod pi.
    """
    return phase_samples(v, ell, [k], match_tol)[0]


def born_bound(v, k):
    """``int |V| dr / k``, an upper estimate of ``|eta|`` at large ``k``."""
    return v.integral_abs() / k


@dataclass(frozen=True)
class PhaseShiftCurve:
    """Unwrapped ``eta_l(k)`` samples for one channel.

    ``k_grid``/``eta`` cover ``(0, k_max]`` including refinement points;
    samples used only to carry the branch down from ``k_anchor`` are kept
    in ``k_extension``/``eta_extension``.
    """

    ell: int
    k_grid: np.ndarray
    eta: np.ndarray
    eta_zero: float
    k_anchor: float
    eta_anchor: float
    branch_certificate: float
    refined_intervals: tuple = ()
    k_extension: np.ndarray = field(default_factory=lambda: np.empty(0))
    eta_extension: np.ndarray = field(default_factory=lambda: np.empty(0))
    anchor_tol: float = ANCHOR_TOL
    match_tol: float = MATCH_TOL

    def eta_at(self, k):
        """Cubic-spline interpolation through ``(0, eta_zero)`` and the samples."""
        ks = np.concatenate(([0.0], self.k_grid))
        es = np.concatenate(([self.eta_zero], self.eta))
        return CubicSpline(ks, es)(k)

    @property
    def max_spacing(self):
        return float(np.max(np.diff(np.concatenate(([0.0], self.k_grid)))))

    def threshold_slope(self, n=3):
        """Log-log slope of ``|eta - pi n|`` over the ``n`` smallest samples.

        ``pi n`` is the threshold value nearest the samples, so channels with
        bound states are measured against their own threshold.
        """
        k = self.k_grid[:n]
        e = self.eta[:n]
        s = np.abs(e - math.pi * np.round(e / math.pi))
        return float(np.polyfit(np.log(k), np.log(s), 1)[0])


def default_k_grid(k_max, n_samples, k_min=K_MIN):
    uniform = k_max * np.arange(1, n_samples + 1) / n_samples
    thresh = []
    k = k_min
    while k < 0.75 * uniform[0]:
        thresh.append(k)
        k *= 2.0
    return np.concatenate((thresh, uniform))


def build_curve(
    v: Potential,
    ell: int,
    k_max: float,
    n_samples: int = 64,
    *,
    k_min: float = K_MIN,
    k_anchor: float | None = None,
    anchor_tol: float = ANCHOR_TOL,
    match_tol: float = MATCH_TOL,
    max_jump: float = MAX_JUMP,
    max_depth: int = MAX_DEPTH,
):
    """Sample and unwrap ``eta_l`` on ``(0, k_max]``.

    The branch is pinned at ``k_anchor`` (default: the larger of ``k_max``
    and the wavenumber where :func:`born_bound` drops to ``anchor_tol``) to
    the representative nearest 0, then carried downward. An interval is
    bisected while the step between its ends exceeds ``max_jump`` or the
    marched value disagrees with the Prufer winding. ``eta(0)`` is
    Richardson-extrapolated from the two smallest samples assuming
    ``eta(k) - eta(0) ~ k^(2l+1)``.

    Raises
    ------
    UnwrapError
        If bisection exceeds ``max_depth`` or the anchor is not small.
    """
    if n_samples < 16:
        raise ValidationError("phaseshift: n_samples must be >= 16")
    if not k_max > 0:
        raise ValidationError("phaseshift: k_max must be > 0")
    if not 0 < k_min < k_max:
        raise ValidationError("phaseshift: need 0 < k_min < k_max")
    ks = default_k_grid(k_max, n_samples, k_min)
    if k_anchor is None:
        k_anchor = max(k_max, 1.2 * v.integral_abs() / anchor_tol)
    k_anchor = float(max(k_anchor, k_max))
    ext = []
    k = k_max
    while k < k_anchor:
        k = min(k * 1.5, k_anchor)
        ext.append(k)
    all_k = np.concatenate((ks, ext))
    samples = phase_samples(v, ell, all_k, match_tol)

    anchor = samples[-1]
    eta_anchor = float(anchor.eta)
    if abs(eta_anchor) >= anchor_tol or abs(anchor.eta_branch - eta_anchor) > 1e-6:
        raise UnwrapError(
            f"phaseshift: |eta({anchor.k!r})| = {abs(anchor.eta_branch):.3g} is not below anchor_tol={anchor_tol}"
            f" for ell={ell}; raise k_anchor"
        )

    k_out = [anchor.k]
    e_out = [eta_anchor]
    refined = []
    cache = {s.k: s for s in samples}

    def sample(kk):
        if kk not in cache:
            cache[kk] = phase_samples(v, ell, [kk], match_tol)[0]
        return cache[kk]

    def descend(k_hi, e_hi, k_lo, depth):
        """Append samples strictly below ``k_hi`` down to ``k_lo`` (inclusive)."""
        s = sample(k_lo)
        e_lo = s.eta + math.pi * round((e_hi - s.eta) / math.pi)
        off = abs(e_lo - s.eta_branch)
        agrees = off < 1e-6 or (s.branch_ambiguous and abs(off - math.pi) < 1e-6)
        ok = abs(e_lo - e_hi) <= max_jump and agrees
        if ok:
            k_out.append(k_lo)
            e_out.append(e_lo)
            return e_lo, False
        if depth >= max_depth:
            raise UnwrapError("phaseshift: unwrap refinement exceeded depth limit", (float(k_lo), float(k_hi)))
        k_mid = 0.5 * (k_lo + k_hi)
        e_mid, _ = descend(k_hi, e_hi, k_mid, depth + 1)
        e_lo, _ = descend(k_mid, e_mid, k_lo, depth + 1)
        return e_lo, True

    desc_k = all_k[::-1]
    for k_hi, k_lo in zip(desc_k[:-1], desc_k[1:]):
        _, was_refined = descend(k_hi, e_out[-1], k_lo, 0)
        if was_refined:
            refined.append((float(k_lo), float(k_hi)))

    k_arr = np.array(k_out[::-1])
    e_arr = np.array(e_out[::-1])
    certificate = float(np.max(np.abs(np.diff(e_arr)))) if k_arr.size > 1 else 0.0
    inside = k_arr <= k_max * (1 + 1e-12)
    k_in, e_in = k_arr[inside], e_arr[inside]
    p = 2 * ell + 1
    k1, k2 = k_in[0], k_in[1]
    e1, e2 = e_in[0], e_in[1]
    eta_zero = float((e1 * k2**p - e2 * k1**p) / (k2**p - k1**p))
    return PhaseShiftCurve(
        ell=int(ell),
        k_grid=k_in,
        eta=e_in,
        eta_zero=eta_zero,
        k_anchor=float(k_anchor),
        eta_anchor=eta_anchor,
        branch_certificate=certificate,
        refined_intervals=tuple(sorted(refined)),
        k_extension=k_arr[~inside],
        eta_extension=e_arr[~inside],
        anchor_tol=anchor_tol,
        match_tol=match_tol,
    )


def eta_on_branch(v, ell, ks, match_tol=MATCH_TOL):
    """Continuous-branch phase shifts at arbitrary wavenumbers (Prufer winding only)."""
    return np.array([s.eta_branch for s in phase_samples(v, ell, ks, match_tol)])


def square_well_s_wave(v0, a, k):
    """Closed-form s-wave phase shift of a constant well/barrier, modulo pi.

    Interior ``sin(k' r)`` (``v0 < k^2``) or ``sinh(kappa r)`` matched to
    ``sin(kr + eta)`` at ``r = a``.
    """
    k = np.asarray(k, dtype=float)
    e = k * k - v0
    out = np.empty_like(k)
    pos = e > 0
    kp = np.sqrt(np.abs(e))
    out[pos] = -k[pos] * a + np.arctan(k[pos] / kp[pos] * np.tan(kp[pos] * a))
    neg = ~pos
    out[neg] = -k[neg] * a + np.arctan(k[neg] / kp[neg] * np.tanh(kp[neg] * a))
    return out
