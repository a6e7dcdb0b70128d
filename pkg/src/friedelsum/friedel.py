"""Excess charge of a spherical impurity from phase shifts and from the density.

Two independent routes to the same number:

* the phase-shift side ``N_b + (1/pi) sum_l (2l+1) [eta_l(k_F) - eta_l(0)]``,
  optionally with heat-kernel weights ``exp(-beta l(l+1))``;
* the density side ``N_b + (1/pi) sum_l (2l+1) int_0^kF dk int_0^R
  (|f|^2 - |f0|^2) dr``, built from normalized radial solutions alone.

They differ by an oscillatory remainder that decays as ``R`` grows.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .boundstates import BoundStateTable, build_table, channel_cutoff
from .errors import ValidationError
from .phaseshift import PhaseShiftCurve, build_curve, phase_samples
from .potential import Potential, zero_potential
from .radial import asymptotic_coefficients, norm_integrals, solve_batch, step_rule
from .specfun import ELL_CAP, riccati_bessel

DEFAULT_BETAS = (1e-1, 1e-2, 1e-3, 1e-4)
DEFAULT_R = 60.0
BORN_CUTOFF = 1e-10
#: Gauss-Legendre nodes per k-panel; panels are at most pi/R wide
PANEL_NODES = 16
CHUNK = 96
WORKERS_ENV = "FRIEDELSUM_WORKERS"


def default_workers():
    """Worker count from ``FRIEDELSUM_WORKERS`` (default 1)."""
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValidationError(f"friedel: {WORKERS_ENV} must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ValidationError(f"friedel: {WORKERS_ENV} must be a positive integer, got {raw!r}")
    return n


def _map(fn, items, workers):
    items = list(items)
    if workers is None:
        workers = default_workers()
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _k_fermi(e_fermi):
    if not (isinstance(e_fermi, (int, float)) and math.isfinite(e_fermi) and e_fermi > 0):
        raise ValidationError(f"friedel: Fermi energy must be finite and > 0, got {e_fermi!r}")
    return math.sqrt(e_fermi)


# ---------------------------------------------------------------- Born estimates


def _gauss_nodes(v, per_segment=64):
    edges = np.concatenate(([0.0], v.radii)) if v.kind == "piecewise_constant" else v.radii
    if edges[0] > 0:
        edges = np.concatenate(([0.0], edges))
    x, w = np.polynomial.legendre.leggauss(per_segment)
    r, wt = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        r.append(a + 0.5 * (b - a) * (x + 1))
        wt.append(0.5 * (b - a) * w)
    return np.concatenate(r), np.concatenate(wt)


def born_phase(v: Potential, ell: int, k: float):
    """First Born approximation ``-(1/k) int V(r) jhat_l(kr)^2 dr``."""
    r, w = _gauss_nodes(v)
    j = riccati_bessel(ell, k * r).jhat
    return float(-np.dot(w, v.evaluate(r) * j * j) / k)


def default_ell_max(v: Potential, k_fermi: float):
    """Truncation channel for the partial-wave sums.

    The smaller of the first ``l > k_F rs + 8`` and the first ``l`` whose
    Born estimate of ``|eta_l(k_F)|`` drops below ``1e-10``; never below
    the last channel that can bind.
    """
    semiclassical = int(math.floor(k_fermi * v.support_radius + 8)) + 1
    ell = 0
    while ell < semiclassical and abs(born_phase(v, ell, k_fermi)) >= BORN_CUTOFF:
        ell += 1
    bound = max(0, channel_cutoff(v) - 1)
    return min(max(ell, bound), ELL_CAP)


def truncation_bound(v: Potential, k_fermi: float, ell_max: int):
    """``(1/pi) sum_{l > ell_max} (2l+1) |eta_l^Born(k_F)|`` over representable channels."""
    total = 0.0
    for ell in range(ell_max + 1, ELL_CAP + 1):
        term = (2 * ell + 1) * abs(born_phase(v, ell, k_fermi)) / math.pi
        total += term
        if term < 1e-18:
            break
    return total


# ---------------------------------------------------------------- channel data


@dataclass(frozen=True)
class ChannelData:
    ell: int
    n_bound: int
    eta_fermi: float
    eta_zero: float
    curve: PhaseShiftCurve = field(repr=False, compare=False)

    @property
    def delta(self):
        return self.eta_fermi - self.eta_zero


def eta_at(v, ell, k, curve):
    """Continuous-branch ``eta_l(k)``: fresh extraction, branch taken from ``curve``."""
    s = phase_samples(v, ell, [k], curve.match_tol)[0]
    guide = float(curve.eta_at(k))
    return s.eta + math.pi * round((guide - s.eta) / math.pi)


def channel_data(v, ell, k_fermi, table=None, n_samples=64):
    n_bound = table.count(ell) if table is not None else 0
    if v.is_zero:
        k = np.linspace(2 * k_fermi / n_samples, 2 * k_fermi, n_samples)
        curve = PhaseShiftCurve(ell, k, np.zeros_like(k), 0.0, 2 * k_fermi, 0.0, 0.0)
        return ChannelData(ell, n_bound, 0.0, 0.0, curve)
    curve = build_curve(v, ell, 2 * k_fermi, n_samples)
    return ChannelData(ell, n_bound, eta_at(v, ell, k_fermi, curve), curve.eta_zero, curve)


def _channels(v, k_fermi, ell_max, table, workers, n_samples=64):
    return _map(lambda ell: channel_data(v, ell, k_fermi, table, n_samples), range(ell_max + 1), workers)


# ---------------------------------------------------------------- phase-shift side


def _sum(channels, beta, weight_bound=True):
    z = 0.0
    for c in channels:
        w = math.exp(-beta * c.ell * (c.ell + 1))
        nb = (2 * c.ell + 1) * c.n_bound
        z += (w if weight_bound else 1.0) * nb + w * (2 * c.ell + 1) * c.delta / math.pi
    return z


def beta_tail_bound(channels, beta):
    """Bound on ``|Z_beta - Z_0|`` from ``1 - exp(-x) <= x``."""
    return sum(
        beta * c.ell * (c.ell + 1) * (2 * c.ell + 1) * (abs(c.delta) / math.pi + c.n_bound) for c in channels
    )


def sum_rule_excess_charge(v: Potential, e_fermi: float, ell_max=None, beta=0.0, *, table=None, channels=None, workers=None):
    """Phase-shift side of the sum rule, truncated at ``ell_max``.

    Returns a dict with ``z`` (weights ``exp(-beta l(l+1))`` on the bound
    and scattering terms alike), ``n_b``, ``ell_max``, the Born-estimated
    truncation tail and the per-channel data.
    """
    k_f = _k_fermi(e_fermi)
    if beta < 0 or not math.isfinite(beta):
        raise ValidationError("friedel: beta must be finite and >= 0")
    if ell_max is None:
        ell_max = default_ell_max(v, k_f)
    if table is None:
        table = build_table(v, e_fermi, max(ell_max, max(0, channel_cutoff(v) - 1)))
    if channels is None:
        channels = _channels(v, k_f, ell_max, table, workers)
    return {
        "z": _sum(channels, beta),
        "n_b": table.n_b,
        "ell_max": ell_max,
        "truncation_bound": truncation_bound(v, k_f, ell_max),
        "beta_bound": beta_tail_bound(channels, beta),
        "channels": channels,
    }


def known_form_excess_charge(channels):
    """``(1/pi) sum (2l+1) eta_l(k_F)`` with no bound-state or threshold term."""
    return sum((2 * c.ell + 1) * c.eta_fermi for c in channels) / math.pi


# ---------------------------------------------------------------- density side


def remainder_g(ell, k, R, eta):
    """``g_l(k, R)`` of the density/phase-shift identity, from Riccati-Bessel data at ``kR``.

    With ``c = cos eta`` and ``s = sin eta``, ``g`` collects every term of
    ``int_0^R (|f|^2 - |f0|^2) dr - d eta / dk`` that does not vanish
    identically; each carries a factor ``s``.
    """
    b = riccati_bessel(ell, k * R)
    c, s = np.cos(eta), np.sin(eta)
    j, n, jd, nd, jdd, ndd = b.jhat, b.nhat, b.jhat_d, b.nhat_d, b.jhat_dd, b.nhat_dd
    return (
        -R * s * s * (jd * jd - j * jdd)
        + R * s * s * (nd * nd - n * ndd)
        - R * c * s * (2 * jd * nd - j * ndd - n * jdd)
        + (s * s / k) * (j * jd - n * nd)
        + (c * s / k) * (j * nd + n * jd)
    )


def _density_grid(v, ell, k_top, R):
    if R <= v.support_radius + 2.0:
        raise ValidationError(f"friedel: R={R!r} must exceed support_radius + 2 (the matching radii)")
    h = v.aligned_step(step_rule(v, ell, k_top * k_top))
    n = int(math.ceil(R / h)) + 8
    return h, n


def normalized_norms(v, free, ell, ks, R, h, n):
    """``int_0^R |f|^2`` for the asymptotically normalized ``V`` and free solutions at ``ks``."""
    e = ks * ks
    i_m = int(round((v.support_radius + 1.0) / h))
    out = []
    for pot in (v, free):
        _, f, _ = solve_batch(pot, ell, e, n, h)
        fm = f[:, i_m]
        fp = (f[:, i_m - 2] - 8 * f[:, i_m - 1] + 8 * f[:, i_m + 1] - f[:, i_m + 2]) / (12 * h)
        c1, c2 = asymptotic_coefficients(ks, ell, i_m * h, fm, fp)
        amp2 = 0.5 * (c1 * c1 + c2 * c2)
        out.append(norm_integrals(f, h, R) / amp2)
    return out[0], out[1]


def density_lhs(v, ell, ks, R, k_top=None):
    """``int_0^R (|f|^2 - |f0|^2) dr`` at each wavenumber in ``ks``."""
    ks = np.atleast_1d(np.asarray(ks, dtype=float))
    if v.is_zero:
        return np.zeros(ks.size)
    free = zero_potential(v.support_radius)
    h, n = _density_grid(v, ell, float(np.max(ks)) if k_top is None else k_top, R)
    res = np.empty(ks.size)
    for lo in range(0, ks.size, CHUNK):
        sl = slice(lo, lo + CHUNK)
        a, b = normalized_norms(v, free, ell, ks[sl], R, h, n)
        res[sl] = a - b
    return res


def resonance_points(curve, k_top):
    """Likely resonance positions inside ``(0, k_top)`` from the curve's refinement record."""
    pts = []
    for lo, hi in curve.refined_intervals:
        m = (curve.k_grid >= lo) & (curve.k_grid <= hi)
        kk, ee = curve.k_grid[m], curve.eta[m]
        if kk.size < 2:
            continue
        j = int(np.argmax(np.abs(np.diff(ee))))
        k_res = 0.5 * (kk[j] + kk[j + 1])
        if 0 < k_res < k_top:
            pts.append(float(k_res))
    return sorted(pts)


def k_panels(k_top, R, splits=()):
    """Gauss-Legendre nodes and weights on ``[0, k_top]``, panels at most ``pi/R`` wide."""
    edges = [0.0, *sorted(s for s in splits if 0 < s < k_top), k_top]
    x, w = np.polynomial.legendre.leggauss(PANEL_NODES)
    nodes, weights = [], []
    width = math.pi / R
    for a, b in zip(edges[:-1], edges[1:]):
        m = max(1, math.ceil((b - a) / width))
        sub = np.linspace(a, b, m + 1)
        for p, q in zip(sub[:-1], sub[1:]):
            nodes.append(p + 0.5 * (q - p) * (x + 1))
            weights.append(0.5 * (q - p) * w)
    return np.concatenate(nodes), np.concatenate(weights)


def density_channel(v, ell, k_fermi, R, splits=()):
    """``(1/pi) int_0^kF dk int_0^R (|f|^2 - |f0|^2) dr`` for one channel (no degeneracy factor)."""
    if v.is_zero:
        return 0.0
    k, w = k_panels(k_fermi, R, splits)
    return float(np.dot(w, density_lhs(v, ell, k, R, k_top=k_fermi)) / math.pi)


def density_excess_charge(v: Potential, e_fermi: float, R: float = DEFAULT_R, ell_max=None, *, table=None, channels=None, workers=None):
    """Excess charge from the density in the ball of radius ``R``.

    Returns ``(z_density, per_channel)`` where ``per_channel[l]`` is the
    channel's scattering contribution including its ``2l+1`` factor.

    Raises
    ------
    ValidationError
        If ``R`` does not leave room for the matching radii beyond the support.
    """
    k_f = _k_fermi(e_fermi)
    if not R > v.support_radius + 2.0:
        raise ValidationError(f"friedel: R={R!r} must exceed support_radius + 2")
    if ell_max is None:
        ell_max = default_ell_max(v, k_f)
    if table is None:
        table = build_table(v, e_fermi, max(ell_max, max(0, channel_cutoff(v) - 1)))

    def one(ell):
        splits = resonance_points(channels[ell].curve, k_f) if channels is not None else ()
        return (2 * ell + 1) * density_channel(v, ell, k_f, R, splits)

    per = _map(one, range(ell_max + 1), workers)
    return table.n_b + float(sum(per)), per


@dataclass(frozen=True)
class DensityCheck:
    ell: int
    k: float
    R: float
    lhs: float
    deta_dk: float
    g_value: float

    @property
    def residual(self):
        return abs(self.lhs - self.deta_dk - self.g_value)


def density_identity_check(v: Potential, ell: int, k: float, R: float, dk: float = 1e-3, curve=None):
    """Check ``int_0^R (|f|^2 - |f0|^2) dr = d eta/dk + g_l(k, R)`` at one point.

    ``d eta / dk`` is the fourth-order central difference of the unwrapped
    phase over ``k +- dk, k +- 2 dk``.

    Raises
    ------
    ValidationError
        If the stencil reaches ``k <= 0`` (too close to threshold).
    """
    if not k - 2 * dk > 0:
        raise ValidationError("friedel: finite-difference stencil reaches k <= 0; move k away from threshold")
    if v.is_zero:
        return DensityCheck(int(ell), float(k), float(R), 0.0, 0.0, float(remainder_g(ell, k, R, 0.0)))
    ks = k + dk * np.array([-2.0, -1.0, 0.0, 1.0, 2.0])
    raw = np.array([s.eta for s in phase_samples(v, ell, ks)])
    centre = raw[2] if curve is None else raw[2] + math.pi * round((float(curve.eta_at(k)) - raw[2]) / math.pi)
    eta = raw + math.pi * np.round((centre - raw) / math.pi)
    deta = (eta[0] - 8 * eta[1] + 8 * eta[3] - eta[4]) / (12 * dk)
    lhs = float(density_lhs(v, ell, [k], R)[0])
    return DensityCheck(int(ell), float(k), float(R), lhs, float(deta), float(remainder_g(ell, k, R, eta[2])))


# ---------------------------------------------------------------- oscillatory remainder


def oscillatory_tail(v: Potential, ell: int, k_fermi: float, R_list, curve=None):
    """``O(R) = int_0^kF (sin eta/k) cos(2kR + eta - pi l) dk`` for each ``R``.

    Without ``curve`` one is built fine enough for the largest ``R``.

    Raises
    ------
    ValidationError
        If the curve spacing is not well below ``pi / max(R)``.
    """
    R_list = [float(r) for r in R_list]
    if not R_list or any(r <= 0 for r in R_list):
        raise ValidationError("friedel: R_list must hold positive radii")
    if v.is_zero:
        return [0.0 for _ in R_list]
    r_top = max(R_list)
    if curve is None:
        n = max(64, math.ceil(8 * r_top * k_fermi / math.pi))
        curve = build_curve(v, ell, k_fermi, n)
    if curve.max_spacing > math.pi / (4 * r_top):
        raise ValidationError(
            f"friedel: curve spacing {curve.max_spacing:.3g} does not resolve pi/R = {math.pi / r_top:.3g};"
            " rebuild the curve with more samples"
        )
    out = []
    for R in R_list:
        k, w = k_panels(k_fermi, R)
        eta = curve.eta_at(k)
        out.append(float(np.dot(w, np.sin(eta) / k * np.cos(2 * k * R + eta - math.pi * ell))))
    return out


# ---------------------------------------------------------------- Levinson


@dataclass(frozen=True)
class LevinsonRow:
    ell: int
    eta_zero: float
    pi_n: float
    n_bound: int
    discrepancy: float
    flagged: bool
    note: str = ""


def levinson_check(v: Potential, ell_max=None, *, k_max=2.0, table=None, channels=None, tol=0.05):
    """Compare ``eta_l(0)`` with ``pi n_l`` channel by channel.

    A row is flagged when the two differ by more than ``tol``. Channel 0
    with bound states also carries a note: its threshold value is
    ``pi n_0``, not 0.
    """
    if ell_max is None:
        ell_max = max(1, channel_cutoff(v))
    if table is None:
        table = build_table(v, None, ell_max)
    rows = []
    for ell in range(ell_max + 1):
        if channels is not None and ell < len(channels):
            eta0 = channels[ell].eta_zero
        elif v.is_zero:
            eta0 = 0.0
        else:
            eta0 = build_curve(v, ell, k_max).eta_zero
        n = table.count(ell)
        d = abs(eta0 - math.pi * n)
        note = ""
        if ell == 0 and n > 0:
            note = f"s-wave threshold phase is pi*n_0 = {math.pi * n:.6f}, not 0"
        if d > tol:
            note = (note + "; " if note else "") + "threshold state or unresolved level suspected"
        rows.append(LevinsonRow(ell, float(eta0), math.pi * n, n, float(d), d > tol, note))
    return rows


# ---------------------------------------------------------------- full report


@dataclass(frozen=True)
class FriedelReport:
    e_fermi: float
    k_fermi: float
    z_sum_rule: float
    z_known_form: float
    z_beta: list
    z_density: float
    residual_sum_vs_density: float
    ell_max: int
    truncation_bound: float
    R: float
    n_b: int
    channels: list = field(default_factory=list)

    def to_dict(self):
        return asdict(self)


def friedel_report(v: Potential, e_fermi: float, R: float = DEFAULT_R, ell_max=None, betas=DEFAULT_BETAS, workers=None):
    """Both sides of the sum rule, the regularized sums and per-channel data."""
    k_f = _k_fermi(e_fermi)
    if ell_max is None:
        ell_max = default_ell_max(v, k_f)
    table = build_table(v, e_fermi, max(ell_max, max(0, channel_cutoff(v) - 1)))
    channels = _channels(v, k_f, ell_max, table, workers)
    # bound states in channels above ell_max still count
    extra_nb = sum((2 * l + 1) * table.count(l) for l in range(ell_max + 1, table.ell_max + 1))
    z_sum = _sum(channels, 0.0) + extra_nb
    z_density, per = density_excess_charge(v, e_fermi, R, ell_max, table=table, channels=channels, workers=workers)
    z_beta = [
        {"beta": float(b), "z_beta": _sum(channels, b) + extra_nb, "tail_bound": beta_tail_bound(channels, b)}
        for b in sorted(betas, reverse=True)
    ]
    chan = [
        {
            "ell": c.ell,
            "n_bound": c.n_bound,
            "eta_fermi": c.eta_fermi,
            "eta_zero": c.eta_zero,
            "phase_term": (2 * c.ell + 1) * c.delta / math.pi,
            "density_term": per[c.ell],
            "k_anchor": c.curve.k_anchor,
            "branch_certificate": c.curve.branch_certificate,
        }
        for c in channels
    ]
    return FriedelReport(
        e_fermi=float(e_fermi),
        k_fermi=k_f,
        z_sum_rule=z_sum,
        z_known_form=known_form_excess_charge(channels),
        z_beta=z_beta,
        z_density=z_density,
        residual_sum_vs_density=abs(z_sum - z_density),
        ell_max=int(ell_max),
        truncation_bound=truncation_bound(v, k_f, ell_max),
        R=float(R),
        n_b=table.n_b,
        channels=chan,
    )
