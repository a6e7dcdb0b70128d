"""Regular solutions of the radial Schrodinger equation.

Solves ``f'' + [E - V(r) - l(l+1)/r^2] f = 0`` with ``f(0) = 0`` by the
Numerov method on a uniform grid ``r_i = i*h``. ``E = k^2`` for scattering
and ``E < 0`` for the bound-state search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson
from scipy.interpolate import barycentric_interpolate

from ._numerov import numerov_march
from .errors import GridMismatchError, StepTooLargeError, ValidationError
from .potential import Potential
from .specfun import riccati_bessel

POINTS_PER_WAVELENGTH = 40
POINTS_PER_SUPPORT = 200
_INTERP_POINTS = 8


def step_rule(v, ell, energy):
    """Largest admissible Numerov step for ``(l, E)``.

    ``h <= min(2 pi / (40 k_local), rs / 200)``; ``energy`` may be an array,
    in which case the rule covers all of them.
    """
    e = np.atleast_1d(np.asarray(energy, dtype=float))
    spread = max(float(np.max(np.abs(e - v.v_min))), float(np.max(np.abs(e - v.v_max))))
    k_local = math.sqrt(spread + ell * (ell + 1) / v.support_radius**2)
    h_max = v.support_radius / POINTS_PER_SUPPORT
    if k_local > 0:
        h_max = min(h_max, 2 * math.pi / (POINTS_PER_WAVELENGTH * k_local))
    return h_max


def default_step(v, ell, energy):
    """Step from :func:`step_rule`, shrunk so the support edge is a grid point."""
    return v.aligned_step(step_rule(v, ell, energy))


def default_r_max(v, k):
    """``rs + max(10, 4 pi / k)``."""
    return v.support_radius + max(10.0, 4 * math.pi / k)


def start_index(ell):
    """First seeded grid index; keeps ``1 + h^2 g / 12`` well away from 0."""
    return max(1, math.ceil(math.sqrt(ell * (ell + 1) / 6.0)))


@dataclass(frozen=True, eq=False)
class RadialSolution:
    """Regular solution on the grid ``r_i = i*h``, up to a positive scale.

    ``f`` is stored as integrated; the true amplitude is
    ``f * exp(log_scale)`` where that matters (it rarely does: phases,
    nodes and log-derivatives are scale free).
    """

    ell: int
    energy: float
    h: float
    r: np.ndarray
    f: np.ndarray
    log_scale: float = 0.0

    @property
    def r_max(self):
        return float(self.r[-1])

    @property
    def f_prime(self):
        """Derivative on the grid: 5-point stencil, one-sided near the ends."""
        return np.gradient(self.f, self.h, edge_order=2) if self.f.size < 5 else _stencil(self.f, self.h)

    def index_of(self, r):
        i = int(round(r / self.h))
        if abs(i * self.h - r) > 1e-9 * max(1.0, r):
            raise ValidationError(f"radial: r={r!r} is not a grid point")
        return i

    def derivative_at_index(self, i):
        if not 2 <= i <= self.f.size - 3:
            raise ValidationError("radial: 5-point stencil needs two grid points on each side")
        f = self.f
        return (f[i - 2] - 8 * f[i - 1] + 8 * f[i + 1] - f[i + 2]) / (12 * self.h)

    def _window(self, r):
        i = int(r / self.h)
        lo = min(max(0, i - _INTERP_POINTS // 2 + 1), self.f.size - _INTERP_POINTS)
        if lo < 0 or r > self.r[-1]:
            raise ValidationError(f"radial: r={r!r} outside the integrated range")
        return slice(lo, lo + _INTERP_POINTS)

    def value_at(self, r):
        """``f(r)`` by 8-point Lagrange interpolation (exact on grid points)."""
        i = int(round(r / self.h))
        if abs(i * self.h - r) <= 1e-12 * max(1.0, r) and i < self.f.size:
            return float(self.f[i])
        w = self._window(r)
        return float(barycentric_interpolate(self.r[w], self.f[w], r))

    def derivative_at(self, r):
        """``f'(r)``: 5-point stencil on grid points, else differentiated interpolant."""
        i = int(round(r / self.h))
        if abs(i * self.h - r) <= 1e-12 * max(1.0, r):
            return float(self.derivative_at_index(i))
        w = self._window(r)
        return float(barycentric_interpolate(self.r[w], self.f[w], r, der=1))

    def nodes(self, r_end=None):
        """Number of sign changes of ``f`` strictly inside ``(0, r_end)``."""
        if r_end is None:
            return _count_nodes(self.f)
        i = int(math.floor(r_end / self.h + 1e-9))
        vals = self.f[: i + 1]
        if abs(i * self.h - r_end) > 1e-9 * max(1.0, r_end):
            vals = np.append(vals, self.value_at(r_end))
        return _count_nodes(vals)

    def norm_integral(self, R):
        """``int_0^R f^2 dr`` in the stored scale (see :func:`norm_integrals`)."""
        return float(norm_integrals(self.f[None, :], self.h, R)[0])

    def scaled(self, factor):
        """Copy with ``f`` multiplied by ``factor``."""
        return RadialSolution(self.ell, self.energy, self.h, self.r, self.f * factor, self.log_scale)


def norm_integrals(f, h, R):
    """``int_0^R f_m(r)^2 dr`` for every row of ``f`` sampled at ``r_i = i*h``.

    Simpson's rule over whole grid cells, plus an 8-node Gauss-Legendre
    rule on the 8-point interpolant for a trailing partial cell.
    """
    f = np.atleast_2d(f)
    i = int(math.floor(R / h + 1e-9))
    if i + _INTERP_POINTS // 2 >= f.shape[1]:
        raise ValidationError("radial: R beyond the integrated range")
    total = simpson(f[:, : i + 1] ** 2, dx=h, axis=1) if i >= 1 else np.zeros(f.shape[0])
    r_i = i * h
    if R - r_i > 1e-12 * max(1.0, R):
        x, wts = np.polynomial.legendre.leggauss(8)
        nodes = r_i + 0.5 * (R - r_i) * (x + 1)
        lo = max(0, i - _INTERP_POINTS // 2 + 1)
        grid = h * np.arange(lo, lo + _INTERP_POINTS)
        vals = barycentric_interpolate(grid, f[:, lo : lo + _INTERP_POINTS], nodes, axis=1)
        total = total + 0.5 * (R - r_i) * (vals**2 @ wts)
    return total


def _stencil(f, h):
    d = np.empty_like(f)
    d[2:-2] = (f[:-4] - 8 * f[1:-3] + 8 * f[3:-1] - f[4:]) / (12 * h)
    d[:2] = np.gradient(f[:3], h, edge_order=2)[:2]
    d[-2:] = np.gradient(f[-3:], h, edge_order=2)[-2:]
    return d


def _count_nodes(vals):
    s = np.sign(vals)
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))


def centrifugal_q(v, ell, r):
    """``-V(r) - l(l+1)/r^2`` on the grid, the energy-independent part of ``g``."""
    q = -v.on_grid(r)
    with np.errstate(divide="ignore"):
        q[1:] -= ell * (ell + 1) / r[1:] ** 2
    q[0] = 0.0
    return q


def solve_batch(v, ell, energies, n_points, h):
    """Regular solutions for several energies on one grid.

    Returns ``(r, f, log_scale)`` with ``f`` of shape ``(len(energies), n_points)``.
    """
    energies = np.ascontiguousarray(np.atleast_1d(energies), dtype=float)
    r = h * np.arange(n_points)
    q = centrifugal_q(v, ell, r)
    i0 = start_index(ell)
    if i0 + 2 > n_points:
        raise ValidationError("radial: grid too short for the requested channel")
    r0, r1 = i0 * h, (i0 + 1) * h
    v0 = v.evaluate(0.0)
    a = -(energies - v0) / (2 * (2 * ell + 3))
    start0 = 1.0 + a * r0 * r0
    start1 = ((i0 + 1) / i0) ** (ell + 1) * (1.0 + a * r1 * r1)
    out = np.empty((energies.size, n_points))
    log_scale = numerov_march(q, v.jumps_on_grid(r), energies, h, i0, start0, start1, out)
    log_scale = log_scale + (ell + 1) * math.log(r0)
    return r, out, log_scale


def integrate_regular(v: Potential, ell: int, energy: float, r_max: float | None = None, h: float | None = None):
    """Numerov-integrate the regular solution from the origin to ``r_max``.

    The grid carries three extra points beyond ``r_max`` so that the
    5-point derivative is available there.

    Raises
    ------
    StepTooLargeError
        If ``h`` violates :func:`step_rule`.
    """
    if int(ell) != ell or ell < 0:
        raise ValidationError("radial: ell must be a non-negative integer")
    ell = int(ell)
    if r_max is None:
        k = math.sqrt(abs(energy)) or 1.0
        r_max = default_r_max(v, k)
    if r_max <= v.support_radius:
        raise ValidationError("radial: r_max must exceed the support radius")
    h_max = step_rule(v, ell, energy)
    if h is None:
        h = v.aligned_step(h_max)
    elif h > h_max * (1 + 1e-12):
        raise StepTooLargeError(f"radial: step h={h!r} exceeds the step rule bound {h_max!r}")
    n = int(math.ceil(r_max / h - 1e-9)) + 3
    r, f, ls = solve_batch(v, ell, [energy], n, h)
    return RadialSolution(ell, float(energy), float(h), r, f[0], float(ls[0]))


def asymptotic_coefficients(k, ell, r_m, f, fp):
    """Coefficients ``(c1, c2)`` with ``f = c1 jhat(kr) + c2 nhat(kr)`` beyond the support.

    Uses the unit Wronskian: ``c1 = f nhat' - (f'/k) nhat``,
    ``c2 = (f'/k) jhat - f jhat'``.
    """
    b = riccati_bessel(ell, k * r_m)
    g = fp / k
    return f * b.nhat_d - g * b.nhat, g * b.jhat - f * b.jhat_d


def normalization_identity_check(sol: RadialSolution, sol_dk: RadialSolution, R: float):
    """Residual of the k-derivative form of ``int_0^R |f|^2 dr``.

    The left side
    ``(1/2k) [d_k f(R) d_r f(R) - f(R) d_k d_r f(R)]`` is formed by a
    central difference between the two solutions (evaluated at the mean
    wavenumber), and compared with the mean of their quadratures. Both
    solutions must share the grid and channel and be normalized to the
    asymptotic convention.
    """
    if sol.ell != sol_dk.ell or sol.h != sol_dk.h or sol.r.size != sol_dk.r.size:
        raise GridMismatchError("radial: solutions must share grid and channel")
    k1, k2 = math.sqrt(sol.energy), math.sqrt(sol_dk.energy)
    if not k2 > k1:
        raise ValidationError("radial: sol_dk must be at a larger wavenumber")
    dk = k2 - k1
    km = 0.5 * (k1 + k2)
    f1, f2 = sol.value_at(R), sol_dk.value_at(R)
    d1, d2 = sol.derivative_at(R), sol_dk.derivative_at(R)
    f_m, d_m = 0.5 * (f1 + f2), 0.5 * (d1 + d2)
    dfdk, dfpdk = (f2 - f1) / dk, (d2 - d1) / dk
    lhs = (dfdk * d_m - f_m * dfpdk) / (2 * km)
    rhs = 0.5 * (sol.norm_integral(R) + sol_dk.norm_integral(R))
    return abs(lhs - rhs)


def numerov_defect(v, ell, energy, f_exact, h):
    """Residual of the integrator's three-point relation on exact samples ``f_exact[i] = f(i*h)``."""
    r = h * np.arange(len(f_exact))
    q = centrifugal_q(v, ell, r)
    dv = v.jumps_on_grid(r)
    c = h * h / 12.0
    f = np.asarray(f_exact)
    w_prev = 1.0 + c * (energy + q[:-2] - 0.5 * dv[:-2])
    w_next = 1.0 + c * (energy + q[2:] + 0.5 * dv[2:])
    w_cur = 1.0 + c * (energy + q[1:-1])
    fix = 0.5 * c * dv[1:-1]
    return (w_next - fix) * f[2:] - (12.0 - 10.0 * w_cur) * f[1:-1] + (w_prev + fix) * f[:-2]
