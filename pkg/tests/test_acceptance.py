"""Acceptance suite: one test (or parametrized group) per criterion.

Each test records ``criterion`` and a short ``detail`` string; conftest
prints one pass/fail line per criterion in the terminal summary.
"""

import math
import time

import numpy as np
import pytest

from friedelsum.boundstates import build_table
from friedelsum.finitebox import scan
from friedelsum.friedel import (
    channel_data,
    density_excess_charge,
    density_identity_check,
    friedel_report,
    levinson_check,
    oscillatory_tail,
    sum_rule_excess_charge,
)
from friedelsum.phaseshift import build_curve
from friedelsum.potential import square_well, zero_potential
from friedelsum.radial import integrate_regular, normalization_identity_check
from friedelsum.specfun import riccati_bessel

E_FERMI = (0.5, 1.0, 2.0)


def _potential(name):
    return {"well": square_well(-5.0, 1.0), "barrier": square_well(5.0, 1.0)}[name]


# ------------------------------------------------------------------ 1


def _gaps(v):
    """Sum-rule charge and density gaps at R=60 and R=120 for each Fermi energy."""
    rows = []
    for e_f in E_FERMI:
        out = sum_rule_excess_charge(v, e_f)
        table = build_table(v, e_f, max(out["ell_max"], 0))
        z60, _ = density_excess_charge(v, e_f, 60.0, out["ell_max"], table=table, channels=out["channels"])
        z120, _ = density_excess_charge(v, e_f, 120.0, out["ell_max"], table=table, channels=out["channels"])
        rows.append((e_f, out, abs(out["z"] - z60), abs(out["z"] - z120), z60, z120))
    return rows


_GAP_CACHE = {}


def _cached_gaps(name):
    if name not in _GAP_CACHE:
        t0 = time.perf_counter()
        rows = _gaps(_potential(name))
        _GAP_CACHE[name] = (rows, time.perf_counter() - t0)
    return _GAP_CACHE[name]


@pytest.mark.parametrize("name", ["well", "barrier"])
def test_c1_sum_rule_vs_density(name, record_property):
    rows, elapsed = _cached_gaps(name)
    ok_gap = all(g60 <= 0.02 for _, _, g60, _, _, _ in rows)
    ok_ratio = all(g120 <= 0.6 * g60 for _, _, g60, g120, _, _ in rows)
    detail = "; ".join(f"E_F={e}: gap60={g60:.2e} ratio={g120 / g60:.2f}" for e, _, g60, g120, _, _ in rows)
    record_property("criterion", "1")
    record_property("detail", f"{name} {detail}; {elapsed:.1f}s")
    assert elapsed <= 120.0
    assert ok_gap
    assert ok_ratio


@pytest.mark.parametrize("name", ["well", "barrier"])
def test_c1_gap_is_boundary_term_with_halving_envelope(name, record_property):
    """Supplementary: the R=60 and R=120 gaps are the 1/R boundary oscillation.

    The gap is ``-(1/pi) sum_l (2l+1) (sin eta_F / k_F) sin(2 k_F R + eta_F - pi l) / (2R)``
    up to higher order, so its envelope halves from R=60 to R=120 while the
    ratio of the gaps themselves depends on the oscillation phase.
    """
    rows, _ = _cached_gaps(name)
    worst = 0.0
    halved = []
    for e_f, out, _, _, z60, z120 in rows:
        k_f = math.sqrt(e_f)
        env = {}
        for R, z in ((60.0, z60), (120.0, z120)):
            pred = 0.0
            amp = 0.0
            for c in out["channels"]:
                s = math.sin(c.eta_fermi) / k_f
                pred -= (2 * c.ell + 1) * s * math.sin(2 * k_f * R + c.eta_fermi - math.pi * c.ell) / (2 * R) / math.pi
                amp += (2 * c.ell + 1) * abs(s) / (2 * R) / math.pi
            worst = max(worst, abs((z - out["z"]) - pred))
            env[R] = amp
        halved.append(env[120.0] / env[60.0])
    record_property("criterion", "1-envelope")
    record_property("detail", f"{name} max |gap - boundary term| = {worst:.1e}, envelope ratio {max(halved):.3f}")
    assert worst < 1e-3
    assert all(abs(h - 0.5) < 1e-12 for h in halved)


# ------------------------------------------------------------------ 2


def _closed_form_principal(v0, a, k):
    """Interior matching for a square well or barrier: tan(ka + eta) = (k/k') tan(k'a)."""
    k = np.asarray(k, dtype=float)
    q2 = k * k - v0
    kp = np.sqrt(np.abs(q2))
    with np.errstate(all="ignore"):
        ratio = np.where(q2 > 0, k / kp * np.tan(kp * a), k / kp * np.tanh(kp * a))
    return np.arctan(ratio) - k * a


def _closed_form_unwrapped(v0, a, k_samples):
    """Closed form continued on the branch that vanishes at large k."""
    dense = 1e-3 * np.arange(1, 300001)
    p = _closed_form_principal(v0, a, dense)
    u = np.unwrap(p, period=math.pi)
    # far out the phase is Born-small, which fixes the multiple of pi
    u -= math.pi * round(u[-1] / math.pi)
    base = np.interp(k_samples, dense, u)
    p_s = _closed_form_principal(v0, a, k_samples)
    return p_s + math.pi * np.round((base - p_s) / math.pi)


@pytest.mark.parametrize("v0", [-5.0, 5.0])
def test_c2_closed_form_s_wave(v0, record_property):
    v = square_well(v0, 1.0)
    curve = build_curve(v, 0, 3.0, 50)
    ks, eta = curve.k_grid[-50:], curve.eta[-50:]
    assert np.allclose(ks, 3.0 * np.arange(1, 51) / 50)
    err = float(np.max(np.abs(eta - _closed_form_unwrapped(v0, 1.0, ks))))
    record_property("criterion", "2")
    record_property("detail", f"V0={v0}: max error {err:.1e} rad")
    assert err <= 1e-6


# ------------------------------------------------------------------ 3

# sqrt|V0| a = root; s-wave thresholds at (n - 1/2) pi, p-wave at pi, 2 pi, ...
LEVINSON_WELLS = [(1.0, (0, 0)), (2.5, (1, 0)), (5.5, (2, 1)), (3.8, (1, 1))]


@pytest.mark.parametrize("root, expected", LEVINSON_WELLS)
def test_c3_levinson(root, expected, record_property):
    rows = levinson_check(square_well(-root * root, 1.0), 2)
    assert (rows[0].n_bound, rows[1].n_bound) == expected
    worst = max(abs(r.eta_zero - math.pi * r.n_bound) for r in rows)
    record_property("criterion", "3")
    record_property("detail", f"sqrt|V0|a={root}: n_l={[r.n_bound for r in rows]} max |eta(0) - pi n| = {worst:.1e}")
    assert worst <= 0.05


# ------------------------------------------------------------------ 4


def _asymptotic_norm(v, ell, k, sol):
    r_m = v.support_radius + 1.0
    b = riccati_bessel(ell, k * r_m)
    f, fp = sol.value_at(r_m), sol.derivative_at(r_m)
    c1 = f * b.nhat_d - fp / k * b.nhat
    c2 = fp / k * b.jhat - f * b.jhat_d
    return sol.scaled(1.0 / math.sqrt(0.5 * (c1 * c1 + c2 * c2)))


@pytest.mark.parametrize(
    "v0, ell, k, R", [(0.0, 0, 1.0, 10 * math.pi), (0.0, 2, 2.0, 30.0), (-5.0, 0, 1.0, 40.0)]
)
def test_c4_normalization_identity(v0, ell, k, R, record_property):
    v = square_well(v0, 1.0)
    dk = 1e-4
    a = integrate_regular(v, ell, (k - dk / 2) ** 2, r_max=R + 1)
    b = integrate_regular(v, ell, (k + dk / 2) ** 2, r_max=R + 1, h=a.h)
    res = normalization_identity_check(_asymptotic_norm(v, ell, k - dk / 2, a), _asymptotic_norm(v, ell, k + dk / 2, b), R)
    record_property("criterion", "4")
    record_property("detail", f"V0={v0} l={ell} k={k} R={R:.4g}: residual {res:.1e}")
    assert res < 1e-3


# ------------------------------------------------------------------ 5


def test_c5_density_identity(well, free, record_property):
    a = density_identity_check(well, 0, 1.0, 40.0)
    b = density_identity_check(well, 0, 1.0, 40.0 + math.pi / 2)
    z = density_identity_check(free, 0, 1.0, 40.0)
    record_property("criterion", "5")
    record_property(
        "detail", f"residual {a.residual:.1e}, shifted R {b.residual:.1e}, free {z.residual:.1e}"
    )
    assert a.residual < 1e-3
    assert b.residual < 1e-3 and abs(a.residual - b.residual) < 1e-3
    assert z.residual <= 1e-12 and abs(z.lhs) <= 1e-12 and abs(z.deta_dk + z.g_value) <= 1e-12


# ------------------------------------------------------------------ 6


def test_c6_riemann_lebesgue_decay(well, record_property):
    R = np.array([20.0, 40.0, 80.0, 160.0])
    o = np.abs(oscillatory_tail(well, 0, 1.0, R))
    slope = float(np.polyfit(np.log(R), np.log(o), 1)[0])
    record_property("criterion", "6")
    record_property("detail", f"|O(R)|={np.array2string(o, precision=3)} slope {slope:.2f}")
    assert slope < 0


# ------------------------------------------------------------------ 7


@pytest.mark.parametrize("name", ["well", "barrier"])
@pytest.mark.parametrize("ell", [0, 1, 2])
def test_c7_threshold_slope(name, ell, record_property):
    curve = build_curve(_potential(name), ell, 2.0)
    slope = curve.threshold_slope(3)  # |eta - pi n_l|, the distance from the threshold value
    bound = 1 if ell == 0 else 2 * ell - 1
    record_property("criterion", "7")
    record_property("detail", f"{name} l={ell}: slope {slope:.7f} >= {bound}")
    assert slope >= bound


# ------------------------------------------------------------------ 8


def test_c8_wronskian_suite(record_property):
    rho = np.logspace(-2, 3, 200)
    worst = max(float(np.max(np.abs(riccati_bessel(ell, rho).wronskian() - 1.0))) for ell in range(21))
    record_property("criterion", "8")
    record_property("detail", f"max residual {worst:.1e}")
    assert worst <= 1e-10


# ------------------------------------------------------------------ 9


def test_c9_kirsch_scan(well, record_property):
    s = scan(well, 1.0, 10.0, 200.0, 1.0)
    s0 = scan(zero_potential(well.support_radius), 1.0, 10.0, 200.0, 1.0)
    distinct = s.fluctuation_stats["last_third_distinct"]
    record_property("criterion", "9")
    record_property("detail", f"{distinct} distinct values of D in the final third; free max |D| = {int(np.abs(s0.d_values).max())}")
    assert distinct >= 2
    assert np.all(s0.d_values == 0)


# ------------------------------------------------------------------ 10


def test_c10_trivial_gauge(free, record_property):
    rep = friedel_report(free, 1.0, 60.0)
    table = build_table(free, 1.0)
    empty = table.n_b == 0 and not list(table.rows())
    c = channel_data(free, 0, 1.0)
    record_property("criterion", "10")
    record_property("detail", f"z_sum_rule={rep.z_sum_rule!r} z_density={rep.z_density!r} bound rows={len(list(table.rows()))}")
    assert abs(rep.z_sum_rule) <= 1e-12 and abs(rep.z_density) <= 1e-12
    assert empty and rep.n_b == 0
    assert c.eta_fermi == 0.0 and c.eta_zero == 0.0
