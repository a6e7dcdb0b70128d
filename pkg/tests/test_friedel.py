import math

import numpy as np
import pytest

from friedelsum.errors import ValidationError
from friedelsum.friedel import (
    born_phase,
    channel_data,
    default_ell_max,
    density_channel,
    density_excess_charge,
    density_identity_check,
    friedel_report,
    k_panels,
    known_form_excess_charge,
    levinson_check,
    oscillatory_tail,
    remainder_g,
    sum_rule_excess_charge,
)
from friedelsum.phaseshift import build_curve
from friedelsum.potential import square_well


@pytest.fixture(scope="module")
def well_report(well):
    return friedel_report(well, 1.0, 60.0)


def test_free_everything_zero(free):
    rep = friedel_report(free, 1.0, 60.0)
    assert rep.z_sum_rule == 0.0 and rep.z_density == 0.0 and rep.z_known_form == 0.0
    assert rep.n_b == 0
    assert all(b["z_beta"] == 0.0 for b in rep.z_beta)


def test_k_fermi_is_sqrt(well_report):
    assert well_report.k_fermi == math.sqrt(well_report.e_fermi)


def test_well_sum_rule_matches_density(well_report):
    assert well_report.residual_sum_vs_density <= 0.02
    assert well_report.n_b == 1


def test_barrier_expels_charge(barrier):
    out = sum_rule_excess_charge(barrier, 1.0)
    assert out["z"] < 0 and out["n_b"] == 0
    z_d, _ = density_excess_charge(barrier, 1.0, 60.0)
    assert z_d < 0 and abs(out["z"] - z_d) < 0.02


def test_known_form_vs_sum_rule(barrier, well_report):
    out = sum_rule_excess_charge(barrier, 1.0)
    assert known_form_excess_charge(out["channels"]) == pytest.approx(out["z"], abs=1e-9)
    # with bound states the two agree exactly when Levinson holds channel by channel
    assert abs(well_report.z_known_form - well_report.z_sum_rule) < 0.05


def test_beta_regularization(well_report):
    z0 = well_report.z_sum_rule
    rows = well_report.z_beta
    bounds = [r["tail_bound"] for r in rows]
    assert bounds == sorted(bounds, reverse=True)
    for r in rows:
        assert abs(r["z_beta"] - z0) <= r["tail_bound"] + 1e-15
    small = [r for r in rows if r["beta"] <= 1e-3]
    assert small and all(abs(r["z_beta"] - z0) < 0.01 for r in small)


def test_phase_and_density_terms_per_channel(well_report):
    for ch in well_report.channels:
        assert abs(ch["phase_term"] - ch["density_term"]) < 0.01


def test_channel_decay(well):
    k_f = 1.0
    start = int(k_f * well.support_radius + 2) + 1
    etas = [abs(channel_data(well, ell, k_f).eta_fermi) for ell in range(start, start + 3)]
    assert etas[0] > etas[1] > etas[2]
    assert etas[1] / etas[0] > etas[2] / etas[1]  # ratio keeps shrinking


def test_born_estimate_tracks_high_channels(well):
    for ell in (5, 6):
        exact = channel_data(well, ell, 1.0).eta_fermi
        assert born_phase(well, ell, 1.0) == pytest.approx(exact, rel=0.2)


def test_default_ell_max(well):
    ell = default_ell_max(well, 1.0)
    assert abs(born_phase(well, ell, 1.0)) < 1e-10
    assert abs(born_phase(well, ell - 1, 1.0)) >= 1e-10
    assert ell <= 10


def test_remainder_for_free_and_s_wave():
    for ell in (0, 2, 5):
        assert remainder_g(ell, 1.3, 40.0, 0.0) == 0.0
    k, R, eta = 1.1, 37.0, 0.7
    assert remainder_g(0, k, R, eta) == pytest.approx(-math.sin(eta) / k * math.cos(2 * k * R + eta), abs=1e-12)


@pytest.mark.parametrize("R", [40.0, 40.0 + math.pi / 2])
def test_density_identity(well, R):
    d = density_identity_check(well, 0, 1.0, R)
    assert d.residual < 1e-3


def test_density_identity_moves_with_R(well):
    a = density_identity_check(well, 0, 1.0, 40.0)
    b = density_identity_check(well, 0, 1.0, 40.0 + math.pi / 2)
    assert abs(a.g_value - b.g_value) > 0.5
    assert a.deta_dk == b.deta_dk


@pytest.mark.parametrize("ell", [1, 2])
def test_density_identity_higher_channels(well, ell):
    assert density_identity_check(well, ell, 1.5, 30.0).residual < 1e-6


def test_density_identity_free(free):
    d = density_identity_check(free, 0, 1.0, 40.0)
    assert d.residual < 1e-12 and d.lhs == 0.0 and d.g_value == 0.0


def test_density_identity_stencil_guard(well):
    with pytest.raises(ValidationError):
        density_identity_check(well, 0, 1e-3, 40.0)


def test_density_requires_room(well):
    with pytest.raises(ValidationError):
        density_excess_charge(well, 1.0, 2.5)
    with pytest.raises(ValidationError):
        sum_rule_excess_charge(well, -1.0)


def test_k_panels_integrate_polynomials():
    k, w = k_panels(1.3, 60.0, splits=(0.4,))
    assert np.dot(w, k**5) == pytest.approx(1.3**6 / 6, rel=1e-13)
    assert np.max(np.diff(np.sort(k))) < math.pi / 60


def test_oscillatory_tail(free, well):
    assert oscillatory_tail(free, 0, 1.0, [20, 40]) == [0.0, 0.0]
    o = oscillatory_tail(well, 0, 1.0, [20.0, 200.0])
    assert abs(o[1]) < abs(o[0])


def test_oscillatory_tail_undersampled(well):
    coarse = build_curve(well, 0, 1.0, 16)
    with pytest.raises(ValidationError, match="spacing"):
        oscillatory_tail(well, 0, 1.0, [200.0], curve=coarse)


def test_density_channel_matches_tail_prediction(well):
    # s-wave gap to the phase-shift side is the boundary term of the oscillatory integral
    R, k_f = 60.0, 1.0
    c = channel_data(well, 0, k_f)
    gap = density_channel(well, 0, k_f, R) - c.delta / math.pi
    pred = -math.sin(c.eta_fermi) / k_f * math.sin(2 * k_f * R + c.eta_fermi) / (2 * R) / math.pi
    assert gap == pytest.approx(pred, abs=1e-4)


def test_levinson_free(free):
    rows = levinson_check(free, 3)
    assert all(r.discrepancy == 0.0 and not r.flagged for r in rows)


def test_levinson_two_s_states():
    v = square_well(-5.5**2, 1.0)  # n_0 = 2, n_1 = 1, n_2 = 1
    rows = levinson_check(v, 3)
    assert rows[0].n_bound == 2 and rows[0].eta_zero == pytest.approx(2 * math.pi, abs=0.05)
    assert "not 0" in rows[0].note
    assert rows[1].eta_zero == pytest.approx(math.pi, abs=0.05)
    assert not any(r.flagged for r in rows)


def test_levinson_p_wave():
    rows = levinson_check(square_well(-3.8**2, 1.0), 2)
    assert rows[1].n_bound == 1 and rows[1].eta_zero == pytest.approx(math.pi, abs=0.05)
