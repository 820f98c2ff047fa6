import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vapordet import model
from vapordet.model import (
    absorption_length,
    atom_count,
    collision_time,
    dark_count_prob,
    design_from_dict,
    efficiency_budget,
    net_dark_count,
    readout_time,
    summary,
    zeeman_detuning,
)
from vapordet.species import validate_units

KEYS = ("N", "P_dc", "net_dark_linear", "net_dark_exact", "tau_col", "l_abs", "t_ro",
        "delta_zeeman", "loss_scatter", "loss_transmission", "loss_collision", "eta")


@pytest.mark.parametrize("convention", ["ordinary", "angular"])
def test_summary_matches_golden(design, golden, convention):
    got = summary(design, convention)
    for key in KEYS:
        assert got[key] == pytest.approx(golden[convention][key], rel=1e-9), key


def test_collision_time_scaling(design):
    tau = collision_time(design)
    assert collision_time(design.replace(n_density=2e15)) == pytest.approx(tau / 2, rel=1e-15)
    assert collision_time(design.replace(temperature=4e-3)) == pytest.approx(tau / 2, rel=1e-15)


@pytest.mark.parametrize("field", ["temperature", "n_density"])
def test_collision_time_rejects_non_positive(design, field):
    with pytest.raises(ValueError):
        collision_time(design.replace(**{field: 0.0}))


def test_absorption_length_scaling(design):
    l = absorption_length(design)
    assert absorption_length(design.replace(detuning=1e9)) == pytest.approx(4 * l, rel=1e-15)
    assert absorption_length(design.replace(omega_e=2 * design.omega_e)) == pytest.approx(l / 4, rel=1e-15)


def test_readout_time_limits(design):
    A = design.species.A_24
    t = readout_time(design)
    assert t == pytest.approx(A / (design.omega_r**2 * design.eta_det), rel=1e-3)
    assert readout_time(design.replace(eta_det=design.eta_det / 2)) == pytest.approx(2 * t, rel=1e-15)
    limit = 2 / (A * design.eta_det)
    gaps = [readout_time(design.replace(omega_r=w * A)) - limit for w in (1, 10, 100, 1000)]
    assert all(g > 0 for g in gaps)
    assert gaps == sorted(gaps, reverse=True)
    assert gaps[-1] / limit < 1e-6


def test_readout_time_rejects_zero_eta_det(design):
    with pytest.raises(ValueError):
        readout_time(design.replace(eta_det=0.0))


def test_zeeman_detuning(design):
    assert zeeman_detuning(design.replace(B_field=0.0)) == 0.0
    # mu_B / h = 1.39962449e10 Hz/T
    assert zeeman_detuning(design) == pytest.approx(2 * 1.39962449e10 / 3, rel=1e-8)
    assert zeeman_detuning(design.replace(B_field=3.0)) == pytest.approx(3 * zeeman_detuning(design), rel=1e-15)
    assert zeeman_detuning(design, "angular") == pytest.approx(2 * math.pi * zeeman_detuning(design), rel=1e-15)


def test_dark_count_prob(design):
    assert 1e-5 <= dark_count_prob(design) <= 4e-5
    zero = design.replace(B_field=0.0)
    assert dark_count_prob(zero) == pytest.approx(readout_time(zero) * design.species.A_42 / 2, rel=1e-14)
    assert dark_count_prob(design.replace(B_field=1e3)) < 1e-10 * dark_count_prob(zero)


def test_atom_count(design):
    assert atom_count(design) == 20000
    assert atom_count(design.replace(beam_area=0.0)) == 0
    assert atom_count(design.replace(cell_length=4e-3)) == 40000


def test_net_dark_count_reference_values():
    linear, exact = net_dark_count(p_dc=2e-5, n_atoms=20000)
    assert linear == 0.4
    assert exact == pytest.approx(1 - (1 - 2e-5) ** 20000, abs=1e-12)
    assert exact == pytest.approx(0.3297, abs=5e-5)
    assert net_dark_count(p_dc=0.0, n_atoms=20000) == (0.0, 0.0)


def test_budget_on_paper_design_is_not_clamped(design):
    b = efficiency_budget(design)
    assert not b.clamped and b.valid
    assert b.eta == pytest.approx(1 - b.total_loss, rel=1e-15)


def test_budget_large_q_limit(design):
    d = design.replace(passes=1e9, eta_up=0.9)
    b = efficiency_budget(d)
    assert b.loss_transmission == 0.0
    assert b.eta == pytest.approx(0.9, rel=1e-5)


def test_budget_zero_escort(design):
    b = efficiency_budget(design.replace(omega_e=0.0))
    assert b.loss_scatter == 0.0
    assert b.loss_transmission == 1.0
    assert b.eta == pytest.approx(0.0, abs=1e-5)


def test_budget_clamps_and_flags(design):
    # strong escort close to resonance: scattering term far above 1
    b = efficiency_budget(design.replace(omega_e=1e10, detuning=1e9))
    assert b.eta == 0.0 and b.clamped and not b.valid
    assert b.warnings


def test_design_from_dict_units(design):
    d = design_from_dict({
        "n_density_cm3": 1e9, "temperature_mK": 1, "pulse_duration_ns": 10, "detuning_GHz": 0.5,
        "omega_e_A31": 1, "cell_length_mm": 2, "beam_area_mm2": 1e-2, "passes": 100,
        "eta_det": 0.125, "B_field_T": 1, "omega_r_A24": 0.01,
    })
    for name in model.DESIGN_FIELDS:
        assert getattr(d, name) == pytest.approx(getattr(design, name), rel=1e-12), name


def test_design_from_dict_rejects_duplicates_and_unknown():
    with pytest.raises(ValueError, match="more than once"):
        design_from_dict({"detuning": 1.0, "detuning_GHz": 1.0})
    with pytest.raises(ValueError, match="unknown"):
        design_from_dict({"warp_factor": 9})
    with pytest.raises(ValueError, match="missing"):
        design_from_dict({"passes": 1})


def test_convention_is_checked(design):
    with pytest.raises(ValueError):
        efficiency_budget(design, "radians")


# ---- properties -------------------------------------------------------------

pos = dict(allow_nan=False, allow_infinity=False)


def log_uniform(lo, hi):
    return st.floats(math.log10(lo), math.log10(hi), **pos).map(lambda x: 10.0**x)


def _raw_transmission(d):
    return math.exp(-d.passes * d.cell_length / absorption_length(d))


@settings(max_examples=200, deadline=None)
@given(q=log_uniform(1, 1e3), factor=st.floats(1.01, 10), n=log_uniform(1e13, 1e16))
def test_transmission_decreasing(design, q, factor, n):
    d = design.replace(passes=q, n_density=n)
    base = _raw_transmission(d)
    if not 1e-300 < base < 1:
        return
    for changed in (d.replace(passes=q * factor), d.replace(n_density=n * factor),
                    d.replace(omega_e=d.omega_e * math.sqrt(factor)),
                    d.replace(pulse_duration=d.pulse_duration * factor)):
        assert _raw_transmission(changed) < base


@settings(max_examples=200, deadline=None)
@given(q=log_uniform(1, 1e4), factor=st.floats(1.0, 10))
def test_eta_non_decreasing_in_q(design, q, factor):
    assert efficiency_budget(design.replace(passes=q * factor)).eta >= efficiency_budget(design.replace(passes=q)).eta


@settings(max_examples=200, deadline=None)
@given(w=log_uniform(1e6, 1e9), delta=log_uniform(1e8, 1e11), factor=st.floats(1.01, 10))
def test_scatter_loss_monotone(design, w, delta, factor):
    d = design.replace(omega_e=w, detuning=delta)
    s = model.scatter_loss_term(d)
    assert model.scatter_loss_term(d.replace(omega_e=w * factor)) > s
    assert model.scatter_loss_term(d.replace(detuning=delta * factor)) < s


@settings(max_examples=200, deadline=None)
@given(B=log_uniform(1e-4, 10), factor=st.floats(1.01, 10), conv=st.sampled_from(["ordinary", "angular"]))
def test_dark_count_decreasing_in_B(design, B, factor, conv):
    assert dark_count_prob(design.replace(B_field=B * factor), conv) < dark_count_prob(design.replace(B_field=B), conv)


@settings(max_examples=300, deadline=None)
@given(p=st.floats(0, 1, **pos), n=st.integers(0, 10**6))
def test_exact_dark_count_not_above_linear(p, n):
    linear, exact = net_dark_count(p_dc=p, n_atoms=n)
    assert exact <= linear * (1 + 1e-12) + 1e-300
    assert 0 <= exact <= 1
    if linear < 0.02:
        assert exact == pytest.approx(linear, rel=0.01)


@settings(max_examples=300, deadline=None)
@given(
    n=log_uniform(1e10, 1e20), T=log_uniform(1e-7, 1e3), l=log_uniform(1e-6, 1e1), area=log_uniform(1e-12, 1e-2),
    q=log_uniform(1, 1e5), B=st.floats(0, 100, **pos), Tp=log_uniform(1e-12, 1e-3), we=log_uniform(1, 1e12),
    delta=log_uniform(1e3, 1e15), wr=log_uniform(1, 1e12), eta_det=st.floats(1e-3, 1, **pos),
    conv=st.sampled_from(["ordinary", "angular"]),
)
def test_outputs_finite_for_valid_designs(design, n, T, l, area, q, B, Tp, we, delta, wr, eta_det, conv):
    d = design.replace(n_density=n, temperature=T, cell_length=l, beam_area=area, passes=q, B_field=B,
                       pulse_duration=Tp, omega_e=we, detuning=delta, omega_r=wr, eta_det=eta_det)
    if validate_units(d):
        return
    out = summary(d, conv)
    for key in KEYS:
        assert math.isfinite(out[key]), key
    assert 0 <= out["eta"] <= 1
