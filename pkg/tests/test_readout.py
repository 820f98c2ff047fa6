import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vapordet.model import readout_time
from vapordet.readout import (
    BLOCK,
    ReadoutScenario,
    binomial_ml_error,
    discrimination_report,
    fluorescence_photon_count,
    ml_error,
    run_trials,
    stage_probabilities,
)


def test_scenario_validation(design):
    with pytest.raises(ValueError):
        ReadoutScenario(design, 1, 0.0)
    with pytest.raises(ValueError):
        ReadoutScenario(design, -1, 1.0)
    with pytest.raises(ValueError):
        ReadoutScenario(design, 1, 1.0, trials=0)
    with pytest.raises(ValueError):
        ReadoutScenario(design, 1, 1.0, absorb_prob=1.5)
    assert ReadoutScenario(design, 5000, 1.0).warnings
    assert not ReadoutScenario(design, 5, 1.0).warnings


def test_lossless_limit(design):
    sc = ReadoutScenario(design, 7, 200 * readout_time(design), trials=2000, absorb_prob=1.0, dark_counts=False)
    p = stage_probabilities(sc)
    assert p.register == 1.0 and p.dark == 0.0
    assert p.survive > 0.99
    full = p.survive**7
    assert np.mean(run_trials(sc).inferred_n == 7) == pytest.approx(full, abs=4 * math.sqrt(full * (1 - full) / 2000))


def test_perfect_chain_identity(design, monkeypatch):
    from vapordet import readout

    monkeypatch.setattr(readout, "collision_time", lambda d: math.inf)
    sc = ReadoutScenario(design, 9, 1e3 * readout_time(design), trials=500, absorb_prob=1.0, dark_counts=False)
    assert np.all(run_trials(sc).inferred_n == 9)
    rep = readout.discrimination_report(design, range(4), 300, 1, readout_duration=1e3 * readout_time(design),
                                        absorb_prob=1.0, dark_counts=False)
    assert np.array_equal(rep.confusion[:, :4], np.eye(4))


def test_dark_fraction_matches_exact_form(design):
    t_ro = readout_time(design)
    trials = 100_000
    sc = ReadoutScenario(design, 0, t_ro, trials=trials, rng_seed=11)
    # rescale so the per-atom dark probability is exactly 2e-5
    p_dc = stage_probabilities(sc).dark
    sc = ReadoutScenario(design, 0, t_ro * 2e-5 / p_dc, trials=trials, rng_seed=11)
    assert stage_probabilities(sc).dark == pytest.approx(2e-5, rel=1e-12)
    frac = np.mean(run_trials(sc).n_dark_atoms >= 1)
    expect = 1 - (1 - 2e-5) ** 20000
    se = math.sqrt(expect * (1 - expect) / trials)
    assert abs(frac - expect) <= 4 * se
    assert expect == pytest.approx(0.3297, abs=1e-4)


def test_fifty_photon_full_count(design):
    t_ro = readout_time(design)
    T = 10 * t_ro
    base = stage_probabilities(ReadoutScenario(design, 50, T))
    absorb = 0.998 / (base.survive * base.register)
    sc = ReadoutScenario(design, 50, T, trials=20000, rng_seed=5, absorb_prob=absorb, dark_counts=False)
    assert stage_probabilities(sc).per_photon == pytest.approx(0.998, rel=1e-14)
    frac = np.mean(run_trials(sc).inferred_n == 50)
    expect = 0.998**50
    assert abs(frac - expect) <= 3 * math.sqrt(expect * (1 - expect) / 20000)


def test_per_photon_marginal(design):
    sc = ReadoutScenario(design, 20, 3 * readout_time(design), trials=10000, rng_seed=2, dark_counts=False)
    p = stage_probabilities(sc).per_photon
    out = run_trials(sc)
    emp = out.n_atoms_detected.sum() / (20 * 10000)
    assert abs(emp - p) <= 4 * math.sqrt(p * (1 - p) / (20 * 10000))


def test_determinism_and_block_independence(design):
    sc = ReadoutScenario(design, 3, readout_time(design), trials=BLOCK + 100, rng_seed=42)
    a, b = run_trials(sc), run_trials(sc)
    assert np.array_equal(a.inferred_n, b.inferred_n)
    # the first block does not depend on the total trial count
    short = run_trials(ReadoutScenario(design, 3, readout_time(design), trials=BLOCK, rng_seed=42))
    assert np.array_equal(short.inferred_n, a.inferred_n[:BLOCK])
    other = run_trials(ReadoutScenario(design, 3, readout_time(design), trials=BLOCK + 100, rng_seed=43))
    assert not np.array_equal(other.inferred_n, a.inferred_n)
    assert len(a) == BLOCK + 100
    t = a[0]
    assert t.inferred_n == t.n_atoms_detected + t.n_dark_atoms


def test_fluorescence_counts(design):
    t_ro = readout_time(design)
    n, rate = fluorescence_photon_count(design, t_ro)
    assert n == pytest.approx(1.0, rel=1e-15)
    assert fluorescence_photon_count(design, 2 * t_ro)[0] == pytest.approx(2.0, rel=1e-15)
    A = design.species.A_24
    assert fluorescence_photon_count(design.replace(omega_r=1e6 * A), t_ro)[1] == pytest.approx(A / 2, rel=1e-9)
    assert rate * design.eta_det * t_ro == pytest.approx(1.0, rel=1e-12)
    with pytest.raises(ValueError):
        fluorescence_photon_count(design, 0.0)


def test_report_rows_sum_to_one_and_diagonal_dominant(design, tmp_path):
    small = design.replace(beam_area=1e-9)  # N = 2000, about 0.33 dark atoms per readout
    rep = discrimination_report(small, [0, 1, 2, 3], 4000, 9, absorb_prob=0.95)
    assert np.allclose(rep.confusion.sum(axis=1), 1.0, rtol=0, atol=1e-15)
    for k, n in enumerate(rep.n_values):
        assert np.argmax(rep.confusion[k]) == n
    assert rep.stderr.shape == rep.confusion.shape
    rep.write_json(tmp_path / "r.json", {"seed": 9})
    data = json.loads((tmp_path / "r.json").read_text())
    assert data["seed"] == 9 and data["n_values"] == [0, 1, 2, 3]
    rep.write_csv(tmp_path / "r.csv", {"seed": 9})
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert lines[0] == "# seed: 9" and lines[1].startswith("n_true,P_m0")


def test_report_rejects_empty_range(design):
    with pytest.raises(ValueError):
        discrimination_report(design, [], 10, 0)


def test_ml_error_tie_goes_to_smaller_n():
    p = np.array([0.5, 0.5])
    assert ml_error(p, p) == pytest.approx(0.5)
    assert ml_error(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0


def test_binomial_ml_error_closed_form():
    # n = 1 vs 2: decide 2 only on m = 2, error = (1 - eta^2) / 2
    assert binomial_ml_error(0.998, 1) == pytest.approx(0.5 * (1 - 0.998**2), rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(eta=st.floats(0.5, 0.9999), n=st.integers(0, 60))
def test_binomial_ml_error_non_decreasing(eta, n):
    assert binomial_ml_error(eta, n + 1) >= binomial_ml_error(eta, n) - 1e-12
