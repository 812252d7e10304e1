import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gpscatter import metric as me
from gpscatter.acceptance import random_profile, sampled
from gpscatter.field import GPField, energy_norm, preset
from gpscatter.grid import make_grid


@pytest.fixture(scope="module")
def pool():
    rng = np.random.default_rng(7)
    return [sampled(random_profile(rng)) for _ in range(6)]


def test_identical_fields_have_zero_distance(pool):
    assert me.metric_distance(pool[0], pool[0], 1.0).distance < 1e-12


@pytest.mark.parametrize("s", [0.0, 1.0, 1.5])
def test_gauge_invariance(pool, s):
    assert me.metric_distance(pool[1], pool[1].rotated(2.1), s).distance < 1e-9


@pytest.mark.parametrize("s", [0.0, 1.0])
def test_symmetry(pool, s):
    a = me.metric_distance(pool[0], pool[1], s).distance
    b = me.metric_distance(pool[1], pool[0], s).distance
    assert a == pytest.approx(b, rel=1e-13)


@pytest.mark.parametrize("y,s", [(-2.0, 0.0), (0.5, 1.0), (3.0, 1.5)])
def test_closed_form_matches_phase_search(pool, y, s):
    closed = me.weighted_phase_distance(pool[2], pool[3], y, s)
    brute = me.phase_grid_distance(pool[2], pool[3], y, s)
    assert abs(closed - brute) <= 1e-8
    opt = me.phase_optimum(pool[2], pool[3], y, s)
    assert opt["closed"] == pytest.approx(opt["d2"], rel=1e-9)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 5), st.integers(0, 5), st.integers(0, 5), st.sampled_from([0.0, 1.0]))
def test_triangle_inequality(pool, i, j, k, s):
    d = lambda a, b: me.metric_distance(pool[a], pool[b], s).distance  # noqa: E731
    assert d(i, k) <= d(i, j) + d(j, k) + 1e-9


def test_small_distance_means_equal_up_to_phase(pool):
    q = pool[4]
    p = q.rotated(0.8)
    assert me.metric_distance(p, q, 1.0).distance <= 1e-9
    core = np.abs(q.x) <= 8
    phases = np.linspace(0, 2 * np.pi, 2000, endpoint=False)
    best = min(np.sqrt(q.grid.dx * np.sum(np.abs(p.values[core] - np.exp(1j * a) * q.values[core]) ** 2))
               for a in phases)
    assert best <= 1e-2  # phase grid resolution
    fine = np.linspace(0.8 - 1e-3, 0.8 + 1e-3, 201)
    best = min(np.sqrt(q.grid.dx * np.sum(np.abs(p.values[core] - np.exp(1j * a) * q.values[core]) ** 2))
               for a in fine)
    assert best <= 1e-6


def test_diameter_bound_for_black_soliton():
    d = me.metric_distance(preset("one"), preset("black"), 0.0).distance
    c = d / energy_norm(preset("black"), 0.0)
    assert np.isfinite(d) and 0 < c < 10


def _measured_constants(n, s):
    rng = np.random.default_rng(11)
    grid = make_grid(40.0, n, -20.0)
    cont, pert = 0.0, 0.0
    for _ in range(6):
        p = sampled(random_profile(rng, 0.15), grid)
        q = sampled(random_profile(rng, 0.15), grid)
        d = me.metric_distance(p, q, s).distance
        ep, eq = energy_norm(p, s), energy_norm(q, s)
        cont = max(cont, abs(eq - ep) / d)
        pert = max(pert, (eq - ep) / (np.sqrt(1 + ep) * d + d * d))
    return cont, pert


def test_energy_continuity_and_perturbation_constants_are_stable():
    coarse = _measured_constants(1024, 1.0)
    fine = _measured_constants(2048, 1.0)
    for a, b in zip(coarse, fine):
        assert np.isfinite(a) and a == pytest.approx(b, rel=1e-3)
    # the continuity constant bounds the energy gap on this family
    assert coarse[0] < 10


def test_y_grid_covers_active_region(pool):
    cfg = me.MetricConfig(1.0)
    ys, w = cfg.y_grid(pool[0], preset("dark:0.5"))
    assert ys[0] < -15 and ys[-1] > 15
    assert np.allclose(np.diff(ys), 0.25)
    assert w.sum() == pytest.approx(ys[-1] - ys[0])


@pytest.mark.parametrize("kwargs", [dict(s=-1.0), dict(s=1.0, spacing=0.5), dict(s=1.0, pad_widths=5)])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        me.MetricConfig(**kwargs)


def test_grid_mismatch_is_rejected():
    a = preset("one")
    b = GPField.from_values(make_grid(40.0, 512, -20.0), np.ones(512, dtype=complex))
    with pytest.raises(ValueError):
        me.metric_distance(a, b, 1.0)


def test_tail_estimate_is_reported(pool):
    res = me.metric_distance(pool[0], pool[5], 1.0)
    assert 0 <= res.tail_estimate < 1e-6 * res.distance and res.y_nodes > 100
