import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gpscatter import miura as mi
from gpscatter.grid import SampledFunction, l2_norm


def sf(grid, values):
    return SampledFunction(grid, np.asarray(values, dtype=float))


@pytest.mark.parametrize("const", [-1.0, 1.0])
def test_miura_map_of_constants(grid, const):
    u = mi.miura_map(sf(grid, np.full(grid.n, const)))
    assert np.max(np.abs(u.values)) < 1e-14


def test_miura_map_of_kink(grid):
    u = mi.miura_map(sf(grid, -np.tanh(grid.x)))
    assert np.max(np.abs(u.values + 2 / np.cosh(grid.x) ** 2)) < 1e-12


def test_miura_map_rejects_complex_data(grid):
    with pytest.raises(ValueError):
        mi.miura_map(SampledFunction(grid, np.exp(1j * np.exp(-(grid.x**2)))))


def test_linearization_identity(grid, rng):
    q = sf(grid, -1 + 0.2 * np.exp(-(grid.x**2)))
    h = np.exp(-((grid.x - rng.uniform(-2, 2)) ** 2)) * rng.normal()
    eps = 1e-6
    fd = (mi.miura_map(sf(grid, q.values + eps * h)).values - mi.miura_map(sf(grid, q.values - eps * h)).values) / (2 * eps)
    lin = mi.linearized_operator(sf(grid, q.values + 1), sf(grid, h)).values
    assert np.max(np.abs(fd - lin)) < 1e-6


def test_inverse_of_zero(grid):
    v = mi.inverse_miura(sf(grid, np.zeros(grid.n)))
    assert np.max(np.abs(v.values + 1)) < 1e-14


def test_inverse_of_threshold_well_is_minus_tanh(grid):
    res = mi.riccati_inverse(sf(grid, -2 / np.cosh(grid.x) ** 2))
    assert res.route == "spliced"
    assert np.max(np.abs(res.v.values + np.tanh(grid.x))) < 1e-10


def test_round_trip_shallow_well(grid):
    u = sf(grid, -0.5 / np.cosh(grid.x / 2) ** 2)
    back = mi.miura_map(mi.inverse_miura(u))
    assert np.max(np.abs(back.values - u.values)) < 1e-6


@settings(max_examples=10, deadline=None)
@given(st.floats(-0.3, 0.3), st.floats(-3, 3), st.floats(0.6, 2.0))
def test_case_a_round_trip(amp, center, width):
    from gpscatter.field import default_grid

    grid = default_grid()
    q = -1 + amp * np.exp(-(((grid.x - center) / width) ** 2))
    v = mi.inverse_miura(mi.miura_map(sf(grid, q)))
    assert np.max(np.abs(v.values - q)) < 1e-6


@pytest.mark.parametrize("depth", [1.5, 3.0])
def test_deep_well_violates_spectral_condition(grid, depth):
    with pytest.raises(mi.MiuraError, match="spectral condition violated"):
        mi.inverse_miura(sf(grid, -depth * 2 / np.cosh(grid.x) ** 2))


def test_linearized_inverse_of_zero(grid):
    out = mi.linearized_inverse(sf(grid, np.zeros(grid.n)), sf(grid, np.zeros(grid.n)))
    assert np.max(np.abs(out.values)) == 0


def test_linearized_inverse_elementary_integral(grid):
    x = grid.x
    f = 0.25 * (1 + np.tanh(4 * x)) * (1 - np.tanh(x - 12))
    out = mi.linearized_inverse(sf(grid, np.zeros(grid.n)), sf(grid, f))
    inside = (x > 3) & (x < 6)
    assert np.max(np.abs(out.values[inside] + 0.5)) < 1e-4


@settings(max_examples=10, deadline=None)
@given(st.floats(-0.5, 0.5), st.floats(-2, 2), st.floats(-1, 1), st.floats(0.5, 2.0))
def test_linearized_inverse_is_a_right_inverse(a, c, b, w):
    from gpscatter.field import default_grid

    grid = default_grid()
    x = grid.x
    w0 = sf(grid, a * np.exp(-(((x - c) / w) ** 2)))
    f = sf(grid, np.exp(-((x - b) ** 2)) * (1 + x / 4))
    g = mi.linearized_inverse(w0, f)
    resid = mi.linearized_operator(w0, g).values - f.values
    assert l2_norm(sf(grid, resid)) < 1e-7


def test_case_b_pair_satisfies_map(grid):
    pair = mi.case_b_pair(sf(grid, 0.1 * np.exp(-(grid.x**2))), 0.7)
    assert pair.case == "B(0.7)" and pair.defect() < 1e-8


def test_correspondence_trivial(grid):
    rep = mi.mkdv_kdv_correspondence(sf(grid, np.ones(grid.n)), 0.1)
    assert rep["max_mismatch"] == 0.0


def test_correspondence_kink(grid):
    rep = mi.mkdv_kdv_correspondence(sf(grid, -np.tanh(grid.x)), 0.5)
    assert rep["max_mismatch"] <= 1e-4


def test_correspondence_perturbed_kink(grid):
    q0 = sf(grid, -np.tanh(grid.x) + 0.05 / np.cosh(grid.x) ** 2)
    rep = mi.mkdv_kdv_correspondence(q0, 0.25, snaps=5, refine=True)
    assert rep["max_mismatch"] <= 5e-4
    assert abs(rep["refined_mismatch"][-1] - rep["mismatch"][-1]) < 1e-6
