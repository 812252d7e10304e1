import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gpscatter.grid import (
    GridError,
    SampledFunction,
    cumulative_integral,
    l2_norm,
    make_grid,
    mollify,
    node_values,
    read_field_file,
    sobolev_inner,
    sobolev_norm,
    spectral_derivative,
    translate,
    write_field_file,
)


def gaussian(grid, width=1.0, center=0.0):
    return SampledFunction(grid, np.exp(-(((grid.x - center) / width) ** 2)))


@pytest.mark.parametrize("n", [6, 100, 4])
def test_grid_rejects_bad_sizes(n):
    with pytest.raises(GridError):
        make_grid(10.0, n, -5.0)


def test_wavenumbers_and_spacing(grid):
    assert grid.dx == pytest.approx(40 / 1024)
    k = grid.wavenumbers
    assert k[0] == 0 and k[grid.n // 2] > 0
    assert grid.dxi == pytest.approx(2 * math.pi / 40)


@pytest.mark.parametrize("order", [1, 2, 3])
def test_spectral_derivative_of_gaussian(grid, order):
    x = grid.x
    g = np.exp(-(x**2))
    exact = {1: -2 * x * g, 2: (4 * x**2 - 2) * g, 3: (12 * x - 8 * x**3) * g}[order]
    got = spectral_derivative(SampledFunction(grid, g), order).values
    assert np.max(np.abs(got - exact)) < 1e-10


def test_even_extension_differentiates_kinks(grid):
    f = SampledFunction(grid, np.tanh(grid.x), even=True)
    d = spectral_derivative(f).values
    assert np.max(np.abs(d - 1 / np.cosh(grid.x) ** 2)) < 1e-10


def test_sobolev_norm_matches_closed_form(grid):
    # exp(-x^2) has |f_hat|^2 = exp(-xi^2/2)/2
    f = gaussian(grid)
    s, tau = 1.0, 2.0
    exact = math.sqrt(math.sqrt(math.pi / 2) * (tau**2 + 1.0))
    assert sobolev_norm(f, s, tau) == pytest.approx(exact, rel=1e-12)


def test_sobolev_norm_requires_tau_at_least_two(grid):
    with pytest.raises(ValueError):
        sobolev_norm(gaussian(grid), 1.0, 1.5)


def test_l2_norm_is_sobolev_zero(grid):
    f = gaussian(grid, 1.3, 0.4)
    assert sobolev_norm(f, 0.0, 2.0) == pytest.approx(l2_norm(f), rel=1e-12)


def test_sobolev_inner_is_hermitian(grid, rng):
    f = SampledFunction(grid, gaussian(grid).values * np.exp(1j * grid.x))
    g = gaussian(grid, 0.7, 1.0)
    a = sobolev_inner(f, g, 1.5)
    b = sobolev_inner(g, f, 1.5)
    assert a == pytest.approx(np.conj(b), rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3))
def test_translations_compose(a, b):
    grid = make_grid(40.0, 256, -20.0)
    f = gaussian(grid)
    once = translate(f, a + b).values
    twice = translate(translate(f, a), b).values
    assert np.max(np.abs(once - twice)) < 1e-10


@settings(max_examples=20, deadline=None)
@given(st.floats(0.0, 2.0), st.floats(0.0, 2.0))
def test_norm_is_monotone_in_s(s1, s2):
    grid = make_grid(40.0, 256, -20.0)
    f = gaussian(grid)
    lo, hi = sorted((s1, s2))
    assert sobolev_norm(f, lo, 2.0) <= sobolev_norm(f, hi, 2.0) * (1 + 1e-12)


def test_node_values_interpolate(grid):
    f = gaussian(grid)
    offs = [0.0, 0.3 * grid.dx, 0.77 * grid.dx]
    out = node_values(f, offs)
    for row, d in zip(out, offs):
        assert np.max(np.abs(row - np.exp(-((grid.x + d) ** 2)))) < 1e-12


def test_cumulative_integral_of_gaussian(grid):
    from scipy.special import erf

    F = cumulative_integral(gaussian(grid), origin=0.0).values
    exact = 0.5 * math.sqrt(math.pi) * erf(grid.x)
    assert np.max(np.abs(F - exact)) < 1e-11


def test_mollifier_keeps_mass_and_smooths(grid):
    f = gaussian(grid, 0.5)
    m = mollify(f, 0.3)
    assert m.integral() == pytest.approx(f.integral(), rel=1e-12)
    assert np.max(m.values) < np.max(f.values)
    with pytest.raises(ValueError):
        mollify(f, 0.0)


def test_field_file_round_trip(tmp_path, grid):
    f = SampledFunction(grid, np.exp(1j * grid.x) * np.exp(-(grid.x**2)))
    path = tmp_path / "f.txt"
    write_field_file(path, f)
    back = read_field_file(path)
    assert back.grid == grid
    assert np.array_equal(back.values, f.values)


@pytest.mark.parametrize(
    "text",
    [
        "not a header\n0 1 0\n",
        "# gpfield v1 L=1 n=8 x0=0\n0 1 0\n",
        "# gpfield v1 L=1 n=8 x0=0\n" + "0 1\n" * 8,
    ],
)
def test_field_file_rejects_malformed_input(tmp_path, text):
    path = tmp_path / "bad.txt"
    path.write_text(text)
    with pytest.raises((GridError, ValueError)):
        read_field_file(path)
