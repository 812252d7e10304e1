import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gpscatter.field import (
    FieldError,
    GPField,
    dark_soliton,
    derived_pair,
    energy_norm,
    ginzburg_landau,
    hamiltonian_h3,
    load_field,
    mass_momentum,
    preset,
    smallness_surrogate,
    two_variation,
)
from gpscatter.grid import SampledFunction, write_field_file


def brute_two_variation(v):
    best = 0.0
    for r in range(2, len(v) + 1):
        for idx in itertools.combinations(range(len(v)), r):
            best = max(best, sum(abs(v[b] - v[a]) ** 2 for a, b in zip(idx, idx[1:])))
    return math.sqrt(best)


@pytest.mark.parametrize("spec,kind", [("one", "flat"), ("black", "kink"), ("dark:0.5", "kink"),
                                       ("bump:0.1:1", "flat"), ("kinkpair:5", "flat"), ("-black", "kink")])
def test_presets_classify_boundaries(spec, kind):
    assert preset(spec).boundary_kind == kind


@pytest.mark.parametrize("spec", ["nope", "bump:1", "dark:x", "black:1"])
def test_malformed_presets(spec):
    with pytest.raises(ValueError):
        preset(spec)


def test_shift_suffix_translates(grid):
    a = preset("dark:0.5@2").values
    assert np.max(np.abs(a - dark_soliton(grid.x - 2, 0.5))) < 1e-15


def test_decay_violation_is_rejected(grid):
    with pytest.raises(FieldError):
        GPField.from_values(grid, 1 + 0.1 * np.exp(-((grid.x - 19) ** 2)))
    with pytest.raises(FieldError):
        GPField.from_values(grid, np.ones(10))


def test_load_field_from_file(tmp_path, grid):
    q = preset("dark:0.3")
    path = tmp_path / "q.txt"
    write_field_file(path, q.samples)
    back = load_field(str(path))
    assert np.array_equal(back.values, q.values)
    assert back.boundary_kind == "kink"


def test_black_soliton_energy(grid):
    # 1/2 int (sech^4 + sech^4) = 4/3
    assert ginzburg_landau(preset("black")) == pytest.approx(4 / 3, rel=1e-12)


@pytest.mark.parametrize("phi", [0.0, 0.3, math.pi / 6])
def test_dark_soliton_mass_and_momentum(phi):
    mass, mom = mass_momentum(preset(f"dark:{phi!r}"))
    assert mass == pytest.approx(-2 * math.cos(phi), rel=1e-10)
    assert mom == pytest.approx(math.sin(2 * phi), rel=1e-10)


def test_black_soliton_h3_vanishes():
    assert abs(hamiltonian_h3(preset("black"))) < 1e-10


def test_derived_pair_and_gauge_invariance():
    q = preset("bump:0.1:1")
    p = derived_pair(q)
    assert np.max(np.abs(p.a.values - (np.abs(q.values) ** 2 - 1))) == 0
    r = q.rotated(0.7)
    assert energy_norm(r, 1.5) == pytest.approx(energy_norm(q, 1.5), rel=1e-13)


def test_energy_norm_at_s_one_is_twice_gl():
    q = preset("dark:0.5")
    assert energy_norm(q, 1.0) ** 2 == pytest.approx(2 * ginzburg_landau(q), rel=1e-12)


def test_surrogate_decreases_with_tau():
    q = preset("bump:0.1:1")
    vals = [smallness_surrogate(q, 1.0, t) for t in (2, 4, 8, 16)]
    assert all(b < a for a, b in zip(vals, vals[1:]))


def test_mass_momentum_warns_on_marginal_decay(grid):
    q = GPField.from_values(grid, 1 + 1e-11 * np.exp(-((grid.x - 19.5) ** 2)), tol=1e-8)
    with pytest.warns(RuntimeWarning):
        mass_momentum(q, marginal=1e-14)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(-4, 4), max_size=9))
def test_two_variation_matches_exhaustive_search(values):
    assert two_variation(values) == brute_two_variation(values)


def test_two_variation_examples():
    assert two_variation([0, 1]) == 1.0
    # going 0 -> 2 directly beats the two unit steps
    assert two_variation([0, 1, 2]) == 2.0
    assert two_variation([3]) == 0.0
    assert two_variation([1], append_zero=True) == 1.0
    with pytest.raises(ValueError):
        two_variation(np.zeros(3000))


def test_samples_respect_kink_flag(grid):
    q = preset("black")
    assert isinstance(q.samples, SampledFunction) and q.samples.even
