import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dschrod.numerics import Grid, PiecewiseFn
from dschrod.potential import PotentialError, PotentialSpec, assemble_sigma, default_grid

from conftest import constant


def test_constant_regular_part_gives_linear_sigma():
    s = assemble_sigma(PotentialSpec(1.0, regular_part=constant(1.0)))
    assert np.max(np.abs(s.values - s.grid.x)) < 1e-14
    assert s.at_start() == 0.0


def test_single_delta_is_heaviside_step():
    s = assemble_sigma(PotentialSpec(1.0, deltas=[(0.5, 2.0)]))
    x = s.grid.x
    left, right = s.left_right()
    assert left[0] == 0.0 and right[0] == 2.0
    assert np.all(s.values[x < 0.5] == 0.0)
    assert np.all(s.values[x > 0.5] == 2.0)
    assert np.isrealobj(s.values)


def test_regular_part_plus_delta_matches_closed_form():
    spec = PotentialSpec(1.0, regular_part=np.cos, deltas=[(0.3, -1.0)])
    s = assemble_sigma(spec)
    x = s.grid.x
    pos = np.concatenate([np.zeros(s.grid.segments[0].size), np.ones(s.grid.segments[1].size)])
    assert np.max(np.abs(s.values - (np.sin(x) - pos))) < 1e-10


def test_sampled_regular_part_is_interpolated():
    xs = np.linspace(0, 2, 11)
    s = assemble_sigma(PotentialSpec(2.0, regular_part=(xs, 3 * xs), n_nodes=401))
    assert np.max(np.abs(s.values - 1.5 * s.grid.x**2)) < 1e-12


def test_jump_at_each_delta_equals_strength():
    deltas = [(0.2, 1.5), (0.45, -0.7 + 0.2j), (0.9, 3.0)]
    s = assemble_sigma(PotentialSpec(1.0, regular_part=np.exp, deltas=deltas, real_valued=False))
    assert np.allclose(s.jumps(), [a for _, a in deltas], atol=1e-14)
    # continuous inside each segment: increments are O(h)
    for seg in s.segments():
        assert np.max(np.abs(np.diff(seg))) < 1e-2


def test_direct_sigma_forms():
    g = Grid.uniform(1.0, 301)
    pw = PiecewiseFn.from_callable(g, np.sin)
    s1 = assemble_sigma(PotentialSpec(1.0, direct_sigma=pw))
    assert s1.grid is g and np.array_equal(s1.values, pw.values)
    s2 = assemble_sigma(PotentialSpec(1.0, direct_sigma=np.sin, n_nodes=301))
    assert np.max(np.abs(s2.values - np.sin(s2.grid.x))) < 1e-15


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(length=1.0, deltas=[(0.0, 1.0)]),
        dict(length=1.0, deltas=[(1.0, 1.0)]),
        dict(length=1.0, deltas=[(0.6, 1.0), (0.4, 1.0)]),
        dict(length=1.0, deltas=[(0.5, 1.0)], direct_sigma=np.sin),
        dict(length=1.0, regular_part=np.cos, direct_sigma=np.sin),
        dict(length=1.0, deltas=[(0.5, 1j)]),
        dict(length=-1.0),
    ],
)
def test_invalid_specs_rejected(kwargs):
    with pytest.raises(PotentialError):
        PotentialSpec(**kwargs)


def test_direct_sigma_must_vanish_at_origin():
    with pytest.raises(PotentialError):
        assemble_sigma(PotentialSpec(1.0, direct_sigma=np.cos))


def test_real_flag_checked_against_samples():
    with pytest.raises(PotentialError):
        assemble_sigma(PotentialSpec(1.0, regular_part=constant(1j)))


def test_grid_without_delta_breakpoint_rejected():
    spec = PotentialSpec(1.0, deltas=[(0.5, 1.0)])
    with pytest.raises(PotentialError):
        assemble_sigma(spec, Grid.uniform(1.0, 101))


def test_default_grid_has_breakpoints():
    spec = PotentialSpec(2.0, deltas=[(0.5, 1.0), (1.5, 1.0)])
    assert default_grid(spec).breakpoints.tolist() == [0.5, 1.5]


@settings(max_examples=25, deadline=None)
@given(
    st.floats(-3, 3),
    st.floats(-3, 3),
    st.floats(0.1, 0.9),
)
def test_assembly_is_linear(c, alpha, x1):
    spec = PotentialSpec(1.0, regular_part=lambda x: np.cos(3 * x), deltas=[(x1, alpha)], n_nodes=200)
    base = assemble_sigma(spec)
    scaled = assemble_sigma(spec.scaled(c))
    assert np.allclose(scaled.values, c * base.values, atol=1e-13)
