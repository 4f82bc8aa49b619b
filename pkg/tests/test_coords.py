import numpy as np
import pytest
from hypothesis import given, settings as hyp_settings, strategies as st

from src.core.errors import ShapeError
from src.services.coordinates import (
	area_weights,
	cell_centers,
	local_neighbors,
	local_region,
	make_coord_grid,
	nearest_index,
	rel_offset,
	scale_vector,
)


def test_cell_centers_formula():
	assert np.allclose(make_coord_grid(2, 1).rows, [-0.5, 0.5])
	assert np.allclose(make_coord_grid(1, 1).rows, [0.0])
	assert np.allclose(make_coord_grid(3, 1).rows, [-2 / 3, 0.0, 2 / 3])


@hyp_settings(max_examples=40, deadline=None)
@given(st.integers(1, 200))
def test_cell_centers_increase_inside_open_square(n):
	c = cell_centers(n)
	assert np.all(np.diff(c) > 0)
	assert np.all((c > -1) & (c < 1))


def test_grid_rejects_zero_dimension():
	with pytest.raises(ShapeError):
		make_coord_grid(0, 4)


def test_grid_coords_layout():
	grid = make_coord_grid(2, 3)
	assert grid.coords.shape == (2, 3, 2)
	assert np.allclose(grid.coords[1, 2], [0.5, 2 / 3])
	assert grid.flat_coords().shape == (6, 2)


def test_nearest_index_on_center_and_corner():
	grid = make_coord_grid(4, 5)
	i, j = nearest_index(grid.coords[2, 3], grid)
	assert (int(i), int(j)) == (2, 3)
	i, j = nearest_index(np.array([-1.0, -1.0]), grid)
	assert (int(i), int(j)) == (0, 0)
	i, j = nearest_index(np.array([5.0, -7.0]), grid)
	assert (int(i), int(j)) == (3, 0)


def test_nearest_index_ties_go_to_smaller_index():
	grid = make_coord_grid(2, 2)
	i, j = nearest_index(np.array([0.0, 0.0]), grid)
	assert (int(i), int(j)) == (0, 0)


def test_nearest_index_matches_exhaustive_scan(rng):
	grid = make_coord_grid(7, 9)
	queries = rng.uniform(-1, 1, size=(100, 2))
	i, j = nearest_index(queries, grid)
	for q, qi, qj in zip(queries, i, j):
		assert qi == np.argmin(np.abs(grid.rows - q[0]))
		assert qj == np.argmin(np.abs(grid.cols - q[1]))


def test_local_neighbors_interior_center():
	grid = make_coord_grid(5, 5)
	nb = local_neighbors(grid.coords[2, 2], grid)
	assert list(zip(nb.rows.tolist(), nb.cols.tolist())) == [(2, 2), (2, 3), (3, 2), (3, 3)]


def test_local_neighbors_corner_clamps():
	grid = make_coord_grid(5, 5)
	nb = local_neighbors(np.array([-1.0, -1.0]), grid)
	assert nb.rows.tolist() == [0, 0, 0, 0]
	assert nb.cols.tolist() == [0, 0, 0, 0]


def test_local_neighbors_midway_between_centers():
	grid = make_coord_grid(4, 4)
	mid = (grid.coords[1, 1] + grid.coords[2, 2]) / 2
	nb = local_neighbors(mid, grid)
	assert list(zip(nb.rows.tolist(), nb.cols.tolist())) == [(1, 1), (1, 2), (2, 1), (2, 2)]


def test_local_region_odd_sizes_center_on_nearest():
	grid = make_coord_grid(6, 6)
	one = local_region(grid.coords[3, 4], grid, 1)
	assert (one.rows.tolist(), one.cols.tolist()) == ([3], [4])
	three = local_region(grid.coords[3, 4], grid, 3)
	assert sorted(set(three.rows.tolist())) == [2, 3, 4]
	assert sorted(set(three.cols.tolist())) == [3, 4, 5]
	assert three.coords.shape == (9, 2)


def test_area_weights_degenerate_and_symmetric():
	grid = make_coord_grid(4, 4)
	mid = (grid.coords[1, 1] + grid.coords[2, 2]) / 2
	assert np.allclose(area_weights(mid, local_neighbors(mid, grid)), 0.25)
	on = grid.coords[1, 1]
	assert np.allclose(area_weights(on, local_neighbors(on, grid)), [1, 0, 0, 0])


def test_area_weights_equal_bilinear_interpolation(rng):
	h, w = 6, 8
	grid = make_coord_grid(h, w)
	values = rng.normal(size=(h, w))
	queries = rng.uniform(-1, 1, size=(1000, 2))
	nb = local_neighbors(queries, grid)
	weights = area_weights(queries, nb)
	ours = np.sum(weights * values[nb.rows, nb.cols], axis=-1)

	# Bilinear interpolation on pixel-index coordinates, clamped at the borders
	py = np.clip((queries[:, 0] + 1) * h / 2 - 0.5, 0, h - 1)
	px = np.clip((queries[:, 1] + 1) * w / 2 - 0.5, 0, w - 1)
	y0 = np.minimum(np.floor(py).astype(int), h - 2)
	x0 = np.minimum(np.floor(px).astype(int), w - 2)
	fy, fx = py - y0, px - x0
	oracle = (
		values[y0, x0] * (1 - fy) * (1 - fx)
		+ values[y0, x0 + 1] * (1 - fy) * fx
		+ values[y0 + 1, x0] * fy * (1 - fx)
		+ values[y0 + 1, x0 + 1] * fy * fx
	)
	assert np.allclose(weights.sum(axis=-1), 1.0, atol=1e-12)
	assert np.all(weights >= 0)
	assert np.allclose(ours, oracle, atol=1e-6)


def test_scale_vector():
	s = scale_vector(48, 48, 96, 96)
	assert (s.s_h, s.s_w) == (2.0, 2.0)
	s = scale_vector(48, 48, 48, 48)
	assert (s.s_h, s.s_w) == (1.0, 1.0)
	s = scale_vector(50, 40, 75, 90)
	assert (s.s_h, s.s_w) == (1.5, 2.25)
	with pytest.raises(ShapeError):
		scale_vector(0, 4, 8, 8)


def test_rel_offset():
	grid = make_coord_grid(10, 10)
	k = grid.coords[4, 4]
	assert np.allclose(rel_offset(k, k, grid), 0.0)
	q = k + np.array([0.0, 0.1])
	assert np.allclose(rel_offset(q, k, grid), [0.0, 1.0])
	a, b = np.array([0.3, -0.2]), np.array([-0.1, 0.7])
	assert np.allclose(rel_offset(a, b, grid), -rel_offset(b, a, grid))
	assert np.allclose(rel_offset(q, k, grid, scaled=False), [0.0, 0.1])


@hyp_settings(max_examples=60, deadline=None)
@given(
	st.integers(2, 30),
	st.integers(2, 30),
	st.floats(-1, 1),
	st.floats(-1, 1),
)
def test_two_by_two_offsets_are_bounded(h, w, y, x):
	grid = make_coord_grid(h, w)
	q = np.array([y, x])
	nb = local_neighbors(q, grid)
	r = rel_offset(q[None], nb.coords, grid)
	assert np.all(np.abs(r) <= 2.0 + 1e-9)
