"""Window extraction, tiling, positional encoding, normalization, noise."""

import numpy as np
import pytest

from flowelm import (
    Field,
    Normalizer,
    WindowGeometry,
    add_noise,
    extract_window,
    fit_normalizer,
    make_grid,
    positional_encoding,
    target_window,
    tile_anchors,
)
from flowelm.windows import input_windows, scatter_blocks, target_windows


def oracle_window(values, anchor, side, offset):
    """Reference extraction by plain modular index arithmetic."""
    m = values.shape[0]
    if values.ndim == 1:
        return np.array([values[(anchor - offset + t) % m] for t in range(side)])
    out = []
    for i in range(side):
        for j in range(side):
            out.append(values[(anchor[0] - offset + i) % m,
                              (anchor[1] - offset + j) % m])
    return np.array(out)


class TestWindowGeometry:
    def test_lengths_match_model_in_out(self):
        geom = WindowGeometry(dims=1, extent=7, stride=4)
        assert geom.window_side == 18  # 2*7 + 4
        assert geom.input_len == 18
        assert geom.output_len == 4

    def test_encoding_adds_k_plus_one(self):
        geom = WindowGeometry(dims=1, extent=7, stride=4, pe_order=3)
        assert geom.input_len == 18 + 4  # 2l + s + k + 1
        assert geom.pe_len == 4

    def test_order_zero_disables_encoding(self):
        assert WindowGeometry(dims=1, extent=7, stride=4, pe_order=0).pe_len == 0

    def test_2d_lengths(self):
        geom = WindowGeometry(dims=2, extent=2, stride=4)
        assert geom.input_len == 64 and geom.output_len == 16

    def test_no_encoding_on_2d(self):
        with pytest.raises(ValueError):
            WindowGeometry(dims=2, extent=2, stride=4, pe_order=1)

    def test_grid_compatibility(self):
        geom = WindowGeometry(dims=1, extent=3, stride=4)
        geom.check_grid(8)
        with pytest.raises(ValueError):
            geom.check_grid(10)  # stride does not divide
        with pytest.raises(ValueError):
            WindowGeometry(dims=1, extent=5, stride=4).check_grid(8)  # too wide


class TestExtractWindow:
    def test_wrap_at_left_edge(self):
        grid = make_grid(8.0, 8)
        state = Field(grid, np.arange(8.0))
        geom = WindowGeometry(dims=1, extent=1, stride=3)
        assert np.array_equal(extract_window(state, 0, geom), [7, 0, 1, 2, 3])

    def test_interior_window(self):
        grid = make_grid(8.0, 8)
        state = Field(grid, np.arange(8.0))
        geom = WindowGeometry(dims=1, extent=1, stride=3)
        assert np.array_equal(extract_window(state, 3, geom), [2, 3, 4, 5, 6])

    def test_2d_wrap_matches_index_oracle(self):
        grid = make_grid(8.0, 8, dims=2)
        state = Field(grid, np.arange(64.0).reshape(8, 8))
        geom = WindowGeometry(dims=2, extent=1, stride=2)
        for anchor in [(0, 0), (7, 7), (3, 0), (6, 5)]:
            expected = oracle_window(state.values, anchor, 4, 1)
            assert np.array_equal(extract_window(state, anchor, geom), expected)

    def test_anchor_out_of_range(self):
        grid = make_grid(8.0, 8)
        state = Field(grid, np.zeros(8))
        geom = WindowGeometry(dims=1, extent=1, stride=2)
        with pytest.raises(ValueError):
            extract_window(state, 8, geom)

    def test_translation_covariance(self):
        grid = make_grid(16.0, 16)
        rng = np.random.default_rng(0)
        values = rng.normal(size=16)
        geom = WindowGeometry(dims=1, extent=2, stride=4)
        for shift in (1, 5, 11):
            rolled = Field(grid, np.roll(values, shift))
            direct = extract_window(Field(grid, values), 4, geom)
            shifted = extract_window(rolled, (4 + shift) % 16, geom)
            assert np.array_equal(direct, shifted)


class TestTargetWindow:
    def test_direct_slice(self):
        grid = make_grid(8.0, 8)
        nxt = Field(grid, np.arange(10.0, 18.0))
        geom = WindowGeometry(dims=1, extent=1, stride=3)
        assert np.array_equal(target_window(nxt, 3, geom), [13, 14, 15])

    def test_2d_direct_and_wrapped(self):
        grid = make_grid(8.0, 8, dims=2)
        nxt = Field(grid, np.arange(64.0).reshape(8, 8))
        geom = WindowGeometry(dims=2, extent=1, stride=2)
        assert np.array_equal(target_window(nxt, (2, 2), geom),
                              [18, 19, 26, 27])
        expected = oracle_window(nxt.values, (7, 7), 2, 0)
        assert np.array_equal(target_window(nxt, (7, 7), geom), expected)


class TestTileAnchors:
    def test_1d(self):
        assert tile_anchors(8, 4, 1) == [0, 4]

    def test_2d(self):
        assert tile_anchors(8, 4, 2) == [(0, 0), (0, 4), (4, 0), (4, 4)]

    def test_table_tiling(self):
        assert len(tile_anchors(512, 4, 1)) == 128

    def test_rejects_non_divisor(self):
        with pytest.raises(ValueError):
            tile_anchors(8, 3, 1)

    def test_reassembly_covers_grid_exactly(self):
        for dims in (1, 2):
            grid = make_grid(8.0, 8, dims=dims)
            rng = np.random.default_rng(dims)
            values = rng.normal(size=grid.shape)
            geom = WindowGeometry(dims=dims, extent=1, stride=2)
            anchors = np.asarray(tile_anchors(8, 2, dims))
            blocks = target_windows(values, anchors, geom)
            out = np.empty(grid.shape)
            scatter_blocks(out, anchors, blocks, geom)
            assert np.array_equal(out, values)

    def test_batch_extraction_matches_single(self):
        grid = make_grid(8.0, 8, dims=2)
        rng = np.random.default_rng(9)
        state = Field(grid, rng.normal(size=grid.shape))
        geom = WindowGeometry(dims=2, extent=1, stride=2)
        anchors = np.asarray(tile_anchors(8, 2, 2))
        batch = input_windows(state.values, anchors, geom)
        for row, anchor in zip(batch, map(tuple, anchors)):
            assert np.array_equal(row, extract_window(state, anchor, geom))


class TestPositionalEncoding:
    def test_origin_is_all_ones(self):
        for k in (0, 1, 5):
            assert np.array_equal(positional_encoding(0.0, 7.0, k), np.ones(k + 1))

    def test_endpoint_alternates(self):
        assert np.allclose(positional_encoding(3.0, 3.0, 1), [-1.0, 1.0])

    def test_order_three_has_four_components(self):
        # the forced-equation setup uses k = 3
        enc = positional_encoding(1.3, 200.0, 3)
        assert enc.shape == (4,)
        x = 1.3
        assert np.allclose(
            enc,
            [np.cos(np.pi * x / 200), np.cos(2 * np.pi * x / 200),
             np.cos(4 * np.pi * x / 200), np.cos(8 * np.pi * x / 200)],
        )


class TestNormalizer:
    def test_midpoint_and_endpoints(self):
        norm = Normalizer(v_min=-2.0, v_max=2.0)
        assert norm.normalize(0.0) == 0.5
        assert norm.normalize(-2.0) == 0.0
        assert norm.normalize(2.0) == 1.0

    def test_round_trip(self):
        norm = Normalizer(v_min=-1.7, v_max=3.3)
        rng = np.random.default_rng(1)
        x = rng.normal(size=100)
        assert np.abs(norm.denormalize(norm.normalize(x)) - x).max() < 1e-14

    def test_fit_over_states(self):
        grid = make_grid(8.0, 8)
        states = [Field(grid, np.linspace(-2, 1, 8)),
                  Field(grid, np.linspace(0, 3, 8))]
        norm = fit_normalizer(states)
        assert norm.v_min == -2.0 and norm.v_max == 3.0

    def test_degenerate_data_rejected(self):
        grid = make_grid(8.0, 8)
        with pytest.raises(ValueError):
            fit_normalizer([Field(grid, np.zeros(8))])


class TestAddNoise:
    def test_zero_sigma_identity(self):
        rng = np.random.default_rng(0)
        z = np.arange(5.0)
        assert np.array_equal(add_noise(z, 0.0, rng), z)

    def test_seeded_determinism(self):
        z = np.zeros(8)
        a = add_noise(z, 1e-4, np.random.default_rng(5))
        b = add_noise(z, 1e-4, np.random.default_rng(5))
        assert np.array_equal(a, b)

    def test_negative_sigma_rejected(self):
        with pytest.raises(ValueError):
            add_noise(np.zeros(3), -1.0, np.random.default_rng(0))

    def test_empirical_std_matches_sigma(self):
        rng = np.random.default_rng(2)
        noise = add_noise(np.zeros(10**6), 1e-4, rng)
        assert noise.std() == pytest.approx(1e-4, rel=0.01)
        assert abs(noise.mean()) < 5e-7
