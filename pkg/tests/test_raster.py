import math

import numpy as np
import pytest

from kakeyalab import _kernels, raster
from kakeyalab.curves import line_family, parabola_family
from kakeyalab.errors import ResourceLimitError, ValidationError
from kakeyalab.raster import (
    StraightTube,
    lp_norm,
    rasterize_straight_tubes,
    rasterize_tubes,
    tube_measure,
)


def vertical_family(positions, d=2):
    params = [[p] * (2 * (d - 1)) for p in np.atleast_1d(positions)]
    return line_family(params, d=d)


class TestRasterize:
    def test_vertical_tube_area_d2(self):
        fam = vertical_family([0.0])
        delta, h = 1 / 8, 1 / 32
        grid = rasterize_tubes(fam, None, delta, h)
        area = grid.total_mass()
        assert abs(area - 2 * (2 * delta)) / (2 * 2 * delta) <= 0.05

    def test_zero_params_empty(self):
        fam = vertical_family([0.0])
        grid = rasterize_tubes(fam, [], 1 / 8, 1 / 32)
        assert len(grid.cells) == 0
        assert lp_norm(grid, 2) == 0.0
        assert lp_norm(grid, math.inf) == 0.0

    def test_count_additivity(self):
        fam = vertical_family([-0.5, 0.5])
        grid = rasterize_tubes(fam, None, 1 / 16, 1 / 64)
        assert grid.max_count() == 1
        grid2 = rasterize_tubes(fam, [0, 0], 1 / 16, 1 / 64)
        assert grid2.max_count() == 2

    def test_mass_equals_sum_of_tube_measures(self):
        fam = parabola_family([[-0.3, 0.2], [0.1, 0.4]], d=2, bend=0.4)
        delta, h = 1 / 16, 1 / 64
        grid = rasterize_tubes(fam, None, delta, h)
        total = sum(tube_measure(fam, i, delta, h) for i in range(2))
        assert grid.total_mass() == pytest.approx(total)

    def test_monotone_in_delta(self):
        fam = parabola_family([[-0.2, 0.3]], d=2, bend=0.5)
        h = 1 / 64
        small = rasterize_tubes(fam, None, 1 / 16, h)
        large = rasterize_tubes(fam, None, 1 / 8, h)
        # every cell of the small tube appears in the large one
        assert np.isin(small.cells, large.cells).all()

    def test_refinement_convergence(self):
        fam = vertical_family([0.013])
        delta = 1 / 8
        analytic = 2 * 2 * delta
        errs = []
        for h in (delta / 2, delta / 4, delta / 8):
            grid = rasterize_tubes(fam, None, delta, h)
            errs.append(abs(grid.total_mass() - analytic))
        assert errs[0] >= errs[1] >= errs[2] - 1e-12

    def test_order_independence(self):
        fam = parabola_family(
            [[-0.4, 0.1], [0.0, 0.3], [0.2, -0.2]], d=2, bend=0.3
        )
        g1 = rasterize_tubes(fam, [0, 1, 2], 1 / 16, 1 / 64)
        g2 = rasterize_tubes(fam, [2, 0, 1], 1 / 16, 1 / 64)
        assert np.array_equal(g1.cells, g2.cells)
        assert np.array_equal(g1.counts, g2.counts)

    def test_budget_error_reports_required_h(self):
        fam = vertical_family([0.0], d=3)
        with pytest.raises(ResourceLimitError) as exc:
            rasterize_tubes(fam, None, 2**-9, 2**-11)
        assert exc.value.required is not None

    def test_h_constraint(self):
        fam = vertical_family([0.0])
        with pytest.raises(ValidationError):
            rasterize_tubes(fam, None, 1 / 8, 1 / 8)


class TestTubeMeasure:
    def test_d3_euclidean_cross_section(self):
        fam = vertical_family([0.0], d=3)
        delta = 1 / 8
        vol = tube_measure(fam, 0, delta, delta / 4)
        analytic = 2 * math.pi * delta**2
        assert abs(vol - analytic) / analytic <= 0.10

    def test_d3_monte_carlo_oracle(self):
        fam = vertical_family([0.0], d=3)
        delta = 1 / 8
        rng = np.random.default_rng(5)
        pts = rng.uniform(-1, 1, size=(200000, 3))
        inside = (pts[:, 0] ** 2 + pts[:, 1] ** 2) <= delta**2
        mc = inside.mean() * 8.0
        vol = tube_measure(fam, 0, delta, delta / 4)
        assert abs(vol - mc) / mc <= 0.10

    def test_halving_delta_scales_volume(self):
        fam = vertical_family([0.007], d=3)
        v1 = tube_measure(fam, 0, 1 / 8, 1 / 32)
        v2 = tube_measure(fam, 0, 1 / 16, 1 / 64)
        assert abs(v2 / v1 - 0.25) <= 0.15 * 0.25

    def test_empty_family_zero(self):
        fam = vertical_family([0.0])
        grid = rasterize_tubes(fam, [], 1 / 8, 1 / 32)
        assert grid.total_mass() == 0.0


class TestLpNorm:
    def test_single_tube_l1_is_measure(self):
        fam = vertical_family([0.0])
        delta, h = 1 / 8, 1 / 32
        grid = rasterize_tubes(fam, None, delta, h)
        assert lp_norm(grid, 1) == pytest.approx(grid.total_mass())

    def test_homogeneity_under_duplication(self):
        fam = vertical_family([0.0])
        delta, h = 1 / 8, 1 / 32
        single = rasterize_tubes(fam, [0], delta, h)
        triple = rasterize_tubes(fam, [0, 0, 0], delta, h)
        for p in (1, 2, 3.5, math.inf):
            assert lp_norm(triple, p) == pytest.approx(3 * lp_norm(single, p))

    def test_crossing_tubes_l2_identity(self):
        # two axis-aligned straight tubes: ||f||_2^2 = |T1| + |T2| + 2|T1 n T2|
        delta, h = 1 / 8, 1 / 64
        t1 = StraightTube(np.zeros(2), np.array([0.0, 1.0]), 2.0, delta)
        t2 = StraightTube(np.zeros(2), np.array([1.0, 0.0]), 2.0, delta)
        grid = rasterize_straight_tubes([t1, t2], 2, h)
        measures = [len(raster.straight_tube_cells(t, h, grid.M)) * h**2 for t in (t1, t2)]
        overlap = (2 * delta) ** 2
        analytic = measures[0] + measures[1] + 2 * overlap
        assert abs(lp_norm(grid, 2) ** 2 - analytic) / analytic <= 0.10

    def test_p_below_one_rejected(self):
        grid = rasterize_tubes(vertical_family([0.0]), None, 1 / 8, 1 / 32)
        with pytest.raises(ValidationError):
            lp_norm(grid, 0.5)

    def test_mask_restriction_contracts(self):
        fam = vertical_family([0.0])
        grid = rasterize_tubes(fam, None, 1 / 8, 1 / 32)
        mask = grid.cells[: len(grid.cells) // 2]
        restricted = grid.restrict(mask)
        for p in (1, 2, math.inf):
            assert lp_norm(restricted, p) <= lp_norm(grid, p) + 1e-15


class TestKernelBackends:
    @pytest.mark.parametrize("d", [2, 3, 4])
    def test_backends_agree(self, d):
        try:
            cy = _kernels.get_backend("cython")
        except ImportError:
            pytest.skip("compiled kernel unavailable")
        py = _kernels.get_backend("python")
        rng = np.random.default_rng(d)
        M = 64 if d == 2 else 16
        h = 2.0 / M
        delta = 4 * h
        prof = rng.uniform(-0.9, 0.9, size=(M, d - 1))
        a = py.tube_cells(prof, delta, h, M)
        b = cy.tube_cells(prof, delta, h, M)
        assert np.array_equal(a, b)

    def test_backends_agree_on_family(self):
        try:
            cy = _kernels.get_backend("cython")
        except ImportError:
            pytest.skip("compiled kernel unavailable")
        py = _kernels.get_backend("python")
        fam = parabola_family([[-0.3, 0.4]], d=2, bend=0.6)
        M = 256
        h = 2.0 / M
        prof = raster.profile_on_slabs(fam, 0, h, M)
        assert np.array_equal(
            py.tube_cells(prof, 1 / 16, h, M), cy.tube_cells(prof, 1 / 16, h, M)
        )


class TestDenseExport:
    def test_dense_matches_sparse(self):
        fam = vertical_family([0.25])
        grid = rasterize_tubes(fam, None, 1 / 8, 1 / 16)
        dense = grid.dense()
        assert dense.sum() == grid.counts.sum()
        assert (dense > 0).sum() == len(grid.cells)

    def test_dense_rejected_in_d3(self):
        fam = vertical_family([0.0], d=3)
        grid = rasterize_tubes(fam, None, 1 / 8, 1 / 16)
        with pytest.raises(ValidationError):
            grid.dense()
