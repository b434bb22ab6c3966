"""Hierarchical spaces: refinement, active-function selection, evaluation."""

import itertools

import numpy as np
import pytest

from splinefit import (
    CellId,
    HierarchicalSpace,
    SplineSpace,
    assemble_thin_plate,
    build_hierarchical,
    collocation_hierarchical,
    collocation_matrix,
    dyadic_refine_space,
    make_open_knot_vector,
    mark_cells,
    uniform_interior,
)


def grid_space(degree, cells, ndim=2, domain=(0.0, 1.0)):
    kv = make_open_knot_vector(domain, degree, uniform_interior(domain, cells - 1))
    return SplineSpace([kv] * ndim if ndim > 1 else kv)


def brute_force_active(h):
    """Active sets by direct geometric support enumeration.

    A level-l cell belongs to a function's support when its midpoint falls
    inside the function's open knot span; the selection rule is then applied
    with explicit Python set arithmetic on cell midpoints.
    """
    result = []
    for lev, space in enumerate(h.levels):
        kvs = space.knot_vectors
        mids = [0.5 * (kv.breakpoints[:-1] + kv.breakpoints[1:]) for kv in kvs]
        domain_cells = {tuple(ix) for ix in np.argwhere(h.domains[lev])}
        if lev + 1 < h.num_levels:
            fine_cells = {tuple(ix) for ix in np.argwhere(h.domains[lev + 1])}
            fine_mids = [
                0.5 * (kv.breakpoints[:-1] + kv.breakpoints[1:])
                for kv in h.levels[lev + 1].knot_vectors
            ]
        else:
            fine_cells = None
        active = []
        for flat, index in enumerate(itertools.product(*[range(kv.dim) for kv in kvs])):
            support = []
            for d, (kv, j) in enumerate(zip(kvs, index)):
                lo, hi = kv.knots[j], kv.knots[j + kv.order]
                support.append([i for i, m in enumerate(mids[d]) if lo < m < hi])
            cells = set(itertools.product(*support))
            inside_own = cells <= domain_cells
            if fine_cells is None:
                inside_fine = False
            else:
                fine_support = []
                for d, (kv, j) in enumerate(zip(kvs, index)):
                    lo, hi = kv.knots[j], kv.knots[j + kv.order]
                    fine_support.append(
                        [i for i, m in enumerate(fine_mids[d]) if lo < m < hi]
                    )
                inside_fine = set(itertools.product(*fine_support)) <= fine_cells
            if inside_own and not inside_fine:
                active.append(flat)
        result.append(active)
    return result


class TestDyadicRefine:
    def test_single_span_gains_midpoint(self):
        space = SplineSpace(make_open_knot_vector((0.0, 1.0), 3, []))
        fine = dyadic_refine_space(space)
        np.testing.assert_allclose(fine.knot_vectors[0].breakpoints, [0, 0.5, 1])

    def test_two_spans_gain_quarter_points(self):
        space = SplineSpace(make_open_knot_vector((0.0, 1.0), 2, [0.5]))
        fine = dyadic_refine_space(space)
        np.testing.assert_allclose(
            fine.knot_vectors[0].breakpoints, [0, 0.25, 0.5, 0.75, 1]
        )

    def test_refined_space_contains_coarse(self):
        """Every coarse basis function refits exactly in the refined space."""
        space = grid_space(3, 3, ndim=1)
        fine = dyadic_refine_space(space)
        rng = np.random.default_rng(0)
        pts = rng.uniform(0, 1, 200)
        Bc = collocation_matrix(space, pts)
        Bf = collocation_matrix(fine, pts)
        for j in range(space.dim):
            c, *_ = np.linalg.lstsq(Bf, Bc[:, j], rcond=None)
            assert np.abs(Bf @ c - Bc[:, j]).max() < 1e-10


class TestBuildHierarchical:
    def test_no_marks_is_the_base(self):
        base = grid_space(2, 4)
        h = build_hierarchical(base, {})
        assert h.dim == base.dim
        assert h.num_levels == 1
        assert h.active[0].size == base.dim

    def test_marking_everything_gives_next_level(self):
        base = grid_space(2, 4)
        marks = {0: [(i, j) for i in range(4) for j in range(4)]}
        h = build_hierarchical(base, marks)
        fine = dyadic_refine_space(base)
        assert h.active[0].size == 0
        assert h.active[1].size == fine.dim
        assert h.dim == fine.dim

    def test_corner_mark_counts_match_bruteforce(self):
        """Single corner cell on a 4x4 bi-quadratic mesh, oracle-checked."""
        base = grid_space(2, 4)
        h = build_hierarchical(base, {0: [(0, 0)]})
        expected = brute_force_active(h)
        for lev in range(h.num_levels):
            assert h.active[lev].tolist() == expected[lev]

    def test_nesting_violation_raises(self):
        base = grid_space(2, 4)
        h = build_hierarchical(base, {0: [(0, 0)]})
        with pytest.raises(ValueError, match="nesting"):
            h.refine([CellId(1, (7, 7))], buffer=False)

    def test_selection_rule_bruteforce_sweep(self):
        """Random multi-level refinements agree with the geometric oracle."""
        rng = np.random.default_rng(77)
        for cells, degree in [(4, 1), (6, 2), (8, 2)]:
            base = grid_space(degree, cells)
            h = HierarchicalSpace.from_base(base)
            for level in range(2):
                candidates = np.argwhere(h.domains[level])
                take = rng.integers(1, max(2, len(candidates) // 3))
                chosen = candidates[rng.choice(len(candidates), take, replace=False)]
                h = h.refine(
                    [CellId(level, tuple(ix)) for ix in chosen], buffer=False
                )
            expected = brute_force_active(h)
            for lev in range(h.num_levels):
                assert h.active[lev].tolist() == expected[lev]

    def test_dimension_never_decreases(self):
        rng = np.random.default_rng(5)
        h = HierarchicalSpace.from_base(grid_space(2, 6))
        dims = [h.dim]
        for level in range(3):
            candidates = np.argwhere(h.domains[level])
            chosen = candidates[rng.choice(len(candidates), 3, replace=False)]
            h = h.refine([CellId(level, tuple(ix)) for ix in chosen], buffer=True)
            dims.append(h.dim)
        assert all(b >= a for a, b in zip(dims, dims[1:]))

    def test_deactivated_function_remains_representable(self):
        """A coarse function dropped by refinement refits in the fine space."""
        base = grid_space(2, 4)
        h0 = HierarchicalSpace.from_base(base)
        marks = [CellId(0, (i, j)) for i in range(2) for j in range(2)]
        h1 = h0.refine(marks, buffer=False)
        removed = sorted(set(h0.active[0].tolist()) - set(h1.active[0].tolist()))
        assert removed
        rng = np.random.default_rng(1)
        pts = rng.uniform(0, 1, (400, 2))
        B_fine = collocation_hierarchical(h1, pts)
        for j in removed:
            target = np.array(
                [_tensor_function_value(base, j, x) for x in pts]
            )
            c, *_ = np.linalg.lstsq(B_fine, target, rcond=None)
            assert np.abs(B_fine @ c - target).max() < 1e-9


def _tensor_function_value(space, flat_index, x):
    idx, vals = space.eval_basis(x)
    hit = np.flatnonzero(idx == flat_index)
    return float(vals[hit[0]]) if hit.size else 0.0


class TestEvaluation:
    def test_unrefined_matches_tensor(self):
        base = grid_space(2, 4)
        h = HierarchicalSpace.from_base(base)
        rng = np.random.default_rng(2)
        for _ in range(50):
            x = rng.uniform(0, 1, 2)
            ih, vh = h.eval_basis(x)
            it, vt = base.eval_basis(x)
            order_h, order_t = np.argsort(ih), np.argsort(it)
            np.testing.assert_array_equal(ih[order_h], it[order_t])
            np.testing.assert_allclose(vh[order_h], vt[order_t])

    def test_coarse_region_sees_only_coarse_functions(self):
        base = grid_space(2, 4)
        h = HierarchicalSpace.from_base(base).refine([CellId(0, (0, 0))], buffer=False)
        idx, vals = h.eval_basis([0.9, 0.9])
        assert np.all(idx < h.offsets[1])
        assert np.all(vals >= 0)

    def test_values_nonnegative_everywhere(self):
        base = grid_space(2, 6)
        h = HierarchicalSpace.from_base(base).refine(
            [CellId(0, (2, 3)), CellId(0, (3, 3))], buffer=True
        )
        rng = np.random.default_rng(3)
        for _ in range(300):
            _, vals = h.eval_basis(rng.uniform(0, 1, 2))
            assert np.all(vals >= 0)

    def test_derivatives_match_finite_differences(self):
        base = grid_space(2, 4)
        h = HierarchicalSpace.from_base(base).refine([CellId(0, (1, 1))], buffer=False)
        rng = np.random.default_rng(4)
        step = 1e-6
        for _ in range(30):
            x = rng.uniform(0.05, 0.95, 2)
            for axis, alpha in ((0, (1, 0)), (1, (0, 1))):
                up, dn = x.copy(), x.copy()
                up[axis] += step
                dn[axis] -= step
                iu, vu = h.eval_basis(up)
                idn, vdn = h.eval_basis(dn)
                rowu = np.zeros(h.dim)
                rowu[iu] = vu
                rowd = np.zeros(h.dim)
                rowd[idn] = vdn
                fd = (rowu - rowd) / (2 * step)
                ia, va = h.eval_basis_derivatives(x, alpha)
                row = np.zeros(h.dim)
                row[ia] = va
                np.testing.assert_allclose(row, fd, rtol=1e-4, atol=1e-4)


class TestMarkCells:
    @pytest.fixture
    def refined(self):
        base = grid_space(2, 4)
        return HierarchicalSpace.from_base(base).refine([CellId(0, (0, 0))], buffer=False)

    def test_no_offenders_no_marks(self, refined):
        sites = np.array([[0.1, 0.1], [0.6, 0.6]])
        assert mark_cells(refined, sites, [0.0, 0.0], 0.5) == []

    def test_single_offender_single_cell(self, refined):
        sites = np.array([[0.6, 0.6]])
        marks = mark_cells(refined, sites, [1.0], 0.5)
        assert marks == [CellId(0, (2, 2))]

    def test_cluster_deduplicates(self, refined):
        sites = np.array([[0.05, 0.05], [0.06, 0.06], [0.08, 0.04]])
        marks = mark_cells(refined, sites, [1.0, 1.0, 1.0], 0.5)
        assert len(marks) == 1
        assert marks[0].level == 1  # offending sites live in the refined corner

    def test_errors_must_align(self, refined):
        with pytest.raises(ValueError, match="align"):
            mark_cells(refined, np.zeros((2, 2)) + 0.3, [1.0], 0.5)


class TestCollocationHierarchical:
    def test_unrefined_equals_tensor(self):
        base = grid_space(2, 4)
        h = HierarchicalSpace.from_base(base)
        rng = np.random.default_rng(6)
        sites = rng.uniform(0, 1, (30, 2))
        np.testing.assert_allclose(
            collocation_hierarchical(h, sites), collocation_matrix(base, sites)
        )

    def test_rows_match_pointwise_evaluation(self):
        base = grid_space(2, 5)
        h = HierarchicalSpace.from_base(base).refine(
            [CellId(0, (0, 0)), CellId(0, (4, 4))], buffer=True
        )
        rng = np.random.default_rng(8)
        sites = rng.uniform(0, 1, (40, 2))
        B = collocation_hierarchical(h, sites)
        assert B.shape == (40, h.dim)
        for i, x in enumerate(sites):
            idx, vals = h.eval_basis(x)
            row = np.zeros(h.dim)
            row[idx] = vals
            np.testing.assert_allclose(B[i], row, atol=1e-15)

    def test_sparse_equals_dense(self):
        base = grid_space(2, 4)
        h = HierarchicalSpace.from_base(base).refine([CellId(0, (1, 2))], buffer=False)
        rng = np.random.default_rng(9)
        sites = rng.uniform(0, 1, (25, 2))
        dense = collocation_hierarchical(h, sites)
        sparse = collocation_hierarchical(h, sites, sparse=True)
        np.testing.assert_allclose(sparse.toarray(), dense)


class TestHierarchicalPenalty:
    def test_energy_nonnegative_on_random_coefficients(self):
        base = grid_space(2, 4)
        h = HierarchicalSpace.from_base(base).refine(
            [CellId(0, (0, 0)), CellId(0, (1, 1))], buffer=True
        )
        P = assemble_thin_plate(h)
        rng = np.random.default_rng(10)
        for _ in range(20):
            c = rng.normal(size=h.dim)
            assert c @ P @ c >= -1e-10

    def test_unrefined_matches_tensor_assembly(self):
        base = grid_space(3, 3)
        h = HierarchicalSpace.from_base(base)
        np.testing.assert_allclose(
            assemble_thin_plate(h), assemble_thin_plate(base), atol=1e-12
        )

    def test_leaf_cells_tile_domain(self):
        base = grid_space(2, 4)
        h = HierarchicalSpace.from_base(base).refine(
            [CellId(0, (0, 0)), CellId(0, (3, 3))], buffer=False
        )
        area = 0.0
        for (a0, b0), (a1, b1) in h.leaf_cell_bounds():
            area += (b0 - a0) * (b1 - a1)
        assert area == pytest.approx(1.0)
