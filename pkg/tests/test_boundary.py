import numpy as np
import pytest
import scipy.linalg

import orbitgeom as og


def _e(i, j, n=2):
    m = np.zeros((n, n))
    m[i, j] = 1.0
    return m


class TestMaxTrace:
    def test_identity(self):
        assert og.max_trace(np.eye(3), np.eye(3)) == 3.0

    def test_signed_diagonal(self):
        # 3*1 + 2*1 + sign(det)*1*1 with det(AP) < 0
        assert og.max_trace(np.diag([1.0, 1.0, -1.0]), np.diag([3.0, 2.0, 1.0])) == 4.0

    def test_against_bruteforce(self):
        rng = np.random.default_rng(0)
        for k in range(5):
            p = rng.standard_normal((3, 3))
            a = rng.standard_normal((3, 3))
            oracle = og.max_trace_bruteforce(p, a, starts=500, rng=np.random.default_rng(k))
            assert abs(og.max_trace(p, a) - oracle) <= 1e-6

    def test_positive_homogeneity(self):
        rng = np.random.default_rng(1)
        p, a = rng.standard_normal((4, 4)), rng.standard_normal((4, 4))
        assert np.isclose(og.max_trace(3.5 * p, a), 3.5 * og.max_trace(p, a), rtol=1e-14)

    def test_frame_invariance(self):
        rng = np.random.default_rng(2)
        p, a = rng.standard_normal((3, 3)), rng.standard_normal((3, 3))
        u, v, x, y = (og.haar_rotation(3, rng) for _ in range(4))
        assert abs(og.max_trace(u @ p @ v, x @ a @ y) - og.max_trace(p, a)) < 1e-10

    def test_upper_bound_property(self):
        rng = np.random.default_rng(3)
        for n in (2, 3, 4, 5):
            p, a = rng.standard_normal((n, n)), rng.standard_normal((n, n))
            r = og.max_trace(p, a)
            u = og.haar_rotations(n, 2500, rng)
            v = og.haar_rotations(n, 2500, rng)
            vals = np.einsum("sii->s", (p @ u @ a) @ v)
            assert np.max(vals) <= r + 1e-10


class TestArgmaxFrames:
    def test_identity(self):
        u, v = og.argmax_frames(np.eye(3), np.eye(3))
        assert np.isclose(np.trace(np.eye(3) @ u @ np.eye(3) @ v), 3.0)

    def test_signed_diagonal_attained(self):
        p, a = np.diag([1.0, 1.0, -1.0]), np.diag([3.0, 2.0, 1.0])
        u, v = og.argmax_frames(p, a)
        assert abs(np.trace(p @ u @ a @ v) - 4.0) < 1e-12

    @pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
    def test_attainment_random(self, n):
        rng = np.random.default_rng(n)
        for _ in range(10):
            p, a = rng.standard_normal((n, n)), rng.standard_normal((n, n))
            u, v = og.argmax_frames(p, a)
            assert og.rotation_defect(u) < 1e-10
            assert og.rotation_defect(v) < 1e-10
            assert abs(np.trace(p @ u @ a @ v) - og.max_trace(p, a)) <= 1e-10


class TestSupportBoundary:
    def test_unit_circle(self):
        region = og.support_boundary(_e(0, 0), _e(1, 0), np.eye(2), 64)
        assert np.max(np.abs(region.values - 1.0)) < 1e-12
        touch_norms = np.linalg.norm(region.touches, axis=1)
        assert np.max(np.abs(touch_norms - 1.0)) < 1e-10

    def test_zero_matrix_region_is_origin(self):
        region = og.support_boundary(_e(0, 0), _e(1, 0), np.zeros((2, 2)), 16)
        assert np.allclose(region.values, 0.0)
        assert region.vertices.shape[0] == 1
        assert np.allclose(region.vertices[0], [0.0, 0.0])

    def test_sample_containment(self):
        rng = np.random.default_rng(4)
        a = np.diag([3.0, 2.0, 1.0])
        p, q = rng.standard_normal((3, 3)), rng.standard_normal((3, 3))
        region = og.support_boundary(p, q, a, 360)
        cloud = og.sample_image(og.LinearMapSpec((p, q)), og.OrbitSpec(a), 10000, rng)
        assert region.violation(cloud.points) <= 1e-8

    def test_touch_points_on_their_support_line(self):
        rng = np.random.default_rng(5)
        a = rng.standard_normal((3, 3))
        p, q = rng.standard_normal((3, 3)), rng.standard_normal((3, 3))
        region = og.support_boundary(p, q, a, 90)
        proj = np.einsum("gk,gk->g", region.directions, region.touches)
        assert np.max(np.abs(proj - region.values)) < 1e-10

    def test_grid_too_small(self):
        with pytest.raises(ValueError):
            og.support_boundary(_e(0, 0), _e(1, 0), np.eye(2), 4)


class TestGamma:
    def _structure(self):
        return og.MaximizerStructure.from_diagonal_p(
            np.diag([3.0, 3.0, 1.0, 0.0]), np.diag([4.0, 3.0, 2.0, 1.0])
        )

    def test_grouping(self):
        st = self._structure()
        assert st.block_sizes == (2, 1, 1)
        assert st.values == (3.0, 1.0, 0.0)
        assert st.zero_tail

    def test_full_conjugation_preserves_trace(self):
        a = np.diag([4.0, 2.0, 1.0])
        st = og.MaximizerStructure.from_diagonal_p(np.diag([2.0, 2.0, 2.0]), a)
        rng = np.random.default_rng(6)
        for b in og.gamma_sample(st, 10, rng):
            assert abs(np.trace(b) - np.trace(a)) < 1e-10

    def test_distinct_values_pin_the_sample(self):
        # all blocks 1x1 with positive values: the only element is A itself
        a = np.diag([4.0, 2.0, 1.0])
        st = og.MaximizerStructure.from_diagonal_p(np.diag([3.0, 2.0, 1.0]), a)
        rng = np.random.default_rng(7)
        for b in og.gamma_sample(st, 5, rng):
            assert np.max(np.abs(b - a)) < 1e-14

    def test_zero_tail_frees_last_block(self):
        a = np.diag([4.0, 3.0, 2.0, 1.0])
        st = og.MaximizerStructure.from_diagonal_p(np.diag([2.0, 2.0, 0.0, 0.0]), a)
        rng = np.random.default_rng(8)
        mats = og.gamma_sample(st, 20, rng)
        r = og.gamma_value(st)
        p = st.p_matrix
        last_blocks = np.array([b[2:, 2:] for b in mats])
        assert np.std(np.einsum("sii->s", last_blocks)) > 1e-3
        for b in mats:
            assert abs(np.trace(p @ b) - r) < 1e-10

    def test_verify_passes_samples(self):
        st = self._structure()
        rng = np.random.default_rng(9)
        for b in og.gamma_sample(st, 20, rng):
            rep = og.gamma_verify(b, st.p_matrix, st.a, st)
            assert rep.passed
            assert rep.trace_gap <= 1e-10
            assert rep.max_off_block <= 1e-10

    def test_verify_rejects_generic_orbit_element(self):
        st = self._structure()
        rng = np.random.default_rng(10)
        b = og.haar_rotation(4, rng) @ st.a @ og.haar_rotation(4, rng)
        rep = og.gamma_verify(b, st.p_matrix, st.a, st)
        assert not rep.trace_ok

    def test_verify_rejects_perturbed_sample(self):
        st = self._structure()
        rng = np.random.default_rng(11)
        b = og.gamma_sample(st, 1, rng)[0]
        b[0, 3] += 1e-3
        rep = og.gamma_verify(b, st.p_matrix, st.a, st)
        assert not (rep.in_orbit and rep.blocks_ok)

    def test_tied_base_rejected(self):
        with pytest.raises(og.PreconditionError):
            og.MaximizerStructure.from_diagonal_p(np.diag([2.0, 1.0]), np.eye(2))

    def test_transport_identity(self):
        # moving the coefficient by frames transports the maximizer set exactly
        st = self._structure()
        rng = np.random.default_rng(12)
        p = st.p_matrix
        u, v = og.haar_rotation(4, rng), og.haar_rotation(4, rng)
        r = og.max_trace(u @ p @ v, st.a)
        for b in og.gamma_sample(st, 10, rng):
            transported = v.T @ b @ u.T
            assert abs(np.trace((u @ p @ v) @ transported) - r) < 1e-10


class TestBlockDecompose:
    def test_round_trip(self):
        a = np.diag([4.0, 3.0, 2.0, 1.0])
        rng = np.random.default_rng(13)
        w = og.haar_rotation(2, rng)
        x1, x2 = og.haar_rotation(2, rng), og.haar_rotation(2, rng)
        b = scipy.linalg.block_diag(w, x1) @ a @ scipy.linalg.block_diag(w.T, x2)
        dec = og.block_decompose(b, a, 2)
        assert dec.residual <= 1e-10
        recon = scipy.linalg.block_diag(dec.w, dec.x1) @ a @ scipy.linalg.block_diag(
            dec.w.T, dec.x2
        )
        assert np.max(np.abs(recon - b)) <= 1e-10

    def test_base_matrix_itself(self):
        a = np.diag([4.0, 3.0, 2.0, -1.0])
        dec = og.block_decompose(a, a, 2)
        assert dec.residual <= 1e-12

    def test_trace_mismatch_rejected(self):
        a = np.diag([4.0, 3.0, 2.0, 1.0])
        rng = np.random.default_rng(14)
        b = og.haar_rotation(4, rng) @ a @ og.haar_rotation(4, rng)
        assert og.diagonal_sum(b, 2) < og.diagonal_sum(a, 2) - 0.1
        with pytest.raises(og.PreconditionError):
            og.block_decompose(b, a, 2)


class TestThompson:
    def test_vertex_is_member(self):
        res = og.thompson_membership(
            og.DiagonalHullQuery(d=[3.0, 2.0, 1.0], s=[3.0, 2.0, 1.0], det_sign=1)
        )
        assert res.member
        verts = res.vertices
        recon = res.weights @ verts
        assert np.max(np.abs(recon - [3, 2, 1])) < 1e-9

    def test_orbit_diagonals_are_members(self):
        rng = np.random.default_rng(15)
        a = np.diag([3.0, 2.0, 1.0])
        s = [3.0, 2.0, 1.0]
        for _ in range(100):
            u, v = og.haar_rotation(3, rng), og.haar_rotation(3, rng)
            d = np.diag(u @ a @ v)
            assert og.thompson_membership(
                og.DiagonalHullQuery(d=d, s=s, det_sign=1)
            ).member

    def test_inflated_first_coordinate_rejected(self):
        res = og.thompson_membership(
            og.DiagonalHullQuery(d=[3.03, 2.0, 1.0], s=[3.0, 2.0, 1.0], det_sign=1)
        )
        assert not res.member
        assert res.margin > 0
        # the first coordinate functional also separates this query
        assert 3.03 > np.max(res.vertices[:, 0])

    def test_odd_parity_for_negative_determinant(self):
        verts = og.thompson_vertices([2.0, 1.0], det_sign=-1)
        signs = np.sum(verts < 0, axis=1)
        assert np.all(signs % 2 == 1)

    def test_zero_determinant_merges_classes(self):
        verts_zero = og.thompson_vertices([2.0, 1.0], det_sign=0)
        verts_pos = og.thompson_vertices([2.0, 1.0], det_sign=1)
        assert verts_zero.shape[0] > verts_pos.shape[0]

    def test_size_cap(self):
        with pytest.raises(ValueError):
            og.thompson_membership(
                og.DiagonalHullQuery(d=np.zeros(8), s=np.arange(8.0)[::-1], det_sign=1)
            )


class TestCounterexamples:
    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_planar_endpoints(self, n):
        rep = og.counterexample_report("ell3", n=n, rng=np.random.default_rng(16), starts=32)
        assert rep["endpoints_exact"]
        exp1 = [n - 2, n - 1, n - 2]
        exp2 = [n - 2, n - 2, n - 1]
        assert rep["endpoints"][0] == exp1
        assert rep["endpoints"][1] == exp2

    def test_planar_midpoint_distance(self):
        rep = og.counterexample_report("ell3", n=3, rng=np.random.default_rng(17), starts=64)
        assert rep["midpoint_distance_estimate"] >= 1e-3
        assert rep["passed"]

    def test_joint_endpoints_and_distance(self):
        rep = og.counterexample_report(
            "joint", n=3, m=2, ell=2, rng=np.random.default_rng(18), starts=64
        )
        assert rep["endpoints"][0] == [2.0, 0.0]
        assert rep["endpoints"][1] == [0.0, 2.0]
        assert rep["endpoints_exact"]
        assert rep["midpoint_distance_estimate"] >= 1e-3

    def test_bad_kind(self):
        with pytest.raises(ValueError):
            og.counterexample_report("nope", rng=np.random.default_rng(0))


class TestSupportConsistency:
    def test_scaled_targets_strictly_inside_region(self):
        # certified targets with alpha < 1 keep a positive margin to the boundary
        rng = np.random.default_rng(22)
        a = np.diag([3.0, 2.0, 1.0])
        p, q = rng.standard_normal((3, 3)), rng.standard_normal((3, 3))
        region = og.support_boundary(p, q, a, 360)
        for alpha in (0.0, 0.25, 0.5, 0.75):
            u, v = og.haar_rotation(3, rng), og.haar_rotation(3, rng)
            cert = og.certify_scaled_point([p, q], a, u, v, alpha)
            margin = float(np.min(region.values - region.directions @ cert.target))
            assert margin > 0.0


class TestConvexityCheck:
    def test_distinct_values_report(self):
        rng = np.random.default_rng(19)
        p, q = rng.standard_normal((3, 3)), rng.standard_normal((3, 3))
        rep = og.convexity_check(p, q, np.diag([3.0, 2.0, 1.0]), samples=20000, rng=rng, grid=360)
        assert rep.support_violation <= 1e-8
        assert rep.gap_hull_to_region <= 1e-8
        # 2e4 Haar samples land a few percent short of the exact boundary
        assert rep.gap_region_to_hull <= 0.05 * rep.diameter
        assert rep.tie_probe is None

    def test_tied_values_probe(self):
        rng = np.random.default_rng(20)
        p = np.diag([1.0, 0.0, 0.0])
        q = np.diag([0.0, 1.0, 0.0])
        rep = og.convexity_check(p, q, np.eye(3), samples=5000, rng=rng, grid=180)
        assert rep.tie_probe is not None
        assert rep.tie_probe["drift"] <= rep.tie_probe["bound"]
        assert rep.tie_probe["drift"] <= 10 * 1e-6 * (np.linalg.norm(p) + np.linalg.norm(q))

    def test_zero_matrix(self):
        rng = np.random.default_rng(21)
        rep = og.convexity_check(
            np.diag([1.0, 0, 0]), np.diag([0, 1.0, 0]), np.zeros((3, 3)),
            samples=500, rng=rng, grid=90,
        )
        assert rep.diameter == 0.0
        assert rep.gap_region_to_hull <= 1e-12
        assert rep.support_violation <= 1e-12
