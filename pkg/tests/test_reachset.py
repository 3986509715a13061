"""Tests for control sampling, endpoint propagation, and bound comparison."""

import math

import numpy as np
import pytest

from nwidthreach import (
    AffineSubspace,
    BeamSpec,
    BoundReport,
    ComparisonReport,
    ControlSet,
    ControlSignal,
    ReachRow,
    SchrodingerSpec,
    SeriesDivergenceError,
    affine_width_estimate,
    beam_model,
    compare_report,
    constructive_residual,
    constructive_subspace,
    endpoint_exact,
    known_control_width,
    point_distance,
    propagate_cloud,
    sample_controls,
    schrodinger_model,
    set_distance,
    tail_bound,
)


def _beam_setup(q=0.5, T=0.25, N=4, m=2, seed=0, sample_count=16, cells=16):
    spec = BeamSpec(L=math.pi, a=1.0, N_modes=N)
    model = beam_model(spec)
    x0 = np.zeros(model.dim)
    x0[0] = 1.0
    r = q * spec.a / math.sqrt(T)
    K = ControlSet(
        horizon=T, cells=cells, basis_family="legendre", m=m, r=r,
        sample_count=sample_count, seed=seed,
    )
    return spec, model, x0, K


class TestControlSet:
    @pytest.mark.parametrize("family", ["legendre", "fourier", "indicator"])
    @pytest.mark.parametrize("m,cells", [(1, 8), (3, 16), (5, 40)])
    def test_realized_basis_orthonormal(self, family, m, cells):
        K = ControlSet(horizon=0.7, cells=cells, basis_family=family, m=m, r=1.0)
        gram = (K.basis * K.dt) @ K.basis.T
        assert np.max(np.abs(gram - np.eye(m))) < 1e-12

    def test_signal_l2_equals_coefficient_norm(self):
        K = ControlSet(horizon=2.0, cells=32, basis_family="fourier", m=4, r=3.0)
        rng = np.random.default_rng(5)
        for _ in range(5):
            c = rng.standard_normal(4)
            sig = K.signal(c)
            assert sig.l2_norm == pytest.approx(np.linalg.norm(c), rel=1e-12)

    def test_basis_signal_unit_norm(self):
        K = ControlSet(horizon=0.3, cells=12, basis_family="indicator", m=3, r=1.0)
        for j in range(3):
            assert K.basis_signal(j).l2_norm == pytest.approx(1.0, rel=1e-12)
        with pytest.raises(ValueError):
            K.basis_signal(3)

    def test_validation(self):
        with pytest.raises(ValueError):
            ControlSet(horizon=0.0, cells=8)
        with pytest.raises(ValueError):
            ControlSet(horizon=1.0, cells=8, m=0)
        with pytest.raises(ValueError):
            ControlSet(horizon=1.0, cells=4, m=5)
        with pytest.raises(ValueError):
            ControlSet(horizon=1.0, cells=8, r=-0.1)
        with pytest.raises(ValueError):
            ControlSet(horizon=1.0, cells=8, basis_family="wavelet")
        with pytest.raises(ValueError):
            ControlSet(horizon=1.0, cells=8, sample_count=-1)


class TestKnownControlWidth:
    def test_ball_width_profile(self):
        K = ControlSet(horizon=1.0, cells=8, m=3, r=0.7)
        assert known_control_width(K, 0) == 0.7
        assert known_control_width(K, 2) == 0.7
        assert known_control_width(K, 3) == 0.0
        assert known_control_width(K, 7) == 0.0

    def test_zero_radius(self):
        K = ControlSet(horizon=1.0, cells=8, m=2, r=0.0)
        assert all(known_control_width(K, n) == 0.0 for n in range(4))

    def test_rejects_other_descriptors(self):
        with pytest.raises(TypeError):
            known_control_width(np.eye(3), 1)
        K = ControlSet(horizon=1.0, cells=8, m=2, r=1.0)
        with pytest.raises(ValueError):
            known_control_width(K, -1)

    def test_no_affine_plane_beats_the_ball_radius(self):
        # Brute force in coefficient space: for every random affine 2-flat
        # in R^3 the ball boundary contains a witness (a pole along the
        # flat's normal) at distance >= r, while the coordinate subspace
        # achieves exactly r on dense boundary samples.
        rng = np.random.default_rng(31)
        for _ in range(100):
            offset = rng.standard_normal(3) * 0.5
            cols = rng.standard_normal((3, 2))
            flat = AffineSubspace.from_span(offset, cols)
            normal = np.cross(flat.basis[:, 0], flat.basis[:, 1])
            normal /= np.linalg.norm(normal)
            poles = np.array([0.7 * normal, -0.7 * normal])
            assert set_distance(poles, flat) >= 0.7 - 1e-9
        pts = rng.standard_normal((2000, 3))
        pts = 0.7 * pts / np.linalg.norm(pts, axis=1, keepdims=True)
        coord = AffineSubspace.from_span(
            np.zeros(3), np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
        )
        assert set_distance(pts, coord) <= 0.7 + 1e-12
        assert set_distance(pts, coord) >= 0.7 - 1e-3


class TestSampleControls:
    def test_extremes_only_when_no_random_samples(self):
        K = ControlSet(horizon=1.0, cells=8, m=2, r=1.5, sample_count=0)
        controls = sample_controls(K)
        assert len(controls) == 4
        assert np.allclose(controls[0].values, 1.5 * K.basis[0], atol=1e-15)
        assert np.allclose(controls[1].values, -1.5 * K.basis[0], atol=1e-15)
        assert np.allclose(controls[2].values, 1.5 * K.basis[1], atol=1e-15)
        assert np.allclose(controls[3].values, -1.5 * K.basis[1], atol=1e-15)

    def test_all_samples_inside_ball(self):
        K = ControlSet(horizon=0.5, cells=16, m=3, r=2.0, sample_count=200, seed=9)
        for u in sample_controls(K):
            assert u.l2_norm <= 2.0 + 1e-12

    def test_same_seed_bitwise_identical(self):
        K1 = ControlSet(horizon=1.0, cells=8, m=2, r=1.0, sample_count=20, seed=42)
        K2 = ControlSet(horizon=1.0, cells=8, m=2, r=1.0, sample_count=20, seed=42)
        a = sample_controls(K1)
        b = sample_controls(K2)
        assert len(a) == len(b) == 24
        for ua, ub in zip(a, b):
            assert np.array_equal(ua.values, ub.values)

    def test_different_seed_differs(self):
        base = dict(horizon=1.0, cells=8, m=2, r=1.0, sample_count=5)
        a = sample_controls(ControlSet(seed=1, **base))
        b = sample_controls(ControlSet(seed=2, **base))
        assert not np.array_equal(a[-1].values, b[-1].values)


class TestPropagateCloud:
    def test_zero_state_is_invariant(self):
        _, model, _, K = _beam_setup()
        cloud = propagate_cloud(model, np.zeros(model.dim), sample_controls(K))
        assert cloud.radius == 0.0

    def test_zero_control_gives_free_endpoint(self):
        _, model, x0, K = _beam_setup()
        zero = ControlSignal(horizon=K.horizon, values=np.zeros(K.cells))
        cloud = propagate_cloud(model, x0, [zero])
        free = model.A_action(K.horizon, x0)
        assert np.max(np.abs(cloud.points[0] - free)) < 1e-12

    def test_series_within_tail_certificate_of_oracle(self):
        _, model, x0, K = _beam_setup(q=0.6)
        controls = sample_controls(K)
        oracle = propagate_cloud(model, x0, controls, method="oracle")
        series = propagate_cloud(model, x0, controls, method="series", series_order=6)
        dev = float(np.max(np.linalg.norm(oracle.points - series.points, axis=1)))
        assert dev <= tail_bound(model, 1.0, K.horizon, K.r, k_start=7) + 1e-8

    def test_series_refused_past_gate(self):
        _, model, x0, K = _beam_setup(q=1.2)
        with pytest.raises(SeriesDivergenceError):
            propagate_cloud(model, x0, sample_controls(K), method="series")

    def test_order_matches_inputs(self):
        _, model, x0, K = _beam_setup(sample_count=6)
        controls = sample_controls(K)
        cloud = propagate_cloud(model, x0, controls)
        for i, u in enumerate(controls):
            assert np.array_equal(cloud.points[i], endpoint_exact(model, x0, u))

    def test_thread_count_does_not_change_results(self, monkeypatch):
        _, model, x0, K = _beam_setup(sample_count=10)
        controls = sample_controls(K)
        monkeypatch.setenv("NWIDTH_THREADS", "1")
        serial = propagate_cloud(model, x0, controls)
        monkeypatch.setenv("NWIDTH_THREADS", "3")
        threaded = propagate_cloud(model, x0, controls)
        assert np.array_equal(serial.points, threaded.points)

    def test_bad_inputs(self):
        _, model, x0, K = _beam_setup()
        with pytest.raises(ValueError):
            propagate_cloud(model, x0, sample_controls(K), method="exact")
        with pytest.raises(ValueError):
            propagate_cloud(model, x0[:-1], sample_controls(K))
        with pytest.raises(ValueError):
            propagate_cloud(model, x0, [])


class TestConstructiveSubspace:
    def test_zero_radius_leaves_single_point(self):
        _, model, x0, _ = _beam_setup()
        K = ControlSet(horizon=0.25, cells=16, m=2, r=0.0, sample_count=8)
        controls = sample_controls(K)
        assert constructive_residual(model, x0, K, controls, 0) < 1e-12

    def test_point_subspace_at_free_endpoint(self):
        _, model, x0, K = _beam_setup()
        sub = constructive_subspace(model, x0, K, 0)
        assert sub.dim == 0
        assert point_distance(model.A_action(K.horizon, x0), sub) < 1e-12

    def test_first_order_series_lies_in_span(self):
        # With the series truncated at order one the endpoints are exactly
        # the offset plus a linear image of the controls.
        _, model, x0, K = _beam_setup(m=3)
        controls = sample_controls(K)
        res = constructive_residual(
            model, x0, K, controls, n=3, method="series", series_order=1
        )
        assert res < 1e-12

    def test_dimension_capped_at_m(self):
        _, model, x0, K = _beam_setup(m=2)
        assert constructive_subspace(model, x0, K, 5).dim <= 2
        assert constructive_subspace(model, x0, K, 1).dim == 1

    def test_residual_decreases_with_n(self):
        _, model, x0, K = _beam_setup(m=3, sample_count=12)
        controls = sample_controls(K)
        vals = [
            constructive_residual(model, x0, K, controls, n) for n in range(4)
        ]
        assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))


class TestCompareReport:
    def test_beam_rows_satisfy_bound(self):
        spec, model, x0, K = _beam_setup(q=0.5, m=3, sample_count=24)
        rep = compare_report(
            model, x0, K, n_max=5, bound_kind="beam",
            bound_constants={"a": spec.a},
        )
        assert rep.n_max == 5
        for row in rep.rows:
            assert row.bound.valid
            assert row.constructive_residual <= row.bound.value + 1e-8
            assert row.affine_width_est <= row.constructive_residual + 1e-10
            assert row.affine_width_est <= row.linear_width_est + 1e-12
            assert row.slack is not None

    def test_invalid_regime_rows_flagged_not_asserted(self):
        spec, model, x0, K = _beam_setup(q=1.5, m=2, sample_count=4)
        rep = compare_report(
            model, x0, K, n_max=2, bound_kind="beam",
            bound_constants={"a": spec.a},
        )
        for row in rep.rows:
            assert not row.bound.valid
            assert row.bound.value is None
            assert row.slack is None

    def test_schrodinger_rows_and_norm_conservation(self):
        sspec = SchrodingerSpec(N_modes=4)
        model = schrodinger_model(sspec)
        x0 = np.zeros(4, dtype=complex)
        x0[0] = 1.0
        T = 0.1
        r = 0.5 / (model.B_norm * math.sqrt(T))
        K = ControlSet(horizon=T, cells=16, basis_family="fourier", m=2, r=r,
                       sample_count=12, seed=3)
        rep = compare_report(model, x0, K, n_max=3, bound_kind="bilinear")
        for row in rep.rows:
            assert row.bound.valid
            assert row.constructive_residual <= row.bound.value + 1e-8
        cloud = propagate_cloud(model, x0, sample_controls(K))
        norms = np.linalg.norm(cloud.points, axis=1)
        assert np.max(np.abs(norms - 1.0)) < 1e-9

    def test_series_method_report(self):
        spec, model, x0, K = _beam_setup(q=0.4, sample_count=10)
        rep = compare_report(
            model, x0, K, n_max=3, method="series", series_order=8,
            bound_kind="beam", bound_constants={"a": spec.a},
        )
        assert rep.meta["method"] == "series"
        assert rep.meta["series_order"] == 8
        for row in rep.rows:
            assert row.constructive_residual <= row.bound.value + 1e-8

    def test_subsample_width_monotone_with_shared_candidate(self):
        _, model, x0, K = _beam_setup(m=2, sample_count=20)
        cloud = propagate_cloud(model, x0, sample_controls(K))
        for n in (0, 1, 2):
            w_full, full = affine_width_estimate(cloud, n)
            sub_points = cloud.points[::3]
            _, sub = affine_width_estimate(sub_points, n, extra_candidates=[w_full])
            assert sub <= full + 1e-10

    def test_metadata_contents(self):
        spec, model, x0, K = _beam_setup()
        rep = compare_report(model, x0, K, n_max=1, bound_kind="beam",
                             bound_constants={"a": spec.a})
        meta = rep.meta
        assert meta["model"] == "beam"
        assert meta["dim"] == model.dim
        assert meta["m"] == K.m
        assert meta["bound_kind"] == "beam"
        assert meta["d_nK_mode"] == "analytic ball"
        assert meta["series_order"] is None

    def test_report_validation(self):
        bound = BoundReport(
            name="bilinear", inputs={}, affine_term=0.0,
            constant_term=0.1, valid=True,
        )
        good = ReachRow(
            n=0, constructive_residual=0.05,
            affine_width_est=0.04, linear_width_est=0.06, bound=bound,
        )
        bad = ReachRow(
            n=0, constructive_residual=0.5,
            affine_width_est=0.4, linear_width_est=0.6, bound=bound,
        )
        ComparisonReport(rows=(good,), meta={})
        with pytest.raises(ValueError, match="violated"):
            ComparisonReport(rows=(bad,), meta={})
        with pytest.raises(ValueError, match="order"):
            ComparisonReport(rows=(good, good), meta={})
