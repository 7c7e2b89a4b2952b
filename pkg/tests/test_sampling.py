"""Sampling contracts: determinism, residuals, geometry, radius search."""

import numpy as np
import pytest

from fiberchi.germs import parse_germ
from fiberchi.sampling import (
    EmptySampleError,
    PointCloud,
    Radii,
    RadiusSearchError,
    SamplingError,
    choose_radii,
    default_regular_value,
    greedy_net,
    rng_stream,
    sample_boundary,
    sample_fiber,
    sample_link,
    sample_openbook_page,
    tameness_evidence,
)

LINEAR = parse_germ("source_dim: 3\nvariables: x y z\ncomponent: x\ncomponent: y\n")
ZW = parse_germ(
    "source_dim: 4\nvariables: x1 x2 x3 x4\n"
    "component: x1*x3 - x2*x4\ncomponent: x1*x4 + x2*x3\n"
)
NONTAME = parse_germ(
    "source_dim: 3\nvariables: x y z\ncomponent: x\ncomponent: x^2 + y^2 + z^2\n"
)
R = Radii.auto(0.5)


class TestRadii:
    def test_auto_separation(self):
        r = Radii.auto(0.8)
        assert r.eta == pytest.approx(0.04)
        assert r.tau == pytest.approx(0.004)

    def test_scale_separation_enforced(self):
        with pytest.raises(SamplingError, match="eta <= epsilon/10"):
            Radii(epsilon=0.5, eta=0.2, tau=0.001)
        with pytest.raises(SamplingError, match="tau <= eta/10"):
            Radii(epsilon=0.5, eta=0.05, tau=0.02)
        with pytest.raises(SamplingError, match="positive"):
            Radii(epsilon=0.5, eta=0.05, tau=0.0)

    def test_default_regular_value(self):
        y = default_regular_value(3, 0.025)
        assert y.tolist() == [0.025, 0.0, 0.0]


class TestRngStreams:
    def test_reproducible(self):
        a = rng_stream(7, 3).random(5)
        b = rng_stream(7, 3).random(5)
        assert np.array_equal(a, b)

    def test_streams_differ(self):
        a = rng_stream(7, 0).random(5)
        b = rng_stream(7, 1).random(5)
        assert not np.array_equal(a, b)


class TestGreedyNet:
    def test_keep_first_chain(self):
        pts = np.array([[0.0], [0.5], [1.0]])
        # 0 eats 1; 2 survives because its only close neighbor is gone
        assert greedy_net(pts, 0.6).tolist() == [0, 2]

    def test_tiny_radius_keeps_all(self):
        pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        assert greedy_net(pts, 1e-9).tolist() == [0, 1, 2]

    def test_exact_duplicates_collapse_to_first(self):
        pts = np.array([[1.0, 2.0]] * 5)
        assert greedy_net(pts, 1e-6).tolist() == [0]

    def test_result_spacing(self):
        rng = np.random.default_rng(3)
        pts = rng.random((200, 2))
        keep = greedy_net(pts, 0.1)
        net = pts[keep]
        d = np.linalg.norm(net[:, None, :] - net[None, :, :], axis=2)
        np.fill_diagonal(d, 1.0)
        assert d.min() > 0.1


class TestFiberSampling:
    def test_linear_stage1_exact_plane(self):
        y = default_regular_value(1, R.eta)
        cloud = sample_fiber(LINEAR, 1, y, R, 150, seed=4)
        assert len(cloud) == 150
        assert np.abs(cloud.points[:, 0] - R.eta).max() <= 1e-9
        assert np.linalg.norm(cloud.points, axis=1).max() <= R.epsilon + 1e-9
        assert cloud.residual_eq <= 1e-9
        assert cloud.kind == "fiber" and cloud.stage == 1

    def test_linear_stage2_segment(self):
        y = np.array([R.eta, 0.0])
        cloud = sample_fiber(LINEAR, 2, y, R, 80, seed=4)
        p = cloud.points
        assert np.abs(p[:, 0] - R.eta).max() <= 1e-9
        assert np.abs(p[:, 1]).max() <= 1e-9
        assert np.abs(p[:, 2]).max() <= np.sqrt(R.epsilon**2 - R.eta**2) + 1e-9

    def test_zw_fiber_residuals(self):
        y = default_regular_value(1, R.eta)
        cloud = sample_fiber(ZW, 1, y, R, 120, seed=2)
        vals = ZW.components[0].evaluate_batch(cloud.points)
        assert np.abs(vals - R.eta).max() <= 1e-9
        assert cloud.residual_eq <= 1e-9

    def test_zero_value_rejected(self):
        with pytest.raises(SamplingError, match="nonzero"):
            sample_fiber(LINEAR, 1, [0.0], R, 10, seed=0)

    def test_value_off_tube_rejected(self):
        with pytest.raises(SamplingError, match="eta"):
            sample_fiber(LINEAR, 1, [0.3], R, 10, seed=0)

    def test_empty_real_fiber_raises(self):
        g = parse_germ("source_dim: 3\nvariables: x y z\ncomponent: x^2 + y^2\ncomponent: z\n")
        with pytest.raises(EmptySampleError, match="no points"):
            sample_fiber(g, 1, [-R.eta], R, 20, seed=0, budget=3000)


class TestSphereKinds:
    def test_boundary_on_sphere(self):
        y = default_regular_value(1, R.eta)
        cloud = sample_boundary(ZW, 1, y, R, 100, seed=3)
        assert cloud.residual_sphere <= 1e-9
        assert np.abs(np.linalg.norm(cloud.points, axis=1) - R.epsilon).max() <= 1e-9

    def test_finite_boundary_saturates(self):
        # stage-2 boundary of the linear germ is two antipodal-z points
        y = np.array([R.eta, 0.0])
        cloud = sample_boundary(LINEAR, 2, y, R, 5000, seed=6)
        assert cloud.saturated
        assert len(cloud) == 2
        z = np.sort(cloud.points[:, 2])
        zs = np.sqrt(R.epsilon**2 - R.eta**2)
        assert z == pytest.approx([-zs, zs], abs=1e-9)

    def test_link_of_linear(self):
        cloud = sample_link(LINEAR, 1, R, 90, seed=1)
        assert len(cloud) == 90
        assert np.abs(cloud.points[:, 0]).max() <= 1e-9
        assert cloud.residual_sphere <= 1e-9

    def test_empty_link_is_a_valid_outcome(self):
        g = parse_germ("source_dim: 3\nvariables: x y z\ncomponent: x^2 + y^2 + z^2\ncomponent: x\n")
        cloud = sample_link(g, 1, R, 20, seed=0, budget=3000)
        assert len(cloud) == 0
        assert "empty link" in cloud.note


class TestDeterminism:
    def test_same_seed_same_cloud(self):
        y = default_regular_value(1, R.eta)
        a = sample_fiber(ZW, 1, y, R, 100, seed=42)
        b = sample_fiber(ZW, 1, y, R, 100, seed=42)
        assert np.array_equal(a.points, b.points)

    def test_threads_do_not_change_points(self):
        y = default_regular_value(1, R.eta)
        a = sample_boundary(ZW, 1, y, R, 150, seed=9, threads=1)
        b = sample_boundary(ZW, 1, y, R, 150, seed=9, threads=4)
        assert np.array_equal(a.points, b.points)

    def test_different_seeds_differ(self):
        y = default_regular_value(1, R.eta)
        a = sample_fiber(LINEAR, 1, y, R, 50, seed=0)
        b = sample_fiber(LINEAR, 1, y, R, 50, seed=1)
        assert not np.array_equal(a.points, b.points)


class TestOpenBookPages:
    def test_two_pages_of_zw(self):
        for sign in (1.0, -1.0):
            page = sample_openbook_page(ZW, 1, [sign], R, 60, seed=5)
            rest = ZW.components[1].evaluate_batch(page.page_cloud.points)
            assert (sign * rest > 0).all()
            assert page.max_angle_dev == 0.0
            assert np.abs(
                np.linalg.norm(page.page_cloud.points, axis=1) - R.epsilon
            ).max() <= 1e-9

    def test_theta_must_be_unit(self):
        with pytest.raises(SamplingError, match="unit"):
            sample_openbook_page(ZW, 1, [0.5], R, 10, seed=0)

    def test_theta_length_checked(self):
        with pytest.raises(SamplingError, match="length 1"):
            sample_openbook_page(ZW, 1, [1.0, 0.0], R, 10, seed=0)

    def test_no_pages_at_top_stage(self):
        with pytest.raises(SamplingError, match="K - I >= 1"):
            sample_openbook_page(ZW, 2, [1.0], R, 10, seed=0)


class TestSerialization:
    def test_binary_round_trip(self, tmp_path):
        y = default_regular_value(1, R.eta)
        cloud = sample_boundary(ZW, 1, y, R, 40, seed=11)
        p = tmp_path / "cloud.fcpc"
        cloud.save_binary(p)
        back = PointCloud.load_binary(p)
        assert np.array_equal(back.points, cloud.points)
        assert back.kind == cloud.kind and back.stage == cloud.stage
        assert np.array_equal(back.y, cloud.y)
        assert back.radii == cloud.radii
        assert back.seed == cloud.seed
        assert back.germ_name == cloud.germ_name
        assert back.theta is None
        assert back.residual_eq == cloud.residual_eq
        assert back.saturated == cloud.saturated

    def test_binary_preserves_theta(self, tmp_path):
        page = sample_openbook_page(ZW, 1, [1.0], R, 20, seed=2)
        p = tmp_path / "page.fcpc"
        page.page_cloud.save_binary(p)
        back = PointCloud.load_binary(p)
        assert np.array_equal(back.theta, np.array([1.0]))

    def test_csv_round_trip_of_coordinates(self, tmp_path):
        y = default_regular_value(1, R.eta)
        cloud = sample_fiber(LINEAR, 1, y, R, 25, seed=8)
        p = tmp_path / "cloud.csv"
        cloud.save_csv(p)
        lines = p.read_text().splitlines()
        header = [ln for ln in lines if ln.startswith("#")]
        assert any("kind: fiber" in ln for ln in header)
        data = np.loadtxt([ln for ln in lines if not ln.startswith("#")][1:], delimiter=",")
        assert np.allclose(data, cloud.points, rtol=0, atol=1e-16)


class TestRadiusSearch:
    def test_linear_accepts_largest_rung(self):
        chosen = choose_radii(LINEAR, 1, seed=0)
        assert chosen.radii.epsilon == 0.5
        assert chosen.diagnostics[0]["accepted"] is True
        assert chosen.diagnostics[0]["rank_deficient"] == 0
        assert chosen.diagnostics[0]["sigma_min_min"] > 1e-6

    def test_zw_accepts(self):
        chosen = choose_radii(ZW, 1, seed=0)
        assert chosen.radii.epsilon == 0.5

    def test_nontame_rejected_with_diagnostics(self):
        with pytest.raises(RadiusSearchError) as e:
            choose_radii(NONTAME, 2, seed=0)
        diags = e.value.diagnostics
        assert len(diags) == 6
        assert all(not d["accepted"] for d in diags)
        assert all(d["rank_deficient"] > 0 for d in diags if d["probes"])

    def test_budget_floor(self):
        with pytest.raises(SamplingError, match="budget"):
            choose_radii(LINEAR, 1, budget=10)


class TestTamenessEvidence:
    def test_nontame_produces_hits(self):
        report = tameness_evidence(NONTAME, R, n=100, seed=0)
        assert report["hit_count"] > 0

    def test_linear_produces_none(self):
        report = tameness_evidence(LINEAR, R, n=100, seed=0)
        assert report["hit_count"] == 0

    def test_start_floor(self):
        with pytest.raises(SamplingError, match=">= 100"):
            tameness_evidence(LINEAR, R, n=10, seed=0)


class TestStageRange:
    def test_out_of_range(self):
        y = default_regular_value(1, R.eta)
        with pytest.raises(SamplingError, match="out of range"):
            sample_fiber(LINEAR, 3, y, R, 10, seed=0)
        with pytest.raises(SamplingError, match="length 2"):
            sample_fiber(LINEAR, 2, y, R, 10, seed=0)
