import json

import numpy as np
import pytest

from bevtrack.boxes import covered_fraction
from bevtrack.errors import InvalidScenario, ParseError
from bevtrack.linearized import linearize
from bevtrack.simulator import (
    VISIBILITY_CUTOFF,
    AgentSpec,
    CameraSpec,
    Occluder,
    Scenario,
    agent_position,
    build_scene_model,
    generate,
    project_points,
    read_scenario,
    scenario_from_dict,
    scenario_to_dict,
    true_homography,
    write_scenario,
)


def make_camera():
    return CameraSpec(height=6.0, tilt_deg=30.0, focal=1000.0, image_width=1920, image_height=1080)


def make_scenario(agents, occluders=(), **kw):
    base = dict(
        camera=make_camera(),
        ground_extent=40.0,
        agents=tuple(agents),
        occluders=tuple(occluders),
        fps=10.0,
        duration=2.0,
        cloud_points=50,
        seed=5,
    )
    base.update(kw)
    return Scenario(**base)


WALKER = AgentSpec(id=1, waypoints=((-2.0, 10.0), (2.0, 10.0)), speed=1.0)


class TestScenarioValidation:
    def test_rejects_bad_fps_duration_extent(self):
        with pytest.raises(InvalidScenario):
            make_scenario([WALKER], fps=0.0)
        with pytest.raises(InvalidScenario):
            make_scenario([WALKER], duration=-1.0)
        with pytest.raises(InvalidScenario):
            make_scenario([WALKER], ground_extent=0.0)

    def test_rejects_duplicate_agent_ids(self):
        with pytest.raises(InvalidScenario):
            make_scenario([WALKER, AgentSpec(id=1, waypoints=((0.0, 5.0),), speed=1.0)])

    def test_rejects_bad_agents(self):
        with pytest.raises(InvalidScenario):
            make_scenario([AgentSpec(id=1, waypoints=((0.0, 5.0),), speed=0.0)])
        with pytest.raises(InvalidScenario):
            make_scenario([AgentSpec(id=1, waypoints=(), speed=1.0)])

    def test_camera_path_length_checked(self):
        # 2 s at 10 fps: 20 frames, needs 19 deltas
        with pytest.raises(InvalidScenario):
            make_scenario([WALKER], camera_path=tuple([(0.1, 0.0)] * 5))
        make_scenario([WALKER], camera_path=tuple([(0.1, 0.0)] * 19))

    def test_n_frames(self):
        assert make_scenario([WALKER]).n_frames == 20


class TestAgentPosition:
    def test_single_waypoint_is_static(self):
        a = AgentSpec(id=1, waypoints=((3.0, 7.0),), speed=2.0)
        assert np.allclose(agent_position(a, 0.0), [3.0, 7.0])
        assert np.allclose(agent_position(a, 99.0), [3.0, 7.0])

    def test_constant_speed_along_segments(self):
        a = AgentSpec(id=1, waypoints=((0.0, 0.0), (4.0, 0.0), (4.0, 2.0)), speed=2.0)
        assert np.allclose(agent_position(a, 1.0), [2.0, 0.0])
        assert np.allclose(agent_position(a, 2.0), [4.0, 0.0])
        assert np.allclose(agent_position(a, 2.5), [4.0, 1.0])

    def test_clamps_at_the_end(self):
        a = AgentSpec(id=1, waypoints=((0.0, 0.0), (4.0, 0.0)), speed=2.0)
        assert np.allclose(agent_position(a, 50.0), [4.0, 0.0])


class TestGenerateGeometry:
    def test_deterministic_for_fixed_seed(self):
        scn = make_scenario([WALKER], detection_noise=0.4, appearance_noise=0.05)
        a, b = generate(scn), generate(scn)
        assert len(a.detections) == len(b.detections)
        for da, db in zip(a.detections, b.detections):
            assert da.frame == db.frame and da.agent_id == db.agent_id
            assert da.box == db.box
            assert np.array_equal(da.appearance, db.appearance)
        assert np.array_equal(a.cloud, b.cloud)

    def test_bottom_center_lifts_back_to_ground_position(self):
        # The box bottom edge sits exactly on the agent's ground row, so the
        # lifted depth is exact. The box's horizontal center is set by the
        # wider head-height corners, giving a small lateral bias off-axis.
        scn = make_scenario([WALKER])
        sim = generate(scn)
        h = sim.homography
        for det in sim.detections:
            g = next(
                g for g in sim.gt if g.frame == det.frame and g.agent_id == det.agent_id
            )
            lifted = h.apply(np.array(det.box.bottom_center))
            assert lifted[1] == pytest.approx(g.bev[1], abs=1e-9)
            assert abs(lifted[0] - g.bev[0]) < 0.15

    def test_on_axis_agent_lifts_exactly(self):
        center = AgentSpec(id=1, waypoints=((0.0, 10.0),), speed=1.0)
        sim = generate(make_scenario([center]))
        lifted = sim.homography.apply(np.array(sim.detections[0].box.bottom_center))
        assert np.allclose(lifted, [0.0, 10.0], atol=1e-9)

    def test_bottom_corner_midpoint_lifts_exactly(self):
        # the midpoint of the two ground-corner pixels is an exact image of
        # the agent position, for any lateral offset
        scn = make_scenario([WALKER])
        a = WALKER
        pos = np.array([-2.0, 10.0])
        hw = a.width / 2.0
        corners = np.array([[pos[0] - hw, pos[1], 0.0], [pos[0] + hw, pos[1], 0.0]])
        px, _ = project_points(scn.camera, corners, (0.0, 0.0))
        mid = px.mean(axis=0)
        lifted = true_homography(scn.camera).apply(mid)
        assert np.allclose(lifted, pos, atol=1e-9)

    def test_gt_bev_matches_waypoint_kinematics(self):
        scn = make_scenario([WALKER])
        sim = generate(scn)
        for g in sim.gt:
            want = agent_position(WALKER, g.frame / scn.fps)
            assert np.allclose(g.bev, want, atol=1e-12)

    def test_moving_camera_keeps_world_fixed_bev(self):
        # with egomotion, lifting bottom-centers and adding the camera offset
        # recovers world positions (same lateral bias bound as the static case)
        path = tuple([(0.2, 0.1)] * 19)
        center = AgentSpec(id=1, waypoints=((0.0, 10.0),), speed=0.0001)
        scn = make_scenario([center], camera_path=path)
        sim = generate(scn)
        lh = linearize(sim.homography, (1920, 1080), 0.2)
        for det in sim.detections:
            g = next(
                g for g in sim.gt if g.frame == det.frame and g.agent_id == det.agent_id
            )
            lifted = lh.px_to_bev(
                np.array(det.box.bottom_center), ego=sim.ego, frame=det.frame
            )
            assert lifted[1] == pytest.approx(g.bev[1], abs=1e-9)
            # the camera drifts almost 4 m sideways: larger off-axis bias
            assert abs(lifted[0] - g.bev[0]) < 0.2

    def test_cloud_lies_on_the_ground_plane(self):
        scn = make_scenario([WALKER])
        sim = generate(scn)
        assert len(sim.cloud) == 50
        # camera-frame ground points: lifting their pixels through the exact
        # homography gives BEV points 6 m below the camera in world frame
        bev = sim.homography.apply(sim.cloud_pixels)
        # re-project and compare pixels
        world = np.concatenate([bev, np.zeros((len(bev), 1))], axis=1)
        px, _ = project_points(scn.camera, world, (0.0, 0.0))
        assert np.allclose(px, sim.cloud_pixels, atol=1e-6)

    def test_cloud_noise_perturbs_camera_points(self):
        clean = generate(make_scenario([WALKER]))
        noisy = generate(make_scenario([WALKER], cloud_noise=0.05))
        assert clean.cloud.shape == noisy.cloud.shape
        assert not np.allclose(clean.cloud, noisy.cloud, atol=1e-6)


class TestVisibilityAndEmission:
    def test_open_walker_fully_visible(self):
        sim = generate(make_scenario([WALKER]))
        assert all(g.visibility == 1.0 for g in sim.gt)
        assert len(sim.detections) == 20

    def test_visibility_matches_covered_fraction_recomputation(self):
        wall = Occluder(x_min=-1.0, x_max=1.0, y_min=8.0, y_max=8.3, height=3.3)
        scn = make_scenario([WALKER], occluders=(wall,))
        sim = generate(scn)
        from bevtrack.simulator import _agent_box, _occluder_rect

        for g in sim.gt:
            box = _agent_box(scn.camera, WALKER, g.bev, (0.0, 0.0))
            rect = _occluder_rect(scn.camera, wall, (0.0, 0.0))
            covers = [rect] if rect[3] > box.bottom else []
            want = 1.0 - covered_fraction(box, covers)
            assert g.visibility == pytest.approx(want, abs=1e-12)

    def test_emission_respects_cutoff(self):
        wall = Occluder(x_min=-1.0, x_max=1.0, y_min=8.0, y_max=8.3, height=3.3)
        fast = AgentSpec(id=1, waypoints=((-4.0, 10.0), (4.0, 10.0)), speed=4.0)
        scn = make_scenario([fast], occluders=(wall,))
        sim = generate(scn)
        emitted = {(d.frame, d.agent_id) for d in sim.detections}
        for g in sim.gt:
            if g.visibility >= VISIBILITY_CUTOFF:
                assert (g.frame, g.agent_id) in emitted
            else:
                assert (g.frame, g.agent_id) not in emitted
        # the wide wall must actually hide the walker for part of the pass
        assert any(g.visibility < VISIBILITY_CUTOFF for g in sim.gt)
        assert any(g.visibility >= VISIBILITY_CUTOFF for g in sim.gt)

    def test_agents_occlude_each_other(self):
        # two walkers on the same camera ray, the nearer one (larger bottom)
        # covers the farther one
        near = AgentSpec(id=1, waypoints=((0.0, 9.0),), speed=1.0)
        far = AgentSpec(id=2, waypoints=((0.0, 10.5),), speed=1.0)
        sim = generate(make_scenario([near, far]))
        vis = {(g.frame, g.agent_id): g.visibility for g in sim.gt}
        assert vis[(0, 1)] == 1.0
        assert vis[(0, 2)] < 1.0

    def test_out_of_frame_agent_not_emitted(self):
        off = AgentSpec(id=1, waypoints=((-30.0, 10.0),), speed=1.0)
        sim = generate(make_scenario([off]))
        assert sim.detections == []
        assert len(sim.gt) == 20  # ground truth still records it

    def test_detection_noise_jitters_boxes(self):
        clean = generate(make_scenario([WALKER]))
        noisy = generate(make_scenario([WALKER], detection_noise=0.5))
        deltas = [
            abs(a.box.left - b.box.left)
            for a, b in zip(clean.detections, noisy.detections)
        ]
        assert max(deltas) > 0.05

    def test_appearance_unit_norm_and_identity_specific(self):
        a1 = AgentSpec(id=1, waypoints=((-2.0, 10.0),), speed=1.0, appearance_seed=10)
        a2 = AgentSpec(id=2, waypoints=((2.0, 10.0),), speed=1.0, appearance_seed=11)
        sim = generate(make_scenario([a1, a2], appearance_noise=0.05))
        for det in sim.detections:
            assert np.linalg.norm(det.appearance) == pytest.approx(1.0, abs=1e-9)
        d1 = [d.appearance for d in sim.detections if d.agent_id == 1]
        d2 = [d.appearance for d in sim.detections if d.agent_id == 2]
        # same identity stays similar, different identities do not
        assert float(d1[0] @ d1[1]) > 0.95
        assert abs(float(d1[0] @ d2[0])) < 0.9

    def test_visibility_records(self):
        sim = generate(make_scenario([WALKER]))
        recs = sim.visibility_records()
        assert len(recs) == 20
        assert recs[0] == (0, 1, 1.0)


class TestBuildSceneModel:
    def test_mask_covers_camera_footprint(self, true_h):
        scn = make_scenario([WALKER])
        lh = linearize(true_h, (1920, 1080), 0.2)
        scene = build_scene_model(scn, lh, cell_size=0.5)
        assert scene.mask.shape == (80, 80)
        assert scene.contains(np.array([0.0, 10.0]))
        # directly behind the camera is never visible
        assert not scene.contains(np.array([0.0, -5.0]))
        assert not scene.contains(np.array([19.9, 1.0]))  # outside the view cone

    def test_occluder_shadow_removed_from_mask(self, true_h):
        wall = Occluder(x_min=-2.0, x_max=2.0, y_min=8.0, y_max=8.3, height=3.3)
        open_scn = make_scenario([WALKER])
        shadow_scn = make_scenario([WALKER], occluders=(wall,))
        lh = linearize(true_h, (1920, 1080), 0.2)
        open_scene = build_scene_model(open_scn, lh)
        shadow_scene = build_scene_model(shadow_scn, lh)
        # the point right behind the wall is visible in the open scene only
        probe = np.array([0.0, 9.0])
        assert open_scene.contains(probe)
        assert not shadow_scene.contains(probe)
        # far to the side the wall changes nothing
        side = np.array([-8.0, 9.0])
        assert open_scene.contains(side) and shadow_scene.contains(side)
        assert shadow_scene.mask.sum() < open_scene.mask.sum()


class TestScenarioJson:
    def test_round_trip(self, tmp_path):
        wall = Occluder(x_min=-1.0, x_max=1.0, y_min=8.0, y_max=8.5, height=3.0)
        scn = make_scenario(
            [WALKER], occluders=(wall,), detection_noise=0.3, camera_path=tuple([(0.1, 0.0)] * 19)
        )
        p = tmp_path / "scene.json"
        write_scenario(p, scn)
        assert read_scenario(p) == scn

    def test_dict_round_trip(self):
        scn = make_scenario([WALKER])
        assert scenario_from_dict(scenario_to_dict(scn)) == scn

    def test_missing_field_named(self):
        d = scenario_to_dict(make_scenario([WALKER]))
        del d["fps"]
        with pytest.raises(ParseError, match="missing field 'fps'"):
            scenario_from_dict(d)

    def test_unknown_field_named(self):
        d = scenario_to_dict(make_scenario([WALKER]))
        d["framerate"] = 30
        with pytest.raises(ParseError, match="unknown field 'framerate'"):
            scenario_from_dict(d)

    def test_nested_camera_field_checked(self):
        d = scenario_to_dict(make_scenario([WALKER]))
        del d["camera"]["focal"]
        with pytest.raises(ParseError, match="scenario.camera: missing field 'focal'"):
            scenario_from_dict(d)

    def test_agent_fields_checked(self):
        d = scenario_to_dict(make_scenario([WALKER]))
        del d["agents"][0]["speed"]
        with pytest.raises(ParseError, match=r"agents\[0\]: missing field 'speed'"):
            scenario_from_dict(d)

    def test_invalid_json_reported_with_path(self, tmp_path):
        p = tmp_path / "broken.json"
        p.write_text("{not json")
        with pytest.raises(ParseError, match="broken.json"):
            read_scenario(p)

    def test_semantic_errors_still_raise_invalid_scenario(self):
        d = scenario_to_dict(make_scenario([WALKER]))
        d["fps"] = -5
        with pytest.raises(InvalidScenario):
            scenario_from_dict(d)


class TestTrueHomography:
    def test_matches_projection(self, rng):
        cam = make_camera()
        h = true_homography(cam)
        world = np.stack(
            [rng.uniform(-10, 10, 50), rng.uniform(2, 30, 50), np.zeros(50)], axis=1
        )
        px, _ = project_points(cam, world, (0.0, 0.0))
        assert np.allclose(h.apply(px), world[:, :2], atol=1e-9)
