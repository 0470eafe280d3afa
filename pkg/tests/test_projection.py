import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import make_cloud, make_frame, make_mask, projective_matrix_oracle, random_pose
from mvground.projection import (
    MIN_CAMERA_DEPTH,
    Pixel,
    ViewProjection,
    camera_to_pixel,
    depth_consistent,
    export_projections_rle,
    project_mask_to_view,
    projection_to_rle,
    rank_views,
    round_pixel,
    sample_frames,
    world_to_camera,
)
from mvground.scene import Intrinsics


class TestSampleFrames:
    def test_every_twentieth(self):
        frames = [make_frame(frame_id=i, width=8, height=8) for i in range(100)]
        sampled = sample_frames(frames, 20)
        assert [f.frame_id for f in sampled] == [0, 20, 40, 60, 80]

    def test_interval_one_is_identity(self):
        frames = [make_frame(frame_id=i, width=8, height=8) for i in range(7)]
        assert sample_frames(frames, 1) == frames

    def test_short_capture_keeps_first(self):
        frames = [make_frame(frame_id=i, width=8, height=8) for i in range(5)]
        sampled = sample_frames(frames, 20)
        assert [f.frame_id for f in sampled] == [0]

    def test_interval_must_be_positive(self):
        with pytest.raises(ValueError):
            sample_frames([], 0)


class TestWorldToCamera:
    def test_identity_pose(self):
        assert world_to_camera([1.0, 2.0, 3.0], np.eye(4)) == pytest.approx([1, 2, 3])

    def test_pure_translation(self):
        pose = np.eye(4)
        pose[:3, 3] = [1.0, 2.0, 3.0]
        assert world_to_camera([0.0, 0.0, 0.0], pose) == pytest.approx([1, 2, 3])

    def test_matches_homogeneous_multiply_oracle(self):
        rng = np.random.default_rng(23)
        for _ in range(1000):
            pose = random_pose(rng)
            point = rng.uniform(-5, 5, 3)
            expected = (pose @ np.array([*point, 1.0]))[:3]
            assert world_to_camera(point, pose) == pytest.approx(expected, abs=1e-9)


class TestCameraToPixel:
    INTR = Intrinsics(fx=500.0, fy=500.0, cx=320.0, cy=240.0)

    def test_forced_arithmetic(self):
        pixel = camera_to_pixel((0.1, -0.05, 1.0), self.INTR)
        assert pixel.rounded == (370, 215)

    def test_principal_point(self):
        pixel = camera_to_pixel((0.0, 0.0, 1.0), self.INTR)
        assert pixel.rounded == (320, 240)

    def test_behind_camera(self):
        assert camera_to_pixel((0.0, 0.0, -0.5), self.INTR) is None

    def test_at_depth_cutoff(self):
        assert camera_to_pixel((0.0, 0.0, MIN_CAMERA_DEPTH), self.INTR) is None

    def test_rounding_half_away_from_zero(self):
        assert round_pixel(0.5, 1.5) == (1, 2)
        assert round_pixel(2.5, -0.5) == (3, -1)
        assert round_pixel(-1.5, 0.49) == (-2, 0)

    def test_pixel_carries_pre_rounding_coordinates(self):
        pixel = camera_to_pixel((0.1004, 0.0, 1.0), self.INTR)
        assert isinstance(pixel, Pixel)
        assert pixel.u == pytest.approx(370.2)


class TestComposedProjection:
    def test_matches_projective_matrix_oracle(self):
        rng = np.random.default_rng(31)
        for _ in range(500):
            pose = random_pose(rng)
            intr = Intrinsics(
                fx=rng.uniform(50, 800),
                fy=rng.uniform(50, 800),
                cx=rng.uniform(0, 640),
                cy=rng.uniform(0, 480),
            )
            # camera-frame point in front of the lens, mapped back to world
            cam_point = np.array([rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0.1, 10)])
            world = np.linalg.inv(pose) @ np.array([*cam_point, 1.0])
            pixel = camera_to_pixel(world_to_camera(world[:3], pose), intr)
            expected_u, expected_v = projective_matrix_oracle(world[:3], pose, intr)
            assert pixel.u == pytest.approx(expected_u, abs=1e-6)
            assert pixel.v == pytest.approx(expected_v, abs=1e-6)


class TestDepthConsistency:
    def _depth(self, value):
        return np.full((4, 4), value, dtype=np.float64)

    def test_within_tolerance(self):
        assert depth_consistent((1, 1), 2.4, self._depth(2.0), 0.25) is True

    def test_outside_tolerance(self):
        assert depth_consistent((1, 1), 3.0, self._depth(2.0), 0.25) is False

    def test_invalid_depth_is_occluded(self):
        assert depth_consistent((1, 1), 1.0, self._depth(0.0), 0.25) is False

    def test_exact_boundary_passes(self):
        # |2.0 - 2.5| / 2.5 == 0.2 <= 0.2
        assert depth_consistent((0, 0), 2.0, self._depth(2.5), 0.2) is True


class TestProjectMask:
    def test_single_point_on_axis(self):
        cloud = make_cloud([[0.0, 0.0, 2.0]])
        frame = make_frame(width=64, height=48, depth_fill=2.0)
        vp = project_mask_to_view(make_mask([0]), cloud, frame, 0.25)
        assert vp.area == 1
        assert vp.valid_pixels == {(32, 24)}

    def test_occluder_plane_hides_mask(self):
        # mask points at z=2 behind a measured plane at z=1: all inconsistent
        cloud = make_cloud([[x * 0.1, y * 0.1, 2.0] for x in range(4) for y in range(4)])
        frame = make_frame(width=64, height=48, depth_fill=1.0)
        vp = project_mask_to_view(make_mask(range(16)), cloud, frame, 0.25)
        assert vp.area == 0

    def test_duplicate_pixels_counted_once(self):
        cloud = make_cloud([[0.0, 0.0, 2.0], [0.001, 0.0, 2.0]])  # same rounded pixel
        frame = make_frame(width=64, height=48, depth_fill=2.0)
        vp = project_mask_to_view(make_mask([0, 1]), cloud, frame, 0.25)
        assert vp.area == 1

    def test_no_measurement_fails(self):
        cloud = make_cloud([[0.0, 0.0, 2.0]])
        frame = make_frame(width=64, height=48, depth_fill=0.0)
        assert project_mask_to_view(make_mask([0]), cloud, frame, 0.25).area == 0

    def test_matches_scalar_composition(self):
        rng = np.random.default_rng(41)
        width, height = 64, 48
        for _ in range(20):
            pose = random_pose(rng, translation_scale=0.5)
            points = rng.uniform(-2, 2, (50, 3))
            depth = rng.uniform(0.0, 4.0, (height, width))
            frame = make_frame(width=width, height=height, pose=pose)
            frame = type(frame)(
                frame_id=0, image=frame.image, depth=depth, intrinsics=frame.intrinsics, pose=pose
            )
            cloud = make_cloud(points)
            vp = project_mask_to_view(make_mask(range(50)), cloud, frame, 0.25)
            expected = set()
            for p in points:
                cam = world_to_camera(p, pose)
                pixel = camera_to_pixel(cam, frame.intrinsics)
                if pixel is None:
                    continue
                u, v = pixel.rounded
                if not (0 <= u < width and 0 <= v < height):
                    continue
                if depth_consistent((u, v), cam[2], depth, 0.25):
                    expected.add((u, v))
            assert vp.valid_pixels == expected

    def test_visibility_monotone_in_tolerance(self):
        rng = np.random.default_rng(43)
        points = rng.uniform(-1, 1, (80, 3)) + [0, 0, 2.5]
        cloud = make_cloud(points)
        depth = rng.uniform(0.5, 4.0, (48, 64))
        frame = make_frame(width=64, height=48)
        frame = type(frame)(
            frame_id=0, image=frame.image, depth=depth, intrinsics=frame.intrinsics, pose=np.eye(4)
        )
        mask = make_mask(range(80))
        previous = frozenset()
        for tol in (0.0, 0.1, 0.25, 0.5, 1.0):
            current = project_mask_to_view(mask, cloud, frame, tol).valid_pixels
            assert previous <= current
            previous = current

    def test_area_monotone_in_mask_size(self):
        rng = np.random.default_rng(47)
        points = rng.uniform(-1, 1, (60, 3)) + [0, 0, 2.5]
        cloud = make_cloud(points)
        frame = make_frame(width=64, height=48, depth_fill=2.5)
        last = 0
        for size in (1, 10, 30, 60):
            area = project_mask_to_view(make_mask(range(size)), cloud, frame, 0.5).area
            assert area >= last
            last = area


def _vp(frame_id, area):
    pixels = frozenset((i, frame_id) for i in range(area))
    return ViewProjection(instance_id=0, frame_id=frame_id, valid_pixels=pixels, area=area)


class TestRankViews:
    def test_sort_and_tie_break(self):
        projections = [_vp(i, a) for i, a in enumerate([50, 200, 10, 200, 75])]
        top = rank_views(projections, 3)
        assert [v.frame_id for v in top] == [1, 3, 4]

    def test_all_zero_area_gives_empty(self):
        assert rank_views([_vp(i, 0) for i in range(4)], 3) == []

    def test_fewer_views_than_limit(self):
        top = rank_views([_vp(0, 5), _vp(1, 0), _vp(2, 9)], 5)
        assert [v.frame_id for v in top] == [2, 0]

    def test_limit_must_be_positive(self):
        with pytest.raises(ValueError):
            rank_views([], 0)

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.integers(0, 500), max_size=20), st.integers(1, 8))
    def test_output_properties(self, areas, limit):
        projections = [_vp(i, a) for i, a in enumerate(areas)]
        top = rank_views(projections, limit)
        assert len(top) <= limit
        assert all(v.area > 0 for v in top)
        assert all(top[i].area >= top[i + 1].area for i in range(len(top) - 1))


class TestRleExport:
    def test_runs_merge_and_rows_sort(self):
        pixels = frozenset({(3, 1), (4, 1), (5, 1), (9, 1), (2, 0)})
        vp = ViewProjection(instance_id=7, frame_id=2, valid_pixels=pixels, area=5)
        assert projection_to_rle(vp) == (
            "instance 7 frame 2 area 5\n"
            "0: 2\n"
            "1: 3-5,9\n"
        )

    def test_file_export(self, tmp_path):
        vp = ViewProjection(instance_id=0, frame_id=0, valid_pixels=frozenset({(1, 1)}), area=1)
        out = tmp_path / "proj.rle"
        export_projections_rle([vp, vp], out)
        assert out.read_text().count("instance 0 frame 0 area 1") == 2
