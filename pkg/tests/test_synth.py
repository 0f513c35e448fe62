import numpy as np
import pytest

from mapeval.cropping import loose_crop
from mapeval.errors import InputError, OverlappingTargets
from mapeval.estimation import intersect_planes
from mapeval.geometry import angle_between_planes
from mapeval.synth import (
    LABEL_GROUND,
    PLATE_LABEL_PREFIX,
    SceneSpec,
    analytic_plate_planes,
    default_scene_spec,
    generate_scene,
    scene_spec_from_mapping,
)

SMALL = dict(ground_extent=4.0, ground_point_density=50.0)


class TestSceneSpec:
    def test_rejects_bad_values(self):
        with pytest.raises(ValueError):
            SceneSpec(hole_fraction=1.0)
        with pytest.raises(ValueError):
            SceneSpec(noise_sigma=-0.1)
        with pytest.raises(ValueError):
            SceneSpec(targets=(("t1", 0, 0, 0), ("t1", 5, 5, 0)))

    def test_default_scene_has_five_separated_targets(self):
        spec = default_scene_spec(seed=1)
        assert len(spec.targets) == 5
        generate_scene(
            SceneSpec(targets=spec.targets, ground_extent=20.0, ground_point_density=20.0)
        )


class TestGenerateScene:
    def test_noiseless_points_lie_on_analytic_planes(self):
        spec = SceneSpec(
            targets=(("t1", 1.0, -1.5, 33.0),),
            noise_sigma=0.0,
            hole_fraction=0.0,
            **SMALL,
        )
        cloud, truth, labels = generate_scene(spec)
        plane_a, plane_b = analytic_plate_planes(spec.targets[0])
        assert angle_between_planes(plane_a, plane_b) == pytest.approx(90.0)
        plate = cloud.xyz[labels == PLATE_LABEL_PREFIX + "t1"]
        dist = np.minimum(plane_a.distance(plate), plane_b.distance(plate))
        assert dist.max() < 1e-12
        assert truth[0].position.z == spec.plate_edge

    def test_deterministic(self):
        spec = SceneSpec(targets=(("t1", 0.0, 0.0, 10.0),), seed=9, **SMALL)
        c1, t1, l1 = generate_scene(spec)
        c2, t2, l2 = generate_scene(spec)
        assert np.array_equal(c1.xyz, c2.xyz)
        assert t1 == t2
        assert np.array_equal(l1, l2)

    def test_label_soundness_under_noise(self):
        spec = SceneSpec(targets=(("t1", 0.0, 0.0, 70.0),), noise_sigma=0.01, **SMALL)
        cloud, _, labels = generate_scene(spec)
        plane_a, plane_b = analytic_plate_planes(spec.targets[0])
        plate = cloud.xyz[labels == PLATE_LABEL_PREFIX + "t1"]
        dist = np.minimum(plane_a.distance(plate), plane_b.distance(plate))
        assert (dist <= 3 * spec.noise_sigma).mean() >= 0.995

    def test_truth_consistency_of_analytic_planes(self):
        for target in default_scene_spec().targets:
            plane_a, plane_b = analytic_plate_planes(target)
            line = intersect_planes(plane_a, plane_b)
            assert np.allclose(line.direction, [0, 0, 1], atol=1e-12)
            assert line.point.x == pytest.approx(target[1], abs=1e-12)
            assert line.point.y == pytest.approx(target[2], abs=1e-12)

    def test_holes_thin_the_plates(self):
        base = dict(targets=(("t1", 0.0, 0.0, 0.0),), noise_sigma=0.0, seed=4, **SMALL)
        full = generate_scene(SceneSpec(hole_fraction=0.0, **base))
        holed = generate_scene(SceneSpec(hole_fraction=0.3, **base))
        n_full = int((full[2] == PLATE_LABEL_PREFIX + "t1").sum())
        n_holed = int((holed[2] == PLATE_LABEL_PREFIX + "t1").sum())
        assert n_holed < n_full
        assert n_holed == pytest.approx(0.7 * n_full, rel=0.1)

    def test_outlier_count(self):
        spec = SceneSpec(
            targets=(("t1", 0.0, 0.0, 0.0),), outlier_fraction=0.1, seed=2, **SMALL
        )
        cloud, _, labels = generate_scene(spec)
        n_outliers = int((labels == "outlier").sum())
        n_structured = len(cloud) - n_outliers
        assert n_outliers == round(0.1 * n_structured)

    def test_overlapping_targets_rejected(self):
        spec = SceneSpec(targets=(("t1", 0.0, 0.0, 0.0), ("t2", 1.0, 0.0, 0.0)), **SMALL)
        with pytest.raises(OverlappingTargets):
            generate_scene(spec)

    def test_ground_points_labelled_and_flat(self):
        spec = SceneSpec(targets=(), noise_sigma=0.0, **SMALL)
        cloud, truth, labels = generate_scene(spec)
        assert truth == []
        assert (labels == LABEL_GROUND).all()
        assert np.abs(cloud.xyz[:, 2]).max() == 0.0

    def test_crop_containment(self):
        spec = SceneSpec(
            targets=(("near", 0.0, 0.0, 15.0), ("far", 14.0, 0.0, 80.0)),
            ground_extent=16.0,
            ground_point_density=20.0,
            seed=6,
        )
        cloud, truth, labels = generate_scene(spec)
        crop = loose_crop(cloud, truth[0].position, 5.0)
        near_plate = cloud.xyz[labels == PLATE_LABEL_PREFIX + "near"]
        far_plate = cloud.xyz[labels == PLATE_LABEL_PREFIX + "far"]
        crop_rows = {tuple(row) for row in crop.xyz}
        assert all(tuple(row) in crop_rows for row in near_plate)
        assert not any(tuple(row) in crop_rows for row in far_plate)


class TestSceneSpecFromMapping:
    def test_target_dicts(self):
        spec = scene_spec_from_mapping({
            "targets": [{"id": "a", "x": 1.0, "y": 2.0, "yaw_deg": 30.0},
                        {"id": "b", "x": 5.0, "y": 2.0}],
            "noise_sigma": 0.02,
        })
        assert spec.targets == (("a", 1.0, 2.0, 30.0), ("b", 5.0, 2.0, 0.0))
        assert spec.noise_sigma == 0.02

    def test_target_lists(self):
        spec = scene_spec_from_mapping({"targets": [["a", 0, 0, 0]]})
        assert spec.targets == (("a", 0.0, 0.0, 0.0),)

    def test_unknown_key_rejected(self):
        with pytest.raises(InputError, match="bogus"):
            scene_spec_from_mapping({"bogus": 1})

    def test_unknown_target_key_rejected(self):
        with pytest.raises(InputError):
            scene_spec_from_mapping({"targets": [{"id": "a", "x": 0, "y": 0, "spin": 3}]})

    def test_bad_value_wrapped_as_input_error(self):
        with pytest.raises(InputError):
            scene_spec_from_mapping({"hole_fraction": 2.0})
