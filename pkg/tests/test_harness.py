import json

import numpy as np
import pytest

from poseplan.errors import ConfigError
from poseplan.harness import (
    DEFAULT_GRID,
    PipelineConfig,
    apply_side_resolution,
    build_library,
    dumps_report,
    ed_error,
    load_pipeline_config,
    make_case,
    pck_auc,
    pck_csv,
    run_pipeline,
    swap_group,
    synth_pose,
    template_pose,
)
from poseplan.posemath import AMBIGUOUS_SET, Pose, resolve_left_right
from poseplan.sslrefine import register


def test_synth_deterministic():
    a = synth_pose(123)
    b = synth_pose(123)
    np.testing.assert_array_equal(a.coords, b.coords)
    c = synth_pose(124)
    assert np.any(c.coords != a.coords)


def test_synth_fits_grid():
    ext = np.asarray(DEFAULT_GRID.extent_mm)
    for seed in range(60):
        pose = synth_pose(seed)
        assert np.all(pose.coords >= 0) and np.all(pose.coords <= ext)


def test_synth_left_right_self_consistency():
    for seed in range(100):
        pose = synth_pose(seed)
        arms = resolve_left_right(
            pose.landmark(1), pose.landmark(4), pose.landmark(6),
            pose.landmark(11), pose.landmark(14), "arms",
        )
        legs = resolve_left_right(
            pose.landmark(1), pose.landmark(4), pose.landmark(6),
            pose.landmark(17), pose.landmark(20), "legs",
        )
        assert arms.s1 == 11 and legs.s1 == 17


def test_head_trunk_dispersion_below_limbs():
    template = template_pose()
    aligned = []
    for seed in range(500):
        pose = synth_pose(seed)
        t = register(pose, template)
        aligned.append(t.apply(pose.coords))
    aligned = np.stack(aligned)
    std = aligned.std(axis=0).mean(axis=1)  # per-landmark dispersion
    head_trunk = std[:10].mean()
    limbs = std[10:].mean()
    assert head_trunk <= 2.0
    assert head_trunk <= limbs


def test_ed_error_examples():
    pose = synth_pose(1)
    assert np.all(ed_error(pose, pose) == 0)
    shifted = pose.with_landmarks({5: pose.landmark(5) + np.array([3.0, 4.0, 0.0])})
    errs = ed_error(shifted, pose)
    assert errs[4] == pytest.approx(5.0)
    assert np.all(np.delete(errs, 4) == 0)


def test_ed_error_rigid_invariance():
    from poseplan.harness import random_rotation

    rng = np.random.default_rng(3)
    a, b = synth_pose(10), synth_pose(11)
    rot = random_rotation(rng)
    t = rng.normal(size=3) * 9
    moved_a = Pose(a.coords @ rot.T + t)
    moved_b = Pose(b.coords @ rot.T + t)
    np.testing.assert_allclose(ed_error(moved_a, moved_b), ed_error(a, b), atol=1e-9)


def test_pck_perfect():
    report = pck_auc(np.zeros((5, 22)))
    assert np.all(report.pck == 1.0)
    assert np.all(report.auc == 1.0)
    assert report.mean_auc == 1.0


def test_pck_single_error_half_area():
    e = 4.0
    errors = np.full((1, 22), e)
    report = pck_auc(errors, tau_max=2 * e, delta=0.25)
    bound = 0.5 * 0.25 / (2 * e)
    for auc in report.auc:
        assert abs(auc - 0.5) <= bound + 1e-12


def test_pck_monotone_random():
    rng = np.random.default_rng(5)
    report = pck_auc(rng.uniform(0, 12, size=(40, 22)))
    assert np.all(np.diff(report.pck, axis=1) >= 0)
    assert np.all((report.auc >= 0) & (report.auc <= 1))


def test_pck_csv_shape():
    report = pck_auc(np.random.default_rng(6).uniform(0, 10, (7, 22)))
    text = pck_csv(report)
    lines = text.strip().split("\n")
    assert len(lines) == 1 + len(report.thresholds)
    assert lines[0].startswith("threshold_mm,landmark_1")


def test_side_resolution_corrects_swapped_groups():
    for seed in range(20):
        pose = synth_pose(seed + 300)
        swapped = swap_group(pose, (11, 12, 13), (14, 15, 16))
        swapped = swap_group(swapped, (17, 18, 19), (20, 21, 22))
        fixed = apply_side_resolution(swapped)
        np.testing.assert_allclose(fixed.coords, pose.coords, atol=1e-9)


def test_pipeline_reproducible_and_refinement_helps(tmp_path):
    config = PipelineConfig(seed=5, cases=4)
    config = config.model_copy(update={"refine": config.refine.model_copy(update={"library_size": 12})})
    r1 = run_pipeline(config)
    r2 = run_pipeline(config)
    assert dumps_report(r1) == dumps_report(r2)
    assert r1["refined"]["overall_mean_ed"] < r1["initial"]["overall_mean_ed"]
    assert "plan" in r1 and r1["plan"]["reduction_pct"] > 0


def test_pipeline_zero_iters_matches_baseline():
    config = PipelineConfig(seed=6, cases=3, include_plan_report=False)
    config = config.model_copy(
        update={"refine": config.refine.model_copy(update={"iters": 0, "library_size": 10})}
    )
    report = run_pipeline(config)
    assert report["refined"] == report["initial"]


def test_pipeline_pair_eval_drops_arm_errors():
    config = PipelineConfig(seed=7, cases=3, pair_eval=True, include_plan_report=False)
    config = config.model_copy(
        update={"refine": config.refine.model_copy(update={"iters": 0, "library_size": 10})}
    )
    report = run_pipeline(config)
    arm_leg = [i - 1 for i in range(11, 23)]
    initial = np.asarray(report["initial"]["mean_ed_per_landmark"])[arm_leg].mean()
    resolved = np.asarray(report["side_resolved"]["mean_ed_per_landmark"])[arm_leg].mean()
    assert resolved < initial


def test_config_errors(tmp_path):
    bad_json = tmp_path / "bad.json"
    bad_json.write_text("{\n  \"seed\": 1,\n}\n", encoding="utf-8")
    with pytest.raises(ConfigError) as exc:
        load_pipeline_config(bad_json)
    assert "line" in str(exc.value)

    bad_field = tmp_path / "field.json"
    bad_field.write_text(json.dumps({"cases": 0}), encoding="utf-8")
    with pytest.raises(ConfigError) as exc:
        load_pipeline_config(bad_field)
    assert "cases" in str(exc.value)


def test_corruption_magnitude():
    for seed in range(10):
        case = make_case(seed, corrupt_mm=5.0)
        errs = ed_error(case.pred_pose, case.gt_pose)
        for i in AMBIGUOUS_SET:
            assert errs[i - 1] == pytest.approx(5.0)
        untouched = [i - 1 for i in range(1, 23) if i not in AMBIGUOUS_SET]
        assert np.all(errs[untouched] == 0)


def test_library_build():
    lib = build_library(0, 5, DEFAULT_GRID)
    assert len(lib) == 5
