import numpy as np
import pytest
from fastapi.testclient import TestClient

from poseplan.harness import build_unet_graph, synth_pose
from poseplan.posemath import encode_pose_stack
from poseplan.service.app import app
from poseplan.service import schemas as sc

from conftest import coupling_graph


@pytest.fixture(scope="module")
def client():
    return TestClient(app)


def test_health(client):
    resp = client.get("/health")
    assert resp.status_code == 200
    assert resp.json() == {"status": "ok"}


def test_plan_endpoint(client):
    g = build_unet_graph(spatial=(8, 8, 8), blocks_per_stage=1)
    req = sc.PlanRequest(graph=sc.GraphModel.from_graph(g), include_events=False)
    resp = client.post("/plan", json=req.model_dump(mode="json"))
    assert resp.status_code == 200
    body = resp.json()
    assert body["peak_bytes"] <= body["all_plain_peak_bytes"]
    assert body["events"] is None
    assert {p["mode"] for p in body["parts"]} <= {"plain", "checkpoint", "reversible"}


def test_check_grads_endpoint(client):
    g = coupling_graph()
    req = sc.CheckGradsRequest(graph=sc.GraphModel.from_graph(g), seed=2, run_fd=False)
    resp = client.post("/check-grads", json=req.model_dump(mode="json"))
    assert resp.status_code == 200
    assert resp.json()["ok"] is True


def test_loss_endpoint_pose_and_stack(client):
    pose = synth_pose(1)
    grid_model = sc.GridModel()
    stack = encode_pose_stack(pose, grid_model.to_grid())
    req = sc.LossRequest(
        pred_stack=sc.StackModel.from_stack(stack),
        gt_pose=sc.PoseModel.from_pose(pose),
        grid=grid_model,
    )
    resp = client.post("/loss", json=req.model_dump(mode="json"))
    assert resp.status_code == 200
    terms = resp.json()["terms"]
    assert set(terms) >= {"pair_arms", "pair_legs", "kl_head_trunk", "total"}
    assert terms["total"] == pytest.approx(
        terms["pair_arms"] + terms["pair_legs"] + terms["kl_head_trunk"], rel=1e-9
    )


def test_loss_endpoint_validation(client):
    resp = client.post("/loss", json={"grid": {"shape": [4, 4, 4]}})
    assert resp.status_code == 422


def test_synth_eval_roundtrip(client):
    synth = client.post(
        "/synth", json=sc.SynthRequest(seed=3, corrupt_mm=5.0).model_dump(mode="json")
    )
    assert synth.status_code == 200
    body = synth.json()
    req = sc.EvalRequest(
        pred_poses=[sc.PoseModel.model_validate(body["pred_pose"])],
        gt_poses=[sc.PoseModel.model_validate(body["gt_pose"])],
    )
    ev = client.post("/eval", json=req.model_dump(mode="json"))
    assert ev.status_code == 200
    report = ev.json()
    assert 0 < report["overall_mean_ed"] < 5.0 * 22 / 22  # only five landmarks moved
    assert 0 <= report["mean_auc"] <= 1


def test_refine_endpoint(client):
    library = [sc.PoseModel.from_pose(synth_pose(100 + i)) for i in range(8)]
    synth = client.post(
        "/synth", json=sc.SynthRequest(seed=9, corrupt_mm=5.0).model_dump(mode="json")
    )
    pred = synth.json()["pred_pose"]
    req = sc.RefineRequest(
        library=library, pred_pose=sc.PoseModel.model_validate(pred), iters=2
    )
    resp = client.post("/refine", json=req.model_dump(mode="json"))
    assert resp.status_code == 200
    body = resp.json()
    moved = np.asarray(body["moved_mm_per_landmark"])
    ambiguous = [0, 3, 5, 7, 9]
    others = [i for i in range(22) if i not in ambiguous]
    assert np.all(moved[others] == 0)
    assert len(body["ssl_losses"]) == 2


def test_pipeline_endpoint(client):
    cfg = {
        "config": {
            "seed": 1,
            "cases": 2,
            "refine": {"iters": 1, "library_size": 8},
            "include_plan_report": False,
        }
    }
    resp = client.post("/pipeline", json=cfg)
    assert resp.status_code == 200
    report = resp.json()["report"]
    assert report["cases"] == 2
    assert "refined" in report and "initial" in report
