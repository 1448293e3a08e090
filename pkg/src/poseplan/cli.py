"""Command-line client for the poseplan service.

Every subcommand builds the same request models the HTTP API accepts and
either calls the service handlers in-process (the default) or posts them
to a running server given via ``--server`` / the POSEPLAN_SERVER variable.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import httpx

from .errors import PosePlanError
from .harness import dumps_report, load_pipeline_config, pck_csv
from .harness.metrics import MetricReport
from .posemath import dumps_pose, load_pose, load_stack, loads_pose
from .service import handlers
from .service import schemas as sc
from .graphcore import load_graph
from .sslrefine import load_library

import numpy as np

_ROUTES = {
    "/plan": (handlers.handle_plan, sc.PlanResponse),
    "/check-grads": (handlers.handle_check_grads, sc.CheckGradsResponse),
    "/loss": (handlers.handle_loss, sc.LossResponse),
    "/synth": (handlers.handle_synth, sc.SynthResponse),
    "/eval": (handlers.handle_eval, sc.EvalResponse),
    "/refine": (handlers.handle_refine, sc.RefineResponse),
    "/pipeline": (handlers.handle_pipeline, sc.PipelineResponse),
}


def _dispatch(server: str | None, route: str, request):
    handler, response_model = _ROUTES[route]
    if not server:
        return handler(request)
    resp = httpx.post(
        server.rstrip("/") + route,
        json=request.model_dump(mode="json"),
        timeout=600.0,
    )
    resp.raise_for_status()
    return response_model.model_validate(resp.json())


def _load_pose_or_stack(path: str) -> tuple[sc.PoseModel | None, sc.StackModel | None]:
    p = Path(path)
    if p.with_name(p.name + ".json").exists():
        return None, sc.StackModel.from_stack(load_stack(p))
    return sc.PoseModel.from_pose(load_pose(p)), None


server_option = click.option(
    "--server",
    envvar="POSEPLAN_SERVER",
    default=None,
    help="Base URL of a running poseplan server; defaults to in-process execution.",
)
seed_option = click.option("--seed", type=int, default=0, show_default=True)


@click.group()
def main() -> None:
    """Memory-aware graph planning and articulated landmark analytics."""


@main.command("plan")
@click.option("--graph", "graph_path", required=True, type=click.Path(exists=True))
@click.option("--report", "report_path", required=True, type=click.Path())
@click.option("--include-events/--no-include-events", default=True, show_default=True)
@seed_option
@server_option
def plan_cmd(graph_path, report_path, include_events, seed, server):
    """Plan execution modes for a graph and write a structured report."""
    g = load_graph(graph_path)
    req = sc.PlanRequest(
        graph=sc.GraphModel.from_graph(g), include_events=include_events, seed=seed
    )
    resp = _dispatch(server, "/plan", req)
    Path(report_path).write_text(
        json.dumps(resp.model_dump(mode="json"), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    click.echo(
        f"peak_bytes={resp.peak_bytes} all_plain={resp.all_plain_peak_bytes} "
        f"reduction={resp.reduction_pct:.2f}%"
    )
    for part in resp.parts:
        click.echo(f"  {part.mode:>10}: nodes {part.nodes}")


@main.command("check-grads")
@click.option("--graph", "graph_path", required=True, type=click.Path(exists=True))
@click.option("--fd/--no-fd", "run_fd", default=True, show_default=True)
@seed_option
@server_option
def check_grads_cmd(graph_path, run_fd, seed, server):
    """Compare outputs/gradients across plans; exit nonzero on a breach."""
    g = load_graph(graph_path)
    req = sc.CheckGradsRequest(graph=sc.GraphModel.from_graph(g), seed=seed, run_fd=run_fd)
    resp = _dispatch(server, "/check-grads", req)
    for row in resp.plans:
        click.echo(
            f"{row.plan:>16}: peak={row.peak_bytes} trace==sim={row.trace_matches_sim} "
            f"out_dev={row.max_output_abs_dev:.3e} grad_dev={row.max_grad_rel_dev:.3e}"
        )
    if resp.fd_max_rel_dev is not None:
        click.echo(f"finite-difference max rel dev: {resp.fd_max_rel_dev:.3e}")
    click.echo("OK" if resp.ok else "TOLERANCE BREACH")
    if not resp.ok:
        sys.exit(1)


@main.command("loss")
@click.option("--pred", "pred_path", required=True, type=click.Path(exists=True))
@click.option("--gt", "gt_path", required=True, type=click.Path(exists=True))
@click.option("--grid", nargs=3, type=int, default=(32, 32, 32), show_default=True)
@click.option("--spacing", nargs=3, type=float, default=(2.0, 2.0, 2.0), show_default=True)
@click.option("--sigma", type=float, default=2.0, show_default=True)
@seed_option
@server_option
def loss_cmd(pred_path, gt_path, grid, spacing, sigma, seed, server):
    """Print each loss term for a prediction/ground-truth pair."""
    pred_pose, pred_stack = _load_pose_or_stack(pred_path)
    gt_pose, gt_stack = _load_pose_or_stack(gt_path)
    req = sc.LossRequest(
        pred_pose=pred_pose,
        pred_stack=pred_stack,
        gt_pose=gt_pose,
        gt_stack=gt_stack,
        grid=sc.GridModel(shape=grid, spacing_mm=spacing),
        sigma_mm=sigma,
        seed=seed,
    )
    resp = _dispatch(server, "/loss", req)
    for name, value in resp.terms.items():
        click.echo(f"{name}: {value:.10g}")


@main.command("synth")
@click.option("--out", "out_path", type=click.Path(), default=None)
@click.option("--corrupt-mm", type=float, default=0.0, show_default=True)
@click.option("--swap-arms", is_flag=True, default=False)
@seed_option
@server_option
def synth_cmd(out_path, corrupt_mm, swap_arms, seed, server):
    """Generate a synthetic articulated pose (optionally corrupted)."""
    req = sc.SynthRequest(seed=seed, corrupt_mm=corrupt_mm, swap_arms=swap_arms)
    resp = _dispatch(server, "/synth", req)
    text = dumps_pose(resp.pred_pose.to_pose())
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8")
        gt_path = Path(out_path).with_name(Path(out_path).stem + "_gt.csv")
        gt_path.write_text(dumps_pose(resp.gt_pose.to_pose()), encoding="utf-8")
        click.echo(f"wrote {out_path} and {gt_path}")
    else:
        click.echo(text, nl=False)


@main.command("eval")
@click.option("--pred", "pred_path", required=True, type=click.Path(exists=True),
              help="Pose file or directory of pose files.")
@click.option("--gt", "gt_path", required=True, type=click.Path(exists=True))
@click.option("--tau-max", type=float, default=10.0, show_default=True)
@click.option("--delta", type=float, default=0.25, show_default=True)
@click.option("--pck-csv", "csv_path", type=click.Path(), default=None,
              help="Also write the PCK curve samples as CSV.")
@seed_option
@server_option
def eval_cmd(pred_path, gt_path, tau_max, delta, csv_path, seed, server):
    """Per-landmark distance errors, PCK curve and AUC."""
    preds, gts = _collect_pose_pairs(pred_path, gt_path)
    req = sc.EvalRequest(
        pred_poses=preds, gt_poses=gts, tau_max_mm=tau_max, delta_mm=delta, seed=seed
    )
    resp = _dispatch(server, "/eval", req)
    click.echo(f"mean ED (mm): {resp.overall_mean_ed:.4f}")
    click.echo(f"mean AUC: {resp.mean_auc:.4f}")
    if csv_path:
        report = MetricReport(
            thresholds=np.asarray(resp.thresholds_mm),
            pck=np.asarray(resp.pck_per_landmark),
            auc=np.asarray(resp.auc_per_landmark),
            mean_ed=np.asarray(resp.mean_ed_per_landmark),
        )
        Path(csv_path).write_text(pck_csv(report), encoding="utf-8")
        click.echo(f"wrote {csv_path}")


def _collect_pose_pairs(pred_path, gt_path):
    pred_p, gt_p = Path(pred_path), Path(gt_path)
    if pred_p.is_dir() != gt_p.is_dir():
        raise click.UsageError("--pred and --gt must both be files or both directories")
    if pred_p.is_dir():
        names = sorted(p.name for p in pred_p.glob("*.csv"))
        preds = [sc.PoseModel.from_pose(load_pose(pred_p / n)) for n in names]
        gts = [sc.PoseModel.from_pose(load_pose(gt_p / n)) for n in names]
        if not preds:
            raise click.UsageError("no pose files found")
        return preds, gts
    return (
        [sc.PoseModel.from_pose(load_pose(pred_p))],
        [sc.PoseModel.from_pose(load_pose(gt_p))],
    )


@main.command("refine")
@click.option("--lib", "lib_dir", required=True, type=click.Path(exists=True),
              help="Directory holding pose files plus manifest.json.")
@click.option("--pred", "pred_path", required=True, type=click.Path(exists=True),
              help="Predicted pose file or heatmap stack.")
@click.option("--iters", type=int, default=8, show_default=True)
@click.option("--step", type=float, default=5e-4, show_default=True)
@click.option("--top-k", type=int, default=8, show_default=True)
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="Write the refined pose here.")
@seed_option
@server_option
def refine_cmd(lib_dir, pred_path, iters, step, top_k, out_path, seed, server):
    """Shape-prior online refinement of the ambiguous head/trunk landmarks."""
    lib = load_library(lib_dir)
    pred_pose, pred_stack = _load_pose_or_stack(pred_path)
    req = sc.RefineRequest(
        library=[sc.PoseModel.from_pose(p) for p in lib.poses],
        pred_pose=pred_pose,
        pred_stack=pred_stack,
        iters=iters,
        step=step,
        top_k=top_k,
        seed=seed,
    )
    resp = _dispatch(server, "/refine", req)
    click.echo("landmark  moved_mm")
    for i, moved in enumerate(resp.moved_mm_per_landmark, start=1):
        click.echo(f"{i:>8}  {moved:.4f}")
    if out_path:
        Path(out_path).write_text(dumps_pose(resp.after.to_pose()), encoding="utf-8")
        before_path = Path(out_path).with_name(Path(out_path).stem + "_before.csv")
        before_path.write_text(dumps_pose(resp.before.to_pose()), encoding="utf-8")
        click.echo(f"wrote {out_path} and {before_path}")


@main.command("pipeline")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--report", "report_path", required=True, type=click.Path())
@click.option("--pck-csv", "csv_path", type=click.Path(), default=None)
@seed_option
@server_option
def pipeline_cmd(config_path, report_path, csv_path, seed, server):
    """Run the full synthetic experiment described by a config file."""
    config = load_pipeline_config(config_path)
    req = sc.PipelineRequest(config=config)
    resp = _dispatch(server, "/pipeline", req)
    Path(report_path).write_text(dumps_report(resp.report), encoding="utf-8")
    refined = resp.report["refined"]
    click.echo(
        f"cases={resp.report['cases']} mean_ED={refined['overall_mean_ed']:.4f}mm "
        f"mean_AUC={refined['mean_auc']:.4f}"
    )
    if csv_path:
        report = MetricReport(
            thresholds=np.asarray(refined["thresholds_mm"]),
            pck=np.asarray(refined["pck_per_landmark"]),
            auc=np.asarray(refined["auc_per_landmark"]),
            mean_ed=np.asarray(refined["mean_ed_per_landmark"]),
        )
        Path(csv_path).write_text(pck_csv(report), encoding="utf-8")
        click.echo(f"wrote {csv_path}")
    click.echo(f"wrote {report_path}")


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve_cmd(host, port):
    """Run the HTTP service."""
    import uvicorn

    uvicorn.run("poseplan.service.app:app", host=host, port=port)


def run() -> None:
    try:
        main(standalone_mode=True)
    except PosePlanError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)


if __name__ == "__main__":
    run()
