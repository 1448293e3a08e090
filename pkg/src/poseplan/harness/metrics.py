"""Localization metrics: per-landmark distance error, PCK curves and AUC."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..posemath import N_LANDMARKS, Pose

PCK_TAU_MAX_MM = 10.0
PCK_DELTA_MM = 0.25


def ed_error(pred: Pose, gt: Pose) -> np.ndarray:
    """Per-landmark Euclidean distance in millimeters, shape (22,)."""
    return np.linalg.norm(pred.coords - gt.coords, axis=1)


@dataclass(frozen=True)
class MetricReport:
    thresholds: np.ndarray  # (T,)
    pck: np.ndarray  # (22, T) fraction of cases within each threshold
    auc: np.ndarray  # (22,)
    mean_ed: np.ndarray  # (22,)
    extras: dict = field(default_factory=dict)

    @property
    def mean_auc(self) -> float:
        return float(self.auc.mean())

    @property
    def overall_mean_ed(self) -> float:
        return float(self.mean_ed.mean())

    @property
    def overall_pck(self) -> np.ndarray:
        return self.pck.mean(axis=0)

    def to_dict(self) -> dict:
        return {
            "thresholds_mm": [float(t) for t in self.thresholds],
            "pck_per_landmark": [[float(v) for v in row] for row in self.pck],
            "auc_per_landmark": [float(v) for v in self.auc],
            "mean_auc": self.mean_auc,
            "mean_ed_per_landmark": [float(v) for v in self.mean_ed],
            "overall_mean_ed": self.overall_mean_ed,
            **self.extras,
        }


def pck_auc(
    errors: np.ndarray,
    tau_max: float = PCK_TAU_MAX_MM,
    delta: float = PCK_DELTA_MM,
) -> MetricReport:
    """PCK(t) = fraction of errors <= t; AUC = trapezoidal area / tau_max.

    ``errors`` is (n_cases, 22) millimeter distances.
    """
    if tau_max <= 0:
        raise ValueError("tau_max must be positive")
    errors = np.atleast_2d(np.asarray(errors, dtype=np.float64))
    if errors.shape[1] != N_LANDMARKS:
        raise ValueError(f"errors must have {N_LANDMARKS} columns")
    thresholds = np.arange(0.0, tau_max + delta / 2, delta)
    pck = (errors[:, :, None] <= thresholds[None, None, :]).mean(axis=0)
    auc = np.trapezoid(pck, thresholds, axis=1) / tau_max
    return MetricReport(
        thresholds=thresholds,
        pck=pck,
        auc=auc,
        mean_ed=errors.mean(axis=0),
    )


def pck_csv(report: MetricReport) -> str:
    """PCK samples as CSV for external plotting (threshold + 22 columns + mean)."""
    lines = ["threshold_mm," + ",".join(f"landmark_{i}" for i in range(1, 23)) + ",mean"]
    overall = report.overall_pck
    for t_idx, t in enumerate(report.thresholds):
        row = [f"{t:.6g}"] + [f"{report.pck[l, t_idx]:.6g}" for l in range(N_LANDMARKS)]
        row.append(f"{overall[t_idx]:.6g}")
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"
