"""poseplan: memory-aware computation-graph planning with an exactness-
verified differentiation engine, plus heatmap pose math, geometric side
resolution and shape-prior online refinement on synthetic articulated
poses."""

__version__ = "0.1.0"
