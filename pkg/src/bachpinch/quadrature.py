"""Tensor-product quadrature over a chart's coordinate box.

Axis rules: periodic axes use the trapezoid rule, finite axes Gauss-Legendre,
and unbounded axes Gauss-Legendre after the substitution x = tan(theta).
Integrals are taken against the Riemannian volume element sqrt(det g).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np

from .curvature_engine import MetricChart

RULES = ("gauss-legendre", "gauss-legendre-tan", "trapezoid-periodic")


class GridError(ValueError):
    """A grid specification is malformed or too coarse."""


@dataclass(frozen=True)
class QuadratureGrid:
    counts: tuple
    rules: tuple
    nodes: tuple
    weights: tuple

    @property
    def size(self) -> int:
        return int(np.prod(self.counts))

    def batches(self, batch: int = 65536) -> Iterator[tuple[np.ndarray, np.ndarray]]:
        """Yield (points, weights) over the flattened tensor-product grid."""
        total = self.size
        for start in range(0, total, batch):
            flat = np.arange(start, min(start + batch, total))
            idx = np.unravel_index(flat, self.counts)
            P = np.stack([x[i] for x, i in zip(self.nodes, idx)], axis=-1)
            w = np.ones(len(flat))
            for wt, i in zip(self.weights, idx):
                w = w * wt[i]
            yield P, w

    def describe(self) -> dict:
        return {"counts": list(self.counts), "rules": list(self.rules), "nodes": self.size}


def _axis_rule(lo: float, hi: float, periodic: bool, k: int) -> tuple[str, np.ndarray, np.ndarray]:
    if periodic:
        h = (hi - lo) / k
        return "trapezoid-periodic", lo + h * np.arange(k), np.full(k, h)
    x, w = np.polynomial.legendre.leggauss(k)
    if math.isfinite(lo) and math.isfinite(hi):
        half = 0.5 * (hi - lo)
        return "gauss-legendre", lo + half * (x + 1), half * w
    if math.isinf(lo) and math.isinf(hi):
        theta = 0.5 * math.pi * x
        return "gauss-legendre-tan", np.tan(theta), 0.5 * math.pi * w / np.cos(theta) ** 2
    raise GridError("half-infinite axes are not supported")


def build_grid(chart: MetricChart, counts) -> QuadratureGrid:
    counts = tuple(int(k) for k in counts)
    if len(counts) != chart.n:
        raise GridError(f"grid has {len(counts)} axes, chart has {chart.n}")
    if min(counts) < 2:
        raise GridError("every axis needs at least 2 nodes")
    rules, nodes, weights = [], [], []
    for lo, hi, per, k in zip(chart.lo, chart.hi, chart.periodic, counts):
        r, x, w = _axis_rule(float(lo), float(hi), bool(per), k)
        rules.append(r)
        nodes.append(x)
        weights.append(w)
    return QuadratureGrid(counts, tuple(rules), tuple(nodes), tuple(weights))


def parse_grid(text: str, n: int) -> tuple:
    """'12' for every axis or '4,12,12,12' per axis."""
    try:
        parts = [int(s) for s in text.split(",")]
    except ValueError:
        raise GridError(f"grid {text!r} is not a comma-separated list of integers") from None
    if len(parts) == 1:
        parts = parts * n
    if len(parts) != n:
        raise GridError(f"grid has {len(parts)} axes, expected {n}")
    return tuple(parts)


def default_counts(chart: MetricChart, budget: int = 1_500_000) -> tuple:
    k = int(max(4, min(24, math.floor(budget ** (1.0 / chart.n)))))
    return (k,) * chart.n


def _batch_for(n: int) -> int:
    # keep curvature arrays (batch x n^4) near 32 MB
    return int(max(1024, min(65536, 4_000_000 // n ** 4)))


def integrate(chart: MetricChart, integrand: Callable[[np.ndarray, np.ndarray], np.ndarray],
              grid: QuadratureGrid, batch: int | None = None):
    """Integral of integrand(points, metrics) against the volume element.

    The integrand returns shape (N,) or (N, k); the result is a float or a
    length-k array accordingly.
    """
    parts = []
    for P, w in grid.batches(batch or _batch_for(chart.n)):
        g = chart.metric_at(P)
        wd = w * np.sqrt(np.linalg.det(g))
        vals = np.asarray(integrand(P, g), float)
        parts.append(np.tensordot(wd, vals, axes=(0, 0)))
    parts = np.array(parts)
    if parts.ndim == 1:
        return math.fsum(parts)
    return np.array([math.fsum(col) for col in parts.T])


def volume(chart: MetricChart, grid: QuadratureGrid) -> float:
    return integrate(chart, lambda P, g: np.ones(len(P)), grid)
