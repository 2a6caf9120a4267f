"""Curvature of coordinate-chart metrics.

Metric callbacks are batched: they take points of shape ``(N, n)`` and return
``(N, n, n)``.  Analytic callbacks are used when a chart provides them;
everything else falls back to central finite differences of ``metric_at``.

Covariant derivatives put the new derivative index first:
``cov_deriv(T)[..., m, a, b, ...] = nabla_m T_ab...``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import tensor_core as tc
from .finite_difference import FDConfig, StencilError, partial

__all__ = [
    "FDConfig", "StencilError", "MetricChart", "PreconditionError", "CurvatureBundle",
    "KatoResult", "metric_derivatives", "christoffel", "riemann", "riemann_from_metric",
    "raw_riemann_residual", "bundle", "cov_deriv", "bach", "div_rm0",
    "weyl_divergence_check", "second_bianchi_check", "kato_check",
]

BatchFn = Callable[[np.ndarray], np.ndarray]


class PreconditionError(ValueError):
    """A chart lacks a property an operation depends on."""


@dataclass(frozen=True)
class MetricChart:
    """A metric on a coordinate box.

    ``lo``/``hi`` bound each axis (``+-inf`` for unbounded axes); periodic
    axes impose no stencil clearance.  ``sample_lo``/``sample_hi`` give a
    finite box used for point sampling.
    """

    n: int
    metric_at: BatchFn
    lo: tuple
    hi: tuple
    periodic: tuple
    label: str = "chart"
    metric_derivs_at: Callable | None = None
    riemann_at: BatchFn | None = None
    ricci_at: BatchFn | None = None
    scalar_at: BatchFn | None = None
    is_einstein: bool = False
    is_conformally_flat: bool = False
    is_constant_scalar: bool = False
    is_homogeneous: bool = False
    center: tuple | None = None
    sample_lo: tuple | None = None
    sample_hi: tuple | None = None

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("chart dimension must be at least 2")
        for name in ("lo", "hi", "periodic"):
            if len(getattr(self, name)) != self.n:
                raise ValueError(f"{name} must have one entry per axis")

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        per = np.asarray(self.periodic, dtype=bool)
        lo = np.where(per, -np.inf, np.asarray(self.lo, dtype=float))
        hi = np.where(per, np.inf, np.asarray(self.hi, dtype=float))
        return lo, hi

    def metric(self, pts) -> np.ndarray:
        P, single = _as_batch(pts, self.n)
        g = np.asarray(self.metric_at(P), dtype=float)
        return g[0] if single else g

    @property
    def reference_point(self) -> np.ndarray:
        if self.center is not None:
            return np.asarray(self.center, dtype=float)
        lo, hi = np.asarray(self.sample_box()[0]), np.asarray(self.sample_box()[1])
        return 0.5 * (lo + hi)

    def sample_box(self) -> tuple[np.ndarray, np.ndarray]:
        if self.sample_lo is not None:
            return np.asarray(self.sample_lo, float), np.asarray(self.sample_hi, float)
        lo, hi = np.asarray(self.lo, float), np.asarray(self.hi, float)
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError(f"chart {self.label!r} has no finite sampling box")
        return lo, hi

    def without_callbacks(self) -> "MetricChart":
        """Same metric, curvature by finite differences only."""
        return dataclasses.replace(self, metric_derivs_at=None, riemann_at=None,
                                   ricci_at=None, scalar_at=None)


def _as_batch(x, n: int) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != n:
        raise tc.DimensionError(f"point has {x.shape[-1]} coordinates, chart has {n}")
    single = x.ndim == 1
    return np.atleast_2d(x).reshape(-1, n), single


def _unbatch(a: np.ndarray, single: bool) -> np.ndarray:
    return a[0] if single else a


# ---------------------------------------------------------------------------
# Connection and curvature
# ---------------------------------------------------------------------------

def metric_derivatives(chart: MetricChart, pts: np.ndarray, cfg: FDConfig, second: bool = True):
    """(g, dg, ddg) at a batch of points, dg[:, k, i, j] = d_k g_ij."""
    if chart.metric_derivs_at is not None:
        g, dg, ddg = chart.metric_derivs_at(pts)
        return g, dg, (ddg if second else None)
    b = chart.bounds()
    g = chart.metric_at(pts)
    dg = partial(chart.metric_at, pts, cfg, b)
    ddg = None
    if second:
        ddg = partial(lambda p: partial(chart.metric_at, p, cfg, b), pts, cfg, b)
        ddg = 0.5 * (ddg + np.swapaxes(ddg, 1, 2))
    return g, dg, ddg


def _christoffel_parts(g, dg):
    # first kind, lowered first index: G1[k, i, j] = (d_i g_jk + d_j g_ik - d_k g_ij) / 2
    G1 = 0.5 * (np.einsum("...ijk->...kij", dg) + np.einsum("...jik->...kij", dg) - dg)
    G2 = np.einsum("...pk,...kij->...pij", np.linalg.inv(g), G1)
    return G1, G2


def christoffel(chart: MetricChart, x, cfg: FDConfig | None = None) -> np.ndarray:
    """Gamma^k_ij with array layout [..., k, i, j]."""
    cfg = cfg or FDConfig()
    P, single = _as_batch(x, chart.n)
    g, dg, _ = metric_derivatives(chart, P, cfg, second=False)
    return _unbatch(_christoffel_parts(g, dg)[1], single)


def riemann_from_metric(g: np.ndarray, dg: np.ndarray, ddg: np.ndarray) -> np.ndarray:
    """All-lower Riemann tensor from metric derivatives, ddg[..., x, y, i, j] = d_x d_y g_ij."""
    G1, G2 = _christoffel_parts(g, dg)
    second = 0.5 * (np.einsum("...bcad->...abcd", ddg) + np.einsum("...adbc->...abcd", ddg)
                    - np.einsum("...acbd->...abcd", ddg) - np.einsum("...bdac->...abcd", ddg))
    quad = np.einsum("...fbc,...fad->...abcd", G1, G2) - np.einsum("...fbd,...fac->...abcd", G1, G2)
    return second + quad


def riemann(chart: MetricChart, x, cfg: FDConfig | None = None, source: str = "auto",
            symmetrize: bool = True) -> np.ndarray:
    """All-lower Riemann tensor at one point ``(n,)`` or a batch ``(N, n)``.

    ``source``: ``"auto"`` prefers a closed-form callback, ``"metric"`` uses
    metric derivatives (analytic if available), ``"fd"`` differentiates
    ``metric_at`` numerically.  Numerical results are projected onto the
    algebraic curvature tensors unless ``symmetrize`` is false.
    """
    cfg = cfg or FDConfig()
    P, single = _as_batch(x, chart.n)
    if source == "auto" and chart.riemann_at is not None:
        return _unbatch(np.asarray(chart.riemann_at(P), dtype=float), single)
    if source not in ("auto", "metric", "fd"):
        raise ValueError(f"unknown Riemann source {source!r}")
    c = chart.without_callbacks() if source == "fd" else chart
    Rm = riemann_from_metric(*metric_derivatives(c, P, cfg))
    if symmetrize:
        Rm = tc.project_alg_curv(Rm)
    return _unbatch(Rm, single)


def raw_riemann_residual(chart: MetricChart, x, cfg: FDConfig | None = None) -> float:
    """Symmetry/Bianchi residual of the unprojected numerical Riemann tensor."""
    Rm = riemann(chart, x, cfg, source="metric", symmetrize=False)
    return max(tc.symmetry_residual(Rm), tc.bianchi_residual(Rm))


def _ricci_field(chart, P, cfg):
    if chart.ricci_at is not None:
        return np.asarray(chart.ricci_at(P), dtype=float)
    return tc.ricci(riemann(chart, P, cfg), chart.metric_at(P))


def _weyl_field(chart, cfg):
    return lambda P: tc.weyl(riemann(chart, P, cfg), chart.metric_at(P))


def _rm0_field(chart, cfg):
    return lambda P: tc.decompose(riemann(chart, P, cfg), chart.metric_at(P), check=False).Rm0


# ---------------------------------------------------------------------------
# Covariant derivatives
# ---------------------------------------------------------------------------

_IDX = "abcdefgh"


def _connection_terms(T: np.ndarray, G2: np.ndarray) -> np.ndarray:
    """sum over slots s of Gamma^p_{m a_s} T_{..p..}, derivative index first."""
    rank = T.ndim - 1
    idx = _IDX[:rank]
    out = np.zeros(T.shape[:1] + (T.shape[-1],) + T.shape[1:])
    for s in range(rank):
        src = idx[:s] + "p" + idx[s + 1:]
        out += np.einsum(f"zpm{idx[s]},z{src}->zm{idx}", G2, T)
    return out


def _cov_deriv_batch(field_fn: BatchFn, chart: MetricChart, P: np.ndarray, cfg: FDConfig) -> np.ndarray:
    T = np.asarray(field_fn(P), dtype=float)
    dT = partial(field_fn, P, cfg, chart.bounds())
    g, dg, _ = metric_derivatives(chart, P, cfg, second=False)
    G2 = _christoffel_parts(g, dg)[1]
    if T.ndim == 1:
        return dT
    return dT - _connection_terms(T, G2)


def cov_deriv(field_fn: BatchFn, chart: MetricChart, x, cfg: FDConfig | None = None) -> np.ndarray:
    """nabla of an all-lower tensor field given as a batched callable."""
    cfg = cfg or FDConfig()
    P, single = _as_batch(x, chart.n)
    return _unbatch(_cov_deriv_batch(field_fn, chart, P, cfg), single)


# ---------------------------------------------------------------------------
# Bach tensor and divergence identities
# ---------------------------------------------------------------------------

BACH_FD = FDConfig(step=1e-2, order=4, richardson=True)


def bach(chart: MetricChart, x, cfg: FDConfig | None = None, inner_cfg: FDConfig | None = None) -> np.ndarray:
    """B_ij = nabla^k nabla^l W_ikjl / (n-3) + R^kl W_ikjl / (n-2).

    ``cfg`` drives the two covariant derivatives of the Weyl field and
    ``inner_cfg`` any finite differences needed for the field itself.
    """
    n = chart.n
    if n < 4:
        raise tc.DimensionError("the Bach tensor is defined for n >= 4")
    cfg = cfg or BACH_FD
    inner_cfg = inner_cfg or FDConfig()
    P, single = _as_batch(x, n)
    W_fn = _weyl_field(chart, inner_cfg)
    dW_fn = lambda Q: _cov_deriv_batch(W_fn, chart, Q, cfg)
    ddW = _cov_deriv_batch(dW_fn, chart, P, cfg)  # [z, a, b, i, k, j, l]
    g = chart.metric_at(P)
    gi = np.linalg.inv(g)
    W = W_fn(P)
    Ric = _ricci_field(chart, P, inner_cfg)
    term1 = np.einsum("zka,zlb,zabikjl->zij", gi, gi, ddW)
    term2 = np.einsum("zka,zlb,zab,zikjl->zij", gi, gi, Ric, W)
    return _unbatch(term1 / (n - 3) + term2 / (n - 2), single)


def _divergence(D: np.ndarray, gi: np.ndarray) -> np.ndarray:
    # D[z, m, i, j, k, l] = nabla_m T_ijkl -> nabla^l T_ijkl
    return np.einsum("zml,zmijkl->zijk", gi, D)


def div_rm0(chart: MetricChart, x, cfg: FDConfig | None = None) -> np.ndarray:
    """(delta Rm0)_ijk = nabla^l Rm0_ijkl."""
    cfg = cfg or FDConfig()
    P, single = _as_batch(x, chart.n)
    D = _cov_deriv_batch(_rm0_field(chart, cfg), chart, P, cfg)
    return _unbatch(_divergence(D, np.linalg.inv(chart.metric_at(P))), single)


def _require_constant_scalar(chart: MetricChart, what: str) -> None:
    if not chart.is_constant_scalar:
        raise PreconditionError(f"{what} holds only for constant scalar curvature; "
                                f"chart {chart.label!r} is not flagged as such")


def weyl_divergence_check(chart: MetricChart, x, cfg: FDConfig | None = None) -> float:
    """max |nabla^l W_ijkl - (n-3)/(n-2) nabla^l Rm0_ijkl| over the given points."""
    _require_constant_scalar(chart, "the Weyl divergence identity")
    cfg = cfg or FDConfig()
    n = chart.n
    P, _ = _as_batch(x, n)
    gi = np.linalg.inv(chart.metric_at(P))
    divW = _divergence(_cov_deriv_batch(_weyl_field(chart, cfg), chart, P, cfg), gi)
    divR = _divergence(_cov_deriv_batch(_rm0_field(chart, cfg), chart, P, cfg), gi)
    return float(np.max(np.abs(divW - (n - 3) / (n - 2) * divR)))


def second_bianchi_check(chart: MetricChart, x, cfg: FDConfig | None = None) -> float:
    """max |nabla_h Rm0_ijkl + nabla_l Rm0_ijhk + nabla_k Rm0_ijlh|."""
    _require_constant_scalar(chart, "the trace-free second Bianchi identity")
    cfg = cfg or FDConfig()
    P, _ = _as_batch(x, chart.n)
    D = _cov_deriv_batch(_rm0_field(chart, cfg), chart, P, cfg)  # [z, h, i, j, k, l]
    cyc = (D + np.einsum("zlijhk->zhijkl", D) + np.einsum("zkijlh->zhijkl", D))
    return float(np.max(np.abs(cyc)))


@dataclass(frozen=True)
class KatoResult:
    points: int
    used: int
    min_margin: float
    violations: int
    tol: float
    vacuous: bool


def kato_check(chart: MetricChart, points, cfg: FDConfig | None = None, tol: float = 1e-6,
               zero_tol: float = 1e-10) -> KatoResult:
    """min over points of |nabla Rm0|^2 - |nabla |Rm0||^2.

    Points where |Rm0| is below ``zero_tol`` are skipped; if all are, the
    result is vacuous rather than a violation.
    """
    cfg = cfg or FDConfig()
    P, _ = _as_batch(points, chart.n)
    rm0 = _rm0_field(chart, cfg)
    g = chart.metric_at(P)
    u_fn = lambda Q: np.sqrt(tc.norm_sq(rm0(Q), chart.metric_at(Q), rank=4))
    u = u_fn(P)
    keep = u > zero_tol
    if not np.any(keep):
        return KatoResult(len(P), 0, float("nan"), 0, tol, True)
    P, g = P[keep], g[keep]
    D = _cov_deriv_batch(rm0, chart, P, cfg)
    du = partial(u_fn, P, cfg, chart.bounds())
    lhs = tc.norm_sq(D, g, rank=5)
    rhs = np.einsum("zab,za,zb->z", np.linalg.inv(g), du, du)
    margin = lhs - rhs
    return KatoResult(len(keep), int(keep.sum()), float(margin.min()),
                      int(np.sum(margin < -tol)), tol, False)


# ---------------------------------------------------------------------------
# Bundle
# ---------------------------------------------------------------------------

@dataclass
class CurvatureBundle:
    point: np.ndarray
    g: np.ndarray
    Rm: np.ndarray
    W: np.ndarray
    V: np.ndarray
    U: np.ndarray
    Rm0: np.ndarray
    Ric: np.ndarray
    Ric0: np.ndarray
    R: float
    bach: np.ndarray | None = None
    div_rm0: np.ndarray | None = None
    raw_residual: float | None = None
    norms: dict = field(default_factory=dict)


def bundle(chart: MetricChart, x, cfg: FDConfig | None = None, with_bach: bool = False,
           with_div: bool = False) -> CurvatureBundle:
    """Every pointwise curvature quantity at a single point."""
    cfg = cfg or FDConfig()
    x = np.asarray(x, dtype=float)
    if x.shape != (chart.n,):
        raise tc.DimensionError(f"expected a single point with {chart.n} coordinates")
    g = chart.metric(x)
    Rm = riemann(chart, x, cfg)
    raw = None if chart.riemann_at is not None else raw_riemann_residual(chart, x, cfg)
    d = tc.decompose(Rm, g, check=False)
    b = CurvatureBundle(point=x, g=g, Rm=Rm, W=d.W, V=d.V, U=d.U, Rm0=d.Rm0, Ric=d.Ric,
                        Ric0=d.Ric0, R=float(d.R), raw_residual=raw)
    b.norms = {
        "Rm": float(np.sqrt(tc.norm_sq(Rm, g))),
        "W": float(np.sqrt(tc.norm_sq(d.W, g))),
        "Rm0": float(np.sqrt(tc.norm_sq(d.Rm0, g))),
        "Ric0": float(np.sqrt(tc.norm_sq(d.Ric0, g))),
    }
    if with_bach and chart.n >= 4:
        b.bach = bach(chart, x)
        b.norms["bach"] = float(np.sqrt(tc.norm_sq(b.bach, g)))
    if with_div:
        b.div_rm0 = div_rm0(chart, x, cfg)
    return b
