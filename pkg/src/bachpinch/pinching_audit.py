"""Evaluate curvature pinching hypotheses on zoo metrics.

An audit compares a computed left side with a threshold built from the
pinching constants, the Yamabe constant and the scalar curvature, and
classifies the outcome as ``hypothesis-satisfied``, ``boundary`` or
``not-satisfied``.  Only hypotheses are evaluated; nothing is claimed about
the rigidity conclusions they would imply.

Audit ids:

``rm0-lp``           L^p norm of the trace-free curvature against eps(n, p) Y^(n/2p) R^(1-n/2p)
``einstein-lp``      L^(n/2) norm of W + c Ric0 o g against C1(n) Y
``l2-4d``            int |W|^2 + 5/4 int |Ric0|^2 against int R^2 / 48 (n = 4)
``pointwise``        max of |W|^2 + n/(2(n-2)) |Ric0|^2 against R^2 / (2(n-2)(n-1))
``pointwise-4d5d``   the same comparison restricted to n = 4, 5
``gauss-bonnet``     int |W|^2 - 2 int |Ric0|^2 + int R^2 / 6 against 32 pi^2 chi (n = 4)
``yamabe-l2``        int R^2 - 12 int |Ric0|^2 against Y^2 (n = 4)
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import qmc

from . import constants as K
from . import tensor_core as tc
from .curvature_engine import FDConfig, PreconditionError, bach, riemann
from .metric_zoo import ZooEntry
from .quadrature import GridError, QuadratureGrid, build_grid, default_counts, integrate, volume
from .report import SCHEMA_VERSION

BOUNDARY_RTOL = 1e-8
BACH_TOL = 1e-4
VOLUME_RTOL = 1e-3
POINTWISE_SAMPLES = 256

SELECTORS = ("Rm0", "Ric0", "W", "W-plus-KN", "R")
AUDITS = ("rm0-lp", "einstein-lp", "l2-4d", "pointwise", "pointwise-4d5d", "gauss-bonnet", "yamabe-l2")
VERDICTS = ("hypothesis-satisfied", "boundary", "not-satisfied")


def kn_weight(n: int) -> float:
    """Coefficient sqrt(n) / (2 sqrt(2) (n-2)) of Ric0 o g in the Einstein pinching quantity."""
    return math.sqrt(n) / (2 * math.sqrt(2) * (n - 2))


@dataclass(frozen=True)
class Tolerances:
    boundary: float = BOUNDARY_RTOL
    bach: float = BACH_TOL
    volume: float = VOLUME_RTOL


# ---------------------------------------------------------------------------
# Pointwise quantities
# ---------------------------------------------------------------------------

def _ricci_only(entry: ZooEntry, need) -> bool:
    return set(need) <= {"Ric0", "R"} and entry.chart.ricci_at is not None


def pointwise_squares(entry: ZooEntry, P: np.ndarray, cfg: FDConfig | None = None,
                      need: tuple = SELECTORS, g: np.ndarray | None = None) -> dict:
    """Squared norms (and R) of the selectable quantities at a batch of points."""
    chart = entry.chart
    if g is None:
        g = chart.metric_at(P)
    out = {}
    if _ricci_only(entry, need):
        Ric = np.asarray(chart.ricci_at(P), float)
        gi = np.linalg.inv(g)
        R = np.sum(gi * Ric, axis=(-2, -1))
        Ric0 = Ric - (R / chart.n)[:, None, None] * g
        out["Ric0"] = np.sum((gi @ Ric0 @ gi) * Ric0, axis=(-2, -1))
        out["R"] = R
        return out
    d = tc.decompose(riemann(chart, P, cfg), g, check=False)
    w2 = tc.norm_sq(d.W, g, rank=4)
    r2 = tc.norm_sq(d.Ric0, g, rank=2)
    n = chart.n
    out.update(W=w2, Ric0=r2, R=d.R, Rm0=tc.norm_sq(d.Rm0, g, rank=4))
    if "W-plus-KN" in need:
        out["W-plus-KN"] = tc.norm_sq(d.W + kn_weight(n) * tc.kulkarni_nomizu(d.Ric0, g), g, rank=4)
    return out


def _closed_form_squares(entry: ZooEntry, cfg: FDConfig | None) -> dict:
    """Squared norms of a homogeneous metric, from exact data when recorded."""
    e, n = entry.exact, entry.n
    if e.R is not None and e.ric0_sq is not None and e.weyl_sq is not None:
        w2, r2 = e.weyl_sq, e.ric0_sq
        return {"W": w2, "Ric0": r2, "R": e.R, "Rm0": w2 + 4.0 / (n - 2) * r2,
                "W-plus-KN": w2 + n / (2.0 * (n - 2)) * r2}
    P = entry.chart.reference_point[None]
    return {k: float(v[0]) for k, v in pointwise_squares(entry, P, cfg).items()}


def _density(selector: str, values: dict, power: float) -> np.ndarray:
    if selector == "R":
        return np.abs(values["R"]) ** power
    return np.maximum(values[selector], 0.0) ** (power / 2.0)


# ---------------------------------------------------------------------------
# Integrals
# ---------------------------------------------------------------------------

def resolve_grid(entry: ZooEntry, grid=None) -> QuadratureGrid:
    if isinstance(grid, QuadratureGrid):
        return grid
    counts = grid if grid is not None else entry.grid
    if counts is None:
        counts = default_counts(entry.chart)
    return build_grid(entry.chart, counts)


def check_volume(entry: ZooEntry, grid: QuadratureGrid, rtol: float = VOLUME_RTOL) -> float | None:
    """Relative volume error of a grid; raises GridError above ``rtol``."""
    if entry.exact.volume is None:
        return None
    err = abs(volume(entry.chart, grid) / entry.exact.volume - 1.0)
    if err > rtol:
        raise GridError(f"grid {list(grid.counts)} misses the volume of {entry.label} by "
                        f"{err:.3g} (limit {rtol:g}); refine the grid")
    return err


def _choose_method(entry: ZooEntry, method: str) -> str:
    if method not in ("auto", "closed-form", "quadrature"):
        raise ValueError(f"unknown integration method {method!r}")
    closed_ok = entry.chart.is_homogeneous and entry.exact.volume is not None
    if method == "closed-form" and not closed_ok:
        raise PreconditionError(f"{entry.label} is not homogeneous with known volume; use quadrature")
    if method == "auto":
        return "closed-form" if closed_ok else "quadrature"
    return method


def integral(entry: ZooEntry, selectors, power: float, grid=None, method: str = "auto",
             cfg: FDConfig | None = None, tol: Tolerances = Tolerances()) -> tuple[dict, dict]:
    """int |q|^power dV for each selector; returns (values, grid description)."""
    selectors = tuple(selectors)
    for s in selectors:
        if s not in SELECTORS:
            raise ValueError(f"unknown quantity {s!r}; expected one of {SELECTORS}")
    how = _choose_method(entry, method)
    if how == "closed-form":
        sq = _closed_form_squares(entry, cfg)
        vol = entry.exact.volume
        vals = {s: float(_density(s, {k: np.asarray(v) for k, v in sq.items()}, power)) * vol
                for s in selectors}
        return vals, {"method": "closed-form", "volume": vol}
    G = resolve_grid(entry, grid)
    err = check_volume(entry, G, tol.volume)
    def f(P, g):
        v = pointwise_squares(entry, P, cfg, need=selectors, g=g)
        return np.stack([_density(s, v, power) for s in selectors], axis=-1)

    batch = 65536 if _ricci_only(entry, selectors) else None
    totals = integrate(entry.chart, f, G, batch=batch)
    vals = {s: float(t) for s, t in zip(selectors, totals)}
    return vals, {"method": "quadrature", **G.describe(), "volume_rel_error": err}


def lp_norm(entry: ZooEntry, selector: str, p: float, grid=None, method: str = "auto",
            cfg: FDConfig | None = None) -> float:
    """(int |q|^p dV)^(1/p) for q selected from Rm0, Ric0, W, W-plus-KN, R."""
    if not p >= 1:
        raise ValueError("p must be at least 1")
    vals, _ = integral(entry, (selector,), p, grid, method, cfg)
    return vals[selector] ** (1.0 / p)


# ---------------------------------------------------------------------------
# Yamabe constant
# ---------------------------------------------------------------------------

YAMABE_PROVENANCE = ("round-sphere-exact", "yamabe-metric-RVol", "user-supplied")


@dataclass(frozen=True)
class YamabeDatum:
    value: float
    provenance: str

    def __post_init__(self):
        if self.provenance not in YAMABE_PROVENANCE:
            raise ValueError(f"unknown Yamabe provenance {self.provenance!r}")


def yamabe_value(entry: ZooEntry, user_value: float | None = None) -> YamabeDatum:
    """Yamabe constant of a certified metric; no Yamabe problem is solved here."""
    if user_value is not None:
        return YamabeDatum(float(user_value), "user-supplied")
    if entry.exact.yamabe is None or entry.yamabe_provenance is None:
        raise PreconditionError(f"no certified Yamabe value for {entry.label}; supply one explicitly")
    return YamabeDatum(float(entry.exact.yamabe), entry.yamabe_provenance)


def ric0_yamabe_ratio(entry: ZooEntry, Y: YamabeDatum | None = None, grid=None,
                      method: str = "auto") -> float:
    """||Ric0||_{n/2} sqrt(n(n-1)) / Y.

    Stays below 1 for the Einstein pinching hypothesis; the normalized
    products S^1(t) x S^(n-1) with small t attain 1.
    """
    n = entry.n
    Y = Y or yamabe_value(entry)
    return lp_norm(entry, "Ric0", n / 2, grid, method) * math.sqrt(n * (n - 1)) / Y.value


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

@dataclass
class PinchingReport:
    theorem: str
    metric_label: str
    n: int
    p: float | None
    lhs: float
    threshold: float
    margin: float
    verdict: str
    hypothesis_flags: dict
    yamabe: dict | None
    grid: dict
    tolerances: dict
    runtime_ms: float = 0.0
    extra: dict = field(default_factory=dict)
    schema_version: str = SCHEMA_VERSION

    @property
    def ratio(self) -> float:
        return self.lhs / self.threshold if self.threshold else math.inf

    def to_dict(self) -> dict:
        d = asdict(self)
        order = ["schema_version", "theorem", "metric_label", "n", "p", "lhs", "threshold", "margin",
                 "verdict", "hypothesis_flags", "yamabe", "grid", "tolerances", "runtime_ms", "extra"]
        return {k: d[k] for k in order}


def classify(lhs: float, threshold: float, rtol: float = BOUNDARY_RTOL) -> tuple[float, str]:
    margin = threshold - lhs
    if abs(margin) <= rtol * abs(threshold):
        return margin, "boundary"
    return margin, "hypothesis-satisfied" if margin > 0 else "not-satisfied"


def bach_flatness(entry: ZooEntry, tol: float = BACH_TOL, points: int = 3) -> dict:
    """Largest Bach entry at the reference point and a few interior points."""
    chart = entry.chart
    lo, hi = chart.sample_box()
    u = qmc.Halton(d=chart.n, scramble=False)
    u.fast_forward(1)
    P = np.vstack([chart.reference_point[None], lo + (hi - lo) * (0.2 + 0.6 * u.random(points - 1))])
    B = bach(chart, P)
    worst = float(np.max(np.abs(B)))
    return {"bach_flat": worst < tol, "bach_max_entry": worst}


def _flags(entry: ZooEntry, R: float, tol: Tolerances, check_bach: bool) -> dict:
    flags = {"constant_R": bool(entry.chart.is_constant_scalar), "R_positive": bool(R > 0)}
    if check_bach:
        flags.update(bach_flatness(entry, tol.bach))
    else:
        flags["bach_flat"] = None
    return flags


def _scalar(entry: ZooEntry) -> float:
    if entry.exact.R is not None:
        return float(entry.exact.R)
    P = entry.chart.reference_point[None]
    return float(pointwise_squares(entry, P, need=("R",))["R"][0])


def _require_positive_constant_R(entry: ZooEntry) -> float:
    if not entry.chart.is_constant_scalar:
        raise PreconditionError(f"{entry.label} is not flagged as having constant scalar curvature")
    R = _scalar(entry)
    if not R > 0:
        raise PreconditionError(f"{entry.label} has non-positive scalar curvature R = {R:g}")
    return R


def _require_dim(entry: ZooEntry, allowed, what: str) -> None:
    if entry.n not in allowed:
        raise PreconditionError(f"{what} applies only for n in {sorted(allowed)}, got n = {entry.n}")


def _tol_dict(tol: Tolerances) -> dict:
    return {"boundary_rtol": tol.boundary, "bach_tol": tol.bach, "volume_rtol": tol.volume}


def _report(audit_id, entry, p, lhs, threshold, flags, Y, grid, tol, t0, extra=None) -> PinchingReport:
    margin, verdict = classify(lhs, threshold, tol.boundary)
    return PinchingReport(
        theorem=audit_id, metric_label=entry.label, n=entry.n, p=p, lhs=float(lhs),
        threshold=float(threshold), margin=float(margin), verdict=verdict, hypothesis_flags=flags,
        yamabe=None if Y is None else {"value": Y.value, "provenance": Y.provenance},
        grid=grid, tolerances=_tol_dict(tol), runtime_ms=1e3 * (time.perf_counter() - t0),
        extra=extra or {})


# ---------------------------------------------------------------------------
# Audits
# ---------------------------------------------------------------------------

def audit_rm0_lp(entry: ZooEntry, p: float, Y: YamabeDatum | None = None, grid=None,
                 method: str = "auto", tol: Tolerances = Tolerances(), check_bach: bool = True) -> PinchingReport:
    t0 = time.perf_counter()
    n = entry.n
    R = _require_positive_constant_R(entry)
    eps = K.rm0_pinching_epsilon(n, p)
    Y = Y or yamabe_value(entry)
    vals, gdesc = integral(entry, ("Rm0",), p, grid, method, tol=tol)
    lhs = vals["Rm0"] ** (1.0 / p)
    threshold = eps * Y.value ** (n / (2 * p)) * R ** (1 - n / (2 * p))
    return _report("rm0-lp", entry, p, lhs, threshold, _flags(entry, R, tol, check_bach), Y, gdesc, tol, t0,
                   {"epsilon": eps, "epsilon_branch": K.epsilon_branch(n, p), "R": R})


def audit_einstein_lp(entry: ZooEntry, Y: YamabeDatum | None = None, grid=None, method: str = "auto",
                      tol: Tolerances = Tolerances(), check_bach: bool = True) -> PinchingReport:
    t0 = time.perf_counter()
    n = entry.n
    R = _require_positive_constant_R(entry)
    Y = Y or yamabe_value(entry)
    p = n / 2
    vals, gdesc = integral(entry, ("W-plus-KN",), p, grid, method, tol=tol)
    lhs = vals["W-plus-KN"] ** (1.0 / p)
    c1 = K.einstein_pinching_constant(n)
    extra = {"C1": c1, "lhs_over_Y": lhs / Y.value, "R": R}
    if n >= 6:
        c2 = K.weyl_einstein_constant(n)
        extra.update(C2=c2, sphere_threshold=2 * Y.value / (n * c2))
    return _report("einstein-lp", entry, p, lhs, c1 * Y.value, _flags(entry, R, tol, check_bach), Y,
                   gdesc, tol, t0, extra)


def four_dim_integrals(entry: ZooEntry, grid=None, method: str = "auto",
                       tol: Tolerances = Tolerances()) -> tuple[dict, dict]:
    """int |W|^2, int |Ric0|^2 and int R^2 on a four-manifold."""
    _require_dim(entry, {4}, "this integral identity")
    return integral(entry, ("W", "Ric0", "R"), 2.0, grid, method, tol=tol)


def audit_l2_4d(entry: ZooEntry, grid=None, method: str = "auto", tol: Tolerances = Tolerances(),
                check_bach: bool = True) -> PinchingReport:
    t0 = time.perf_counter()
    _require_dim(entry, {4}, "the four-dimensional L^2 pinching condition")
    R = _require_positive_constant_R(entry)
    I, gdesc = four_dim_integrals(entry, grid, method, tol)
    lhs = I["W"] + 1.25 * I["Ric0"]
    threshold = I["R"] / 48.0
    extra = {"int_W2": I["W"], "int_Ric0_2": I["Ric0"], "int_R2": I["R"]}
    chi = entry.exact.euler
    if chi is not None:
        # equivalent form through the Gauss-Bonnet integrand
        lhs_chi = I["W"] + 2.0 / 39.0 * I["R"]
        thr_chi = 160.0 / 13.0 * math.pi ** 2 * chi
        extra.update(euler=chi, lhs_euler_form=lhs_chi, threshold_euler_form=thr_chi,
                     margin_euler_form=thr_chi - lhs_chi)
    return _report("l2-4d", entry, None, lhs, threshold, _flags(entry, R, tol, check_bach), None,
                   gdesc, tol, t0, extra)


def gauss_bonnet_combination(entry: ZooEntry, grid=None, method: str = "auto",
                             tol: Tolerances = Tolerances()) -> tuple[float, dict]:
    """int |W|^2 - 2 int |Ric0|^2 + int R^2 / 6, which equals 32 pi^2 chi."""
    I, gdesc = four_dim_integrals(entry, grid, method, tol)
    return I["W"] - 2.0 * I["Ric0"] + I["R"] / 6.0, gdesc


def cgb_check(entry: ZooEntry, grid=None, method: str = "auto", tol: Tolerances = Tolerances()) -> PinchingReport:
    t0 = time.perf_counter()
    if entry.exact.euler is None:
        raise PreconditionError(f"{entry.label} has no recorded Euler characteristic")
    combo, gdesc = gauss_bonnet_combination(entry, grid, method, tol)
    target = 32.0 * math.pi ** 2 * entry.exact.euler
    R = _scalar(entry)
    flags = _flags(entry, R, tol, False)
    margin = target - combo
    scale = max(abs(target), abs(combo), 1.0)
    verdict = "boundary" if abs(margin) <= tol.boundary * scale else "not-satisfied"
    rep = _report("gauss-bonnet", entry, None, combo, target, flags, None, gdesc, tol, t0,
                  {"euler": entry.exact.euler, "residual": combo - target})
    rep.verdict = verdict
    return rep


def audit_yamabe_l2(entry: ZooEntry, Y: YamabeDatum | None = None, grid=None, method: str = "auto",
                    tol: Tolerances = Tolerances()) -> PinchingReport:
    """int R^2 - 12 int |Ric0|^2 <= Y^2 on a four-manifold; equality for conformally Einstein metrics."""
    t0 = time.perf_counter()
    _require_dim(entry, {4}, "the four-dimensional Yamabe L^2 bound")
    Y = Y or yamabe_value(entry)
    I, gdesc = four_dim_integrals(entry, grid, method, tol)
    lhs = I["R"] - 12.0 * I["Ric0"]
    R = _scalar(entry)
    return _report("yamabe-l2", entry, None, lhs, Y.value ** 2, _flags(entry, R, tol, False), Y, gdesc,
                   tol, t0, {"int_R2": I["R"], "int_Ric0_2": I["Ric0"]})


def sample_points(entry: ZooEntry, count: int = POINTWISE_SAMPLES) -> np.ndarray:
    """Unscrambled Halton points in the chart's sampling box (the origin node skipped)."""
    lo, hi = entry.chart.sample_box()
    u = qmc.Halton(d=entry.n, scramble=False)
    u.fast_forward(1)
    return lo + (hi - lo) * u.random(count)


def pointwise_excess(entry: ZooEntry, points: np.ndarray, cfg: FDConfig | None = None) -> tuple[np.ndarray, np.ndarray]:
    """(|W|^2 + n/(2(n-2)) |Ric0|^2, R^2 / (2(n-2)(n-1))) at each point."""
    n = entry.n
    v = pointwise_squares(entry, points, cfg, need=("W", "Ric0", "R"))
    lhs = v["W"] + n / (2.0 * (n - 2)) * v["Ric0"]
    thr = v["R"] ** 2 / (2.0 * (n - 2) * (n - 1))
    return lhs, thr


def audit_pointwise(entry: ZooEntry, points: np.ndarray | None = None, tol: Tolerances = Tolerances(),
                    check_bach: bool = True, audit_id: str = "pointwise") -> PinchingReport:
    t0 = time.perf_counter()
    R = _require_positive_constant_R(entry)
    if points is None:
        points = sample_points(entry)
    lhs, thr = pointwise_excess(entry, np.asarray(points, float))
    worst = int(np.argmax(lhs - thr))
    extra = {"points": len(lhs), "max_excess": float(lhs[worst] - thr[worst]),
             "strict_everywhere": bool(np.all(lhs < thr * (1 - tol.boundary))), "R": R}
    return _report(audit_id, entry, None, lhs[worst], thr[worst], _flags(entry, R, tol, check_bach), None,
                   {"method": "halton", "points": len(lhs)}, tol, t0, extra)


def audit_pointwise_4d5d(entry: ZooEntry, points: np.ndarray | None = None, tol: Tolerances = Tolerances(),
                         check_bach: bool = True) -> PinchingReport:
    _require_dim(entry, {4, 5}, "the low-dimensional pointwise condition")
    rep = audit_pointwise(entry, points, tol, check_bach, audit_id="pointwise-4d5d")
    rep.extra["C3"] = K.weitzenbock_constant(entry.n)
    return rep


def run_audit(audit_id: str, entry: ZooEntry, p: float | None = None, grid=None, method: str = "auto",
              Y: YamabeDatum | None = None, tol: Tolerances = Tolerances(), check_bach: bool = True) -> PinchingReport:
    if audit_id == "rm0-lp":
        return audit_rm0_lp(entry, entry.n / 2 if p is None else p, Y, grid, method, tol, check_bach)
    if audit_id == "einstein-lp":
        return audit_einstein_lp(entry, Y, grid, method, tol, check_bach)
    if audit_id == "l2-4d":
        return audit_l2_4d(entry, grid, method, tol, check_bach)
    if audit_id == "pointwise":
        return audit_pointwise(entry, tol=tol, check_bach=check_bach)
    if audit_id == "pointwise-4d5d":
        return audit_pointwise_4d5d(entry, tol=tol, check_bach=check_bach)
    if audit_id == "gauss-bonnet":
        return cgb_check(entry, grid, method, tol)
    if audit_id == "yamabe-l2":
        return audit_yamabe_l2(entry, Y, grid, method, tol)
    raise ValueError(f"unknown audit {audit_id!r}; expected one of {', '.join(AUDITS)}")
