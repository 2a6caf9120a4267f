"""Identity suites.

``algebra`` checks the exact tensor identities on seeded random inputs;
``engine`` checks the finite-difference machinery on every catalogue metric.
Each check records its worst value against a limit.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import tensor_core as tc
from .curvature_engine import (FDConfig, bach, kato_check, raw_riemann_residual, riemann,
                               second_bianchi_check, weyl_divergence_check)
from .metric_zoo import ZooEntry, catalogue

SUITES = ("algebra", "engine")
ALGEBRA_RTOL = 1e-12
ENGINE_TOL = 1e-6
BACH_FLAT_TOL = 1e-5
BACH_CONTROL_MIN = 1e-3
BACH_STABILITY = 0.2
# the metric-only Riemann comparison uses extrapolated differences
ENGINE_FD = FDConfig(step=1e-2, order=4, richardson=True)


@dataclass
class Check:
    name: str
    subject: str
    value: float
    limit: float
    passed: bool
    detail: dict = field(default_factory=dict)


@dataclass
class SuiteReport:
    suite: str
    checks: list
    runtime_ms: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list:
        return [c for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {"suite": self.suite, "passed": self.passed, "checks": [asdict(c) for c in self.checks],
                "failures": len(self.failures), "runtime_ms": self.runtime_ms}


def _rel(a: np.ndarray, b: np.ndarray, scale: np.ndarray | None = None) -> float:
    a, b = np.asarray(a, float), np.asarray(b, float)
    s = np.maximum(np.abs(a), np.abs(b)) if scale is None else np.asarray(scale, float)
    return float(np.max(np.abs(a - b) / np.maximum(s, np.finfo(float).tiny)))


def _upto(name, subject, value, limit, **detail) -> Check:
    return Check(name, subject, float(value), float(limit), bool(value <= limit), detail)


# ---------------------------------------------------------------------------
# Algebra
# ---------------------------------------------------------------------------

def algebra_checks(n: int, trials: int = 1000, seed: int = 0, rtol: float = ALGEBRA_RTOL) -> list[Check]:
    rng = np.random.default_rng([seed, n])
    Rm = tc.random_alg_curv(rng, n, trials)
    d = tc.decompose(Rm)
    sq = lambda T: tc.norm_sq(T, rank=4)
    ip = lambda A, B: tc.inner(A, B, rank=4)
    rm2, w2, v2, u2, rm02 = sq(Rm), sq(d.W), sq(d.V), sq(d.U), sq(d.Rm0)
    ric02 = tc.norm_sq(d.Ric0, rank=2)
    subj = f"n={n}"
    out = [
        _upto("pair-and-skew-symmetry", subj, tc.symmetry_residual(Rm), rtol),
        _upto("first-bianchi", subj, tc.bianchi_residual(Rm), rtol),
        _upto("decomposition-sum", subj, _rel(d.W + d.V + d.U, Rm, tc._scale(Rm, 4)[:, None, None, None, None]), rtol),
        _upto("orthogonality", subj,
              max(np.max(np.abs(ip(d.W, d.V)) / rm2), np.max(np.abs(ip(d.W, d.U)) / rm2),
                  np.max(np.abs(ip(d.V, d.U)) / rm2)), rtol),
        _upto("norm-additivity", subj, _rel(rm2, w2 + v2 + u2), rtol),
        _upto("weyl-trace-free", subj,
              np.max(np.abs(np.einsum("zijil->zjl", d.W)) / tc._scale(Rm, 4)[:, None, None]), rtol),
        _upto("rm0-norm-split", subj, _rel(rm02, w2 + 4.0 / (n - 2) * ric02), rtol),
        _upto("ricci-rm0-bound", subj, np.max(ric02 / ((n - 2) / 4.0 * rm02)), 1.0 + rtol),
    ]
    again = tc.decompose(d.W + d.V + d.U)
    out.append(_upto("idempotent", subj,
                     max(_rel(again.W, d.W, tc._scale(Rm, 4)[:, None, None, None, None]),
                         _rel(again.V, d.V, tc._scale(Rm, 4)[:, None, None, None, None]),
                         _rel(again.U, d.U, tc._scale(Rm, 4)[:, None, None, None, None])), rtol))

    S = tc.random_trace_free(rng, n, trials)
    p = tc.kn_square_decompose(S)
    s2 = tc.norm_sq(S, rank=2)
    s4 = s2 ** 2
    q2 = tc.norm_sq(tc.sym_square(S), rank=2)
    out += [
        _upto("kn-square-norm", subj, _rel(sq(tc.kulkarni_nomizu(S, S)), 8 * s4 - 8 * q2, 8 * s4), rtol),
        _upto("kn-vprime-norm", subj,
              _rel(sq(p.Vp), 16.0 / (n - 2) * q2 - 16.0 / (n * (n - 2)) * s4, s4), rtol),
        _upto("kn-uprime-norm", subj, _rel(sq(p.Up), 8.0 / (n * (n - 1)) * s4), rtol),
        _upto("kn-weighted-sum", subj,
              _rel(sq(p.T) + n / 2.0 * sq(p.Vp), 8.0 * (n - 2) / (n - 1) * s4), rtol),
        _upto("kn-t-trace-free", subj,
              np.max(np.abs(np.einsum("zijil->zjl", p.T)) / s2[:, None, None]), rtol),
    ]
    return out


# ---------------------------------------------------------------------------
# Engine
# ---------------------------------------------------------------------------

def _points(entry: ZooEntry, count: int = 2) -> np.ndarray:
    from .pinching_audit import sample_points
    return np.vstack([entry.chart.reference_point[None], sample_points(entry, count)])


def _is_bach_flat(entry: ZooEntry) -> bool:
    c = entry.chart
    return c.n >= 4 and (c.is_einstein or c.is_conformally_flat)


def engine_checks(entry: ZooEntry, tol: float = ENGINE_TOL, bach_tol: float = BACH_FLAT_TOL) -> list[Check]:
    chart, subj = entry.chart, entry.label
    P = _points(entry)
    out = []
    if chart.riemann_at is not None:
        ref = riemann(chart, P)
        fd = riemann(chart.without_callbacks(), P, ENGINE_FD)
        out.append(_upto("fd-vs-closed-form-riemann", subj,
                         np.max(np.abs(fd - ref)) / max(np.max(np.abs(ref)), 1.0), tol))
    out.append(_upto("raw-riemann-symmetry", subj, raw_riemann_residual(chart.without_callbacks(), P, ENGINE_FD), tol))
    if chart.is_constant_scalar:
        out.append(_upto("weyl-divergence", subj, weyl_divergence_check(chart, P), tol))
        out.append(_upto("trace-free-second-bianchi", subj, second_bianchi_check(chart, P), tol))
    else:
        k = kato_check(chart, _points(entry, 8)[1:], tol=tol)
        out.append(Check("kato", subj, k.min_margin, -tol, k.vacuous or k.min_margin >= -tol,
                         {"points": k.points, "used": k.used, "vacuous": k.vacuous}))
    if _is_bach_flat(entry):
        out.append(_upto("bach-vanishes", subj, float(np.max(np.abs(bach(chart, P)))), bach_tol))
    elif chart.n >= 4:
        out.append(bach_control(entry, P))
    return out


def bach_control(entry: ZooEntry, points: np.ndarray | None = None) -> Check:
    """A non-Bach-flat metric: |B| is visibly nonzero and stable under step halving."""
    P = _points(entry) if points is None else points
    coarse = np.max(np.abs(bach(entry.chart, P, FDConfig(1e-2, 4, True))), axis=(1, 2))
    fine = np.max(np.abs(bach(entry.chart, P, FDConfig(5e-3, 4, True))), axis=(1, 2))
    i = int(np.argmax(fine))
    drift = abs(fine[i] - coarse[i]) / fine[i] if fine[i] > 0 else np.inf
    ok = bool(fine[i] > BACH_CONTROL_MIN and drift <= BACH_STABILITY)
    return Check("bach-nonzero-control", entry.label, float(fine[i]), BACH_CONTROL_MIN, ok,
                 {"coarse": float(coarse[i]), "relative_drift": float(drift)})


def run_suite(suite: str, dims=range(4, 9), trials: int = 1000, seed: int = 0) -> SuiteReport:
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}; expected one of {', '.join(SUITES)}")
    t0 = time.perf_counter()
    checks = []
    if suite == "algebra":
        for n in dims:
            checks += algebra_checks(n, trials, seed)
    else:
        for entry in catalogue():
            checks += engine_checks(entry)
    return SuiteReport(suite, checks, 1e3 * (time.perf_counter() - t0))
