"""Closed-form metrics with exact curvature data.

Labels double as CLI metric identifiers, e.g. ``round-sphere:n=4:r=1``,
``s1xs:n=6:t=0.1:normalized``, ``flat-torus:n=5``, ``fubini-study`` and
``perturbed-flat:n=4:amp=0.1:seed=42``.  Sphere-type entries accept
``chart=polar`` for hyperspherical angles instead of stereographic
coordinates.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import tensor_core as tc
from .curvature_engine import MetricChart

INF = math.inf


@dataclass(frozen=True)
class ExactData:
    R: float | None = None
    ric0_sq: float | None = None
    weyl_sq: float | None = None
    volume: float | None = None
    yamabe: float | None = None
    euler: int | None = None


@dataclass(frozen=True)
class ZooEntry:
    label: str
    params: dict
    chart: MetricChart
    exact: ExactData = field(default_factory=ExactData)
    yamabe_provenance: str | None = None
    notes: str = ""
    grid: tuple | None = None  # default quadrature node counts per axis

    @property
    def n(self) -> int:
        return self.chart.n


def sphere_volume(m: int, r: float = 1.0) -> float:
    """Volume of the round m-sphere of radius r."""
    return 2.0 * math.pi ** ((m + 1) / 2) / math.gamma((m + 1) / 2) * r ** m


# Gauss-Legendre nodes per stereographic axis that keep the volume error near
# 1e-4 on the unit m-sphere
_STEREO_NODES = {3: 24, 4: 16, 5: 12, 6: 10, 7: 8}


def product_yamabe_cutoff(n: int) -> float:
    """Largest circle radius (unit sphere factor) for which S^1(t) x S^(n-1) is
    certified here as a Yamabe metric.

    At t = 1/sqrt(n-2) the first circle mode 1/t^2 reaches R/(n-1) and the
    product stops being a stable critical point of the Yamabe functional; no
    claim is made beyond it.
    """
    return 1.0 / math.sqrt(n - 2)


# ---------------------------------------------------------------------------
# Building blocks
# ---------------------------------------------------------------------------

def _constant_curvature_rm(K: float) -> Callable:
    """Riemann callback for a metric block of constant sectional curvature K.

    ``block(g)`` restricts the metric to the curved directions.
    """
    def rm(g_block):
        return 0.5 * K * tc.kulkarni_nomizu(g_block, g_block)
    return rm


def _stereo_factor(y: np.ndarray):
    """Conformal factor 4/(1+|y|^2)^2 of the unit sphere and its derivatives."""
    s = np.sum(y * y, axis=-1)
    a = 1.0 + s
    phi = 4.0 / a ** 2
    dphi = -16.0 * y / a[:, None] ** 3
    m = y.shape[-1]
    ddphi = (-16.0 * np.eye(m)[None] / a[:, None, None] ** 3
             + 96.0 * y[:, :, None] * y[:, None, :] / a[:, None, None] ** 4)
    return phi, dphi, ddphi


def _polar_metric(ang: np.ndarray) -> np.ndarray:
    """Unit-sphere metric diag(1, s1^2, (s1 s2)^2, ...) in hyperspherical angles."""
    N, m = ang.shape
    diag = np.ones((N, m))
    s2 = np.sin(ang[:, :-1]) ** 2
    diag[:, 1:] = np.cumprod(s2, axis=1)
    g = np.zeros((N, m, m))
    idx = np.arange(m)
    g[:, idx, idx] = diag
    return g


def _embed_block(block: np.ndarray, n: int, offset: int) -> np.ndarray:
    out = np.zeros(block.shape[:-2] + (n, n))
    m = block.shape[-1]
    out[..., offset:offset + m, offset:offset + m] = block
    return out


# ---------------------------------------------------------------------------
# Round sphere
# ---------------------------------------------------------------------------

def make_round_sphere(n: int, r: float = 1.0, chart: str = "stereographic") -> ZooEntry:
    if n < 3 or not r > 0:
        raise ValueError("round sphere needs n >= 3 and r > 0")
    c2 = r * r

    if chart == "stereographic":
        def metric_at(P):
            phi = _stereo_factor(P)[0]
            return c2 * phi[:, None, None] * np.eye(n)[None]

        def derivs(P):
            phi, dphi, ddphi = _stereo_factor(P)
            I = np.eye(n)
            g = c2 * phi[:, None, None] * I
            dg = c2 * dphi[:, :, None, None] * I
            ddg = c2 * ddphi[:, :, :, None, None] * I
            return g, dg, ddg

        lo, hi, per = (-INF,) * n, (INF,) * n, (False,) * n
        center = (0.0,) * n
        slo, shi = (-2.0,) * n, (2.0,) * n
    elif chart == "polar":
        metric_at = lambda P: c2 * _polar_metric(P)
        derivs = None
        lo = (0.0,) * n
        hi = (math.pi,) * (n - 1) + (2 * math.pi,)
        per = (False,) * (n - 1) + (True,)
        center = (math.pi / 2,) * (n - 1) + (math.pi,)
        slo, shi = (0.3,) * (n - 1) + (0.0,), (math.pi - 0.3,) * (n - 1) + (2 * math.pi,)
    else:
        raise ValueError(f"unknown sphere chart {chart!r}")

    K = 1.0 / c2
    rm = _constant_curvature_rm(K)
    R = n * (n - 1) * K
    label = f"round-sphere:n={n}:r={_fmt(r)}" + ("" if chart == "stereographic" else f":chart={chart}")
    ch = MetricChart(
        n=n, metric_at=metric_at, lo=lo, hi=hi, periodic=per, label=label,
        metric_derivs_at=derivs,
        riemann_at=lambda P: rm(metric_at(P)),
        ricci_at=lambda P: (n - 1) * K * metric_at(P),
        scalar_at=lambda P: np.full(len(P), R),
        is_einstein=True, is_conformally_flat=True, is_constant_scalar=True, is_homogeneous=True,
        center=center, sample_lo=slo, sample_hi=shi,
    )
    exact = ExactData(R=R, ric0_sq=0.0, weyl_sq=0.0, volume=sphere_volume(n, r),
                      yamabe=n * (n - 1) * sphere_volume(n) ** (2.0 / n), euler=1 + (-1) ** n)
    if chart == "stereographic":
        grid = (_STEREO_NODES.get(n, 8),) * n
    else:
        # the metric does not depend on the last angle
        grid = (8,) * (n - 1) + (2,)
    return ZooEntry(label, {"n": n, "r": r, "chart": chart}, ch, exact, "round-sphere-exact", grid=grid)


# ---------------------------------------------------------------------------
# Circle times sphere
# ---------------------------------------------------------------------------

def make_product_circle_sphere(n: int, t: float, normalize_volume: bool = False,
                               chart: str = "stereographic") -> ZooEntry:
    """S^1(t) x S^(n-1)(1), optionally scaled homothetically to unit volume.

    Coordinates are (circle angle, sphere coordinates).
    """
    if n < 4 or not t > 0:
        raise ValueError("circle-sphere product needs n >= 4 and t > 0")
    m = n - 1
    vol1 = 2 * math.pi * t * sphere_volume(m)
    c2 = vol1 ** (-2.0 / n) if normalize_volume else 1.0

    if chart == "stereographic":
        def metric_at(P):
            phi = _stereo_factor(P[:, 1:])[0]
            g = np.zeros((len(P), n, n))
            g[:, 0, 0] = t * t
            idx = np.arange(1, n)
            g[:, idx, idx] = phi[:, None]
            return c2 * g

        def derivs(P):
            phi, dphi, ddphi = _stereo_factor(P[:, 1:])
            N = len(P)
            g = metric_at(P)
            dg = np.zeros((N, n, n, n))
            ddg = np.zeros((N, n, n, n, n))
            idx = np.arange(1, n)
            dg[:, 1:, idx, idx] = c2 * dphi[:, :, None]
            ddg[:, 1:, 1:, idx, idx] = c2 * ddphi[:, :, :, None]
            return g, dg, ddg

        lo, hi, per = (0.0,) + (-INF,) * m, (2 * math.pi,) + (INF,) * m, (True,) + (False,) * m
        center = (0.0,) * n
        slo, shi = (0.0,) + (-2.0,) * m, (2 * math.pi,) + (2.0,) * m
    elif chart == "polar":
        def metric_at(P):
            g = np.zeros((len(P), n, n))
            g[:, 0, 0] = t * t
            g[:, 1:, 1:] = _polar_metric(P[:, 1:])
            return c2 * g

        derivs = None
        lo = (0.0,) * n
        hi = (2 * math.pi,) + (math.pi,) * (m - 1) + (2 * math.pi,)
        per = (True,) + (False,) * (m - 1) + (True,)
        center = (0.0,) + (math.pi / 2,) * (m - 1) + (math.pi,)
        slo = (0.0,) + (0.3,) * (m - 1) + (0.0,)
        shi = (2 * math.pi,) + (math.pi - 0.3,) * (m - 1) + (2 * math.pi,)
    else:
        raise ValueError(f"unknown sphere chart {chart!r}")

    K = 1.0 / c2  # sectional curvature of the sphere factor

    def sphere_block(P):
        g = metric_at(P)
        g[:, 0, :] = 0.0
        g[:, :, 0] = 0.0
        return g

    rm = _constant_curvature_rm(K)
    R = m * (m - 1) * K
    vol = 1.0 if normalize_volume else vol1
    ric0_sq = R * R / (n * (n - 1))
    certified = t <= product_yamabe_cutoff(n)
    label = f"s1xs:n={n}:t={_fmt(t)}" + (":normalized" if normalize_volume else "") + \
        ("" if chart == "stereographic" else f":chart={chart}")
    ch = MetricChart(
        n=n, metric_at=metric_at, lo=lo, hi=hi, periodic=per, label=label,
        metric_derivs_at=derivs,
        riemann_at=lambda P: rm(sphere_block(P)),
        ricci_at=lambda P: (m - 1) * K * sphere_block(P),
        scalar_at=lambda P: np.full(len(P), R),
        is_conformally_flat=True, is_constant_scalar=True, is_homogeneous=True,
        center=center, sample_lo=slo, sample_hi=shi,
    )
    exact = ExactData(R=R, ric0_sq=ric0_sq, weyl_sq=0.0, volume=vol,
                      yamabe=R * vol ** (2.0 / n) if certified else None,
                      euler=0 if n % 2 == 0 else None)
    # the metric does not depend on the circle angle (nor on the last polar angle)
    if chart == "stereographic":
        grid = (2,) + (_STEREO_NODES.get(m, 8),) * m
    else:
        grid = (2,) + (8,) * (m - 1) + (2,)
    return ZooEntry(label, {"n": n, "t": t, "normalized": normalize_volume, "chart": chart}, ch,
                    exact, "yamabe-metric-RVol" if certified else None,
                    notes="" if certified else f"t above Yamabe cutoff {product_yamabe_cutoff(n):.6g}",
                    grid=grid)


# ---------------------------------------------------------------------------
# Flat torus and perturbations
# ---------------------------------------------------------------------------

def _torus_chart(n, label, metric_at, derivs, riemann_at=None, flat=False):
    two_pi = 2 * math.pi
    return MetricChart(
        n=n, metric_at=metric_at, lo=(0.0,) * n, hi=(two_pi,) * n, periodic=(True,) * n,
        label=label, metric_derivs_at=derivs, riemann_at=riemann_at,
        ricci_at=(lambda P: np.zeros((len(P), n, n))) if flat else None,
        scalar_at=(lambda P: np.zeros(len(P))) if flat else None,
        is_einstein=flat, is_conformally_flat=flat, is_constant_scalar=flat, is_homogeneous=flat,
        center=(math.pi,) * n, sample_lo=(0.0,) * n, sample_hi=(two_pi,) * n,
    )


def make_flat_torus(n: int) -> ZooEntry:
    if n < 3:
        raise ValueError("flat torus needs n >= 3")
    I = np.eye(n)
    metric_at = lambda P: np.broadcast_to(I, (len(P), n, n)).copy()
    derivs = lambda P: (metric_at(P), np.zeros((len(P), n, n, n)), np.zeros((len(P), n, n, n, n)))
    ch = _torus_chart(n, f"flat-torus:n={n}", metric_at, derivs,
                      riemann_at=lambda P: np.zeros((len(P), n, n, n, n)), flat=True)
    exact = ExactData(R=0.0, ric0_sq=0.0, weyl_sq=0.0, volume=(2 * math.pi) ** n, euler=0)
    return ZooEntry(ch.label, {"n": n}, ch, exact, grid=(4,) * n)


def make_perturbed_flat(n: int, amplitude: float, seed: int, modes: int = 3) -> ZooEntry:
    """Flat torus metric plus a seeded sum of Fourier modes.

    g(x) = I + amplitude * sum_m S_m cos(k_m . x + phase_m) with symmetric S_m
    of spectral norm 1/modes, so g stays positive definite for amplitude < 1.
    """
    if n < 3:
        raise ValueError("perturbed flat metric needs n >= 3")
    if not 0 <= amplitude < 1:
        raise ValueError("amplitude must lie in [0, 1)")
    rng = np.random.default_rng(seed)
    ks, Ss, phases = [], [], []
    for _ in range(modes):
        k = rng.integers(-2, 3, size=n)
        while not np.any(k):
            k = rng.integers(-2, 3, size=n)
        A = rng.standard_normal((n, n))
        A = 0.5 * (A + A.T)
        A /= np.max(np.abs(np.linalg.eigvalsh(A))) * modes
        ks.append(k.astype(float))
        Ss.append(A)
        phases.append(rng.uniform(0, 2 * math.pi))
    K = np.array(ks)            # (M, n)
    S = np.array(Ss)            # (M, n, n)
    ph = np.array(phases)       # (M,)
    a = float(amplitude)
    I = np.eye(n)

    def derivs(P):
        arg = P @ K.T + ph       # (N, M)
        c, s = np.cos(arg), np.sin(arg)
        g = I + a * np.einsum("zm,mij->zij", c, S)
        dg = -a * np.einsum("zm,mk,mij->zkij", s, K, S)
        ddg = -a * np.einsum("zm,mk,ml,mij->zklij", c, K, K, S)
        return g, dg, ddg

    metric_at = lambda P: derivs(P)[0]
    label = f"perturbed-flat:n={n}:amp={_fmt(amplitude)}:seed={seed}"
    ch = _torus_chart(n, label, metric_at, derivs, flat=(a == 0.0))
    if a == 0.0:
        ch = dataclasses.replace(ch, riemann_at=lambda P: np.zeros((len(P), n, n, n, n)))
    exact = ExactData(volume=(2 * math.pi) ** n if a == 0.0 else None, euler=0)
    return ZooEntry(label, {"n": n, "amp": amplitude, "seed": seed}, ch, exact,
                    grid=(max(4, min(12, int(2_000_000 ** (1 / n)))),) * n)


# ---------------------------------------------------------------------------
# Complex projective plane
# ---------------------------------------------------------------------------

# multiplication by i on C^2 = R^4 with z_1 = x_0 + i x_1, z_2 = x_2 + i x_3
_J = np.array([[0.0, -1.0, 0.0, 0.0],
               [1.0, 0.0, 0.0, 0.0],
               [0.0, 0.0, 0.0, -1.0],
               [0.0, 0.0, 1.0, 0.0]])


def _fs_metric(P: np.ndarray) -> np.ndarray:
    # g(u, v) = (<u, v>(1 + |x|^2) - <x, u><x, v> - <Jx, u><Jx, v>) / (1 + |x|^2)^2
    s = 1.0 + np.sum(P * P, axis=-1)
    Jx = P @ _J.T
    g = (np.eye(4)[None] * s[:, None, None]
         - P[:, :, None] * P[:, None, :] - Jx[:, :, None] * Jx[:, None, :])
    return g / (s * s)[:, None, None]


def _fs_riemann(P: np.ndarray) -> np.ndarray:
    # constant holomorphic sectional curvature 4
    g = _fs_metric(P)
    om = np.einsum("zik,kj->zij", g, _J)  # omega_ij = g(e_i, J e_j)
    return (0.5 * tc.kulkarni_nomizu(g, g) + 0.5 * tc.kulkarni_nomizu(om, om)
            + 2.0 * np.einsum("zij,zkl->zijkl", om, om))


def make_fubini_study() -> ZooEntry:
    """Fubini-Study metric on the affine chart of the complex projective plane.

    Normalized to holomorphic sectional curvature 4, so Ric = 6 g, R = 24 and
    the volume is pi^2/2.
    """
    n = 4
    ch = MetricChart(
        n=n, metric_at=_fs_metric, lo=(-INF,) * n, hi=(INF,) * n, periodic=(False,) * n,
        label="fubini-study", riemann_at=_fs_riemann,
        ricci_at=lambda P: 6.0 * _fs_metric(P),
        scalar_at=lambda P: np.full(len(P), 24.0),
        is_einstein=True, is_constant_scalar=True, is_homogeneous=True,
        center=(0.0,) * n, sample_lo=(-2.0,) * n, sample_hi=(2.0,) * n,
    )
    vol = math.pi ** 2 / 2
    # |W|^2 = 96 follows from the four-dimensional Gauss-Bonnet integrand with chi = 3
    exact = ExactData(R=24.0, ric0_sq=0.0, weyl_sq=96.0, volume=vol,
                      yamabe=24.0 * math.sqrt(vol), euler=3)
    return ZooEntry("fubini-study", {}, ch, exact, "yamabe-metric-RVol",
                    notes="Einstein metric: the Yamabe metric of its conformal class",
                    grid=(24,) * 4)


# ---------------------------------------------------------------------------
# Conformal changes
# ---------------------------------------------------------------------------

def make_homothetic(entry: ZooEntry, c: float) -> ZooEntry:
    """g -> c^2 g, keeping closed-form curvature and flags."""
    if not c > 0:
        raise ValueError("homothety factor must be positive")
    ch = entry.chart
    c2 = c * c
    base_metric = ch.metric_at

    def scaled(fn, factor):
        return None if fn is None else (lambda P: factor * np.asarray(fn(P)))

    derivs = None
    if ch.metric_derivs_at is not None:
        def derivs(P, _d=ch.metric_derivs_at):
            return tuple(c2 * np.asarray(a) for a in _d(P))

    new = dataclasses.replace(
        ch, label=f"{ch.label}@c={_fmt(c)}",
        metric_at=lambda P: c2 * base_metric(P), metric_derivs_at=derivs,
        riemann_at=scaled(ch.riemann_at, c2), ricci_at=ch.ricci_at,
        scalar_at=scaled(ch.scalar_at, 1.0 / c2),
    )
    e = entry.exact
    n = ch.n
    exact = ExactData(
        R=None if e.R is None else e.R / c2,
        ric0_sq=None if e.ric0_sq is None else e.ric0_sq / c2 ** 2,
        weyl_sq=None if e.weyl_sq is None else e.weyl_sq / c2 ** 2,
        volume=None if e.volume is None else e.volume * c ** n,
        yamabe=e.yamabe, euler=e.euler,
    )
    params = dict(entry.params, homothety=c)
    return ZooEntry(new.label, params, new, exact, entry.yamabe_provenance, entry.notes, entry.grid)


def make_conformal(entry: ZooEntry, factor) -> ZooEntry:
    """g -> f g for a positive function f (batched callable) or a constant.

    A constant factor is a homothety and keeps all closed-form data.  A
    general factor drops curvature callbacks and every flag except conformal
    flatness.
    """
    if np.isscalar(factor):
        if not factor > 0:
            raise ValueError("conformal factor must be positive")
        return make_homothetic(entry, math.sqrt(float(factor)))
    ch = entry.chart
    lo, hi = ch.sample_box()
    probe = lo + (hi - lo) * np.random.default_rng(0).random((64, ch.n))
    if np.any(np.asarray(factor(probe)) <= 0):
        raise ValueError("conformal factor must be positive on the domain")
    base = ch.metric_at
    new = dataclasses.replace(
        ch.without_callbacks(), label=f"{ch.label}@conformal",
        metric_at=lambda P: np.asarray(factor(P))[:, None, None] * base(P),
        is_einstein=False, is_constant_scalar=False, is_homogeneous=False,
    )
    exact = ExactData(euler=entry.exact.euler)
    return ZooEntry(new.label, dict(entry.params, conformal=True), new, exact, grid=entry.grid)


# ---------------------------------------------------------------------------
# Labels
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return f"{x:g}"


def from_label(label: str) -> ZooEntry:
    """Build a zoo entry from its CLI label."""
    parts = label.strip().split(":")
    kind, opts, flags = parts[0], {}, set()
    for p in parts[1:]:
        if "=" in p:
            k, v = p.split("=", 1)
            opts[k] = v
        elif p:
            flags.add(p)
    try:
        if kind == "round-sphere":
            e = make_round_sphere(int(opts.pop("n")), float(opts.pop("r", 1.0)),
                                  chart=opts.pop("chart", "stereographic"))
            return _check_consumed(e, opts, flags)
        if kind == "s1xs":
            e = make_product_circle_sphere(int(opts.pop("n")), float(opts.pop("t")),
                                           normalize_volume="normalized" in flags,
                                           chart=opts.pop("chart", "stereographic"))
            flags.discard("normalized")
            return _check_consumed(e, opts, flags)
        if kind == "flat-torus":
            return _check_consumed(make_flat_torus(int(opts.pop("n"))), opts, flags)
        if kind == "fubini-study":
            return _check_consumed(make_fubini_study(), opts, flags)
        if kind == "perturbed-flat":
            return _check_consumed(make_perturbed_flat(int(opts.pop("n")), float(opts.pop("amp")),
                                                       int(opts.pop("seed"))), opts, flags)
    except KeyError as exc:
        raise ValueError(f"metric label {label!r} is missing parameter {exc.args[0]!r}") from None
    raise ValueError(f"unknown metric label {label!r}")


def _check_consumed(entry, opts, flags):
    if opts or flags:
        raise ValueError(f"unexpected label fields {sorted(opts) + sorted(flags)}")
    return entry


CATALOGUE = (
    "fubini-study",
    "flat-torus:n=4",
    "flat-torus:n=5",
    "perturbed-flat:n=4:amp=0.1:seed=42",
    "round-sphere:n=4:r=1",
    "round-sphere:n=5:r=1",
    "round-sphere:n=6:r=1",
    "s1xs:n=4:t=0.1:normalized",
    "s1xs:n=5:t=0.1:normalized",
    "s1xs:n=6:t=0.1:normalized",
    "s1xs:n=8:t=0.1:normalized:chart=polar",
)


def catalogue() -> list[ZooEntry]:
    return [from_label(lbl) for lbl in sorted(CATALOGUE)]
