"""Seeded random campaigns for pointwise curvature inequalities.

Each checker returns the ratio (left side) / (right side) for a batch of
inputs, so a value above 1 is a violation.  Degenerate inputs, where the
right side vanishes, give NaN and are counted as skipped.

Randomness: every campaign splits its trials into fixed-size chunks and
chunk ``c`` draws from ``PCG64(SeedSequence(seed, spawn_key=(c,)))``.  Results
are bit-identical for a given (config, numpy version) and the chunks could
be evaluated in any order or in parallel.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from . import tensor_core as tc

RNG_ALGORITHM = "numpy PCG64 seeded by SeedSequence(seed, spawn_key=(chunk,))"
DEFAULT_TOL = 1e-12
DISTRIBUTIONS = ("gaussian", "spiked")


class CampaignError(ValueError):
    """Invalid campaign configuration."""


def _safe_ratio(num: np.ndarray, den: np.ndarray, scale: np.ndarray) -> np.ndarray:
    num, den = np.asarray(num, float), np.asarray(den, float)
    ok = den > 1e-300 + 1e-14 * np.asarray(scale, float)
    out = np.full(np.broadcast(num, den).shape, np.nan)
    np.divide(num, den, out=out, where=ok)
    return out


def _require_trace_free(S: np.ndarray, rtol: float = 1e-10) -> None:
    tr = np.abs(np.trace(S, axis1=-2, axis2=-1))
    nrm = np.sqrt(np.sum(S * S, axis=(-2, -1)))
    if np.any(tr > rtol * np.maximum(nrm, 1e-300)):
        raise ValueError("matrix is not trace-free")


def _frob(T: np.ndarray, rank: int) -> np.ndarray:
    return np.sqrt(np.sum(T * T, axis=tuple(range(-rank, 0))))


# ---------------------------------------------------------------------------
# Checkers (identity metric, batched over leading axes)
# ---------------------------------------------------------------------------

def check_cubic_trace(T: np.ndarray) -> np.ndarray:
    """tr(T^3) / ((m-2)/sqrt(m(m-1)) |T|^3), signed."""
    T = np.asarray(T, float)
    _require_trace_free(T)
    m = T.shape[-1]
    nrm = _frob(T, 2)
    cube = np.einsum("...ij,...jk,...ki->...", T, T, T)
    return _safe_ratio(cube, (m - 2) / math.sqrt(m * (m - 1)) * nrm ** 3, nrm ** 3)


def check_eigen_bound(T: np.ndarray) -> np.ndarray:
    """largest eigenvalue / (sqrt((m-1)/m) |T|)."""
    T = np.asarray(T, float)
    _require_trace_free(T)
    m = T.shape[-1]
    nrm = _frob(T, 2)
    lam = np.linalg.eigvalsh(T)[..., -1]
    return _safe_ratio(lam, math.sqrt((m - 1) / m) * nrm, nrm)


def _weyl_ricci_pairing(W: np.ndarray, Ric0: np.ndarray) -> np.ndarray:
    # quadratic form vec(Ric0)^T W[(i k), (j l)] vec(Ric0)
    n = Ric0.shape[-1]
    Wx = np.swapaxes(W, -3, -2).reshape(W.shape[:-4] + (n * n, n * n))  # [(i k), (j l)]
    r = Ric0.reshape(Ric0.shape[:-2] + (n * n, 1))
    return (np.swapaxes(r, -1, -2) @ Wx @ r)[..., 0, 0]


def check_huisken(W: np.ndarray, Ric0: np.ndarray) -> np.ndarray:
    """|Ric0_ik Ric0_jl W_ijkl| / (sqrt((n-2)/(2(n-1))) |W| |Ric0|^2)."""
    W, Ric0 = np.asarray(W, float), np.asarray(Ric0, float)
    n = Ric0.shape[-1]
    w, r = _frob(W, 4), _frob(Ric0, 2)
    num = np.abs(_weyl_ricci_pairing(W, Ric0))
    return _safe_ratio(num, math.sqrt((n - 2) / (2 * (n - 1))) * w * r * r, w * r * r)


def check_weyl_ricci_cubic(W: np.ndarray, Ric0: np.ndarray, K: float) -> np.ndarray:
    """|-W_ijkl Ric0_ik Ric0_jl + K tr(Ric0^3)| over
    sqrt((n-2)/(2(n-1))) |Ric0|^2 (|W|^2 + 2(n-2)K^2/n |Ric0|^2)^(1/2).

    At K = n/(2(n-2)) the bracket becomes |W|^2 + n/(2(n-2)) |Ric0|^2.
    """
    W, Ric0 = np.asarray(W, float), np.asarray(Ric0, float)
    n = Ric0.shape[-1]
    w2, r2 = np.sum(W * W, axis=(-4, -3, -2, -1)), np.sum(Ric0 * Ric0, axis=(-2, -1))
    cube = np.einsum("...ij,...jk,...ki->...", Ric0, Ric0, Ric0)
    num = np.abs(-_weyl_ricci_pairing(W, Ric0) + K * cube)
    den = math.sqrt((n - 2) / (2 * (n - 1))) * r2 * np.sqrt(w2 + 2 * (n - 2) * K * K / n * r2)
    return _safe_ratio(num, den, r2 * np.sqrt(w2 + r2))


def _pair_matrix(T: np.ndarray) -> np.ndarray:
    # M[(i j), (k l)] = T_ijkl
    n = T.shape[-1]
    return T.reshape(T.shape[:-4] + (n * n, n * n))


def _cross_matrix(T: np.ndarray) -> np.ndarray:
    # Q[(i l), (j k)] = T_ijlk
    n = T.shape[-1]
    return np.swapaxes(T, -3, -2).reshape(T.shape[:-4] + (n * n, n * n))


def _trace_cube(M: np.ndarray) -> np.ndarray:
    return np.einsum("...ij,...ji->...", M @ M, M)


def rm0_cubic_contractions(Rm0: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(2 Rm0_ijlk Rm0_ihlm Rm0_hjmk + Rm0_ijkl Rm0_ijhm Rm0_hmkl / 2,
    Rm0_ijkl Rm0_ijkh Ric0_hl), with Ric0 the Ricci contraction of Rm0."""
    Rm0 = np.asarray(Rm0, float)
    first = 2.0 * _trace_cube(_cross_matrix(Rm0)) + 0.5 * _trace_cube(_pair_matrix(Rm0))
    Ric0 = tc.ricci(Rm0)
    # Rm0_ijkh Ric0_hl as a batched matmul over the last slot
    second = np.sum(Rm0 * (Rm0 @ Ric0[..., None, None, :, :]), axis=(-4, -3, -2, -1))
    return first, second


def check_contraction_bounds(Rm0: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Ratios of the two cubic contractions of a trace-adjusted curvature tensor
    to their bounds in terms of |Rm0| and |Ric0|."""
    Rm0 = np.asarray(Rm0, float)
    n = Rm0.shape[-1]
    first, second = rm0_cubic_contractions(Rm0)
    r = _frob(Rm0, 4)
    ric = _frob(tc.ricci(Rm0), 2)
    c1 = 2 * (n * n - 2) / (n * math.sqrt(n * n - 1)) + (n * n - n - 4) / (2 * math.sqrt((n - 2) * n * (n * n - 1)))
    ratio1 = _safe_ratio(np.abs(first), c1 * r ** 3, r ** 3)
    ratio2 = _safe_ratio(np.abs(second), math.sqrt((n - 1) / n) * ric * r * r, r ** 3)
    return ratio1, ratio2


def check_ric_rm_bound(Rm0: np.ndarray) -> np.ndarray:
    """|Ric0|^2 / ((n-2)/4 |Rm0|^2)."""
    Rm0 = np.asarray(Rm0, float)
    n = Rm0.shape[-1]
    r2 = np.sum(Rm0 * Rm0, axis=(-4, -3, -2, -1))
    ric = tc.ricci(Rm0)
    return _safe_ratio(np.sum(ric * ric, axis=(-2, -1)), (n - 2) / 4 * r2, r2)


# ---------------------------------------------------------------------------
# Samplers
# ---------------------------------------------------------------------------

def spiked_trace_free(rng: np.random.Generator, m: int, size: int) -> np.ndarray:
    """Trace-free matrices near the one-large-eigenvalue equality case.

    v v^T - I/m for a random unit v, plus Gaussian trace-free noise with a
    log-uniform scale between 1e-6 and 1.
    """
    v = rng.standard_normal((size, m))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    spike = v[:, :, None] * v[:, None, :] - np.eye(m) / m
    noise = tc.random_trace_free(rng, m, size)
    scale = 10.0 ** rng.uniform(-6, 0, size)
    return spike + scale[:, None, None] * noise / np.linalg.norm(noise, axis=(1, 2), keepdims=True)


def _ric0_sampler(rng, n, size, distribution):
    if distribution == "spiked":
        return spiked_trace_free(rng, n, size)
    return tc.random_trace_free(rng, n, size)


def random_weyl(rng: np.random.Generator, n: int, size: int) -> np.ndarray:
    """Weyl part of a Gaussian algebraic curvature tensor (sampled in a Weyl basis)."""
    return tc.random_curvature_part(rng, n, size, "weyl")


def random_trace_adjusted(rng: np.random.Generator, n: int, size: int) -> np.ndarray:
    """Gaussian algebraic curvature tensor minus its scalar part."""
    return tc.random_curvature_part(rng, n, size, "trace-adjusted")


def _spiked_rm0(rng, n, size):
    # Weyl part plus the Kulkarni-Nomizu term of a spiked trace-free Ricci
    ric0 = spiked_trace_free(rng, n, size)
    W = random_weyl(rng, n, size) * 10.0 ** rng.uniform(-4, 0, size)[:, None, None, None, None]
    return W + tc.kulkarni_nomizu(ric0, np.broadcast_to(np.eye(n), ric0.shape)) / (n - 2)


@dataclass(frozen=True)
class _Inequality:
    min_n: int
    draw: Callable          # (rng, n, size, distribution, K) -> dict of arrays
    evaluate: Callable      # (dict, K) -> ratios
    needs_K: bool = False


def _draw_matrix(rng, n, size, distribution, K):
    return {"T": _ric0_sampler(rng, n, size, distribution)}


def _draw_weyl_ricci(rng, n, size, distribution, K):
    return {"W": random_weyl(rng, n, size), "Ric0": _ric0_sampler(rng, n, size, distribution)}


def _draw_rm0(rng, n, size, distribution, K):
    if distribution == "spiked":
        return {"Rm0": _spiked_rm0(rng, n, size)}
    return {"Rm0": random_trace_adjusted(rng, n, size)}


INEQUALITIES: dict[str, _Inequality] = {
    "cubic-trace": _Inequality(2, _draw_matrix, lambda d, K: check_cubic_trace(d["T"])),
    "eigenvalue": _Inequality(2, _draw_matrix, lambda d, K: check_eigen_bound(d["T"])),
    "huisken": _Inequality(4, _draw_weyl_ricci, lambda d, K: check_huisken(d["W"], d["Ric0"])),
    "weyl-ricci-cubic": _Inequality(4, _draw_weyl_ricci,
                                    lambda d, K: check_weyl_ricci_cubic(d["W"], d["Ric0"], K), needs_K=True),
    "rm0-cubic": _Inequality(3, _draw_rm0, lambda d, K: check_contraction_bounds(d["Rm0"])[0]),
    "rm0-ricci-cubic": _Inequality(3, _draw_rm0, lambda d, K: check_contraction_bounds(d["Rm0"])[1]),
    "ricci-rm": _Inequality(3, _draw_rm0, lambda d, K: check_ric_rm_bound(d["Rm0"])),
}


def default_K(n: int) -> float:
    """The coefficient n/(2(n-2)) of the trace-free Ricci cube in the combined estimate."""
    return n / (2 * (n - 2))


# ---------------------------------------------------------------------------
# Campaigns
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CampaignConfig:
    inequality: str
    n: int
    trials: int
    seed: int
    distribution: str = "gaussian"
    K: float | None = None
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        if self.inequality not in INEQUALITIES:
            raise CampaignError(f"unknown inequality {self.inequality!r}; "
                                f"expected one of {', '.join(sorted(INEQUALITIES))}")
        ineq = INEQUALITIES[self.inequality]
        if isinstance(self.trials, bool) or int(self.trials) != self.trials or self.trials < 1:
            raise CampaignError("trials must be a positive integer")
        if self.n < ineq.min_n:
            raise CampaignError(f"{self.inequality} needs dimension >= {ineq.min_n}")
        if self.distribution not in DISTRIBUTIONS:
            raise CampaignError(f"distribution must be one of {DISTRIBUTIONS}")
        if not 0 <= self.seed < 2 ** 64:
            raise CampaignError("seed must be a non-negative 64-bit integer")
        if self.K is not None and not ineq.needs_K:
            raise CampaignError(f"{self.inequality} takes no K")

    @property
    def effective_K(self) -> float | None:
        if not INEQUALITIES[self.inequality].needs_K:
            return None
        return default_K(self.n) if self.K is None else float(self.K)

    @property
    def chunk_size(self) -> int:
        # fixed per (inequality, n) so results do not depend on hardware
        per_sample = self.n ** 4 if self.inequality not in ("cubic-trace", "eigenvalue") else self.n ** 2
        return int(max(64, min(20000, 2 ** 21 // per_sample)))


@dataclass
class SampleStats:
    inequality: str
    n: int
    trials: int
    seed: int
    distribution: str
    K: float | None
    tol: float
    evaluated: int
    skipped: int
    violations: int
    max_ratio: float
    witness: dict = field(default_factory=dict)
    rng: str = RNG_ALGORITHM

    def to_dict(self) -> dict:
        return asdict(self)


def _chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(chunk,))))


def evaluate_witness(inequality: str, witness: dict, K: float | None = None) -> float:
    """Re-evaluate a serialized witness (flat arrays plus shapes)."""
    ineq = INEQUALITIES[inequality]
    arrays = {k: np.asarray(v["data"], float).reshape(v["shape"])[None] for k, v in witness.items()}
    return float(ineq.evaluate(arrays, K)[0])


def run_campaign(cfg: CampaignConfig) -> SampleStats:
    ineq = INEQUALITIES[cfg.inequality]
    K = cfg.effective_K
    best, best_sample = -np.inf, None
    violations = skipped = 0
    chunk = cfg.chunk_size
    for c, start in enumerate(range(0, cfg.trials, chunk)):
        size = min(chunk, cfg.trials - start)
        rng = _chunk_rng(cfg.seed, c)
        data = ineq.draw(rng, cfg.n, size, cfg.distribution, K)
        ratios = ineq.evaluate(data, K)
        bad = np.isnan(ratios)
        skipped += int(bad.sum())
        violations += int(np.sum(ratios[~bad] > 1 + cfg.tol))
        if np.all(bad):
            continue
        i = int(np.nanargmax(ratios))
        if ratios[i] > best:
            best = float(ratios[i])
            best_sample = {k: v[i].copy() for k, v in data.items()}
    witness = {}
    max_ratio = float("nan")
    if best_sample is not None:
        witness = {k: {"shape": list(v.shape), "data": v.ravel().tolist()} for k, v in best_sample.items()}
        # the canonical value is the single-sample re-evaluation, so replay is exact
        max_ratio = evaluate_witness(cfg.inequality, witness, K)
    return SampleStats(cfg.inequality, cfg.n, cfg.trials, cfg.seed, cfg.distribution, K, cfg.tol,
                       cfg.trials - skipped, skipped, violations, max_ratio, witness)
