"""Batched central differences with optional Richardson extrapolation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

# offsets (in units of the step) and weights of the central first-derivative stencils
_STENCILS = {
    2: (np.array([-1.0, 1.0]), np.array([-0.5, 0.5])),
    4: (np.array([-2.0, -1.0, 1.0, 2.0]), np.array([1.0 / 12, -2.0 / 3, 2.0 / 3, -1.0 / 12])),
}


class StencilError(ValueError):
    """A stencil point falls outside the chart domain."""


@dataclass(frozen=True)
class FDConfig:
    step: float = 1e-2
    order: int = 4
    richardson: bool = False

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("FD step must be positive")
        if self.order not in _STENCILS:
            raise ValueError(f"FD order must be one of {sorted(_STENCILS)}")

    @property
    def reach(self) -> float:
        """Largest coordinate displacement of one derivative stencil."""
        return float(np.max(np.abs(_STENCILS[self.order][0]))) * self.step

    def halved(self) -> "FDConfig":
        return FDConfig(self.step / 2, self.order, self.richardson)


BatchFn = Callable[[np.ndarray], np.ndarray]


def partial(f: BatchFn, pts: np.ndarray, cfg: FDConfig,
            bounds: tuple[np.ndarray, np.ndarray] | None = None) -> np.ndarray:
    """All coordinate partials of a batched field.

    ``f`` maps points of shape ``(N, n)`` to values ``(N, *shape)``.  Returns
    ``(N, n, *shape)`` with ``out[:, k] = d f / d x_k``.  ``bounds`` gives the
    open box (lo, hi) stencil points must stay inside; infinite or periodic
    axes should carry +-inf.
    """
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    N, n = pts.shape
    offsets, weights = _STENCILS[cfg.order]
    steps = [cfg.step, cfg.step / 2] if cfg.richardson else [cfg.step]
    if bounds is not None:
        lo, hi = bounds
        reach = cfg.reach
        if np.any(pts - reach <= lo) or np.any(pts + reach >= hi):
            raise StencilError(f"stencil of reach {reach:g} leaves the chart domain")

    S = len(offsets)
    eye = np.eye(n)
    shifted = []
    for h in steps:
        # (N, n, S, n): point + h * offset_s * e_k
        shifted.append(pts[:, None, None, :] + h * offsets[None, None, :, None] * eye[None, :, None, :])
    stacked = np.concatenate([s.reshape(-1, n) for s in shifted], axis=0)
    vals = np.asarray(f(stacked))
    shape = vals.shape[1:]
    vals = vals.reshape((len(steps), N, n, S) + shape)
    derivs = [np.tensordot(vals[i], weights, axes=([2], [0])) / h for i, h in enumerate(steps)]
    if cfg.richardson:
        c = 2.0 ** cfg.order
        return (c * derivs[1] - derivs[0]) / (c - 1.0)
    return derivs[0]
