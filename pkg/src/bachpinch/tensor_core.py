"""Pointwise multilinear algebra for curvature-type tensors.

All functions accept numpy arrays with arbitrary leading batch axes; the
trailing axes carry the tensor indices.  A symmetric 2-tensor has shape
``(..., n, n)`` and an algebraic curvature tensor has shape
``(..., n, n, n, n)``.  When a metric ``g`` is omitted the identity is used.

Index convention for curvature tensors: ``T[i, j, k, l]`` with

    T_ijkl = T_klij = -T_jikl = -T_ijlk,   T_ijkl + T_iljk + T_iklj = 0,

Ricci contraction on the first and third slot (``Ric_jl = g^ik R_ijkl``)
and the unit round sphere having ``R_ijkl = g_ik g_jl - g_il g_jk``.
"""

from __future__ import annotations

from functools import lru_cache
from typing import NamedTuple

import numpy as np

EXACT_RTOL = 1e-12


class DimensionError(ValueError):
    """Tensor shapes do not agree."""


class NotPositiveDefinite(ValueError):
    """Metric failed its Cholesky factorization."""


class SymmetryError(ValueError):
    """Input lacks the symmetries an operation requires."""


# ---------------------------------------------------------------------------
# Validation helpers
# ---------------------------------------------------------------------------

def _dim(T: np.ndarray, rank: int) -> int:
    T = np.asarray(T)
    if T.ndim < rank:
        raise DimensionError(f"expected a rank-{rank} tensor, got shape {T.shape}")
    n = T.shape[-1]
    if any(s != n for s in T.shape[-rank:]):
        raise DimensionError(f"non-square tensor axes {T.shape[-rank:]}")
    return n


def _match(n: int, g: np.ndarray | None) -> None:
    if g is not None and np.shape(g)[-1] != n:
        raise DimensionError(f"metric dimension {np.shape(g)[-1]} != tensor dimension {n}")


def _scale(T: np.ndarray, rank: int) -> np.ndarray:
    """Max absolute entry per batch element (at least tiny) for relative checks."""
    axes = tuple(range(-rank, 0))
    return np.maximum(np.max(np.abs(T), axis=axes), np.finfo(float).tiny)


def symmetry_residual(T: np.ndarray) -> float:
    """Relative max-norm violation of the pair symmetry and both antisymmetries."""
    T = np.asarray(T)
    _dim(T, 4)
    r = np.maximum.reduce([
        np.max(np.abs(T + np.swapaxes(T, -4, -3)), axis=(-4, -3, -2, -1)),
        np.max(np.abs(T + np.swapaxes(T, -2, -1)), axis=(-4, -3, -2, -1)),
        np.max(np.abs(T - _pair_swap(T)), axis=(-4, -3, -2, -1)),
    ])
    return float(np.max(r / _scale(T, 4)))


def bianchi_residual(T: np.ndarray) -> float:
    """Relative max-norm of the cyclic sum T_ijkl + T_iljk + T_iklj."""
    T = np.asarray(T)
    _dim(T, 4)
    return float(np.max(np.max(np.abs(_cyclic(T)), axis=(-4, -3, -2, -1)) / _scale(T, 4)))


def is_alg_curv(T: np.ndarray, rtol: float = 1e-10) -> bool:
    return symmetry_residual(T) <= rtol and bianchi_residual(T) <= rtol


def check_sym2(S: np.ndarray, rtol: float = EXACT_RTOL) -> None:
    S = np.asarray(S)
    _dim(S, 2)
    if np.max(np.abs(S - np.swapaxes(S, -1, -2))) > rtol * np.max(_scale(S, 2)):
        raise SymmetryError("matrix is not symmetric")


def check_skew2(S: np.ndarray, rtol: float = EXACT_RTOL) -> None:
    S = np.asarray(S)
    _dim(S, 2)
    if np.max(np.abs(S + np.swapaxes(S, -1, -2))) > rtol * np.max(_scale(S, 2)):
        raise SymmetryError("matrix is not antisymmetric")


def _pair_swap(T: np.ndarray) -> np.ndarray:
    return np.moveaxis(T, (-4, -3), (-2, -1))


def _cyclic(T: np.ndarray) -> np.ndarray:
    # T_ijkl + T_iljk + T_iklj: cycle the last three slots
    return T + np.moveaxis(T, (-3, -2, -1), (-2, -1, -3)) + np.moveaxis(T, (-3, -2, -1), (-1, -3, -2))


def project_alg_curv(X: np.ndarray) -> np.ndarray:
    """Orthogonal projection of a rank-4 array onto algebraic curvature tensors.

    Averages over the symmetry group generated by the two antisymmetries and
    the pair swap, then removes the totally antisymmetric part so the first
    Bianchi identity holds.
    """
    X = np.asarray(X, dtype=float)
    _dim(X, 4)
    A = 0.5 * (X - np.swapaxes(X, -4, -3))
    A = 0.5 * (A - np.swapaxes(A, -2, -1))
    A = 0.5 * (A + _pair_swap(A))
    return A - _cyclic(A) / 3.0


def random_alg_curv(rng: np.random.Generator, n: int, size: int | tuple = ()) -> np.ndarray:
    """Gaussian entries projected onto the algebraic curvature tensors."""
    size = (size,) if isinstance(size, int) else tuple(size)
    return project_alg_curv(rng.standard_normal(size + (n, n, n, n)))


def random_trace_free(rng: np.random.Generator, n: int, size: int | tuple = ()) -> np.ndarray:
    size = (size,) if isinstance(size, int) else tuple(size)
    S = rng.standard_normal(size + (n, n))
    return trace_free(0.5 * (S + np.swapaxes(S, -1, -2)))


# Orthonormal bases of curvature subspaces.  A tensor with the pair and
# antisymmetry symmetries is determined by its entries T_ijkl with i < j,
# k < l and (i, j) <= (k, l); bases are stored in those coordinates and the
# full array is recovered by a signed gather.

SUBSPACES = ("full", "weyl", "trace-adjusted")


@lru_cache(maxsize=None)
def _pair_coordinates(n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    P = len(pairs)
    slots = [(a, b) for a in range(P) for b in range(a, P)]
    slot_of = {ab: s for s, ab in enumerate(slots)}
    zero = len(slots)
    pos = np.full((n, n, n, n), zero, dtype=np.intp)
    sign = np.zeros((n, n, n, n))
    pair_index = {}
    for a, (i, j) in enumerate(pairs):
        pair_index[i, j] = (a, 1.0)
        pair_index[j, i] = (a, -1.0)
    for (i, j), (a, sa) in pair_index.items():
        for (k, l), (b, sb) in pair_index.items():
            pos[i, j, k, l] = slot_of[min(a, b), max(a, b)]
            sign[i, j, k, l] = sa * sb
    rep = np.array([np.ravel_multi_index(pairs[a] + pairs[b], (n,) * 4) for a, b in slots])
    return pos.ravel(), sign.ravel(), rep


def _from_pair_coordinates(c: np.ndarray, n: int) -> np.ndarray:
    pos, sign, _ = _pair_coordinates(n)
    padded = np.concatenate([c, np.zeros(c.shape[:-1] + (1,))], axis=-1)
    out = np.take(padded, pos, axis=-1) * sign
    return np.ascontiguousarray(out).reshape(c.shape[:-1] + (n, n, n, n))


@lru_cache(maxsize=None)
def curvature_basis(n: int, part: str = "full") -> np.ndarray:
    """Orthonormal basis (Frobenius norm) of a curvature subspace, in pair coordinates.

    ``part`` is ``"full"`` (all algebraic curvature tensors), ``"weyl"``
    (totally trace-free ones) or ``"trace-adjusted"`` (those with vanishing
    scalar contraction).  Returns an array of shape (dim, coordinates).
    """
    if part not in SUBSPACES:
        raise ValueError(f"part must be one of {SUBSPACES}")
    D = len(_pair_coordinates(n)[2])
    T = project_alg_curv(_from_pair_coordinates(np.eye(D), n))
    if part != "full":
        d = decompose(T, check=False)
        T = d.W if part == "weyl" else d.Rm0
    flat = T.reshape(D, -1)
    u, s, vt = np.linalg.svd(flat, full_matrices=False)
    basis = vt[s > 1e-8]  # unit-scale generators, so an absolute cut is safe
    return basis[:, _pair_coordinates(n)[2]]


def random_curvature_part(rng: np.random.Generator, n: int, size: int | tuple = (),
                          part: str = "full") -> np.ndarray:
    """Isotropic Gaussian on a curvature subspace.

    Equal in distribution to projecting a Gaussian rank-4 array onto the
    subspace, at a fraction of the cost for large n.
    """
    size = (size,) if isinstance(size, int) else tuple(size)
    B = curvature_basis(n, part)
    z = rng.standard_normal(size + (B.shape[0],))
    return _from_pair_coordinates(z @ B, n)


# ---------------------------------------------------------------------------
# Metric contractions
# ---------------------------------------------------------------------------

def orthonormal_frame(g: np.ndarray) -> np.ndarray:
    """Matrix E with E^T g E = I, from the Cholesky factor of g."""
    try:
        L = np.linalg.cholesky(np.asarray(g, dtype=float))
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite("metric is not positive definite") from exc
    return np.swapaxes(np.linalg.inv(L), -1, -2)


_LETTERS = "abcdefgh"


def to_frame(T: np.ndarray, g: np.ndarray | None, rank: int | None = None) -> np.ndarray:
    """Components of an all-lower tensor in a g-orthonormal frame."""
    T = np.asarray(T, dtype=float)
    if g is None:
        return T
    rank = T.ndim - (np.ndim(g) - 2) if rank is None else rank
    n = _dim(T, rank)
    _match(n, g)
    E = orthonormal_frame(g)
    for s in range(rank):
        idx = _LETTERS[:rank]
        out = idx[:s] + "z" + idx[s + 1:]
        T = np.einsum(f"...{idx[s]}z,...{idx}->...{out}", E, T)
    return T


def from_frame(T: np.ndarray, g: np.ndarray, rank: int) -> np.ndarray:
    """Inverse of :func:`to_frame`: coordinate components from frame components."""
    L = np.linalg.cholesky(np.asarray(g, dtype=float))
    for s in range(rank):
        idx = _LETTERS[:rank]
        out = idx[:s] + "z" + idx[s + 1:]
        T = np.einsum(f"...z{idx[s]},...{idx}->...{out}", L, T)
    return T


def inner(A: np.ndarray, B: np.ndarray, g: np.ndarray | None = None, rank: int | None = None) -> np.ndarray:
    """Metric inner product g^{..}g^{..}... A B over all tensor slots."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape != B.shape:
        raise DimensionError(f"shape mismatch {A.shape} vs {B.shape}")
    if rank is None:
        rank = A.ndim if g is None else A.ndim - (np.ndim(g) - 2)
    _dim(A, rank)
    _match(A.shape[-1], g)
    if g is not None and rank == 2:
        gi = np.linalg.inv(g)
        return np.sum((gi @ A @ gi) * B, axis=(-2, -1))
    if g is not None:
        A = to_frame(A, g, rank)
        B = to_frame(B, g, rank)
    return np.sum(A * B, axis=tuple(range(-rank, 0)))


def norm_sq(T: np.ndarray, g: np.ndarray | None = None, rank: int | None = None) -> np.ndarray:
    """|T|^2 with every index raised by g (identity when g is None)."""
    return inner(T, T, g, rank)


def trace(S: np.ndarray, g: np.ndarray | None = None) -> np.ndarray:
    S = np.asarray(S, dtype=float)
    _dim(S, 2)
    if g is None:
        return np.trace(S, axis1=-2, axis2=-1)
    _match(S.shape[-1], g)
    return np.einsum("...ij,...ij->...", np.linalg.inv(g), S)


def trace_free(S: np.ndarray, g: np.ndarray | None = None) -> np.ndarray:
    """S - (tr_g S / n) g."""
    S = np.asarray(S, dtype=float)
    n = _dim(S, 2)
    G = np.eye(n) if g is None else np.asarray(g, dtype=float)
    return S - (trace(S, g) / n)[..., None, None] * G


def sym_square(S: np.ndarray) -> np.ndarray:
    """(S^2)_ik = S_ip S_kp with identity metric."""
    return np.einsum("...ip,...kp->...ik", S, S)


# ---------------------------------------------------------------------------
# Kulkarni-Nomizu product and decomposition
# ---------------------------------------------------------------------------

def kulkarni_nomizu(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """(A o B)_ijkl = A_ik B_jl - A_il B_jk + A_jl B_ik - A_jk B_il."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    n = _dim(A, 2)
    if _dim(B, 2) != n:
        raise DimensionError("Kulkarni-Nomizu factors differ in dimension")
    AB = np.einsum("...ik,...jl->...ijkl", A, B)
    BA = np.einsum("...ik,...jl->...ijkl", B, A)
    # A_il B_jk is AB with k and l exchanged
    return AB - np.swapaxes(AB, -1, -2) + BA - np.swapaxes(BA, -1, -2)


def ricci(Rm: np.ndarray, g: np.ndarray | None = None) -> np.ndarray:
    """Ric_jl = g^ik R_ijkl."""
    Rm = np.asarray(Rm, dtype=float)
    n = _dim(Rm, 4)
    _match(n, g)
    if g is None:
        return np.einsum("...ijil->...jl", Rm)
    return np.einsum("...ik,...ijkl->...jl", np.linalg.inv(g), Rm)


def scalar_curvature(Rm: np.ndarray, g: np.ndarray | None = None) -> np.ndarray:
    return trace(ricci(Rm, g), g)


class Decomposition(NamedTuple):
    W: np.ndarray
    V: np.ndarray
    U: np.ndarray
    Ric: np.ndarray
    R: np.ndarray
    Ric0: np.ndarray
    Rm0: np.ndarray


def decompose(Rm: np.ndarray, g: np.ndarray | None = None, check: bool = True) -> Decomposition:
    """Split Rm = W + V + U into Weyl, trace-free Ricci and scalar parts."""
    Rm = np.asarray(Rm, dtype=float)
    n = _dim(Rm, 4)
    if n < 3:
        raise DimensionError("decomposition needs n >= 3")
    _match(n, g)
    if check and not is_alg_curv(Rm):
        raise SymmetryError("input does not have algebraic curvature symmetries")
    G = np.broadcast_to(np.eye(n), Rm.shape[:-4] + (n, n)) if g is None else np.asarray(g, dtype=float)
    Ric = ricci(Rm, g)
    R = trace(Ric, g)
    Ric0 = Ric - (R / n)[..., None, None] * G
    gg = kulkarni_nomizu(G, G)
    U = (R / (2.0 * n * (n - 1)))[..., None, None, None, None] * gg
    V = kulkarni_nomizu(Ric0, G) / (n - 2)
    W = Rm - V - U
    return Decomposition(W=W, V=V, U=U, Ric=Ric, R=R, Ric0=Ric0, Rm0=Rm - U)


def weyl(Rm: np.ndarray, g: np.ndarray | None = None) -> np.ndarray:
    return decompose(Rm, g, check=False).W


def from_parts(W: np.ndarray, Ric0: np.ndarray, R, g: np.ndarray | None = None) -> np.ndarray:
    """Assemble Rm from a Weyl part, a trace-free Ricci tensor and a scalar."""
    n = _dim(W, 4)
    G = np.eye(n) if g is None else np.asarray(g, dtype=float)
    R = np.asarray(R, dtype=float)
    return (W + kulkarni_nomizu(Ric0, G) / (n - 2)
            + (R / (2.0 * n * (n - 1)))[..., None, None, None, None] * kulkarni_nomizu(G, G))


# ---------------------------------------------------------------------------
# Curvature operators
# ---------------------------------------------------------------------------

def act_on_two_forms(T: np.ndarray, omega: np.ndarray) -> np.ndarray:
    """(T omega)_kl = T_ijkl omega_ij."""
    n = _dim(T, 4)
    if _dim(omega, 2) != n:
        raise DimensionError("operator and two-form differ in dimension")
    return np.einsum("...ijkl,...ij->...kl", T, omega)


def act_on_two_tensors(T: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """(T theta)_kl = T_kilj theta_ij."""
    n = _dim(T, 4)
    if _dim(theta, 2) != n:
        raise DimensionError("operator and two-tensor differ in dimension")
    return np.einsum("...kilj,...ij->...kl", T, theta)


# ---------------------------------------------------------------------------
# Square of a trace-free Ricci tensor
# ---------------------------------------------------------------------------

class KNSquareParts(NamedTuple):
    T: np.ndarray
    Vp: np.ndarray
    Up: np.ndarray


def kn_square_decompose(Ric0: np.ndarray, rtol: float = 1e-10) -> KNSquareParts:
    """Orthogonal split of Ric0 o Ric0 (identity metric) into T + V' + U'.

    ``T`` is totally trace-free; ``V'`` and ``U'`` are built from ``Ric0^2``
    and ``|Ric0|^2`` in closed form.
    """
    S = np.asarray(Ric0, dtype=float)
    n = _dim(S, 2)
    tr = np.trace(S, axis1=-2, axis2=-1)
    if np.any(np.abs(tr) > rtol * np.maximum(np.sqrt(norm_sq(S, rank=2)), 1.0)):
        raise SymmetryError("Ric0 must be trace-free")
    I = np.broadcast_to(np.eye(n), S.shape)
    gg = kulkarni_nomizu(I, I)
    sq = norm_sq(S, rank=2)[..., None, None, None, None]
    Vp = -2.0 / (n - 2) * kulkarni_nomizu(sym_square(S), I) + 2.0 / (n * (n - 2)) * sq * gg
    Up = -1.0 / (n * (n - 1)) * sq * gg
    return KNSquareParts(T=kulkarni_nomizu(S, S) - Vp - Up, Vp=Vp, Up=Up)
