"""Dense linear algebra kernels.

Matrices and vectors are plain ``numpy`` arrays in float32.  Every routine
accumulates in float64 and rounds its public result back to float32.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, NumericError, ScaleError, ShapeError, ZeroMatrixError

DEFAULT_SVD_TOL = 1e-10
DEFAULT_SVD_MAX_ITERS = 10_000
ORACLE_MAX_DIM = 64
# Power iteration runs on (M^T M)^(2^GRAM_SQUARINGS): each step then gains the
# 16th power of the eigenvalue ratio for four extra matrix products up front.
GRAM_SQUARINGS = 4


def as_matrix(a, *, check_finite: bool = True) -> np.ndarray:
    m = np.ascontiguousarray(a, dtype=np.float32)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise ShapeError(f"expected a non-empty 2-D matrix, got shape {m.shape}")
    if check_finite and not np.all(np.isfinite(m)):
        raise ShapeError("matrix contains NaN or Inf")
    return m


def as_vector(a, *, check_finite: bool = True) -> np.ndarray:
    v = np.ascontiguousarray(a, dtype=np.float32)
    if v.ndim != 1 or v.shape[0] < 1:
        raise ShapeError(f"expected a non-empty 1-D vector, got shape {v.shape}")
    if check_finite and not np.all(np.isfinite(v)):
        raise ShapeError("vector contains NaN or Inf")
    return v


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Rank1Triple:
    """One singular triple ``sigma * outer(u, v)``; ``u`` and ``v`` are unit float32."""

    sigma: float
    u: np.ndarray
    v: np.ndarray

    def outer(self) -> np.ndarray:
        """Dense ``sigma * u v^T`` in float64."""
        return self.sigma * np.outer(self.u.astype(np.float64), self.v.astype(np.float64))


def matvec(m, x) -> np.ndarray:
    """``y = M x`` with a fixed float64 accumulation order.

    The reduction runs through ``ndarray.sum`` rather than BLAS so the result is
    bit-identical regardless of thread count.
    """
    m = np.asarray(m)
    x = np.asarray(x)
    if m.ndim != 2 or x.ndim != 1 or m.shape[1] != x.shape[0]:
        raise ShapeError(f"cannot multiply {m.shape} by {x.shape}")
    prod = m.astype(np.float64) * x.astype(np.float64)[None, :]
    return prod.sum(axis=1).astype(np.float32)


def frobenius_norm(m) -> float:
    a = np.asarray(m, dtype=np.float64)
    return float(np.sqrt(np.sum(a * a)))


def _canonical_sign(u: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # Largest-magnitude entry of u must be non-negative; first index wins ties.
    if u[int(np.argmax(np.abs(u)))] < 0:
        return -u, -v
    return u, v


def _triple_from_right_vector(a: np.ndarray, v: np.ndarray) -> Rank1Triple:
    u = a @ v
    sigma = float(np.linalg.norm(u))
    u = u / sigma
    u, v = _canonical_sign(u, v)
    if not sigma <= float(np.finfo(np.float32).max):
        raise NumericError(f"singular value {sigma:.6g} does not fit in float32")
    return Rank1Triple(
        sigma=float(np.float32(sigma)),
        u=_frozen(u.astype(np.float32)),
        v=_frozen(v.astype(np.float32)),
    )


def rank1_svd(
    m,
    tol: float = DEFAULT_SVD_TOL,
    max_iters: int = DEFAULT_SVD_MAX_ITERS,
    seed: int = 0,
) -> Rank1Triple:
    """Dominant singular triple by power iteration on ``H = (M^T M)^16``.

    The Gram matrix is squared four times (rescaled each time), so every
    iteration advances by the 16th power of the eigenvalue ratio.  Starting
    from a seeded Gaussian vector it iterates ``v <- H v / ||H v||`` until the
    eigen-residual ``||H v - nu v||`` with ``nu = v^T H v`` is at most
    ``tol * nu``.  That bounds the error in ``v`` by ``tol`` over the relative
    eigengap, and the Rayleigh quotient error by its square.  ``u`` is then
    ``M v / ||M v||`` and ``sigma = ||M v||``.

    Raises
    ------
    ZeroMatrixError
        If ``m`` has no nonzero entry.
    ConvergenceError
        If ``max_iters`` is exhausted; ``err.last`` holds the final iterate.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2 or a.size == 0:
        raise ShapeError(f"expected a non-empty 2-D matrix, got shape {a.shape}")
    if not np.any(a):
        raise ZeroMatrixError("rank1_svd of an all-zero matrix")

    rng = np.random.default_rng(seed)
    v = rng.standard_normal(a.shape[1])
    v /= math.sqrt(v @ v)
    h = a.T @ a
    for _ in range(GRAM_SQUARINGS):
        # renormalise so the dominant eigenvalue stays near 1 and nothing underflows
        h /= np.trace(h)
        h = h @ h
    for _ in range(max_iters):
        w = h @ v
        norm_w = math.sqrt(w @ w)
        if norm_w == 0.0:
            # start vector landed in the null space
            v = rng.standard_normal(a.shape[1])
            v /= math.sqrt(v @ v)
            continue
        nu = float(v @ w)
        r = w - nu * v
        v = w / norm_w
        if math.sqrt(r @ r) <= tol * nu:
            return _triple_from_right_vector(a, v)
    raise ConvergenceError(
        f"power iteration did not converge in {max_iters} iterations",
        last=_triple_from_right_vector(a, v),
        iterations=max_iters,
    )


def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    # n - 1 rounds of n / 2 disjoint pairs covering every pair once (n even)
    players = list(range(n))
    rounds = []
    for _ in range(n - 1):
        half = n // 2
        p = np.array(players[:half])
        q = np.array(players[half:][::-1])
        rounds.append((np.minimum(p, q), np.maximum(p, q)))
        players = [players[0], players[-1], *players[1:-1]]
    return rounds


def _jacobi_columns(a: np.ndarray, max_sweeps: int = 100):
    # One-sided (Hestenes) Jacobi: orthogonalise the columns of a, accumulating
    # the rotations in vmat so that a_in = a_out @ vmat.T.  Each round rotates
    # a set of disjoint column pairs at once.
    n_in = a.shape[1]
    if n_in % 2:
        a = np.hstack((a, np.zeros((a.shape[0], 1))))
    n = a.shape[1]
    vmat = np.eye(n)
    eps = np.finfo(np.float64).eps
    rounds = _round_robin(n) if n > 1 else []
    for _ in range(max_sweeps):
        rotated = False
        for p, q in rounds:
            ap = a[:, p]
            aq = a[:, q]
            alpha = np.einsum("ij,ij->j", ap, ap)
            beta = np.einsum("ij,ij->j", aq, aq)
            gamma = np.einsum("ij,ij->j", ap, aq)
            act = (gamma != 0.0) & (np.abs(gamma) > eps * np.sqrt(alpha * beta))
            if not act.any():
                continue
            rotated = True
            g = np.where(act, gamma, 1.0)
            zeta = (beta - alpha) / (2.0 * g)
            t = np.copysign(1.0, zeta) / (np.abs(zeta) + np.sqrt(1.0 + zeta * zeta))
            c = np.where(act, 1.0 / np.sqrt(1.0 + t * t), 1.0)
            s = np.where(act, c * t, 0.0)
            a[:, p], a[:, q] = c * ap - s * aq, s * ap + c * aq
            vp = vmat[:, p]
            vq = vmat[:, q]
            vmat[:, p], vmat[:, q] = c * vp - s * vq, s * vp + c * vq
        if not rotated:
            break
    return a[:, :n_in], vmat[:n_in, :n_in]


def full_svd_oracle(m) -> list[Rank1Triple]:
    """All nonzero singular triples by one-sided Jacobi, sigma descending.

    Test-scale only (both dimensions <= 64).  Shares no code path with
    :func:`rank1_svd`.
    """
    a = np.array(m, dtype=np.float64)
    if a.ndim != 2 or a.size == 0:
        raise ShapeError(f"expected a non-empty 2-D matrix, got shape {a.shape}")
    if a.shape[0] > ORACLE_MAX_DIM or a.shape[1] > ORACLE_MAX_DIM:
        raise ScaleError(f"oracle limited to {ORACLE_MAX_DIM}x{ORACLE_MAX_DIM}, got {a.shape}")
    transposed = a.shape[0] < a.shape[1]
    work = a.T.copy() if transposed else a
    cols, vmat = _jacobi_columns(work)
    sigmas = np.linalg.norm(cols, axis=0)
    scale = np.sqrt(np.sum(a * a))
    order = np.argsort(-sigmas, kind="stable")
    triples = []
    for j in order:
        s = sigmas[j]
        if s == 0.0 or s <= 1e-14 * scale:
            continue
        left = cols[:, j] / s
        right = vmat[:, j]
        u, v = (right, left) if transposed else (left, right)
        u, v = _canonical_sign(u, v)
        triples.append(
            Rank1Triple(
                sigma=float(np.float32(s)),
                u=_frozen(u.astype(np.float32)),
                v=_frozen(v.astype(np.float32)),
            )
        )
    return triples
