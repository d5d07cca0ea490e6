"""Iterative rank-1 + pruning approximation of augmented gate matrices.

Each gate matrix ``W`` (R x C) is replaced by a prefix-summable list of terms
``sigma_k * u_k * (f_k * v_k)^T`` where ``f_k`` keeps the ``nz`` largest
magnitude entries of ``v_k``.  Term 0 approximates ``W``; every later term
approximates the running error ``W - sum(previous terms)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ConvergenceError, RangeError, ShapeError, ZeroMatrixError
from .linalg import (
    DEFAULT_SVD_MAX_ITERS,
    DEFAULT_SVD_TOL,
    as_matrix,
    as_vector,
    frobenius_norm,
    rank1_svd,
)

# Float32 storage of (sigma, u, v) perturbs each term by ~1e-7 relative, so a
# residual below this fraction of ||W|| carries no further information.
CONVERGED_RTOL = 1e-6


@dataclass(frozen=True)
class ApproxConfig:
    nz: int
    n_steps: int
    svd_tol: float = DEFAULT_SVD_TOL
    svd_max_iters: int = DEFAULT_SVD_MAX_ITERS
    seed: int = 0
    converged_rtol: float = CONVERGED_RTOL

    def __post_init__(self):
        if self.nz < 1:
            raise ConfigError(f"nz must be >= 1, got {self.nz}")
        if self.n_steps < 1:
            raise ConfigError(f"n_steps must be >= 1, got {self.n_steps}")
        if self.svd_tol <= 0 or self.svd_max_iters < 1:
            raise ConfigError("svd_tol must be > 0 and svd_max_iters >= 1")

    def check_cols(self, cols: int) -> None:
        if self.nz > cols:
            raise ConfigError(f"nz={self.nz} exceeds matrix width {cols}")


@dataclass(frozen=True)
class SparseMaskedVector:
    """Non-zero part of ``f * v``: ascending ``indices`` with float32 ``values``."""

    full_len: int
    indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.indices)
        if idx.ndim != 1 or idx.shape != np.shape(self.values):
            raise ShapeError("indices and values must be equal-length 1-D arrays")
        if idx.size and (idx[0] < 0 or idx[-1] >= self.full_len or np.any(np.diff(idx) <= 0)):
            raise ShapeError("indices must be strictly increasing and inside [0, full_len)")

    @property
    def nnz(self) -> int:
        return int(self.indices.shape[0])

    def dense(self) -> np.ndarray:
        out = np.zeros(self.full_len, dtype=np.float32)
        out[self.indices] = self.values
        return out

    def dot(self, x: np.ndarray) -> float:
        return float(np.dot(self.values.astype(np.float64), np.asarray(x, dtype=np.float64)[self.indices]))


@dataclass(frozen=True)
class RefinementTerm:
    sigma: float
    u: np.ndarray
    v_masked: SparseMaskedVector

    def dense64(self) -> np.ndarray:
        """``sigma * u * (f * v)^T`` as a float64 R x C matrix."""
        v = np.zeros(self.v_masked.full_len)
        v[self.v_masked.indices] = self.v_masked.values
        return self.sigma * np.outer(self.u.astype(np.float64), v)


@dataclass(frozen=True)
class GateFactors:
    rows: int
    cols: int
    nz: int
    terms: tuple[RefinementTerm, ...]
    exactly_converged: bool = field(default=False, compare=False)

    def __post_init__(self):
        for t in self.terms:
            if t.u.shape != (self.rows,) or t.v_masked.full_len != self.cols:
                raise ShapeError("refinement term does not match gate shape")
            if t.v_masked.nnz != self.nz:
                raise ShapeError(f"term keeps {t.v_masked.nnz} entries, expected nz={self.nz}")

    @property
    def n_terms(self) -> int:
        return len(self.terms)

    def check_upto(self, upto: int) -> None:
        if not 1 <= upto <= len(self.terms):
            raise RangeError(f"upto={upto} outside [1, {len(self.terms)}]")


def build_augmented(wx, wh) -> np.ndarray:
    """Concatenate input and recurrent weights into one R x (Rx + R) gate matrix."""
    wx = as_matrix(wx)
    wh = as_matrix(wh)
    if wh.shape[0] != wh.shape[1]:
        raise ShapeError(f"recurrent matrix must be square, got {wh.shape}")
    if wx.shape[0] != wh.shape[0]:
        raise ShapeError(f"row mismatch: {wx.shape} vs {wh.shape}")
    return np.ascontiguousarray(np.hstack((wx, wh)))


def build_augmented_input(x, h_prev, input_size: int | None = None, hidden_size: int | None = None) -> np.ndarray:
    x = as_vector(x)
    h_prev = as_vector(h_prev)
    if input_size is not None and x.shape[0] != input_size:
        raise ShapeError(f"input has length {x.shape[0]}, expected {input_size}")
    if hidden_size is not None and h_prev.shape[0] != hidden_size:
        raise ShapeError(f"hidden state has length {h_prev.shape[0]}, expected {hidden_size}")
    return np.concatenate((x, h_prev))


def prune_topk(v, nz: int) -> np.ndarray:
    """Indices of the ``nz`` largest ``|v|`` entries, ascending.

    Ties on magnitude go to the lower index.
    """
    v = np.asarray(v)
    if v.ndim != 1:
        raise ShapeError("prune_topk expects a 1-D vector")
    if not 1 <= nz <= v.shape[0]:
        raise ConfigError(f"nz={nz} outside [1, {v.shape[0]}]")
    # stable sort on -|v| keeps the lower index first among equal magnitudes
    order = np.argsort(-np.abs(v.astype(np.float64)), kind="stable")
    return np.sort(order[:nz])


def _pruned_term(e: np.ndarray, cfg: ApproxConfig, k: int) -> RefinementTerm:
    try:
        triple = rank1_svd(e, tol=cfg.svd_tol, max_iters=cfg.svd_max_iters, seed=cfg.seed + k)
    except ConvergenceError as exc:
        # Near-tied top singular values stall the Rayleigh quotient, but the
        # last iterate already lies in the dominant subspace, and u = Ev/|Ev|
        # still removes sigma^2 |f*v|^2 from the residual to first order.
        triple = exc.last
    idx = prune_topk(triple.v, cfg.nz)
    vals = triple.v[idx].copy()
    idx = idx.astype(np.int64)
    idx.setflags(write=False)
    vals.setflags(write=False)
    return RefinementTerm(
        sigma=triple.sigma,
        u=triple.u,
        v_masked=SparseMaskedVector(full_len=e.shape[1], indices=idx, values=vals),
    )


def decompose(w, cfg: ApproxConfig) -> GateFactors:
    """Run the iterative pruned rank-1 refinement on one gate matrix.

    Produces ``cfg.n_steps`` terms unless the residual falls below
    ``cfg.converged_rtol * ||W||_F`` first; the result then holds fewer terms
    and ``exactly_converged`` is set.
    """
    w = as_matrix(w)
    cfg.check_cols(w.shape[1])
    w_norm = frobenius_norm(w)
    if w_norm == 0.0:
        raise ZeroMatrixError("cannot decompose an all-zero matrix")
    err = w.astype(np.float64)
    terms: list[RefinementTerm] = []
    converged = False
    for k in range(cfg.n_steps):
        if np.sqrt(np.sum(err * err)) <= cfg.converged_rtol * w_norm:
            converged = True
            break
        term = _pruned_term(err, cfg, k)
        terms.append(term)
        # the residual is tracked against the float32-rounded term actually stored
        err -= term.dense64()
    else:
        converged = bool(np.sqrt(np.sum(err * err)) <= cfg.converged_rtol * w_norm)
    return GateFactors(
        rows=w.shape[0],
        cols=w.shape[1],
        nz=cfg.nz,
        terms=tuple(terms),
        exactly_converged=converged,
    )


def _reconstruct64(f: GateFactors, upto: int) -> np.ndarray:
    f.check_upto(upto)
    out = np.zeros((f.rows, f.cols))
    for t in f.terms[:upto]:
        out += t.dense64()
    return out


def reconstruct(f: GateFactors, upto: int) -> np.ndarray:
    """Dense float32 sum of the first ``upto`` terms."""
    return _reconstruct64(f, upto).astype(np.float32)


def approximation_error(w, f: GateFactors, upto: int) -> float:
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (f.rows, f.cols):
        raise ShapeError(f"matrix {w.shape} does not match factors ({f.rows}, {f.cols})")
    diff = w - _reconstruct64(f, upto)
    return float(np.sqrt(np.sum(diff * diff)))


def error_profile(w, f: GateFactors) -> np.ndarray:
    """``approximation_error`` for every prefix length 1..n_terms in one pass."""
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (f.rows, f.cols):
        raise ShapeError(f"matrix {w.shape} does not match factors ({f.rows}, {f.cols})")
    diff = w.copy()
    out = np.empty(f.n_terms)
    for k, t in enumerate(f.terms):
        diff -= t.dense64()
        out[k] = np.sqrt(np.sum(diff * diff))
    return out
