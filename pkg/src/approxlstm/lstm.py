"""Dense and factored LSTM cells, sequence running and greedy decoding.

Gate order everywhere is ``(input, forget, output, cell)``.  The hidden output
follows the captioning-LSTM variant ``h = c * o`` unless the model sets
``tanh_output`` to use the textbook ``h = o * tanh(c)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .approx import (
    ApproxConfig,
    GateFactors,
    RefinementTerm,
    SparseMaskedVector,
    build_augmented,
    decompose,
)
from .errors import ConfigError, RangeError, ShapeError
from .linalg import as_matrix, as_vector, matvec

GATES = ("input", "forget", "output", "cell")
END_TOKEN = 0
SIGMOID_CLAMP = 30.0


def sigmoid(x) -> np.ndarray:
    """Logistic function, pinned to exactly 0 or 1 once ``|x| >= 30``."""
    xd = np.asarray(x, dtype=np.float64)
    out = 1.0 / (1.0 + np.exp(-np.clip(xd, -SIGMOID_CLAMP, SIGMOID_CLAMP)))
    out = np.where(xd >= SIGMOID_CLAMP, 1.0, np.where(xd <= -SIGMOID_CLAMP, 0.0, out))
    return out.astype(np.float32)


def tanh(x) -> np.ndarray:
    return np.tanh(np.asarray(x, dtype=np.float64)).astype(np.float32)


@dataclass(frozen=True)
class LstmState:
    h: np.ndarray
    c: np.ndarray

    @classmethod
    def zeros(cls, hidden_size: int) -> "LstmState":
        return cls(np.zeros(hidden_size, dtype=np.float32), np.zeros(hidden_size, dtype=np.float32))


@dataclass(frozen=True)
class LstmModel:
    input_size: int
    hidden_size: int
    gates: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]
    tanh_output: bool = False

    def __post_init__(self):
        if len(self.gates) != 4:
            raise ShapeError(f"expected 4 gate matrices, got {len(self.gates)}")
        shape = (self.hidden_size, self.input_size + self.hidden_size)
        gates = tuple(as_matrix(g) for g in self.gates)
        for name, g in zip(GATES, gates):
            if g.shape != shape:
                raise ShapeError(f"{name} gate has shape {g.shape}, expected {shape}")
        object.__setattr__(self, "gates", gates)

    @property
    def cols(self) -> int:
        return self.input_size + self.hidden_size

    @classmethod
    def from_split(cls, wx: Sequence, wh: Sequence, tanh_output: bool = False) -> "LstmModel":
        """Build from per-gate input (R x Rx) and recurrent (R x R) matrices."""
        gates = tuple(build_augmented(a, b) for a, b in zip(wx, wh))
        r, c = gates[0].shape
        return cls(c - r, r, gates, tanh_output)


@dataclass(frozen=True)
class ApproxLstmModel:
    input_size: int
    hidden_size: int
    gates: tuple[GateFactors, GateFactors, GateFactors, GateFactors]
    tanh_output: bool = False

    def __post_init__(self):
        if len(self.gates) != 4:
            raise ShapeError(f"expected 4 gate factor sets, got {len(self.gates)}")
        first = self.gates[0]
        if first.rows != self.hidden_size or first.cols != self.input_size + self.hidden_size:
            raise ShapeError("gate factors do not match model dimensions")
        for g in self.gates[1:]:
            if (g.rows, g.cols, g.nz, g.n_terms) != (first.rows, first.cols, first.nz, first.n_terms):
                raise ShapeError("all four gates must share shape, nz and term count")

    @property
    def n_terms(self) -> int:
        return self.gates[0].n_terms

    @property
    def nz(self) -> int:
        return self.gates[0].nz


def _zero_term(rows: int, cols: int, nz: int) -> RefinementTerm:
    u = np.zeros(rows, dtype=np.float32)
    u[0] = 1.0
    return RefinementTerm(
        sigma=0.0,
        u=u,
        v_masked=SparseMaskedVector(cols, np.arange(nz, dtype=np.int64), np.zeros(nz, dtype=np.float32)),
    )


def approximate_model(m: LstmModel, cfg: ApproxConfig) -> ApproxLstmModel:
    """Decompose all four gates with one shared config.

    A gate whose residual vanishes early is padded with zero-weight terms so
    every gate exposes the same number of prefix steps.
    """
    factors = [decompose(g, cfg) for g in m.gates]
    n = max(f.n_terms for f in factors)
    padded = []
    for f in factors:
        if f.n_terms < n:
            pad = tuple(_zero_term(f.rows, f.cols, f.nz) for _ in range(n - f.n_terms))
            f = GateFactors(f.rows, f.cols, f.nz, f.terms + pad, f.exactly_converged)
        padded.append(f)
    return ApproxLstmModel(m.input_size, m.hidden_size, tuple(padded), m.tanh_output)


def gate_preactivation_factored(g: GateFactors, x_aug, upto: int) -> np.ndarray:
    """Sum of the first ``upto`` terms applied to ``x_aug``.

    Per term the sparse dot product is reduced to a scalar first, scaled by
    sigma, then spread along ``u``.
    """
    x_aug = np.asarray(x_aug)
    if x_aug.shape != (g.cols,):
        raise ShapeError(f"augmented input has shape {x_aug.shape}, expected ({g.cols},)")
    g.check_upto(upto)
    acc = np.zeros(g.rows)
    for t in g.terms[:upto]:
        scalar = t.sigma * t.v_masked.dot(x_aug)
        acc += scalar * t.u.astype(np.float64)
    return acc.astype(np.float32)


def _cell_update(pre: Sequence[np.ndarray], s: LstmState, tanh_output: bool) -> LstmState:
    i = sigmoid(pre[0]).astype(np.float64)
    f = sigmoid(pre[1]).astype(np.float64)
    o = sigmoid(pre[2]).astype(np.float64)
    g = tanh(pre[3]).astype(np.float64)
    c = (f * s.c.astype(np.float64) + i * g).astype(np.float32)
    if tanh_output:
        h = (o * np.tanh(c.astype(np.float64))).astype(np.float32)
    else:
        h = (c.astype(np.float64) * o).astype(np.float32)
    return LstmState(h, c)


def _augmented_input(input_size: int, hidden_size: int, x, s: LstmState) -> np.ndarray:
    x = as_vector(x)
    if x.shape[0] != input_size:
        raise ShapeError(f"input has length {x.shape[0]}, expected {input_size}")
    if s.h.shape != (hidden_size,) or s.c.shape != (hidden_size,):
        raise ShapeError("state does not match hidden size")
    return np.concatenate((x, s.h.astype(np.float32)))


def lstm_step_dense(m: LstmModel, x, s: LstmState) -> LstmState:
    x_aug = _augmented_input(m.input_size, m.hidden_size, x, s)
    return _cell_update([matvec(w, x_aug) for w in m.gates], s, m.tanh_output)


def lstm_step_approx(m: ApproxLstmModel, x, s: LstmState, upto: int | None = None) -> LstmState:
    upto = m.n_terms if upto is None else upto
    x_aug = _augmented_input(m.input_size, m.hidden_size, x, s)
    return _cell_update([gate_preactivation_factored(g, x_aug, upto) for g in m.gates], s, m.tanh_output)


def lstm_step_partial(m: LstmModel, x, s: LstmState, rows_done: int) -> LstmState:
    """Dense step where only the first ``rows_done`` gate rows have been computed.

    Rows not yet reached by a row-tiled matrix-vector unit keep a zero
    pre-activation, which is what an early read of the output buffers sees.
    """
    if not 0 <= rows_done <= m.hidden_size:
        raise RangeError(f"rows_done={rows_done} outside [0, {m.hidden_size}]")
    x_aug = _augmented_input(m.input_size, m.hidden_size, x, s)
    pre = []
    for w in m.gates:
        p = np.zeros(m.hidden_size, dtype=np.float32)
        if rows_done:
            p[:rows_done] = matvec(w[:rows_done], x_aug)
        pre.append(p)
    return _cell_update(pre, s, m.tanh_output)


def step_function(m, upto: int | None = None, rows_done: int | None = None) -> Callable:
    """Bind a model (dense or factored) and its fidelity knob into ``step(x, s)``."""
    if isinstance(m, ApproxLstmModel):
        if rows_done is not None:
            raise ConfigError("rows_done applies to dense models only")
        return lambda x, s: lstm_step_approx(m, x, s, upto)
    if isinstance(m, LstmModel):
        if upto is not None:
            raise ConfigError("upto applies to factored models only")
        if rows_done is not None:
            return lambda x, s: lstm_step_partial(m, x, s, rows_done)
        return lambda x, s: lstm_step_dense(m, x, s)
    raise TypeError(f"not an LSTM model: {type(m).__name__}")


def run_sequence(step_fn: Callable, inputs: Sequence, s0: LstmState) -> list[LstmState]:
    states = []
    s = s0
    for x in inputs:
        s = step_fn(x, s)
        states.append(s)
    return states


def greedy_decode(
    m,
    embed,
    proj,
    start_token: int,
    max_len: int,
    upto: int | None = None,
    state: LstmState | None = None,
    rows_done: int | None = None,
) -> list[int]:
    """Feed tokens back through the cell, picking ``argmax(proj @ h)`` each step.

    Stops before emitting the end token (id 0) or after ``max_len`` tokens.
    ``state`` seeds the recurrence, e.g. with the result of a conditioning
    prefix.
    """
    embed = as_matrix(embed)
    proj = as_matrix(proj)
    vocab = embed.shape[0]
    if proj.shape != (vocab, m.hidden_size):
        raise ShapeError(f"projection has shape {proj.shape}, expected ({vocab}, {m.hidden_size})")
    if embed.shape[1] != m.input_size:
        raise ShapeError(f"embedding width {embed.shape[1]} != input size {m.input_size}")
    if not 0 <= start_token < vocab:
        raise RangeError(f"start_token={start_token} outside vocabulary of {vocab}")
    if max_len < 0:
        raise ConfigError("max_len must be >= 0")
    step = step_function(m, upto, rows_done)
    s = LstmState.zeros(m.hidden_size) if state is None else state
    token = start_token
    out: list[int] = []
    for _ in range(max_len):
        s = step(embed[token], s)
        # np.argmax returns the first maximum, i.e. the lowest token id on ties
        token = int(np.argmax(matvec(proj, s.h)))
        if token == END_TOKEN:
            break
        out.append(token)
    return out
