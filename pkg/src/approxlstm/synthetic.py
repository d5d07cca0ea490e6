"""Seeded desk-scale stand-ins for a trained captioning LSTM and its data.

Gate matrices get a geometrically decaying singular spectrum, which is the
structure low-rank refinement exploits in trained weights; a plain Gaussian
matrix would make every rank-1 term equally (un)informative.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .lstm import LstmModel


@dataclass(frozen=True)
class GeneratorParams:
    input_size: int = 16
    hidden_size: int = 16
    vocab: int = 32
    seed: int = 0
    gain: float = 4.0
    decay: float = 0.75
    n_items: int = 12
    prefix_len: int = 3
    max_len: int = 12

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Decoder:
    """Token embedding (V x input_size), output projection (V x R) and length cap."""

    embed: np.ndarray
    proj: np.ndarray
    max_len: int

    @property
    def vocab(self) -> int:
        return self.embed.shape[0]


@dataclass(frozen=True)
class EvalItem:
    """Conditioning inputs fed before decoding, and the first token."""

    prefix: np.ndarray
    start_token: int


def _orthonormal(rng: np.random.Generator, n: int, k: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((n, k)))
    return q * np.sign(np.diag(r))


def gen_gate_matrix(rng: np.random.Generator, rows: int, cols: int, gain: float, decay: float) -> np.ndarray:
    k = min(rows, cols)
    spectrum = gain * decay ** np.arange(k)
    w = _orthonormal(rng, rows, k) @ np.diag(spectrum) @ _orthonormal(rng, cols, k).T
    return w.astype(np.float32)


def gen_model(
    input_size: int,
    hidden_size: int,
    seed: int,
    gain: float = GeneratorParams.gain,
    decay: float = GeneratorParams.decay,
) -> LstmModel:
    rng = np.random.default_rng([seed, 0])
    cols = input_size + hidden_size
    gates = tuple(gen_gate_matrix(rng, hidden_size, cols, gain, decay) for _ in range(4))
    return LstmModel(input_size, hidden_size, gates)


def gen_decoder(vocab: int, input_size: int, hidden_size: int, seed: int, max_len: int) -> Decoder:
    rng = np.random.default_rng([seed, 1])
    embed = rng.standard_normal((vocab, input_size)).astype(np.float32)
    proj = (rng.standard_normal((vocab, hidden_size)) * 2.0).astype(np.float32)
    return Decoder(embed, proj, max_len)


def gen_eval_set(n_items: int, prefix_len: int, input_size: int, vocab: int, seed: int) -> list[EvalItem]:
    rng = np.random.default_rng([seed, 2])
    items = []
    for _ in range(n_items):
        prefix = rng.standard_normal((prefix_len, input_size)).astype(np.float32)
        items.append(EvalItem(prefix, int(rng.integers(1, vocab))))
    return items


def gen_setup(params: GeneratorParams) -> tuple[LstmModel, Decoder, list[EvalItem]]:
    """Model, decoder and evaluation set for one seed."""
    model = gen_model(params.input_size, params.hidden_size, params.seed, params.gain, params.decay)
    decoder = gen_decoder(params.vocab, params.input_size, params.hidden_size, params.seed, params.max_len)
    items = gen_eval_set(params.n_items, params.prefix_len, params.input_size, params.vocab, params.seed)
    return model, decoder, items
