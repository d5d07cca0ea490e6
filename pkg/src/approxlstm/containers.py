"""Little-endian binary containers for dense models and refinement factors.

Model file::

    magic    8 bytes  b"ALSTM1\\0\\0"
    version  u16
    input    u32
    hidden   u32      (R; C = input + R)
    gates    4 x R x C float32, row-major, order input/forget/output/cell

Factor file::

    magic    8 bytes  b"ALSTF1\\0\\0"
    version  u16
    R, C, nz, n_terms  u32 each
    for each gate, for each term:
        sigma  float32
        u      R x float32
        nz x (index u32, value float32), indices strictly ascending
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .approx import GateFactors, RefinementTerm, SparseMaskedVector
from .errors import FormatError, NonFiniteError, TruncationError
from .lstm import ApproxLstmModel, LstmModel

MODEL_MAGIC = b"ALSTM1\x00\x00"
FACTOR_MAGIC = b"ALSTF1\x00\x00"
VERSION = 1

_MODEL_HEADER = struct.Struct("<8sHII")
_FACTOR_HEADER = struct.Struct("<8sHIIII")
_PAIR = np.dtype([("index", "<u4"), ("value", "<f4")])


def model_nbytes(input_size: int, hidden_size: int) -> int:
    return _MODEL_HEADER.size + 4 * hidden_size * (input_size + hidden_size) * 4


def factor_nbytes(R: int, nz: int, n_terms: int) -> int:
    return _FACTOR_HEADER.size + 4 * n_terms * (4 + 4 * R + 8 * nz)


def encode_model(m: LstmModel) -> bytes:
    parts = [_MODEL_HEADER.pack(MODEL_MAGIC, VERSION, m.input_size, m.hidden_size)]
    parts += [np.ascontiguousarray(g, dtype="<f4").tobytes() for g in m.gates]
    return b"".join(parts)


def _check_header(buf: bytes, header: struct.Struct, magic: bytes, what: str) -> tuple:
    if len(buf) < header.size:
        raise TruncationError(f"{what} file is {len(buf)} bytes, shorter than its header")
    fields = header.unpack_from(buf)
    if fields[0] != magic:
        raise FormatError(f"bad {what} magic {fields[0]!r}")
    if fields[1] != VERSION:
        raise FormatError(f"unsupported {what} version {fields[1]}")
    return fields[2:]


def _check_length(buf: bytes, expected: int, what: str) -> None:
    if len(buf) < expected:
        raise TruncationError(f"{what} file truncated: {len(buf)} of {expected} bytes")
    if len(buf) > expected:
        raise FormatError(f"{what} file has {len(buf) - expected} trailing bytes")


def decode_model(buf: bytes) -> LstmModel:
    input_size, hidden = _check_header(buf, _MODEL_HEADER, MODEL_MAGIC, "model")
    if input_size < 1 or hidden < 1:
        raise FormatError(f"invalid model dimensions input={input_size} hidden={hidden}")
    _check_length(buf, model_nbytes(input_size, hidden), "model")
    cols = input_size + hidden
    data = np.frombuffer(buf, dtype="<f4", offset=_MODEL_HEADER.size).astype(np.float32)
    if not np.all(np.isfinite(data)):
        raise NonFiniteError("model weights contain NaN or Inf")
    gates = tuple(data.reshape(4, hidden, cols)[g].copy() for g in range(4))
    return LstmModel(input_size, hidden, gates)


def encode_factors(m: ApproxLstmModel) -> bytes:
    R, C, nz, n_terms = m.hidden_size, m.input_size + m.hidden_size, m.nz, m.n_terms
    parts = [_FACTOR_HEADER.pack(FACTOR_MAGIC, VERSION, R, C, nz, n_terms)]
    for gate in m.gates:
        for t in gate.terms:
            pairs = np.empty(nz, dtype=_PAIR)
            pairs["index"] = t.v_masked.indices
            pairs["value"] = t.v_masked.values
            parts.append(struct.pack("<f", t.sigma))
            parts.append(np.ascontiguousarray(t.u, dtype="<f4").tobytes())
            parts.append(pairs.tobytes())
    return b"".join(parts)


def _frozen_copy(a: np.ndarray, dtype) -> np.ndarray:
    out = np.array(a, dtype=dtype)
    out.setflags(write=False)
    return out


def decode_factors(buf: bytes) -> ApproxLstmModel:
    R, C, nz, n_terms = _check_header(buf, _FACTOR_HEADER, FACTOR_MAGIC, "factor")
    if R < 1 or C <= R:
        raise FormatError(f"invalid factor dimensions R={R} C={C}")
    if not 1 <= nz <= C:
        raise FormatError(f"nz={nz} outside [1, {C}]")
    if n_terms < 1:
        raise FormatError("factor file holds no terms")
    _check_length(buf, factor_nbytes(R, nz, n_terms), "factor")
    term_dtype = np.dtype([("sigma", "<f4"), ("u", "<f4", (R,)), ("pairs", _PAIR, (nz,))])
    records = np.frombuffer(buf, dtype=term_dtype, offset=_FACTOR_HEADER.size).reshape(4, n_terms)
    if not (
        np.all(np.isfinite(records["sigma"]))
        and np.all(np.isfinite(records["u"]))
        and np.all(np.isfinite(records["pairs"]["value"]))
    ):
        raise NonFiniteError("factor file contains NaN or Inf")
    if np.any(records["sigma"] < 0):
        raise FormatError("negative singular value")
    idx = records["pairs"]["index"].astype(np.int64)
    if np.any(idx >= C) or (nz > 1 and np.any(np.diff(idx, axis=-1) <= 0)):
        raise FormatError("sparse indices must be strictly ascending and below C")
    gates = []
    for g in range(4):
        terms = tuple(
            RefinementTerm(
                sigma=float(records["sigma"][g, k]),
                u=_frozen_copy(records["u"][g, k], np.float32),
                v_masked=SparseMaskedVector(
                    C,
                    _frozen_copy(idx[g, k], np.int64),
                    _frozen_copy(records["pairs"]["value"][g, k], np.float32),
                ),
            )
            for k in range(n_terms)
        )
        gates.append(GateFactors(R, C, nz, terms))
    return ApproxLstmModel(C - R, R, tuple(gates))


def save_model(path, m: LstmModel) -> None:
    Path(path).write_bytes(encode_model(m))


def load_model(path) -> LstmModel:
    return decode_model(Path(path).read_bytes())


def save_factors(path, m: ApproxLstmModel) -> None:
    Path(path).write_bytes(encode_factors(m))


def load_factors(path) -> ApproxLstmModel:
    return decode_factors(Path(path).read_bytes())
