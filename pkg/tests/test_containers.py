import struct

import numpy as np
import pytest

from approxlstm import containers as ct
from approxlstm.approx import ApproxConfig
from approxlstm.errors import FormatError, NonFiniteError, TruncationError
from approxlstm.lstm import approximate_model
from approxlstm.synthetic import gen_model


@pytest.fixture(scope="module")
def model():
    return gen_model(5, 4, seed=2)


@pytest.fixture(scope="module")
def factors(model):
    return approximate_model(model, ApproxConfig(nz=6, n_steps=3))


def _same_factors(a, b):
    assert (a.input_size, a.hidden_size, a.nz, a.n_terms) == (b.input_size, b.hidden_size, b.nz, b.n_terms)
    for ga, gb in zip(a.gates, b.gates):
        for ta, tb in zip(ga.terms, gb.terms):
            assert np.float32(ta.sigma) == np.float32(tb.sigma)
            assert np.array_equal(np.float32(ta.u), tb.u)
            assert np.array_equal(ta.v_masked.indices, tb.v_masked.indices)
            assert np.array_equal(np.float32(ta.v_masked.values), tb.v_masked.values)


class TestModelContainer:
    def test_round_trip(self, model):
        buf = ct.encode_model(model)
        back = ct.decode_model(buf)
        assert back.input_size == 5 and back.hidden_size == 4
        for a, b in zip(model.gates, back.gates):
            assert np.array_equal(np.float32(a), b)
        assert ct.encode_model(back) == buf

    def test_byte_length(self, model):
        # 18-byte header then four R x C float32 blocks
        assert len(ct.encode_model(model)) == 18 + 4 * 4 * 9 * 4 == ct.model_nbytes(5, 4)

    def test_header_layout(self, model):
        magic, version, i, h = struct.unpack_from("<8sHII", ct.encode_model(model))
        assert (magic, version, i, h) == (b"ALSTM1\x00\x00", 1, 5, 4)

    def test_truncated(self, model):
        buf = ct.encode_model(model)
        for cut in (0, 10, len(buf) - 1):
            with pytest.raises(TruncationError):
                ct.decode_model(buf[:cut])

    def test_trailing_bytes(self, model):
        with pytest.raises(FormatError):
            ct.decode_model(ct.encode_model(model) + b"\x00")

    def test_bad_magic(self, model):
        buf = bytearray(ct.encode_model(model))
        buf[0:1] = b"X"
        with pytest.raises(FormatError):
            ct.decode_model(bytes(buf))

    def test_bad_version(self, model):
        buf = bytearray(ct.encode_model(model))
        struct.pack_into("<H", buf, 8, 9)
        with pytest.raises(FormatError):
            ct.decode_model(bytes(buf))

    def test_zero_dims(self):
        with pytest.raises(FormatError):
            ct.decode_model(struct.pack("<8sHII", ct.MODEL_MAGIC, 1, 0, 3))

    def test_nan(self, model):
        buf = bytearray(ct.encode_model(model))
        struct.pack_into("<f", buf, 18 + 4 * 7, float("nan"))
        with pytest.raises(NonFiniteError):
            ct.decode_model(bytes(buf))

    def test_file_round_trip(self, model, tmp_path):
        ct.save_model(tmp_path / "m.bin", model)
        assert ct.encode_model(ct.load_model(tmp_path / "m.bin")) == ct.encode_model(model)


class TestFactorContainer:
    def test_round_trip(self, factors):
        buf = ct.encode_factors(factors)
        back = ct.decode_factors(buf)
        _same_factors(factors, back)
        assert ct.encode_factors(back) == buf

    def test_byte_length(self, factors):
        # 26-byte header; per term sigma + u (R floats) + nz (index, value) pairs
        assert len(ct.encode_factors(factors)) == 26 + 4 * 3 * (4 + 4 * 4 + 8 * 6) == ct.factor_nbytes(4, 6, 3)

    def test_decoded_arrays_read_only(self, factors):
        back = ct.decode_factors(ct.encode_factors(factors))
        with pytest.raises(ValueError):
            back.gates[0].terms[0].u[0] = 1.0

    def _first_pair_offset(self, R):
        return 26 + 4 + 4 * R

    def test_descending_indices(self, factors):
        buf = bytearray(ct.encode_factors(factors))
        off = self._first_pair_offset(4)
        i0, i1 = struct.unpack_from("<I", buf, off)[0], struct.unpack_from("<I", buf, off + 8)[0]
        struct.pack_into("<I", buf, off, i1)
        struct.pack_into("<I", buf, off + 8, i0)
        with pytest.raises(FormatError):
            ct.decode_factors(bytes(buf))

    def test_index_out_of_range(self, factors):
        buf = bytearray(ct.encode_factors(factors))
        off = self._first_pair_offset(4) + 8 * 5
        struct.pack_into("<I", buf, off, 9)
        with pytest.raises(FormatError):
            ct.decode_factors(bytes(buf))

    def test_zero_terms(self):
        with pytest.raises(FormatError):
            ct.decode_factors(struct.pack("<8sHIIII", ct.FACTOR_MAGIC, 1, 4, 9, 6, 0))

    def test_nz_too_large(self):
        with pytest.raises(FormatError):
            ct.decode_factors(struct.pack("<8sHIIII", ct.FACTOR_MAGIC, 1, 4, 9, 10, 1))

    def test_inf_sigma(self, factors):
        buf = bytearray(ct.encode_factors(factors))
        struct.pack_into("<f", buf, 26, float("inf"))
        with pytest.raises(NonFiniteError):
            ct.decode_factors(bytes(buf))

    def test_negative_sigma(self, factors):
        buf = bytearray(ct.encode_factors(factors))
        struct.pack_into("<f", buf, 26, -1.0)
        with pytest.raises(FormatError):
            ct.decode_factors(bytes(buf))

    def test_truncated_and_trailing(self, factors):
        buf = ct.encode_factors(factors)
        with pytest.raises(TruncationError):
            ct.decode_factors(buf[:-3])
        with pytest.raises(FormatError):
            ct.decode_factors(buf + b"\x01\x02")

    def test_model_magic_rejected(self, model):
        with pytest.raises(FormatError):
            ct.decode_factors(ct.encode_model(model) + bytes(8))

    def test_file_round_trip(self, factors, tmp_path):
        ct.save_factors(tmp_path / "f.bin", factors)
        _same_factors(factors, ct.load_factors(tmp_path / "f.bin"))
