"""Hand-derived byte vectors pinning the serialized formats exactly."""

import io
import math

import numpy as np

from itq3.codec import QuantConfig, dequantize_tensor, quantize_tensor, read_container, write_container


def container_bytes(w, **kw):
    buf = io.BytesIO()
    write_container(quantize_tensor(w, QuantConfig(**kw)), buf)
    return buf.getvalue()


class TestGoldenContainers:
    def test_zero_tensor_container(self):
        # codes all 0 store as c=1: plane0 full ones. The degenerate scale
        # floor underflows half precision, so the stored scale is 0x0000.
        data = container_bytes(np.zeros((1, 32)), block_n=32)
        header = b"ITQ3" + bytes([1, 0]) + bytes([0, 0])
        header += (1).to_bytes(8, "little") + (32).to_bytes(8, "little")
        header += (32).to_bytes(4, "little") + (0).to_bytes(4, "little")
        quants = b"\xff\xff\xff\xff" + b"\x00" * 8
        assert data == header + quants + b"\x00\x00" + b"\x00\x00"

    def test_impulse_tensor_container(self):
        # 16 * e_1 at n=32: coefficients alternate +-16/sqrt(32), sigma is
        # 16/sqrt(32), the scale rounds to half precision 0x4083, and every
        # coefficient quantizes to its sign: c=2 on even lanes, c=0 on odd.
        w = np.zeros((1, 32))
        w[0, 1] = 16.0
        data = container_bytes(w, block_n=32)
        quants = b"\x00" * 4 + b"\x55" * 4 + b"\x00" * 4
        assert data[32:] == quants + b"\x83\x40" + b"\x00\x00"

    def test_impulse_reconstruction_values(self):
        w = np.zeros((1, 32))
        w[0, 1] = 16.0
        out = dequantize_tensor(read_container(container_bytes(w, block_n=32)))
        # decoded grid is +-2.255859375 times the sign pattern of the impulse
        # row, which inverse-transforms back to a single spike
        expect = 2.255859375 * math.sqrt(32.0)
        assert abs(out[0, 1] - expect) < 1e-12
        mask = np.ones(32, dtype=bool)
        mask[1] = False
        np.testing.assert_array_equal(out[0, mask], np.zeros(31))

    def test_sub_scale_variant_layout(self):
        # one 32-weight block in the sub-scale variant: 12 + 2 + 2 + 16 bytes
        rng = np.random.default_rng(60)
        data = container_bytes(rng.normal(size=(1, 32)), block_n=32, variant="ss")
        assert len(data) == 32 + 12 + 2 + 2 + 16
        assert data[6] == 1  # sub-scale flag bit

    def test_header_is_32_bytes_little_endian(self):
        data = container_bytes(np.ones((3, 100)) * 0.25, block_n=64)
        assert data[:4] == b"ITQ3"
        assert int.from_bytes(data[8:16], "little") == 3
        assert int.from_bytes(data[16:24], "little") == 100
        assert int.from_bytes(data[24:28], "little") == 64
        assert int.from_bytes(data[28:32], "little") == 20  # 5 blocks of 64 cover 320
