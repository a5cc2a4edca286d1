"""Bit-exact byte layouts for ternary blocks.

Codes q in {-1, 0, 1} are stored as c = q + 1 in three little-endian bit
planes (plane b holds bit b of every c), so a block of n codes packs
into exactly 3n/8 bytes.  Plane 2 is always zero for valid codes; a set
bit there, or disagreeing plane bits that reassemble to c > 2, marks
corruption.  Scales and zero-points are IEEE 754 binary16, stored
little-endian.

Serialized block layout (n = 256 shown):

    quants      3n/8 bytes   (96)   bit planes, low plane first
    scale       2 bytes             binary16, little-endian
    zero-point  2 bytes             binary16, little-endian
    sub-scales  16 bytes            8 x binary16, sub-block variant only

for a total of 100 bytes (3.125 bits/weight) or 116 bytes with
sub-scales (3.625 bits/weight).
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from .errors import CorruptionError, DomainError, LengthError

MAX_CODES = 512
SUB_BLOCKS = 8

F16_MAX = 65504.0
F16_NAN = 0x7E00


def block_nbytes(n: int, with_sub_scales: bool) -> int:
    """Serialized size of one block: 3n/8 code bytes + 4, plus 16 for sub-scales."""
    return 3 * n // 8 + 4 + (16 if with_sub_scales else 0)


def _check_codes(codes) -> np.ndarray:
    a = np.asarray(codes)
    if not np.issubdtype(a.dtype, np.integer):
        raise DomainError("pack_ternary: codes must be integers")
    if a.ndim != 1:
        raise LengthError("pack_ternary: expects a 1-D code sequence")
    n = a.shape[0]
    if n == 0 or n % 8 != 0 or n > MAX_CODES:
        raise LengthError(
            f"pack_ternary: length must be a positive multiple of 8, at most {MAX_CODES}, got {n}"
        )
    if a.size and (a.min() < -1 or a.max() > 1):
        raise DomainError("pack_ternary: codes must lie in {-1, 0, 1}")
    return a.astype(np.int8)


def pack_ternary(codes) -> bytes:
    """Pack ternary codes into 3 bit planes of n bits each (3n/8 bytes total)."""
    q = _check_codes(codes)
    c = (q + 1).astype(np.uint8)
    planes = [np.packbits((c >> b) & 1, bitorder="little") for b in range(3)]
    return b"".join(p.tobytes() for p in planes)


def unpack_ternary(data: bytes, n: int) -> np.ndarray:
    """Exact inverse of pack_ternary; rejects any 3-bit field that reassembles above 2."""
    if n <= 0 or n % 8 != 0 or n > MAX_CODES:
        raise LengthError(f"unpack_ternary: invalid block length {n}")
    plane_len = n // 8
    if len(data) != 3 * plane_len:
        raise LengthError(
            f"unpack_ternary: expected {3 * plane_len} bytes for n={n}, got {len(data)}"
        )
    raw = np.frombuffer(data, dtype=np.uint8)
    bits = [
        np.unpackbits(raw[b * plane_len : (b + 1) * plane_len], bitorder="little") for b in range(3)
    ]
    c = bits[0] + 2 * bits[1] + 4 * bits[2]
    bad = np.nonzero(c > 2)[0]
    if bad.size:
        raise CorruptionError(f"unpack_ternary: stored code {int(c[bad[0]])} > 2 at index {int(bad[0])}")
    return c.astype(np.int8) - 1


def encode_f16(x) -> int:
    """Encode a real as an IEEE 754 binary16 bit pattern.

    Round-to-nearest-even; finite values beyond the half-precision range
    saturate to +-65504 rather than producing infinities.  NaN maps to
    the canonical quiet pattern 0x7E00 and infinities pass through.
    """
    v = float(x)
    if math.isnan(v):
        return F16_NAN
    with np.errstate(over="ignore"):
        h = np.float16(v)
    if np.isinf(h) and math.isfinite(v):
        h = np.float16(F16_MAX if v > 0 else -F16_MAX)
    return int(h.view(np.uint16))


def decode_f16(bits: int) -> float:
    """Decode a 16-bit pattern to its exact binary16 value (total over all 65536 patterns)."""
    b = int(bits)
    if not 0 <= b <= 0xFFFF:
        raise DomainError(f"decode_f16: bit pattern out of range: {bits}")
    return float(np.uint16(b).view(np.float16))


@dataclass(frozen=True)
class PackedBlock:
    """One serialized block, held as bit patterns plus the packed code bytes."""

    n: int
    quants: bytes
    scale_bits: int
    zp_bits: int
    sub_scale_bits: tuple[int, ...] | None = None

    @property
    def scale(self) -> float:
        return decode_f16(self.scale_bits)

    @property
    def zp(self) -> int:
        return int(decode_f16(self.zp_bits))

    @property
    def sub_scales(self) -> tuple[float, ...] | None:
        if self.sub_scale_bits is None:
            return None
        return tuple(decode_f16(b) for b in self.sub_scale_bits)

    def codes(self) -> np.ndarray:
        return unpack_ternary(self.quants, self.n)

    def to_bytes(self) -> bytes:
        parts = [self.quants, struct.pack("<HH", self.scale_bits, self.zp_bits)]
        if self.sub_scale_bits is not None:
            parts.append(struct.pack(f"<{SUB_BLOCKS}H", *self.sub_scale_bits))
        return b"".join(parts)

    @property
    def nbytes(self) -> int:
        return block_nbytes(self.n, self.sub_scale_bits is not None)


def serialize_block(codes, grid, sub_scales=None) -> bytes:
    """Serialize codes + grid (+ optional 8 sub-scales) to the fixed block layout."""
    quants = pack_ternary(codes)
    n = len(np.asarray(codes))
    d = float(grid.d)
    if not (d > 0 and math.isfinite(d)):
        raise DomainError(f"serialize_block: scale must be positive and finite, got {d}")
    if grid.z not in (-1, 0, 1):
        raise DomainError(f"serialize_block: zero-point must be -1, 0, or 1, got {grid.z}")
    parts = [quants, struct.pack("<HH", encode_f16(d), encode_f16(grid.z))]
    if sub_scales is not None:
        subs = [float(s) for s in sub_scales]
        if len(subs) != SUB_BLOCKS:
            raise LengthError(f"serialize_block: expected {SUB_BLOCKS} sub-scales, got {len(subs)}")
        for s in subs:
            if not (s > 0 and math.isfinite(s)):
                raise DomainError(f"serialize_block: sub-scale must be positive and finite, got {s}")
        parts.append(struct.pack(f"<{SUB_BLOCKS}H", *[encode_f16(s) for s in subs]))
    return b"".join(parts)


def deserialize_block(data: bytes, n: int) -> PackedBlock:
    """Parse one serialized block; the sub-scale variant is inferred from the byte count."""
    base = block_nbytes(n, with_sub_scales=False)
    if len(data) == base:
        with_ss = False
    elif len(data) == block_nbytes(n, with_sub_scales=True):
        with_ss = True
    else:
        raise LengthError(
            f"deserialize_block: got {len(data)} bytes, expected {base} or {base + 16} for n={n}"
        )
    quants = bytes(data[: 3 * n // 8])
    unpack_ternary(quants, n)  # reject corrupt code fields early
    scale_bits, zp_bits = struct.unpack_from("<HH", data, 3 * n // 8)
    if math.isnan(decode_f16(scale_bits)):
        raise CorruptionError("deserialize_block: scale is NaN")
    zp_val = decode_f16(zp_bits)
    if zp_val not in (-1.0, 0.0, 1.0):
        raise CorruptionError(f"deserialize_block: zero-point {zp_val} not in {{-1, 0, 1}}")
    sub_bits = None
    if with_ss:
        sub_bits = struct.unpack_from(f"<{SUB_BLOCKS}H", data, 3 * n // 8 + 4)
        for b in sub_bits:
            if math.isnan(decode_f16(b)):
                raise CorruptionError("deserialize_block: sub-scale is NaN")
        sub_bits = tuple(int(b) for b in sub_bits)
    return PackedBlock(n=n, quants=quants, scale_bits=int(scale_bits), zp_bits=int(zp_bits), sub_scale_bits=sub_bits)
