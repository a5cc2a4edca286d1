"""Block and tensor codec plus the container file format.

Encoding a block applies the normalized Walsh-Hadamard rotation, derives
a ternary grid from the rotated coefficients, quantizes, and packs.  The
scale used for quantization is the half-precision value the decoder will
see, so encode and decode agree bit for bit.  Tensors are flattened
row-major, split into fixed-size blocks, and zero-padded at the tail;
the pad length is recorded in the container header.

Container layout (little-endian):

    magic    4 bytes  ASCII "ITQ3"
    version  u16      = 1
    flags    u16      bit 0: sub-block scales; bit 1: asymmetric zero-points
    rows     u64
    cols     u64
    block_n  u32
    pad      u32      zero elements appended to the final block
    blocks   ceil(rows*cols/block_n) serialized blocks, no alignment padding
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadMagicError,
    ContainerError,
    CorruptionError,
    DomainError,
    LengthError,
    ShapeError,
    SizeMismatchError,
    TruncatedStreamError,
    UnsupportedVersionError,
)
from .packing import PackedBlock, block_nbytes, decode_f16, deserialize_block, encode_f16, pack_ternary
from .quantizer import ScalePolicy, TernaryGrid, block_stats, optimal_scale, ternary_quantize
from .transform import fwht_forward, fwht_inverse

MAGIC = b"ITQ3"
VERSION = 1
FLAG_SUB_SCALES = 0x1
FLAG_ASYMMETRIC = 0x2
KNOWN_FLAGS = FLAG_SUB_SCALES | FLAG_ASYMMETRIC

HEADER = struct.Struct("<4sHHQQII")

BLOCK_SIZES = (32, 64, 128, 256, 512)
VARIANTS = ("s", "ss")
SUB_BLOCKS = 8


@dataclass(frozen=True)
class QuantConfig:
    """Encoder settings: block length, scale layout variant, scale policy, zero-point mode."""

    block_n: int = 256
    variant: str = "s"
    policy: ScalePolicy = field(default_factory=ScalePolicy)
    symmetric: bool = True

    def __post_init__(self):
        if self.block_n not in BLOCK_SIZES:
            raise DomainError(f"QuantConfig: block_n must be one of {BLOCK_SIZES}, got {self.block_n}")
        if self.variant not in VARIANTS:
            raise DomainError(f"QuantConfig: variant must be one of {VARIANTS}, got {self.variant!r}")


@dataclass
class QuantizedTensor:
    """A quantized matrix: header fields plus packed blocks in flattening order."""

    rows: int
    cols: int
    block_n: int
    variant: str
    symmetric: bool
    pad: int
    blocks: list[PackedBlock]

    @property
    def n_blocks(self) -> int:
        return -(-self.rows * self.cols // self.block_n)

    @property
    def bits_per_weight(self) -> float:
        payload = sum(b.nbytes for b in self.blocks)
        return 8.0 * payload / (self.rows * self.cols)


def _effective_scale(d_raw: float) -> float:
    """The scale actually used for quantization: the stored half-precision value.

    Falls back to the raw scale when half precision underflows to zero
    (possible only for the degenerate-block floor); the decoder then sees
    scale 0 and reconstructs zeros, which is exact for such blocks.
    """
    d16 = decode_f16(encode_f16(d_raw))
    return d16 if d16 > 0 else d_raw


def _zero_point(mean: float, d: float, symmetric: bool) -> int:
    if symmetric:
        return 0
    z = -np.copysign(np.floor(abs(mean / d) + 0.5), mean / d)
    return int(np.clip(z, -1, 1))


def encode_block(w, cfg: QuantConfig) -> PackedBlock:
    """Rotate, quantize, and pack one block of cfg.block_n weights."""
    a = np.asarray(w, dtype=np.float64)
    if a.ndim != 1 or a.shape[0] != cfg.block_n:
        raise LengthError(f"encode_block: expected a 1-D block of length {cfg.block_n}, got shape {a.shape}")
    y = fwht_forward(a)
    n = cfg.block_n
    stats = block_stats(y)

    if cfg.variant == "s":
        d_raw = optimal_scale(stats, cfg.policy)
        d_eff = _effective_scale(d_raw)
        z = _zero_point(stats.mean, d_eff, cfg.symmetric)
        codes = ternary_quantize(y, TernaryGrid(d=d_eff, z=z))
        return PackedBlock(
            n=n,
            quants=pack_ternary(codes),
            scale_bits=encode_f16(d_raw),
            zp_bits=encode_f16(z),
        )

    subs = y.reshape(SUB_BLOCKS, n // SUB_BLOCKS)
    d_raws = [optimal_scale(block_stats(s), cfg.policy) for s in subs]
    d_effs = [_effective_scale(d) for d in d_raws]
    # block-level scale field keeps the mean sub-scale for diagnostics only
    d_block = float(np.mean(d_raws))
    z = _zero_point(stats.mean, _effective_scale(d_block), cfg.symmetric)
    codes = np.concatenate(
        [ternary_quantize(sub, TernaryGrid(d=dm, z=z)) for sub, dm in zip(subs, d_effs)]
    )
    return PackedBlock(
        n=n,
        quants=pack_ternary(codes),
        scale_bits=encode_f16(d_block),
        zp_bits=encode_f16(z),
        sub_scale_bits=tuple(encode_f16(d) for d in d_raws),
    )


def decode_block(b: PackedBlock) -> np.ndarray:
    """Unpack, dequantize, and inverse-rotate one block."""
    codes = b.codes().astype(np.float64)
    z = b.zp
    if b.sub_scale_bits is None:
        y = b.scale * (codes - z)
    else:
        scales = np.repeat(np.asarray(b.sub_scales, dtype=np.float64), b.n // SUB_BLOCKS)
        y = scales * (codes - z)
    return fwht_inverse(y)


def quantize_tensor(w, cfg: QuantConfig | None = None) -> QuantizedTensor:
    """Encode a 2-D weight matrix block by block in row-major flattening order."""
    if cfg is None:
        cfg = QuantConfig()
    a = np.asarray(w, dtype=np.float64)
    if a.ndim != 2 or a.size == 0:
        raise ShapeError(f"quantize_tensor: expected a non-empty 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DomainError("quantize_tensor: input contains non-finite values")
    rows, cols = a.shape
    flat = a.reshape(-1)
    n = cfg.block_n
    n_blocks = -(-flat.size // n)
    pad = n_blocks * n - flat.size
    if pad:
        flat = np.concatenate([flat, np.zeros(pad)])
    blocks = [encode_block(flat[i * n : (i + 1) * n], cfg) for i in range(n_blocks)]
    return QuantizedTensor(
        rows=rows,
        cols=cols,
        block_n=n,
        variant=cfg.variant,
        symmetric=cfg.symmetric,
        pad=pad,
        blocks=blocks,
    )


def dequantize_tensor(q: QuantizedTensor) -> np.ndarray:
    """Decode all blocks, strip tail padding, and reshape to rows x cols."""
    parts = []
    for i, blk in enumerate(q.blocks):
        try:
            parts.append(decode_block(blk))
        except CorruptionError as e:
            raise CorruptionError(f"block {i}: {e}") from e
    flat = np.concatenate(parts) if parts else np.empty(0)
    size = q.rows * q.cols
    return flat[:size].reshape(q.rows, q.cols)


def _check_tensor(q: QuantizedTensor) -> None:
    if q.variant not in VARIANTS:
        raise DomainError(f"container: unknown variant {q.variant!r}")
    if q.block_n not in BLOCK_SIZES:
        raise DomainError(f"container: invalid block_n {q.block_n}")
    if not (0 <= q.pad < q.block_n):
        raise DomainError(f"container: pad {q.pad} out of range for block_n {q.block_n}")
    if len(q.blocks) != q.n_blocks:
        raise ShapeError(f"container: {len(q.blocks)} blocks, expected {q.n_blocks}")
    want_subs = q.variant == "ss"
    for i, blk in enumerate(q.blocks):
        if blk.n != q.block_n:
            raise ShapeError(f"container: block {i} has n={blk.n}, expected {q.block_n}")
        if (blk.sub_scale_bits is not None) != want_subs:
            raise ShapeError(f"container: block {i} does not match variant {q.variant!r}")


def write_container(q: QuantizedTensor, sink) -> int:
    """Write the container to a binary file object or path; returns bytes written."""
    _check_tensor(q)
    flags = (FLAG_SUB_SCALES if q.variant == "ss" else 0) | (0 if q.symmetric else FLAG_ASYMMETRIC)
    header = HEADER.pack(MAGIC, VERSION, flags, q.rows, q.cols, q.block_n, q.pad)
    payload = b"".join(blk.to_bytes() for blk in q.blocks)
    if hasattr(sink, "write"):
        sink.write(header)
        sink.write(payload)
    else:
        with open(sink, "wb") as f:
            f.write(header)
            f.write(payload)
    return len(header) + len(payload)


def read_container(source) -> QuantizedTensor:
    """Read a container from a binary file object, path, or bytes."""
    if isinstance(source, (bytes, bytearray)):
        data = bytes(source)
    elif hasattr(source, "read"):
        data = source.read()
    else:
        with open(source, "rb") as f:
            data = f.read()

    if len(data) < HEADER.size:
        raise TruncatedStreamError(f"container header needs {HEADER.size} bytes, got {len(data)}")
    magic, version, flags, rows, cols, block_n, pad = HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise BadMagicError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise UnsupportedVersionError(f"unsupported container version {version}")
    if flags & ~KNOWN_FLAGS:
        raise ContainerError(f"unknown flag bits 0x{flags & ~KNOWN_FLAGS:x}")
    if block_n not in BLOCK_SIZES:
        raise ContainerError(f"invalid block_n {block_n}")
    if rows == 0 or cols == 0:
        raise ContainerError(f"empty tensor dims {rows}x{cols}")
    n_blocks = -(-rows * cols // block_n)
    if pad != n_blocks * block_n - rows * cols:
        raise ContainerError(f"pad {pad} inconsistent with {rows}x{cols} at block_n {block_n}")

    variant = "ss" if flags & FLAG_SUB_SCALES else "s"
    bsize = block_nbytes(block_n, variant == "ss")
    expected = HEADER.size + n_blocks * bsize
    if len(data) < expected:
        raise TruncatedStreamError(f"container truncated: expected {expected} bytes, got {len(data)}")
    if len(data) > expected:
        raise SizeMismatchError(
            f"container has {len(data) - expected} trailing bytes (expected {expected}, got {len(data)})"
        )

    blocks = []
    off = HEADER.size
    for i in range(n_blocks):
        try:
            blocks.append(deserialize_block(data[off : off + bsize], block_n))
        except CorruptionError as e:
            raise CorruptionError(f"block {i}: {e}") from e
        off += bsize
    return QuantizedTensor(
        rows=rows,
        cols=cols,
        block_n=block_n,
        variant=variant,
        symmetric=not (flags & FLAG_ASYMMETRIC),
        pad=pad,
        blocks=blocks,
    )
