"""
Quantizing a matrix, byte by byte
=================================

Walks one weight matrix through the codec: blocking, rotation, ternary
coding, the packed 100-byte block layout, and the container round trip.
"""

import io

import numpy as np

from itq3 import (
    QuantConfig,
    ScalePolicy,
    dequantize_tensor,
    encode_block,
    quantize_tensor,
    read_container,
    write_container,
)

rng = np.random.default_rng(1)
w = rng.laplace(size=(4, 512))

# Encode one block and look inside.
blk = encode_block(w[0, :256], QuantConfig())
codes = blk.codes()
print("one encoded block")
print(f"  scale d            {blk.scale:.6f}  (stored as binary16 bits 0x{blk.scale_bits:04x})")
print(f"  zero-point         {blk.zp}")
print(f"  code histogram     -1: {np.sum(codes == -1)}, 0: {np.sum(codes == 0)}, +1: {np.sum(codes == 1)}")
print(f"  packed size        {blk.nbytes} bytes for 256 weights = {blk.nbytes * 8 / 256:.3f} bits/weight")
print(f"  first quant bytes  {blk.quants[:8].hex(' ')}")
print()

# Quantize the whole matrix and persist it.
q = quantize_tensor(w, QuantConfig())
buf = io.BytesIO()
nbytes = write_container(q, buf)
recon = dequantize_tensor(read_container(io.BytesIO(buf.getvalue())))
rel = np.linalg.norm(recon - w) / np.linalg.norm(w)
print("container round trip")
print(f"  {q.n_blocks} blocks, {nbytes} bytes, {q.bits_per_weight:.3f} bits/weight")
print(f"  relative frobenius error {rel:.4f}")
print()

# Scale policies trade the same codes against different grid steps.
print("scale policy comparison (relative error on this matrix)")
for label, policy in (
    ("constant 0.7979 x sigma", ScalePolicy()),
    ("numeric argmin x sigma ", ScalePolicy(kind="argmin")),
    ("two thirds of mean |x| ", ScalePolicy(kind="mean-abs")),
):
    qq = quantize_tensor(w, QuantConfig(policy=policy))
    err = np.linalg.norm(dequantize_tensor(qq) - w) / np.linalg.norm(w)
    print(f"  {label}  {err:.4f}")
print()

# The sub-scale variant spends 16 more bytes per block for finer grids.
q_ss = quantize_tensor(w, QuantConfig(variant="ss"))
err_ss = np.linalg.norm(dequantize_tensor(q_ss) - w) / np.linalg.norm(w)
print("sub-block scales")
print(f"  {q_ss.bits_per_weight:.3f} bits/weight, relative error {err_ss:.4f}")
