"""Fused decode-and-multiply paths and the evaluation harness.

The fused paths decode one packed block at a time into a scratch buffer
and accumulate into the output, so the dense matrix is never
materialized.  The evaluation side quantizes synthetic weight tensors,
measures reconstruction error against two baselines (uniform 3-bit and
ternary without rotation), and sweeps block sizes for ablation tables.

Evaluation uses a vectorized encoder that processes all blocks of a
tensor at once; it reproduces the block codec bit for bit (asserted in
the test suite) and exists purely for speed.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .codec import BLOCK_SIZES, SUB_BLOCKS, QuantConfig, QuantizedTensor, decode_block
from .errors import DomainError, ShapeError
from .quantizer import EPSILON_D, ScalePolicy, argmin_scale_coeff
from .transform import fwht_forward, fwht_inverse

DISTRIBUTIONS = ("gaussian", "laplace", "student-t", "outlier")


@dataclass(frozen=True)
class ErrorReport:
    """Reconstruction error metrics for one quantization configuration."""

    mse: float
    frobenius_rel: float
    linf_in: float
    linf_rot: float
    bound_slack: float
    clamp_fraction: float
    zero_fraction: float
    mse_uniform3: float
    mse_ternary_noro: float
    n_blocks: int
    unclamped_blocks: int


@dataclass(frozen=True)
class AblationRow:
    """One block-size sweep entry: error plus transform flops per weight."""

    block_n: int
    mse: float
    relative_overhead: float


def generate_weights(
    dist: str,
    rows: int,
    cols: int,
    seed: int,
    nu: float = 3.0,
    outlier_frac: float = 0.01,
    outlier_mult: float = 20.0,
) -> np.ndarray:
    """Seeded synthetic weight matrix from one of the standard suites.

    "outlier" draws standard normal values and scales a random fraction
    of them by a fixed multiplier, the stand-in for heavy-tailed rows of
    real models.
    """
    if dist not in DISTRIBUTIONS:
        raise DomainError(f"generate_weights: unknown distribution {dist!r}, expected one of {DISTRIBUTIONS}")
    if rows <= 0 or cols <= 0:
        raise DomainError(f"generate_weights: dims must be positive, got {rows}x{cols}")
    rng = np.random.default_rng(seed)
    if dist == "gaussian":
        return rng.standard_normal((rows, cols))
    if dist == "laplace":
        return rng.laplace(size=(rows, cols))
    if dist == "student-t":
        if not (nu > 0 and math.isfinite(nu)):
            raise DomainError(f"generate_weights: nu must be positive and finite, got {nu}")
        return rng.standard_t(nu, size=(rows, cols))
    if not 0.0 <= outlier_frac <= 1.0:
        raise DomainError(f"generate_weights: outlier fraction must be in [0, 1], got {outlier_frac}")
    if not math.isfinite(outlier_mult):
        raise DomainError(f"generate_weights: outlier multiplier must be finite, got {outlier_mult}")
    w = rng.standard_normal((rows, cols))
    k = int(round(outlier_frac * w.size))
    if k:
        idx = rng.choice(w.size, size=k, replace=False)
        w.reshape(-1)[idx] *= outlier_mult
    return w


def fused_matmul(q: QuantizedTensor, x) -> np.ndarray:
    """Multiply the quantized matrix by X (cols x k), decoding each block exactly once.

    Accumulation is float64 with a fixed block-order schedule per output
    element, so results are reproducible run to run.
    """
    a = np.asarray(x, dtype=np.float64)
    if a.ndim != 2:
        raise ShapeError(f"fused_matmul: X must be 2-D (cols x k), got shape {a.shape}")
    if a.shape[0] != q.cols:
        raise ShapeError(f"fused_matmul: X has {a.shape[0]} rows, tensor has {q.cols} columns")
    if not np.all(np.isfinite(a)):
        raise DomainError("fused_matmul: X contains non-finite values")

    rows, cols, n = q.rows, q.cols, q.block_n
    size = rows * cols
    out = np.zeros((rows, a.shape[1]))
    for i, blk in enumerate(q.blocks):
        w = decode_block(blk)
        start = i * n
        end = min(start + n, size)
        pos = start
        while pos < end:
            r, c = divmod(pos, cols)
            take = min(cols - c, end - pos)
            out[r] += w[pos - start : pos - start + take] @ a[c : c + take]
            pos += take
    return out


def fused_matvec(q: QuantizedTensor, x) -> np.ndarray:
    """Matrix-vector product against the quantized tensor; the k=1 fused path."""
    a = np.asarray(x, dtype=np.float64)
    if a.ndim != 1:
        raise ShapeError(f"fused_matvec: x must be 1-D, got shape {a.shape}")
    return fused_matmul(q, a[:, None])[:, 0]


def _blockify(w: np.ndarray, n: int) -> tuple[np.ndarray, int]:
    """Row-major flattening into (n_blocks, n) with zero tail padding; returns (blocks, pad)."""
    flat = w.reshape(-1)
    n_blocks = -(-flat.size // n)
    pad = n_blocks * n - flat.size
    if pad:
        flat = np.concatenate([flat, np.zeros(pad)])
    return flat.reshape(n_blocks, n), pad


def _f16_round(d: np.ndarray) -> np.ndarray:
    return d.astype(np.float16).astype(np.float64)


def _policy_scales(y: np.ndarray, policy: ScalePolicy) -> np.ndarray:
    """Raw per-row scales for a (m, width) array of coefficients, floored at EPSILON_D."""
    if policy.kind == "mean-abs":
        d = (2.0 / 3.0) * np.mean(np.abs(y), axis=1)
    else:
        coeff = policy.constant if policy.kind == "constant" else argmin_scale_coeff()
        mu = np.mean(y, axis=1, keepdims=True)
        d = coeff * np.sqrt(np.mean((y - mu) ** 2, axis=1))
    return np.where(d > 0, d, EPSILON_D)


def _round_half_away(y: np.ndarray) -> np.ndarray:
    return np.copysign(np.floor(np.abs(y) + 0.5), y)


def _zero_points(mu: np.ndarray, d_eff: np.ndarray, symmetric: bool) -> np.ndarray:
    if symmetric:
        return np.zeros_like(mu)
    r = mu / d_eff
    return np.clip(-np.copysign(np.floor(np.abs(r) + 0.5), r), -1.0, 1.0)


def _ternary_blocks(y: np.ndarray, cfg: QuantConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized grid quantization of (n_blocks, n) coefficient blocks.

    Mirrors the block codec exactly: scales pass through half precision
    before quantization, and reconstruction uses the stored (possibly
    underflowed-to-zero) half-precision value.  Returns
    (reconstruction, codes, clamp mask, per-block stored scale).
    """
    nb, n = y.shape
    mu = np.mean(y, axis=1)
    if cfg.variant == "s":
        d_raw = _policy_scales(y, cfg.policy)
        d16 = _f16_round(d_raw)
        d_eff = np.where(d16 > 0, d16, d_raw)
        z = _zero_points(mu, d_eff, cfg.symmetric)[:, None]
        pre = _round_half_away(y / d_eff[:, None]) + z
        codes = np.clip(pre, -1.0, 1.0)
        recon = d16[:, None] * (codes - z)
        return recon, codes.astype(np.int8), np.abs(pre) > 1.0, d16

    subs = y.reshape(nb, SUB_BLOCKS, n // SUB_BLOCKS)
    d_raw = _policy_scales(subs.reshape(nb * SUB_BLOCKS, -1), cfg.policy).reshape(nb, SUB_BLOCKS)
    d16 = _f16_round(d_raw)
    d_eff = np.where(d16 > 0, d16, d_raw)
    d_block_eff = _f16_round(np.mean(d_raw, axis=1))
    d_block_eff = np.where(d_block_eff > 0, d_block_eff, np.mean(d_raw, axis=1))
    z = _zero_points(mu, d_block_eff, cfg.symmetric)[:, None, None]
    pre = _round_half_away(subs / d_eff[:, :, None]) + z
    codes = np.clip(pre, -1.0, 1.0)
    recon = (d16[:, :, None] * (codes - z)).reshape(nb, n)
    return recon, codes.reshape(nb, n).astype(np.int8), (np.abs(pre) > 1.0).reshape(nb, n), d16


def _uniform3_blocks(blocks: np.ndarray) -> np.ndarray:
    """Per-block uniform 3-bit baseline on raw weights; constant blocks pass through."""
    wmin = blocks.min(axis=1, keepdims=True)
    wmax = blocks.max(axis=1, keepdims=True)
    ok = wmax > wmin
    delta = np.where(ok, (wmax - wmin) / 7.0, 1.0)
    recon = np.clip(delta * np.floor(blocks / delta + 0.5), wmin, wmax)
    return np.where(ok, recon, blocks)


def _rotated_recon(blocks: np.ndarray, cfg: QuantConfig):
    y = fwht_forward(blocks)
    recon_y, codes, clamp, d16 = _ternary_blocks(y, cfg)
    return fwht_inverse(recon_y), y, codes, clamp, d16


def eval_error(w, cfg: QuantConfig | None = None) -> ErrorReport:
    """Quantize a matrix, decode it, and measure error against the baselines.

    Baselines run on the same raw blocks: uniform 3-bit with per-block
    range, and ternary at the same scale policy without the rotation.
    """
    if cfg is None:
        cfg = QuantConfig()
    a = np.asarray(w, dtype=np.float64)
    if a.ndim != 2 or a.size == 0:
        raise ShapeError(f"eval_error: expected a non-empty 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DomainError("eval_error: input contains non-finite values")

    blocks, pad = _blockify(a, cfg.block_n)
    nb, n = blocks.shape
    size = a.size

    recon, y, codes, clamp, d16 = _rotated_recon(blocks, cfg)
    err_flat = (recon - blocks).reshape(-1)[:size]
    mse = float(np.mean(err_flat**2))
    wnorm = float(np.linalg.norm(a))
    frob = float(np.linalg.norm(err_flat) / wnorm) if wnorm > 0 else 0.0

    block_err2 = np.sum((recon - blocks) ** 2, axis=1)
    unclamped = ~clamp.any(axis=1)
    if d16.ndim == 1:
        budget = n * d16**2 / 4.0
    else:
        budget = (n // SUB_BLOCKS) * np.sum(d16**2, axis=1) / 4.0
    slack = float(np.min(budget[unclamped] - block_err2[unclamped])) if unclamped.any() else 0.0

    noro_recon, _, _, _ = _ternary_blocks(blocks, cfg)
    noro_err = (noro_recon - blocks).reshape(-1)[:size]
    uni_err = (_uniform3_blocks(blocks) - blocks).reshape(-1)[:size]

    return ErrorReport(
        mse=mse,
        frobenius_rel=frob,
        linf_in=float(np.mean(np.max(np.abs(blocks), axis=1))),
        linf_rot=float(np.mean(np.max(np.abs(y), axis=1))),
        bound_slack=slack,
        clamp_fraction=float(np.mean(clamp)),
        zero_fraction=float(np.mean(codes == 0)),
        mse_uniform3=float(np.mean(uni_err**2)),
        mse_ternary_noro=float(np.mean(noro_err**2)),
        n_blocks=nb,
        unclamped_blocks=int(np.sum(unclamped)),
    )


def eval_container(w, q: QuantizedTensor, policy: ScalePolicy | None = None) -> ErrorReport:
    """Error report for an existing quantized tensor against its reference weights.

    Grid values come from the container; clamp detection re-derives the
    rounding decision from the reference coefficients and the stored
    scales.  The two baselines are computed from the reference at the
    given policy (default scale rule) since the container does not
    record one.
    """
    if policy is None:
        policy = ScalePolicy()
    a = np.asarray(w, dtype=np.float64)
    if a.ndim != 2 or a.shape != (q.rows, q.cols):
        raise ShapeError(f"eval_container: reference shape {a.shape} does not match tensor {q.rows}x{q.cols}")
    if not np.all(np.isfinite(a)):
        raise DomainError("eval_container: reference contains non-finite values")

    blocks, _ = _blockify(a, q.block_n)
    nb, n = blocks.shape
    if len(q.blocks) != nb:
        raise ShapeError(f"eval_container: container has {len(q.blocks)} blocks, reference needs {nb}")
    y = fwht_forward(blocks)
    size = a.size

    codes = np.stack([blk.codes() for blk in q.blocks]).astype(np.float64)
    z = np.array([blk.zp for blk in q.blocks], dtype=np.float64)[:, None]
    if q.variant == "s":
        d16 = np.array([blk.scale for blk in q.blocks])
        scales = d16[:, None]
        budget = n * d16**2 / 4.0
    else:
        d16 = np.array([blk.sub_scales for blk in q.blocks])
        scales = np.repeat(d16, n // SUB_BLOCKS, axis=1)
        budget = (n // SUB_BLOCKS) * np.sum(d16**2, axis=1) / 4.0
    recon_y = scales * (codes - z)
    # degenerate stored scale 0: any nonzero code there must have clamped
    pre = np.where(scales > 0, _round_half_away(y / np.where(scales > 0, scales, 1.0)) + z, 2.0 * codes)
    clamp = np.abs(pre) > 1.0

    recon = fwht_inverse(recon_y)
    err_flat = (recon - blocks).reshape(-1)[:size]
    mse = float(np.mean(err_flat**2))
    wnorm = float(np.linalg.norm(a))
    frob = float(np.linalg.norm(err_flat) / wnorm) if wnorm > 0 else 0.0

    block_err2 = np.sum((recon - blocks) ** 2, axis=1)
    unclamped = ~clamp.any(axis=1)
    slack = float(np.min(budget[unclamped] - block_err2[unclamped])) if unclamped.any() else 0.0

    cfg = QuantConfig(block_n=q.block_n, variant=q.variant, policy=policy, symmetric=q.symmetric)
    noro_recon, _, _, _ = _ternary_blocks(blocks, cfg)
    noro_err = (noro_recon - blocks).reshape(-1)[:size]
    uni_err = (_uniform3_blocks(blocks) - blocks).reshape(-1)[:size]

    return ErrorReport(
        mse=mse,
        frobenius_rel=frob,
        linf_in=float(np.mean(np.max(np.abs(blocks), axis=1))),
        linf_rot=float(np.mean(np.max(np.abs(y), axis=1))),
        bound_slack=slack,
        clamp_fraction=float(np.mean(clamp)),
        zero_fraction=float(np.mean(codes == 0)),
        mse_uniform3=float(np.mean(uni_err**2)),
        mse_ternary_noro=float(np.mean(noro_err**2)),
        n_blocks=nb,
        unclamped_blocks=int(np.sum(unclamped)),
    )


def rotation_benefit(w, cfg: QuantConfig | None = None) -> dict[str, float]:
    """Median per-block MSE of the rotated codec vs the two baselines."""
    if cfg is None:
        cfg = QuantConfig()
    a = np.asarray(w, dtype=np.float64)
    if a.ndim != 2 or a.size == 0:
        raise ShapeError(f"rotation_benefit: expected a non-empty 2-D matrix, got shape {a.shape}")
    blocks, _ = _blockify(a, cfg.block_n)
    recon, _, _, _, _ = _rotated_recon(blocks, cfg)
    noro, _, _, _ = _ternary_blocks(blocks, cfg)
    uni = _uniform3_blocks(blocks)
    return {
        "rotated": float(np.median(np.mean((recon - blocks) ** 2, axis=1))),
        "unrotated": float(np.median(np.mean((noro - blocks) ** 2, axis=1))),
        "uniform3": float(np.median(np.mean((uni - blocks) ** 2, axis=1))),
    }


def ablate_block_size(
    sweep=(32, 64, 128, 256),
    dist: str = "outlier",
    rows: int = 32,
    cols: int = 512,
    base_seed: int = 0,
    replicates: int = 9,
    cfg: QuantConfig | None = None,
    nu: float = 3.0,
    outlier_frac: float = 0.01,
    outlier_mult: float = 20.0,
) -> list[AblationRow]:
    """Sweep block sizes over freshly generated tensors with shared seeds.

    Each block size sees the identical tensors (seeds base_seed ..
    base_seed+replicates-1); the row MSE is the median of per-tensor
    mean squared errors.  relative_overhead counts transform flops per
    weight (log2 n butterfly adds plus one normalizing multiply).
    """
    sizes = tuple(sweep)
    for n in sizes:
        if n not in BLOCK_SIZES:
            raise DomainError(f"ablate_block_size: block_n {n} not in {BLOCK_SIZES}")
    if replicates <= 0:
        raise DomainError(f"ablate_block_size: replicates must be positive, got {replicates}")
    if cfg is None:
        cfg = QuantConfig()
    tensors = [
        generate_weights(dist, rows, cols, base_seed + t, nu=nu, outlier_frac=outlier_frac, outlier_mult=outlier_mult)
        for t in range(replicates)
    ]
    out = []
    for n in sizes:
        ncfg = QuantConfig(block_n=n, variant=cfg.variant, policy=cfg.policy, symmetric=cfg.symmetric)
        mses = [eval_error(w, ncfg).mse for w in tensors]
        out.append(AblationRow(block_n=n, mse=float(np.median(mses)), relative_overhead=math.log2(n) + 1))
    return out


def _rows(obj) -> list[dict]:
    if isinstance(obj, (ErrorReport, AblationRow)):
        return [asdict(obj)]
    return [asdict(r) for r in obj]


def report_json(obj) -> str:
    """Serialize an ErrorReport or a sequence of AblationRows as JSON."""
    rows = _rows(obj)
    return json.dumps(rows[0] if isinstance(obj, (ErrorReport, AblationRow)) else rows, indent=2)


def report_csv(obj) -> str:
    """Serialize report rows as CSV with field names for the header."""
    rows = _rows(obj)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0].keys()), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()
