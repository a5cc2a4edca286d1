"""Embedded invariant suite: one implementation shared by tests and the CLI.

Each check exercises a user-visible contract of the codec at full
statistical weight (exhaustive sweeps where the space is small,
randomized batches elsewhere) and reports a pass/fail verdict with a
one-line measurement summary.  The whole suite runs in well under two
minutes on a laptop.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .codec import (
    QuantConfig,
    decode_block,
    dequantize_tensor,
    encode_block,
    quantize_tensor,
    read_container,
    write_container,
)
from .compute import ablate_block_size, fused_matmul, fused_matvec, generate_weights, rotation_benefit
from .packing import F16_NAN, decode_f16, encode_f16, pack_ternary, serialize_block, unpack_ternary
from .quantizer import DEFAULT_SCALE_COEFF, TernaryGrid, argmin_scale_coeff
from .transform import fwht_forward, fwht_inverse, hadamard_oracle


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _check_transform_oracle() -> CheckResult:
    """Butterfly output matches the dense matrix oracle in single precision."""
    rng = np.random.default_rng(101)
    worst = 0.0
    for n in (2, 4, 8, 16, 32, 64):
        v = rng.normal(size=(100, n)).astype(np.float32)
        got = fwht_forward(v).astype(np.float64)
        want = hadamard_oracle(v.astype(np.float64))
        worst = max(worst, float(np.max(np.abs(got - want))))
    return CheckResult("transform-oracle", worst <= 1e-6, f"max abs error {worst:.2e} over 600 vectors")


def _check_involution_isometry() -> CheckResult:
    rng = np.random.default_rng(102)
    worst_rt = 0.0
    worst_iso = 0.0
    for n in (32, 64, 128, 256, 512):
        v = rng.normal(size=(1000, n))
        rt = fwht_forward(fwht_forward(v))
        rt_err = np.max(np.abs(rt - v), axis=1) / np.max(np.abs(v), axis=1)
        norms = np.linalg.norm(v, axis=1)
        iso_err = np.abs(np.linalg.norm(fwht_forward(v), axis=1) - norms) / norms
        worst_rt = max(worst_rt, float(rt_err.max()))
        worst_iso = max(worst_iso, float(iso_err.max()))
    ok = worst_rt <= 1e-5 and worst_iso <= 1e-5
    return CheckResult(
        "involution-isometry", ok, f"round-trip {worst_rt:.2e}, norm drift {worst_iso:.2e} (rel)"
    )


def _check_outlier_bound() -> CheckResult:
    """max |transformed coefficient| never exceeds l1/sqrt(n); zero violations allowed."""
    rng = np.random.default_rng(103)
    n = 256
    violations = 0
    worst_margin = math.inf
    for draw in range(4):
        if draw == 0:
            v = rng.normal(size=(2500, n))
        elif draw == 1:
            v = rng.laplace(size=(2500, n)) * 10.0
        elif draw == 2:
            v = rng.standard_t(3, size=(2500, n)) * 0.01
        else:
            v = rng.normal(size=(2500, n))
            v[:, 0] *= 100.0
        bound = np.sum(np.abs(v), axis=1) / math.sqrt(n)
        peak = np.max(np.abs(fwht_forward(v)), axis=1)
        violations += int(np.sum(peak > bound))
        worst_margin = min(worst_margin, float(np.min(bound - peak)))
    return CheckResult(
        "outlier-bound", violations == 0, f"{violations} violations in 10000, min margin {worst_margin:.3e}"
    )


def _check_impulse_spreading() -> CheckResult:
    worst = 0.0
    for j, m in ((0, 1.0), (37, 7.5), (200, -3.0), (255, 1e4)):
        v = np.zeros(256)
        v[j] = m
        out = fwht_forward(v)
        worst = max(worst, float(np.max(np.abs(np.abs(out) - abs(m) / 16.0)) / abs(m)))
    return CheckResult("impulse-spreading", worst <= 1e-6, f"max deviation {worst:.2e} of |M|")


def _check_smoothing() -> CheckResult:
    """Transformed iid-Laplace blocks pool to near-Gaussian excess kurtosis."""
    rng = np.random.default_rng(105)
    y = fwht_forward(rng.laplace(size=(10000, 256))).reshape(-1)
    mu = y.mean()
    var = np.mean((y - mu) ** 2)
    kurt = float(np.mean((y - mu) ** 4) / var**2 - 3.0)
    ok = -0.3 <= kurt <= 0.3
    return CheckResult("smoothing", ok, f"pooled excess kurtosis {kurt:.4f} (input Laplace has 3)")


def _mixed_blocks(rng, count: int, n: int = 256) -> np.ndarray:
    quarter = count // 4
    blocks = [
        rng.normal(size=(quarter, n)),
        rng.laplace(size=(quarter, n)),
        rng.standard_t(3, size=(quarter, n)),
        rng.normal(size=(count - 3 * quarter, n)),
    ]
    blocks[3][:, : n // 100 + 1] *= 20.0
    return np.vstack(blocks)


def _stored_grid_error(y: np.ndarray, blk) -> float:
    codes = blk.codes().astype(np.float64)
    if blk.sub_scale_bits is None:
        deq = blk.scale * (codes - blk.zp)
    else:
        deq = np.repeat(np.asarray(blk.sub_scales), blk.n // 8) * (codes - blk.zp)
    return float(np.linalg.norm(deq - y))


def _check_error_transfer() -> CheckResult:
    rng = np.random.default_rng(106)
    blocks = _mixed_blocks(rng, 1000)
    cfg = QuantConfig()
    violations = 0
    worst = 0.0
    for w in blocks:
        b = encode_block(w, cfg)
        werr = float(np.linalg.norm(decode_block(b) - w))
        terr = _stored_grid_error(fwht_forward(w), b)
        rel = abs(werr - terr) / (terr + 1e-12)
        worst = max(worst, rel)
        if rel > 1e-4:
            violations += 1
    return CheckResult(
        "error-transfer", violations == 0, f"{violations} of 1000 blocks off, worst rel gap {worst:.2e}"
    )


def _check_grid_bound() -> CheckResult:
    """Squared error of clamp-free blocks stays within the n d^2/4 grid budget."""
    rng = np.random.default_rng(107)
    n = 256
    signs = rng.choice([-1.0, 1.0], size=(200, n)) * rng.uniform(0.95, 1.05, size=(200, n))
    pool = np.vstack([fwht_inverse(signs), rng.normal(size=(500, n))])
    cfg = QuantConfig()
    checked = 0
    violations = 0
    for w in pool:
        b = encode_block(w, cfg)
        y = fwht_forward(w)
        if b.scale <= 0 or np.max(np.abs(y)) >= 1.5 * b.scale:
            continue  # clamped or degenerate: bound not claimed
        checked += 1
        err2 = float(np.sum((decode_block(b) - w) ** 2))
        if err2 > n * b.scale**2 / 4.0 + 1e-6:
            violations += 1
    ok = violations == 0 and checked >= 200
    return CheckResult("grid-bound", ok, f"{checked} clamp-free blocks checked, {violations} violations")


def _check_scale_oracle() -> CheckResult:
    """Grid minimizer of the Gaussian objective vs an independent Monte-Carlo minimizer."""
    t_grid = argmin_scale_coeff()
    x = np.random.default_rng(108).standard_normal(10**7)
    offsets = np.array([-0.02, -0.01, 0.0, 0.01, 0.02])
    candidates = t_grid + offsets
    mses = []
    for t in candidates:
        recon = np.where(np.abs(x) > t, t * np.sign(x), 0.0)
        mses.append(float(np.mean((x - recon) ** 2)))
    t_mc = float(candidates[int(np.argmin(mses))])
    closed = float(math.sqrt(2.0) * special.erfinv(2.0 / 3.0))
    ok = abs(t_mc - t_grid) <= 0.02
    note = "" if abs(t_grid - DEFAULT_SCALE_COEFF) < 1e-3 else " (differs from stored default; informational)"
    return CheckResult(
        "scale-oracle",
        ok,
        f"grid {t_grid:.3f}, monte-carlo {t_mc:.3f}, stored default {DEFAULT_SCALE_COEFF}, "
        f"closed-form candidate {closed:.4f}{note}",
    )


def _check_packing() -> CheckResult:
    import itertools

    for combo in itertools.product((-1, 0, 1), repeat=8):
        q = np.array(combo, dtype=np.int8)
        if not np.array_equal(unpack_ternary(pack_ternary(q), 8), q):
            return CheckResult("packing", False, f"exhaustive n=8 mismatch at {combo}")
    rng = np.random.default_rng(109)
    for _ in range(10**4):
        q = rng.integers(-1, 2, size=256).astype(np.int8)
        if not np.array_equal(unpack_ternary(pack_ternary(q), 256), q):
            return CheckResult("packing", False, "random n=256 round-trip mismatch")
    q = np.zeros(256, dtype=np.int8)
    s = len(serialize_block(q, TernaryGrid(d=1.0)))
    ss = len(serialize_block(q, TernaryGrid(d=1.0), sub_scales=[1.0] * 8))
    ok = (s, ss) == (100, 116)
    return CheckResult("packing", ok, f"6561 exhaustive + 10000 random round trips, sizes {s}/{ss} bytes")


def _check_f16_codec() -> CheckResult:
    mism = 0
    for bits in range(65536):
        x = decode_f16(bits)
        back = encode_f16(x)
        want = F16_NAN if math.isnan(x) else bits
        if back != want:
            mism += 1
    return CheckResult("f16-codec", mism == 0, f"{mism} mismatches over 65536 patterns")


def _check_rotation_benefit() -> CheckResult:
    w = generate_weights("outlier", 500, 512, seed=0)
    m = rotation_benefit(w, QuantConfig())
    ok = m["rotated"] < m["unrotated"] and m["rotated"] < m["uniform3"]
    return CheckResult(
        "rotation-benefit",
        ok,
        f"median block mse: rotated {m['rotated']:.4f}, unrotated {m['unrotated']:.4f}, "
        f"uniform3 {m['uniform3']:.4f} (1000 blocks)",
    )


def _check_ablation_trend() -> CheckResult:
    rows = ablate_block_size(sweep=(32, 64, 128, 256), dist="outlier", rows=32, cols=512, base_seed=0)
    mses = [r.mse for r in rows]
    ok = all(b <= a for a, b in zip(mses, mses[1:]))
    listing = ", ".join(f"{r.block_n}: {r.mse:.4f}" for r in rows)
    return CheckResult("ablation-trend", ok, f"median mse by block size {listing}")


def _check_fused_equivalence() -> CheckResult:
    rng = np.random.default_rng(113)
    worst = 0.0
    for shape, variant in (((8, 512), "s"), ((16, 1024), "ss"), ((64, 4096), "s")):
        w = rng.normal(size=shape)
        q = quantize_tensor(w, QuantConfig(variant=variant))
        dense = dequantize_tensor(q)
        x = rng.normal(size=shape[1])
        xm = rng.normal(size=(shape[1], 3))
        for got, want in (
            (fused_matvec(q, x), dense @ x),
            (fused_matmul(q, xm), dense @ xm),
        ):
            rel = np.max(np.abs(got - want) / (np.abs(want) + 1e-12))
            worst = max(worst, float(rel))
    return CheckResult("fused-equivalence", worst <= 1e-5, f"worst per-element rel error {worst:.2e}")


def _check_container_roundtrip() -> CheckResult:
    rng = np.random.default_rng(114)
    for i in range(100):
        rows = int(rng.integers(1, 7))
        cols = int(rng.integers(33, 700))
        cfg = QuantConfig(variant="ss" if i % 3 == 0 else "s", symmetric=i % 5 != 0)
        q = quantize_tensor(rng.normal(size=(rows, cols)), cfg)
        buf = io.BytesIO()
        write_container(q, buf)
        data = buf.getvalue()
        q2 = read_container(data)
        buf2 = io.BytesIO()
        write_container(q2, buf2)
        if q2 != q or buf2.getvalue() != data:
            return CheckResult("container-roundtrip", False, f"mismatch at tensor {i} ({rows}x{cols})")
    return CheckResult("container-roundtrip", True, "100 randomized tensors bit-identical")


CHECKS = (
    _check_transform_oracle,
    _check_involution_isometry,
    _check_outlier_bound,
    _check_impulse_spreading,
    _check_smoothing,
    _check_error_transfer,
    _check_grid_bound,
    _check_scale_oracle,
    _check_packing,
    _check_f16_codec,
    _check_rotation_benefit,
    _check_ablation_trend,
    _check_fused_equivalence,
    _check_container_roundtrip,
)


def run_selfcheck() -> list[CheckResult]:
    """Run every embedded check in order and collect the verdicts."""
    return [check() for check in CHECKS]
