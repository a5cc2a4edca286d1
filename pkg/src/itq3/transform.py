"""Normalized fast Walsh-Hadamard transform for power-of-two block lengths.

All operations use the orthonormal convention: a single multiplication by
``1/sqrt(n)`` after the butterfly stages, so the transform is involutory
(applying it twice returns the input) and an isometry (the l2 norm is
preserved).  Arithmetic is carried out in the dtype of the input; pass
float64 data when tight tolerances are needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError, LengthError

MAX_BLOCK_LEN = 512
MIN_BLOCK_LEN = 2
ORACLE_MAX_LEN = 64


def is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


def _as_block(v, op: str) -> np.ndarray:
    """Validate and convert input to a float ndarray transformed along the last axis."""
    a = np.asarray(v)
    if not np.issubdtype(a.dtype, np.inexact):
        a = a.astype(np.float64)
    if a.ndim == 0 or a.shape[-1] == 0:
        raise LengthError(f"{op}: input must have at least one axis of length >= {MIN_BLOCK_LEN}")
    n = a.shape[-1]
    if not is_power_of_two(n) or n < MIN_BLOCK_LEN or n > MAX_BLOCK_LEN:
        raise LengthError(
            f"{op}: block length must be a power of two in [{MIN_BLOCK_LEN}, {MAX_BLOCK_LEN}], got {n}"
        )
    if not np.all(np.isfinite(a)):
        raise DomainError(f"{op}: input contains non-finite values")
    return a


def _butterfly_last_axis(a: np.ndarray) -> np.ndarray:
    """Unnormalized butterfly network along the last axis, ascending step order."""
    n = a.shape[-1]
    lead = a.shape[:-1]
    y = a.reshape(-1, n).copy()
    h = 1
    while h < n:
        y = y.reshape(-1, n // (2 * h), 2, h)
        lo = y[:, :, 0, :]
        hi = y[:, :, 1, :]
        y = np.stack((lo + hi, lo - hi), axis=2).reshape(-1, n)
        h *= 2
    return y.reshape(*lead, n)


def fwht_forward(v) -> np.ndarray:
    """Apply the normalized Walsh-Hadamard transform along the last axis.

    Parameters
    ----------
    v:
        Real array whose last axis has a power-of-two length in
        [2, 512].  All values must be finite.

    Returns
    -------
    numpy.ndarray
        Transformed array of the same shape and dtype.  The input is not
        modified.

    Notes
    -----
    The result equals multiplication by the orthonormal Hadamard matrix:
    ``log2(n)`` butterfly stages of pairwise ``(u, v) -> (u+v, u-v)``
    updates followed by a single ``1/sqrt(n)`` normalization.  Because the
    matrix is symmetric orthonormal, the transform is its own inverse.
    """
    a = _as_block(v, "fwht_forward")
    n = a.shape[-1]
    out = _butterfly_last_axis(a)
    norm = np.asarray(1.0 / math.sqrt(n), dtype=out.dtype)
    return out * norm


def fwht_inverse(v) -> np.ndarray:
    """Inverse transform; identical to :func:`fwht_forward` (the transform is involutory)."""
    a = _as_block(v, "fwht_inverse")
    n = a.shape[-1]
    out = _butterfly_last_axis(a)
    norm = np.asarray(1.0 / math.sqrt(n), dtype=out.dtype)
    return out * norm


@lru_cache(maxsize=None)
def _hadamard_entries(n: int) -> np.ndarray:
    # Sylvester doubling with +-1 integer entries; normalization applied by the caller.
    if n == 1:
        return np.array([[1]], dtype=np.int64)
    h = _hadamard_entries(n // 2)
    return np.block([[h, h], [h, -h]])


def hadamard_matrix(n: int) -> np.ndarray:
    """Dense orthonormal Hadamard matrix of order n (n a power of two <= 64)."""
    if not is_power_of_two(n) or n < MIN_BLOCK_LEN or n > ORACLE_MAX_LEN:
        raise LengthError(
            f"hadamard_matrix: order must be a power of two in [{MIN_BLOCK_LEN}, {ORACLE_MAX_LEN}], got {n}"
        )
    return _hadamard_entries(n).astype(np.float64) / math.sqrt(n)


def hadamard_oracle(v) -> np.ndarray:
    """Transform via explicit dense matrix multiplication (test oracle).

    O(n^2) and limited to n <= 64 by design; computes in float64.
    """
    a = _as_block(v, "hadamard_oracle")
    n = a.shape[-1]
    if n > ORACLE_MAX_LEN:
        raise LengthError(f"hadamard_oracle: length {n} exceeds oracle limit {ORACLE_MAX_LEN}")
    h = hadamard_matrix(n)
    # h is symmetric, so right-multiplication transforms the last axis.
    return a.astype(np.float64) @ h


@dataclass(frozen=True)
class StageTrace:
    """Per-stage butterfly states of a staged transform.

    ``stages[s]`` is the (unnormalized) block after butterfly step
    ``2**s``; ``final`` is the last stage scaled by ``1/sqrt(n)`` and
    equals ``fwht_forward`` of the input.
    """

    stages: tuple[np.ndarray, ...]
    final: np.ndarray

    @property
    def stage_count(self) -> int:
        return len(self.stages)


def fwht_staged(v) -> StageTrace:
    """Stage-by-stage transform mirroring a shared-memory butterfly schedule.

    Each stage reads only the previous stage's buffer (double buffering):
    lane ``j`` pairs with lane ``j XOR step`` and writes ``u+v`` on the low
    lane and ``u-v`` on the high lane.  An in-place schedule without a
    barrier between the write and the next iteration's reads would race on
    the shared buffer; the per-stage snapshot removes that hazard while
    producing identical values.
    """
    a = _as_block(v, "fwht_staged")
    if a.ndim != 1:
        raise LengthError("fwht_staged: expects a single 1-D block")
    n = a.shape[0]
    idx = np.arange(n)
    cur = a.copy()
    stages = []
    step = 1
    while step < n:
        partner = cur[idx ^ step]
        high = (idx & step) != 0
        cur = np.where(high, partner - cur, cur + partner)
        stages.append(cur.copy())
        step *= 2
    norm = np.asarray(1.0 / math.sqrt(n), dtype=cur.dtype)
    return StageTrace(stages=tuple(stages), final=cur * norm)


def fwht32_warp(v) -> np.ndarray:
    """32-point transform in the intra-warp style: 5 XOR-partner stages, then 1/sqrt(32).

    Equivalent to :func:`fwht_forward` on length-32 input; exposed as a
    standalone primitive for the 32-lane execution model and not composed
    into larger transforms.
    """
    a = np.asarray(v)
    if not np.issubdtype(a.dtype, np.inexact):
        a = a.astype(np.float64)
    if a.ndim != 1 or a.shape[0] != 32:
        raise LengthError(f"fwht32_warp: expects a 1-D block of length 32, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DomainError("fwht32_warp: input contains non-finite values")
    idx = np.arange(32)
    cur = a.copy()
    for step in (1, 2, 4, 8, 16):
        partner = cur[idx ^ step]
        high = (idx & step) != 0
        cur = np.where(high, partner - cur, cur + partner)
    norm = np.asarray(1.0 / math.sqrt(32.0), dtype=cur.dtype)
    return cur * norm
