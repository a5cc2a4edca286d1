"""Rotation-domain 3-bit ternary weight codec.

Weights are rotated block by block with a normalized Walsh-Hadamard
transform, quantized to ternary codes on an analytically chosen grid,
and packed into a fixed 100- or 116-byte block layout.  The rotation is
an isometry, so transform-domain quantization error equals
reconstruction error, and it spreads any single outlier weight across
the whole block with magnitude reduced by sqrt(n).
"""

from .codec import (
    QuantConfig,
    QuantizedTensor,
    decode_block,
    dequantize_tensor,
    encode_block,
    quantize_tensor,
    read_container,
    write_container,
)
from .compute import (
    AblationRow,
    ErrorReport,
    ablate_block_size,
    eval_container,
    eval_error,
    fused_matmul,
    fused_matvec,
    generate_weights,
    report_csv,
    report_json,
    rotation_benefit,
)
from .errors import (
    BadMagicError,
    ContainerError,
    CorruptionError,
    DomainError,
    ItqError,
    LengthError,
    ShapeError,
    SizeMismatchError,
    TruncatedStreamError,
    UnsupportedVersionError,
)
from .packing import (
    PackedBlock,
    decode_f16,
    deserialize_block,
    encode_f16,
    pack_ternary,
    serialize_block,
    unpack_ternary,
)
from .quantizer import (
    BlockStats,
    ScalePolicy,
    TernaryGrid,
    argmin_scale_coeff,
    block_stats,
    optimal_scale,
    ternary_dequantize,
    ternary_mse,
    ternary_quantize,
    uniform_quantize,
)
from .selfcheck import CheckResult, run_selfcheck
from .transform import (
    StageTrace,
    fwht32_warp,
    fwht_forward,
    fwht_inverse,
    fwht_staged,
    hadamard_matrix,
    hadamard_oracle,
)

__version__ = "0.1.0"

__all__ = [
    "AblationRow",
    "BadMagicError",
    "BlockStats",
    "CheckResult",
    "ContainerError",
    "CorruptionError",
    "DomainError",
    "ErrorReport",
    "ItqError",
    "LengthError",
    "PackedBlock",
    "QuantConfig",
    "QuantizedTensor",
    "ScalePolicy",
    "ShapeError",
    "SizeMismatchError",
    "StageTrace",
    "TernaryGrid",
    "TruncatedStreamError",
    "UnsupportedVersionError",
    "ablate_block_size",
    "argmin_scale_coeff",
    "block_stats",
    "decode_block",
    "decode_f16",
    "dequantize_tensor",
    "deserialize_block",
    "encode_block",
    "encode_f16",
    "eval_container",
    "eval_error",
    "fused_matmul",
    "fused_matvec",
    "fwht32_warp",
    "fwht_forward",
    "fwht_inverse",
    "fwht_staged",
    "generate_weights",
    "hadamard_matrix",
    "hadamard_oracle",
    "optimal_scale",
    "pack_ternary",
    "quantize_tensor",
    "read_container",
    "report_csv",
    "report_json",
    "rotation_benefit",
    "run_selfcheck",
    "serialize_block",
    "ternary_dequantize",
    "ternary_mse",
    "ternary_quantize",
    "uniform_quantize",
    "unpack_ternary",
    "write_container",
]
