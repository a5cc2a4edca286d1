"""Full acceptance gate: every check in the embedded suite must hold.

The suite runs once per module; each test pins one property so a
failure names exactly what broke.  These are the same checks the
``itq3 selfcheck`` command executes.
"""

import pytest

from itq3.selfcheck import run_selfcheck


@pytest.fixture(scope="module")
def results():
    return {r.name: r for r in run_selfcheck()}


def _require(results, name):
    r = results[name]
    assert r.passed, f"{name}: {r.detail}"


def test_01_transform_matches_dense_oracle(results):
    _require(results, "transform-oracle")


def test_02_involution_and_isometry(results):
    _require(results, "involution-isometry")


def test_03_outlier_linf_bound(results):
    _require(results, "outlier-bound")


def test_04_impulse_spreading(results):
    _require(results, "impulse-spreading")


def test_05_smoothing_kurtosis(results):
    _require(results, "smoothing")


def test_06_error_transfer_equality(results):
    _require(results, "error-transfer")


def test_07_unclamped_grid_bound(results):
    _require(results, "grid-bound")


def test_08_scale_oracle_agreement(results):
    _require(results, "scale-oracle")


def test_09_packing_bijection_and_sizes(results):
    _require(results, "packing")


def test_10_f16_exhaustive_round_trip(results):
    _require(results, "f16-codec")


def test_11_rotation_benefit_medians(results):
    _require(results, "rotation-benefit")


def test_12_ablation_block_size_trend(results):
    # measured medians increase with block size on the outlier suite, so
    # this check currently fails; see the repository notes on known issues
    _require(results, "ablation-trend")


def test_13_fused_path_equivalence(results):
    _require(results, "fused-equivalence")


def test_14_container_bit_exact_round_trip(results):
    _require(results, "container-roundtrip")
