import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coresel.features import (
    BadMagicError,
    FeatureFileError,
    FeatureMatrix,
    NonFiniteValueError,
    RowCountMismatchError,
    TruncatedPayloadError,
    ZeroNormRowError,
    concat_features,
    load_features,
    normalize_rows,
    write_features,
)
from util import unit_rows

HEADER = struct.Struct("<4sIQI")


def raw_fvec(rows, dim, values, magic=b"FVEC", version=1):
    payload = np.asarray(values, dtype="<f4").tobytes()
    return HEADER.pack(magic, version, rows, dim) + payload


class TestFvecIO:
    def test_well_formed_roundtrip(self, tmp_path):
        path = tmp_path / "f.fvec"
        path.write_bytes(raw_fvec(2, 3, [1, 2, 3, 4, 5, 6]))
        m = load_features(path)
        assert (m.rows, m.dim) == (2, 3)
        np.testing.assert_array_equal(m.data, [[1, 2, 3], [4, 5, 6]])

    def test_write_then_load_bitwise(self, tmp_path):
        rng = np.random.default_rng(3)
        m = FeatureMatrix.from_array(rng.normal(size=(5, 7)))
        path = tmp_path / "f.fvec"
        write_features(m, path)
        np.testing.assert_array_equal(load_features(path).data, m.data)

    def test_truncated_payload(self, tmp_path):
        path = tmp_path / "f.fvec"
        path.write_bytes(raw_fvec(2, 3, [1, 2, 3, 4, 5]))
        with pytest.raises(TruncatedPayloadError):
            load_features(path)

    def test_nan_reports_row_and_col(self, tmp_path):
        path = tmp_path / "f.fvec"
        path.write_bytes(raw_fvec(2, 3, [1, 2, 3, float("nan"), 5, 6]))
        with pytest.raises(NonFiniteValueError) as err:
            load_features(path)
        assert (err.value.row, err.value.col) == (1, 0)

    def test_inf_rejected(self, tmp_path):
        path = tmp_path / "f.fvec"
        path.write_bytes(raw_fvec(1, 2, [float("inf"), 0.0]))
        with pytest.raises(NonFiniteValueError):
            load_features(path)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "f.fvec"
        path.write_bytes(raw_fvec(1, 1, [1.0], magic=b"NOPE"))
        with pytest.raises(BadMagicError):
            load_features(path)

    def test_unsupported_version(self, tmp_path):
        path = tmp_path / "f.fvec"
        path.write_bytes(raw_fvec(1, 1, [1.0], version=2))
        with pytest.raises(FeatureFileError, match="version"):
            load_features(path)

    def test_trailing_bytes_rejected(self, tmp_path):
        path = tmp_path / "f.fvec"
        path.write_bytes(raw_fvec(1, 1, [1.0]) + b"\x00\x00\x00\x00")
        with pytest.raises(FeatureFileError, match="trailing"):
            load_features(path)

    def test_zero_dim_rejected(self, tmp_path):
        path = tmp_path / "f.fvec"
        path.write_bytes(raw_fvec(1, 0, []))
        with pytest.raises(FeatureFileError):
            load_features(path)

    def test_zero_rows_allowed(self, tmp_path):
        path = tmp_path / "f.fvec"
        path.write_bytes(raw_fvec(0, 4, []))
        assert load_features(path).rows == 0


class TestNormalizeRows:
    def test_three_four_five(self):
        m = normalize_rows(FeatureMatrix.from_array([[3.0, 4.0]]))
        np.testing.assert_allclose(m.data, [[0.6, 0.8]], atol=1e-6)

    def test_unit_norm_within_tolerance(self):
        rng = np.random.default_rng(11)
        m = normalize_rows(FeatureMatrix.from_array(rng.normal(size=(40, 9))))
        norms = np.linalg.norm(m.data.astype(np.float64), axis=1)
        np.testing.assert_allclose(norms, 1.0, atol=1e-6)

    def test_idempotent(self):
        rng = np.random.default_rng(12)
        once = normalize_rows(FeatureMatrix.from_array(rng.normal(size=(10, 5))))
        twice = normalize_rows(once)
        np.testing.assert_allclose(twice.data, once.data, atol=1e-6)

    def test_direction_preserved(self):
        raw = np.array([[2.0, 0.0, 0.0], [1.0, 1.0, 0.0]], dtype=np.float32)
        normed = normalize_rows(FeatureMatrix.from_array(raw)).data.astype(np.float64)
        for before, after in zip(raw.astype(np.float64), normed):
            cos = (before @ after) / (np.linalg.norm(before) * np.linalg.norm(after))
            assert cos == pytest.approx(1.0, abs=1e-7)

    def test_zero_norm_row_reports_index(self):
        m = FeatureMatrix.from_array([[1.0, 0.0], [0.0, 0.0]])
        with pytest.raises(ZeroNormRowError) as err:
            normalize_rows(m)
        assert err.value.row == 1


class TestConcat:
    def test_dims_and_order(self):
        a = FeatureMatrix.from_array([[1.0, 2.0], [5.0, 6.0]])
        b = FeatureMatrix.from_array([[3.0, 4.0, 9.0], [7.0, 8.0, 10.0]])
        joined = concat_features([a, b])
        assert joined.dim == 5
        np.testing.assert_array_equal(
            joined.data, [[1, 2, 3, 4, 9], [5, 6, 7, 8, 10]]
        )

    def test_row_mismatch(self):
        a = FeatureMatrix.from_array(np.zeros((2, 2)) + 1.0)
        b = FeatureMatrix.from_array(np.zeros((3, 2)) + 1.0)
        with pytest.raises(RowCountMismatchError):
            concat_features([a, b])

    def test_two_unit_parts_squared_norm_two(self):
        rng = np.random.default_rng(21)
        a = FeatureMatrix.from_array(unit_rows(15, 6, rng))
        b = FeatureMatrix.from_array(unit_rows(15, 10, rng))
        joined = concat_features([a, b]).data.astype(np.float64)
        np.testing.assert_allclose(np.sum(joined**2, axis=1), 2.0, atol=1e-6)

    def test_three_unit_parts_squared_norm_three(self):
        # independent check: per-row squared norm of the concatenation must
        # equal the sum of the parts' squared norms, computed directly
        rng = np.random.default_rng(22)
        parts = [
            FeatureMatrix.from_array(unit_rows(12, d, rng)) for d in (8, 5, 11)
        ]
        joined = concat_features(parts).data.astype(np.float64)
        joined_sq = np.sum(joined**2, axis=1)
        direct_sq = sum(
            np.sum(p.data.astype(np.float64) ** 2, axis=1) for p in parts
        )
        np.testing.assert_allclose(joined_sq, direct_sq, rtol=1e-12)
        np.testing.assert_allclose(joined_sq, 3.0, atol=1e-6)

    def test_associativity_exact(self):
        rng = np.random.default_rng(23)
        a, b, c = (FeatureMatrix.from_array(rng.normal(size=(4, d))) for d in (2, 3, 4))
        left = concat_features([concat_features([a, b]), c])
        flat = concat_features([a, b, c])
        np.testing.assert_array_equal(left.data, flat.data)

    def test_empty_parts_rejected(self):
        with pytest.raises(ValueError):
            concat_features([])


class TestUnitNormIdentity:
    """||x - y||^2 == 2 - 2*cos(x, y) for unit vectors."""

    @settings(max_examples=200, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), dim=st.integers(2, 64))
    def test_identity_property(self, seed, dim):
        rng = np.random.default_rng(seed)
        x, y = unit_rows(2, dim, rng).astype(np.float32).astype(np.float64)
        sq = float((x - y) @ (x - y))
        cos = float(x @ y) / (np.linalg.norm(x) * np.linalg.norm(y))
        assert abs(sq - (2.0 - 2.0 * cos)) < 1e-5


class TestFromArray:
    def test_rejects_nan(self):
        with pytest.raises(NonFiniteValueError):
            FeatureMatrix.from_array([[0.0, float("nan")]])

    def test_rejects_1d(self):
        with pytest.raises(ValueError):
            FeatureMatrix.from_array([1.0, 2.0])

    def test_data_is_read_only(self):
        m = FeatureMatrix.from_array([[1.0, 2.0]])
        with pytest.raises(ValueError):
            m.data[0, 0] = 5.0
