import numpy as np
import pytest

from retainkv.backbone.tensor_file import MAGIC, decode_tensors, encode_tensors, load_tensors, save_tensors, tensors_hash
from retainkv.exceptions import DataError, ShapeError


@pytest.fixture
def tensors():
    rng = np.random.default_rng(0)
    return {"b": rng.normal(size=(3, 2)), "a": rng.normal(size=4).astype(np.float32)}


def test_encoding_is_deterministic_and_lossless(tensors):
    blob = encode_tensors(tensors, {"kind": "test"})
    assert blob.startswith(MAGIC)
    assert blob == encode_tensors(dict(reversed(tensors.items())), {"kind": "test"})
    decoded, metadata = decode_tensors(blob)
    assert metadata == {"kind": "test"}
    for name, arr in tensors.items():
        assert decoded[name].dtype == arr.dtype
        assert np.array_equal(decoded[name], arr)


def test_file_round_trip_preserves_the_hash(tmp_path, tensors):
    path = save_tensors(tmp_path / "t.rkv", tensors)
    loaded, _ = load_tensors(path)
    assert tensors_hash(loaded) == tensors_hash(tensors)


@pytest.mark.parametrize("blob", [b"", b"NOPE" + bytes(8), MAGIC + (10**6).to_bytes(8, "little") + b"{}"])
def test_corrupt_containers_are_data_errors(blob):
    with pytest.raises(DataError):
        decode_tensors(blob)


def test_truncated_tensor_data(tensors):
    with pytest.raises(DataError):
        decode_tensors(encode_tensors(tensors)[:-3])


def test_unsupported_dtype():
    with pytest.raises(ShapeError):
        encode_tensors({"x": np.arange(3)})


def test_missing_file(tmp_path):
    with pytest.raises(DataError):
        load_tensors(tmp_path / "absent.rkv")
