import tempfile
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eisp.serialization import load_records, save_records


def test_round_trip_bit_exact(tmp_path, rng):
    arrays = {
        "w0": rng.standard_normal((3, 4)),
        "steps": np.arange(5, dtype=np.int64),
        "scalar": np.array(3.25),
    }
    meta = {"version": 1, "kind": "checkpoint", "note": "abc"}
    path = tmp_path / "ck.bin"
    save_records(path, meta, arrays)
    meta2, arrays2 = load_records(path)
    assert meta2 == meta
    assert set(arrays2) == set(arrays)
    for k in arrays:
        assert arrays2[k].dtype == arrays[k].dtype
        np.testing.assert_array_equal(arrays2[k], arrays[k])


def test_same_content_same_bytes(tmp_path, rng):
    arrays = {"a": rng.standard_normal(8), "b": np.array([1, 2], dtype=np.int64)}
    p1, p2 = tmp_path / "one.bin", tmp_path / "two.bin"
    save_records(p1, {"v": 1}, arrays)
    save_records(p2, {"v": 1}, dict(reversed(list(arrays.items()))))
    assert p1.read_bytes() == p2.read_bytes()


def test_bad_magic_rejected(tmp_path):
    p = tmp_path / "junk.bin"
    p.write_bytes(b"NOTAFILE" + b"\x00" * 16)
    with pytest.raises(ValueError):
        load_records(p)


def test_truncation_rejected(tmp_path, rng):
    p = tmp_path / "ck.bin"
    save_records(p, {}, {"a": rng.standard_normal(100)})
    data = p.read_bytes()
    p.write_bytes(data[: len(data) - 8])
    with pytest.raises(ValueError):
        load_records(p)


def test_unsupported_dtype_rejected(tmp_path):
    with pytest.raises(TypeError):
        save_records(tmp_path / "x.bin", {}, {"a": np.zeros(3, dtype=np.float32)})


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), n_arrays=st.integers(0, 5))
def test_round_trip_random_shapes(seed, n_arrays):
    rng = np.random.default_rng(seed)
    arrays = {}
    for i in range(n_arrays):
        ndim = int(rng.integers(0, 4))
        shape = tuple(int(s) for s in rng.integers(1, 5, size=ndim))
        if rng.integers(0, 2):
            arrays[f"f{i}"] = rng.standard_normal(shape)
        else:
            arrays[f"i{i}"] = rng.integers(-10, 10, size=shape).astype(np.int64)
    with tempfile.TemporaryDirectory() as d:
        p = Path(d) / f"r{seed}.bin"
        save_records(p, {"seed": seed}, arrays)
        meta, back = load_records(p)
    assert meta["seed"] == seed
    for k, v in arrays.items():
        np.testing.assert_array_equal(back[k], v)
