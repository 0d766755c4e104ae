import numpy as np
import pytest

from qbath.rng import RngStream, chunk_sizes, map_chunks


def test_same_key_same_draws():
    a = RngStream(7, 3).generator(5).random(10)
    b = RngStream(7, 3).generator(5).random(10)
    assert np.array_equal(a, b)


def test_distinct_keys_distinct_draws():
    base = RngStream(7).generator(0).random(4)
    assert not np.array_equal(base, RngStream(7).generator(1).random(4))
    assert not np.array_equal(base, RngStream(7, 1).generator(0).random(4))
    assert not np.array_equal(base, RngStream(8).generator(0).random(4))


def test_seed_masked_to_64_bits():
    assert RngStream(-1).seed == 2 ** 64 - 1
    assert RngStream(2 ** 64 + 5).seed == 5


def test_chunk_sizes():
    assert chunk_sizes(0) == []
    assert chunk_sizes(10, 4) == [4, 4, 2]
    assert sum(chunk_sizes(100_001)) == 100_001
    with pytest.raises(ValueError):
        chunk_sizes(-1)


@pytest.mark.parametrize("threads", [1, 2, 5])
def test_map_chunks_independent_of_threads(threads):
    fn = lambda gen, size: gen.standard_normal(size)
    ref = np.concatenate(map_chunks(fn, 50_000, RngStream(1), chunk=4096))
    got = np.concatenate(map_chunks(fn, 50_000, RngStream(1), chunk=4096, threads=threads))
    assert np.array_equal(ref, got)
