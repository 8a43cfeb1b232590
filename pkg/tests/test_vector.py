import random

import numpy as np

from qrechacha import CipherParams, QrnSessionMaterial, keystream_block
from qrechacha import vector
from qrechacha.cipher import init_state, run_rounds as scalar_rounds

rand = random.Random(0xBA7C4)


def rand_words(n):
    return tuple(rand.getrandbits(32) for _ in range(n))


def rand_material(rounds):
    return QrnSessionMaterial(rand_words(4), tuple(rand_words(4) for _ in range(rounds // 2)))


def test_single_block_matches_scalar():
    for rounds in (2, 8, 12, 20):
        params = CipherParams(rand_words(8), rand_words(3), rand.getrandbits(32), rounds)
        for mat in (None, rand_material(rounds)):
            assert vector.keystream_blocks(params, mat, params.counter, 1) == \
                keystream_block(params, mat)


def test_block_range_matches_scalar_loop():
    params = CipherParams(rand_words(8), rand_words(3), 1000, 12)
    mat = rand_material(12)
    got = vector.keystream_blocks(params, mat, 1000, 9)
    for t in range(9):
        p = CipherParams(params.key, params.nonce, 1000 + t, 12)
        assert got[64 * t : 64 * (t + 1)] == keystream_block(p, mat)


def test_run_rounds_matches_scalar():
    params = CipherParams(rand_words(8), rand_words(3), 17, 8)
    mat = rand_material(8)
    x0 = init_state(params, mat.const_mask)
    expect = scalar_rounds(x0, 8, mat.round_masks)
    x = np.array(x0, dtype=np.uint32).reshape(16, 1)
    vector.run_rounds(x, 8, np.asarray(mat.round_masks, dtype=np.uint32))
    assert [int(w) for w in x[:, 0]] == expect


def test_chunk_boundaries_equal():
    params = CipherParams(rand_words(8), rand_words(3), 0, 8)
    mat = rand_material(8)
    want = vector.keystream_bytes(params, mat, 1000, chunk_blocks=1 << 10)
    for chunk in (1, 2, 3, 7, 16):
        assert vector.keystream_bytes(params, mat, 1000, chunk_blocks=chunk) == want


def test_xor_chunk_boundaries_equal():
    params = CipherParams(rand_words(8), rand_words(3), 0, 8)
    mat = rand_material(8)
    data = bytes(rand.getrandbits(8) for _ in range(1000))
    want = vector.xor_with_keystream(params, mat, data, chunk_blocks=1 << 10)
    for chunk in (1, 3, 7):
        assert vector.xor_with_keystream(params, mat, data, chunk_blocks=chunk) == want


def test_keystream_bytes_prefix_property():
    params = CipherParams(rand_words(8), rand_words(3), 5, 20)
    mat = rand_material(20)
    long = vector.keystream_bytes(params, mat, 777)
    assert vector.keystream_bytes(params, mat, 100) == long[:100]


def test_feedforward_batch_matches_per_column():
    rounds = 8
    mat = rand_material(rounds)
    masks = np.asarray(mat.round_masks, dtype=np.uint32)
    rng = np.random.default_rng(3)
    x0 = rng.integers(0, 1 << 32, size=(16, 50), dtype=np.uint32)
    z = vector.feedforward(x0.copy(), rounds, masks)
    for col in (0, 17, 49):
        state = [int(w) for w in x0[:, col]]
        xr = scalar_rounds(state, rounds, mat.round_masks)
        expect = [(a + b) & 0xFFFFFFFF for a, b in zip(state, xr)]
        assert [int(w) for w in z[:, col]] == expect
