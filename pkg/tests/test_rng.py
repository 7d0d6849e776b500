import numpy as np

from lclab.model.rng import (
    N_LANES,
    Xoshiro256StarStar,
    fnv1a64,
    splitmix64_mix,
    splitmix64_sequence,
    stream_seed,
)


def _ref_splitmix64(seed, n):
    # Direct transcription of the published reference algorithm.
    mask = (1 << 64) - 1
    s = seed & mask
    out = []
    for _ in range(n):
        s = (s + 0x9E3779B97F4A7C15) & mask
        z = s
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & mask
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & mask
        out.append(z ^ (z >> 31))
    return out


def _ref_xoshiro(state4, n):
    mask = (1 << 64) - 1

    def rotl(x, k):
        return ((x << k) | (x >> (64 - k))) & mask

    s0, s1, s2, s3 = state4
    out = []
    for _ in range(n):
        out.append((rotl((s1 * 5) & mask, 7) * 9) & mask)
        t = (s1 << 17) & mask
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = rotl(s3, 45)
    return out


class TestSplitmix64:
    def test_against_pure_python_reference(self):
        for seed in (0, 1, 42, (1 << 64) - 1):
            got = splitmix64_sequence(seed, 8).tolist()
            assert got == _ref_splitmix64(seed, 8)

    def test_mix_zero(self):
        # mix(0) = 0 by construction of the xor-multiply chain
        assert splitmix64_mix(0) == 0

    def test_mix_masks_to_64_bits(self):
        assert splitmix64_mix(1 << 70) == splitmix64_mix((1 << 70) & ((1 << 64) - 1))


class TestFnv1a64:
    def test_empty_is_offset_basis(self):
        assert fnv1a64("") == 0xCBF29CE484222325

    def test_single_byte(self):
        # one FNV-1a step by hand
        expected = ((0xCBF29CE484222325 ^ ord("a")) * 0x100000001B3) & ((1 << 64) - 1)
        assert fnv1a64("a") == expected

    def test_distinct_names(self):
        names = ["tok_embed", "lm_head", "layers.0.attn.wq", "layers.1.attn.wq"]
        assert len({fnv1a64(n) for n in names}) == len(names)


class TestStreamSeed:
    def test_name_dependence(self):
        assert stream_seed(7, "a") != stream_seed(7, "b")
        assert stream_seed(7, "a") != stream_seed(8, "a")

    def test_deterministic(self):
        assert stream_seed(123, "layers.0.attn.wq") == stream_seed(123, "layers.0.attn.wq")


class TestXoshiroLanes:
    def test_round_robin_matches_scalar_reference(self):
        seed = 99
        words = _ref_splitmix64(seed, 4 * N_LANES)
        lanes = [
            _ref_xoshiro(words[4 * lane : 4 * lane + 4], 3) for lane in range(N_LANES)
        ]
        expected = [lanes[i % N_LANES][i // N_LANES] for i in range(2 * N_LANES + 5)]
        got = Xoshiro256StarStar(seed).next_uint64(2 * N_LANES + 5).tolist()
        assert got == expected

    def test_buffering_is_transparent(self):
        a = Xoshiro256StarStar(5).next_uint64(300)
        rng = Xoshiro256StarStar(5)
        b = np.concatenate([rng.next_uint64(n) for n in (1, 63, 64, 100, 72)])
        assert np.array_equal(a, b)

    def test_uniforms_in_half_open_unit_interval(self):
        u = Xoshiro256StarStar(3).uniforms(10_000)
        assert np.all(u > 0.0) and np.all(u <= 1.0)
        assert abs(u.mean() - 0.5) < 0.02

    def test_normals_moments(self):
        z = Xoshiro256StarStar(11).normals(100_000)
        assert abs(z.mean()) < 0.02
        assert abs(z.std() - 1.0) < 0.02

    def test_normals_deterministic(self):
        a = Xoshiro256StarStar(1).normals(1000)
        b = Xoshiro256StarStar(1).normals(1000)
        assert np.array_equal(a, b)

    def test_randint_below_range(self):
        rng = Xoshiro256StarStar(2)
        vals = [rng.randint_below(10) for _ in range(500)]
        assert min(vals) >= 0 and max(vals) < 10
        assert len(set(vals)) == 10
