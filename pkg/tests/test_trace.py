"""Canonical float rendering and trace hashing tests."""

from pearlsim.trace import TraceHasher, canon, fnv1a64


class TestCanon:
    def test_six_fractional_digits(self):
        assert canon(0.1) == "0.100000"
        assert canon(3.0) == "3.000000"
        assert canon(-2.5) == "-2.500000"

    def test_rounding_at_the_sixth_digit(self):
        assert canon(2.5e-07) == "0.000000"
        assert canon(7.5e-07) == "0.000001"
        assert canon(1.9999996) == "2.000000"

    def test_negative_zero_folds_to_zero(self):
        assert canon(-0.0) == "0.000000"
        assert canon(-1e-9) == "0.000000"


class TestFnv:
    def test_known_vectors(self):
        # Standard FNV-1a 64-bit test vectors.
        assert fnv1a64(b"") == 0xCBF29CE484222325
        assert fnv1a64(b"a") == 0xAF63DC4C8601EC8C
        assert fnv1a64(b"foobar") == 0x85944171F73967E8

    def test_resumable(self):
        assert fnv1a64(b"bar", fnv1a64(b"foo")) == fnv1a64(b"foobar")


class TestTraceHasher:
    def test_identical_updates_identical_digest(self):
        a, b = TraceHasher(), TraceHasher()
        for hasher in (a, b):
            hasher.update(0.01, 1.0, 2.0, 0.5)
            hasher.update(0.02, 1.1, 2.0, 0.5)
        assert a.digest == b.digest
        assert a.hexdigest == b.hexdigest
        assert len(a.hexdigest) == 16

    def test_sub_precision_noise_is_invisible(self):
        a, b = TraceHasher(), TraceHasher()
        a.update(0.01, 1.0, 2.0, 0.5)
        b.update(0.01, 1.0 + 1e-13, 2.0, 0.5)
        assert a.digest == b.digest

    def test_visible_difference_changes_digest(self):
        a, b = TraceHasher(), TraceHasher()
        a.update(0.01, 1.0, 2.0, 0.5)
        b.update(0.01, 1.001, 2.0, 0.5)
        assert a.digest != b.digest
