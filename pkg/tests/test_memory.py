"""Copy-on-write snapshots against a naive full-copy oracle."""

import pickle
import random

import pytest

from wasmsym.errors import InternalEngineError
from wasmsym.memory import PAGE_SIZE, MemorySnapshot
from wasmsym.values.symbolic import Extract, Symbol, evaluate


class NaiveMemory:
    """Reference memory: a real byte array, copied wholesale on fork."""

    def __init__(self, size, data=None):
        self.size = size
        self.data = data if data is not None else bytearray(size)

    def fork(self):
        return NaiveMemory(self.size, bytearray(self.data)), NaiveMemory(
            self.size, bytearray(self.data)
        )

    def load(self, addr, width_bytes):
        return int.from_bytes(self.data[addr : addr + width_bytes], "little")

    def store(self, addr, value, width_bytes):
        self.data[addr : addr + width_bytes] = (value & ((1 << (8 * width_bytes)) - 1)).to_bytes(
            width_bytes, "little"
        )


class TestBasics:
    def test_new_size(self):
        m = MemorySnapshot.new(1)
        assert m.size == 65536

    def test_zero_initialized(self):
        m = MemorySnapshot.new(1)
        assert m.load(0, 1, "u", 32) == 0
        assert m.load(1000, 8, None, 64) == 0

    def test_zero_pages(self):
        m = MemorySnapshot.new(0)
        assert m.size == 0

    def test_little_endian_byte_extract(self):
        m = MemorySnapshot.new(1)
        m.store(100, 0x01020304, 4)
        assert m.load(103, 1, "u", 32) == 0x01
        assert m.load(100, 1, "u", 32) == 0x04
        assert m.load(100, 4, None, 32) == 0x01020304

    def test_read_own_write(self):
        m = MemorySnapshot.new(1)
        m.store(5, 0xAB, 1)
        assert m.load(5, 1, "u", 32) == 0xAB

    def test_sign_extension(self):
        m = MemorySnapshot.new(1)
        m.store(0, 0x80, 1)
        assert m.load(0, 1, "s", 32) == 0xFFFFFF80
        assert m.load(0, 1, "u", 32) == 0x80
        m.store(8, 0x8000, 2)
        assert m.load(8, 2, "s", 32) == 0xFFFF8000

    def test_truncating_store(self):
        m = MemorySnapshot.new(1)
        m.store(0, 0x11223344, 2)
        assert m.load(0, 2, "u", 32) == 0x3344
        assert m.load(2, 2, "u", 32) == 0


class TestFork:
    def test_isolation(self):
        m = MemorySnapshot.new(1)
        m.store(10, 7, 1)
        a, b = m.fork()
        a.store(10, 8, 1)
        assert a.load(10, 1, "u", 32) == 8
        assert b.load(10, 1, "u", 32) == 7
        assert m._byte(10) == 7

    def test_frozen_write_is_internal_error(self):
        m = MemorySnapshot.new(1)
        m.fork()
        with pytest.raises(InternalEngineError):
            m.store(0, 1, 1)

    def test_read_only_child_equals_parent(self):
        rng = random.Random(7)
        m = MemorySnapshot.new(1)
        for _ in range(200):
            m.store(rng.randrange(65536), rng.randrange(256), 1)
        child, _ = m.fork()
        for _ in range(500):
            a = rng.randrange(65536)
            assert child._byte(a) == m._byte(a)

    def test_many_sequential_forks_cheap(self):
        # forking never copies the byte array; retained bytes stay bounded
        # by what was actually written
        m = MemorySnapshot.new(1)
        m.store(0, 0xFF, 1)
        tip = m
        for i in range(156_052):
            tip, _ = tip.fork()
        assert tip.load(0, 1, "u", 32) == 0xFF
        assert tip.retained_bytes() == 1

    def test_chain_depth_tracks_writing_forks_only(self):
        m = MemorySnapshot.new(1)
        tip = m
        for i in range(50):
            tip, _ = tip.fork()  # no writes: chain must not grow
        depth = 0
        n = tip
        while n is not None:
            depth += 1
            n = n.parent
        assert depth <= 2


class TestOracleEquivalence:
    @pytest.mark.parametrize("seed", [1, 2, 3])
    def test_randomized_fork_trees(self, seed):
        """10^4 randomized ops over fork trees of depth <= 8, byte-for-byte."""
        rng = random.Random(seed)
        size = 4 * PAGE_SIZE
        pairs = [(MemorySnapshot.new(4), NaiveMemory(size), 0)]
        ops = 0
        while ops < 10_000:
            idx = rng.randrange(len(pairs))
            cow, naive, depth = pairs[idx]
            action = rng.random()
            if action < 0.05 and depth < 8:
                (ca, cb), (na, nb) = cow.fork(), naive.fork()
                pairs[idx] = (ca, na, depth + 1)
                pairs.append((cb, nb, depth + 1))
            elif action < 0.55:
                w = rng.choice((1, 2, 4, 8))
                a = rng.randrange(size - w)
                v = rng.randrange(1 << (8 * w))
                cow.store(a, v, w)
                naive.store(a, v, w)
                ops += 1
            else:
                w = rng.choice((1, 2, 4, 8))
                a = rng.randrange(size - w)
                got = cow.load(a, w, None, 8 * w)
                want = naive.load(a, w)
                assert got == want, f"mismatch at {a} width {w}"
                ops += 1
        # final full sweep on every live branch
        for cow, naive, _ in pairs:
            for a in range(0, size - 8, 997):
                assert cow.load(a, 8, None, 64) == naive.load(a, 8)

    def test_cost_bound(self):
        rng = random.Random(11)
        m = MemorySnapshot.new(1)
        tips = [m]
        written: set[int] = set()
        for _ in range(2000):
            t = rng.choice(tips)
            if t.frozen:
                continue
            a = rng.randrange(65536)
            t.store(a, rng.randrange(256), 1)
            written.add(a)
            if rng.random() < 0.02:
                a1, b1 = t.fork()
                tips.remove(t)
                tips.extend((a1, b1))
        total = sum(t.retained_bytes() for t in tips)
        # each tip retains at most the distinct bytes written anywhere
        assert all(t.retained_bytes() <= len(written) for t in tips)
        assert total <= len(tips) * len(written)


class TestSymbolicBytes:
    def test_store_symbol_load_bytes(self):
        # store32 of a symbol then load16_u must agree with concrete
        # semantics on every 8-bit-checkable assignment
        m = MemorySnapshot.new(1)
        s0 = Symbol(0, 32)
        m.store(0, s0, 4)
        got = m.load(0, 2, "u", 32)
        for v in [0, 1, 0xFFFF, 0x12345678, 0xFFFFFFFF, 0x8000FFFF]:
            assert evaluate(got, {0: v}) == v & 0xFFFF

    def test_mixed_concrete_symbolic(self):
        m = MemorySnapshot.new(1)
        s0 = Symbol(0, 32)
        m.store(0, s0, 4)
        m.store(1, 0xAA, 1)  # overwrite one middle byte concretely
        got = m.load(0, 4, None, 32)
        for v in [0, 0x11223344, 0xFFFFFFFF]:
            want = (v & 0xFFFF00FF) | 0x0000AA00
            assert evaluate(got, {0: v}) == want

    def test_byte_of_symbol_is_extract(self):
        m = MemorySnapshot.new(1)
        s0 = Symbol(0, 32)
        m.store(0, s0, 4)
        assert m.mods[1] == Extract(s0, 1, 1)


class TestGrow:
    def test_grow_within_max(self):
        m = MemorySnapshot.new(1, 2)
        assert m.grow(1) == 1
        assert m.pages() == 2

    def test_grow_past_max(self):
        m = MemorySnapshot.new(1, 2)
        assert m.grow(5) == -1
        assert m.pages() == 1

    def test_grow_zero(self):
        m = MemorySnapshot.new(3)
        assert m.grow(0) == 3
        assert m.pages() == 3


class TestPickleFlattening:
    def test_lookups_preserved(self):
        rng = random.Random(3)
        m = MemorySnapshot.new(1)
        tip = m
        for _ in range(6):
            for _ in range(50):
                tip.store(rng.randrange(65536), rng.randrange(256), 1)
            tip, _ = tip.fork()
        tip.store(9, 0x55, 1)
        clone = pickle.loads(pickle.dumps(tip))
        for a in range(0, 65536, 311):
            assert clone._byte(a) == tip._byte(a)
        assert clone._byte(9) == 0x55
        assert clone.size == tip.size
