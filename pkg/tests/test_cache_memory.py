import random

import pytest

from dcachesim.cache_memory import CacheMemory
from dcachesim.errors import InvalidWayError, UnalignedCrossBankError
from dcachesim.geometry import CacheConfig, decompose

CFG = CacheConfig()
LINE = bytes(range(16))


def test_lookup_worked_example():
    cache = CacheMemory(CFG)
    d = decompose(0x0000008000B010, CFG)
    cache.fill_line(d.index, 7, d.tag, LINE)
    way, mask = cache.lookup(1, 0x0000008000B)
    assert way == 7
    assert mask == 0b10000000


def test_lookup_cold_cache():
    cache = CacheMemory(CFG)
    way, mask = cache.lookup(1, 0x0000008000B)
    assert way is None
    assert mask == 0


def test_two_tags_same_set_distinct_ways():
    cache = CacheMemory(CFG)
    cache.fill_line(1, 0, 0x0000008000B, LINE)
    cache.fill_line(1, 1, 0x00000081234, LINE)
    w1, _ = cache.lookup(1, 0x0000008000B)
    w2, _ = cache.lookup(1, 0x00000081234)
    assert w1 == 0 and w2 == 1


def test_fill_then_read_round_trip():
    cache = CacheMemory(CFG)
    cache.fill_line(1, 7, 0x0000008000B, LINE)
    assert cache.read_bytes(1, 7, 0, 8) == LINE[:8]
    assert cache.read_bytes(1, 7, 0x8, 8) == LINE[8:]
    assert cache.read_line(1, 7) == LINE


def test_fill_overwrite_same_way():
    cache = CacheMemory(CFG)
    cache.fill_line(0, 3, 0xAAAA, LINE)
    cache.fill_line(0, 3, 0xBBBB, bytes(16))
    assert cache.lookup(0, 0xAAAA).way is None
    assert cache.lookup(0, 0xBBBB).way == 3


def test_fill_sets_valid_mask_bit():
    cache = CacheMemory(CFG)
    cache.fill_line(0, 3, 0x1, LINE)
    assert cache.valid_mask(0) == 0b00001000


def test_duplicate_tag_fill_rejected():
    cache = CacheMemory(CFG)
    cache.fill_line(0, 2, 0x42, LINE)
    with pytest.raises(ValueError):
        cache.fill_line(0, 5, 0x42, LINE)


def test_cross_bank_access_rejected():
    cache = CacheMemory(CFG)
    cache.fill_line(0, 0, 0x1, LINE)
    with pytest.raises(UnalignedCrossBankError):
        cache.read_bytes(0, 0, 0x6, 4)
    with pytest.raises(UnalignedCrossBankError):
        cache.write_bytes(0, 0, 0x6, b"\x00" * 4)


def test_invalid_way_access_rejected():
    cache = CacheMemory(CFG)
    with pytest.raises(InvalidWayError):
        cache.read_bytes(0, 0, 0, 8)
    with pytest.raises(InvalidWayError):
        cache.write_bytes(0, 0, 0, b"\x00")


def test_write_bytes_lands_in_owning_bank():
    cache = CacheMemory(CFG)
    cache.fill_line(2, 1, 0x9, LINE)
    base = cache._word_base(2, 1)
    bank0_before = bytes(cache.banks[0][base : base + 8])
    cache.write_bytes(2, 1, 0x8, b"\xde\xad\xbe\xef")
    bank0_after = bytes(cache.banks[0][base : base + 8])
    bank1_word = bytes(cache.banks[1][base : base + 8])
    assert bank0_after == bank0_before  # low half untouched
    assert bank1_word == b"\xde\xad\xbe\xef" + LINE[12:]
    assert cache.read_bytes(2, 1, 0x8, 4) == b"\xde\xad\xbe\xef"


def test_write_then_read_back():
    cache = CacheMemory(CFG)
    cache.fill_line(5, 4, 0x77, bytes(16))
    cache.write_bytes(5, 4, 3, b"\x11\x22")
    assert cache.read_bytes(5, 4, 3, 2) == b"\x11\x22"
    assert cache.read_bytes(5, 4, 0, 1) == b"\x00"


def test_bank_isolation_property():
    # every byte of the low half is recoverable only through bank 0
    cache = CacheMemory(CFG)
    payload = bytes(random.Random(3).randrange(256) for _ in range(16))
    cache.fill_line(9, 2, 0x5, payload)
    base = cache._word_base(9, 2)
    assert bytes(cache.banks[0][base : base + 8]) == payload[:8]
    assert bytes(cache.banks[1][base : base + 8]) == payload[8:]


def test_invalidate_then_lookup_miss():
    cache = CacheMemory(CFG)
    cache.fill_line(0, 0, 0x1, LINE)
    cache.invalidate(0, 0)
    assert cache.lookup(0, 0x1).way is None
    # data itself is untouched by invalidation
    assert cache.read_line(0, 0) == LINE


def test_flush_all_counts():
    cache = CacheMemory(CFG)
    assert cache.flush_all() == 0
    cache.fill_line(0, 0, 0x1, LINE)
    cache.fill_line(3, 2, 0x2, LINE)
    cache.fill_line(255, 7, 0x3, LINE)
    assert cache.flush_all() == 3
    assert all(cache.valid_mask(i) == 0 for i in range(CFG.num_sets))


def test_valid_mask_patterns():
    cache = CacheMemory(CFG)
    assert cache.valid_mask(0) == 0
    cache.fill_line(0, 0, 0x10, LINE)
    cache.fill_line(0, 7, 0x20, LINE)
    assert cache.valid_mask(0) == 0b10000001
    for w, t in enumerate(range(8)):
        cache.fill_line(1, w, 0x100 + t, LINE)
    assert cache.valid_mask(1) == 0b11111111


def test_uniqueness_under_random_fills():
    rng = random.Random(11)
    cache = CacheMemory(CFG)
    for _ in range(2000):
        index = rng.randrange(CFG.num_sets)
        way = rng.randrange(CFG.num_ways)
        tag = rng.randrange(64)
        if cache.lookup(index, tag).way not in (None, way):
            continue  # the guard would reject this fill
        cache.fill_line(index, way, tag, LINE)
        row_tags = [cache.tags[index][w] for w in range(8) if (cache.valid_mask(index) >> w) & 1]
        assert len(row_tags) == len(set(row_tags))


def test_dump_tags_golden():
    cfg = CacheConfig(num_sets=4, num_ways=2, line_bytes=16, lfsr_width=4)
    cache = CacheMemory(cfg)
    cache.fill_line(1, 1, 0x0000008000B0, bytes(16))
    cache.fill_line(2, 0, 0x1, bytes(16))
    # tag field is 58 bits wide here, printed as 15 hex digits
    expected = (
        "set 0: w0=- w1=-\n"
        "set 1: w0=- w1=0x0000000008000b0\n"
        "set 2: w0=0x000000000000001 w1=-\n"
        "set 3: w0=- w1=-\n"
    )
    assert cache.dump_tags() == expected
