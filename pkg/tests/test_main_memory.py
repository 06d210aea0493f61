import pytest

from dcachesim.errors import MisalignedError, UnknownOpError
from dcachesim.main_memory import AmoOp, MainMemory, apply_amo


def test_untouched_reads_zero():
    mem = MainMemory()
    assert mem.read(0x1000, 8) == bytes(8)
    assert mem.read(0, 1) == b"\x00"


def test_write_read_round_trip():
    mem = MainMemory()
    mem.write(0x40, b"\x01\x02\x03\x04")
    assert mem.read(0x40, 4) == b"\x01\x02\x03\x04"


def test_line_sized_round_trip():
    mem = MainMemory()
    mem.write(0x0000008000B010, bytes(range(16)))
    assert mem.read(0x0000008000B010, 16) == bytes(range(16))


def test_last_writer_wins_per_byte():
    mem = MainMemory()
    mem.write(0x100, b"\xaa" * 8)
    mem.write(0x104, b"\xbb" * 4)
    assert mem.read(0x100, 8) == b"\xaa" * 4 + b"\xbb" * 4


def test_single_byte_write_leaves_neighbours():
    mem = MainMemory()
    mem.write(0x200, b"\x11\x22\x33\x44")
    mem.write(0x203, b"\x99")
    assert mem.read(0x200, 4) == b"\x11\x22\x33\x99"


def test_misaligned_rejected():
    mem = MainMemory()
    with pytest.raises(MisalignedError):
        mem.read(0x3, 4)
    with pytest.raises(MisalignedError):
        mem.write(0x2, b"\x00" * 8)
    with pytest.raises(MisalignedError):
        mem.read(0x0, 3)
    with pytest.raises(MisalignedError):
        mem.amo(AmoOp.ADD, 0x4, bytes(8))


def test_amo_add():
    mem = MainMemory()
    old = mem.amo(AmoOp.ADD, 0x1000, (5).to_bytes(8, "little"))
    assert old == bytes(8)
    assert int.from_bytes(mem.read(0x1000, 8), "little") == 5


def test_amo_swap():
    mem = MainMemory()
    mem.write(0x8, (0xDEAD).to_bytes(8, "little"))
    old = mem.amo(AmoOp.SWAP, 0x8, (0xBEEF).to_bytes(8, "little"))
    assert int.from_bytes(old, "little") == 0xDEAD
    assert int.from_bytes(mem.read(0x8, 8), "little") == 0xBEEF


def test_amo_xor_involution():
    mem = MainMemory()
    mem.write(0x10, (0x1234).to_bytes(8, "little"))
    key = (0x5555).to_bytes(8, "little")
    mem.amo(AmoOp.XOR, 0x10, key)
    mem.amo(AmoOp.XOR, 0x10, key)
    assert int.from_bytes(mem.read(0x10, 8), "little") == 0x1234


def test_amo_equals_read_modify_write():
    mem_a = MainMemory()
    mem_b = MainMemory()
    for mem in (mem_a, mem_b):
        mem.write(0x0, (0xFFFFFFFFFFFFFFF0).to_bytes(8, "little"))
    operand = (0x123).to_bytes(8, "little")
    for op in AmoOp:
        old_a = mem_a.amo(op, 0x0, operand)
        r = mem_b.read(0x0, 8)
        mem_b.write(
            0x0,
            apply_amo(op, int.from_bytes(r, "little"), 0x123).to_bytes(8, "little"),
        )
        assert old_a == r
        assert mem_a.read(0x0, 8) == mem_b.read(0x0, 8)


def test_amo_signed_vs_unsigned_minmax():
    minus_one = (1 << 64) - 1
    assert apply_amo(AmoOp.MAX, minus_one, 3) == 3         # -1 < 3 signed
    assert apply_amo(AmoOp.MAXU, minus_one, 3) == minus_one
    assert apply_amo(AmoOp.MIN, minus_one, 3) == minus_one
    assert apply_amo(AmoOp.MINU, minus_one, 3) == 3


def test_unknown_op_rejected():
    mem = MainMemory()
    with pytest.raises(UnknownOpError):
        mem.amo("NOT_AN_OP", 0x0, bytes(8))


def test_preload_text():
    mem = MainMemory()
    n = mem.load_preload_text(
        "# warm data\n"
        "0000008000b010: 000102030405060708090a0b0c0d0e0f\n"
        "40: ff\n"
        "\n"
    )
    assert n == 17
    assert mem.read(0x0000008000B010, 16) == bytes(range(16))
    assert mem.read(0x40, 1) == b"\xff"


def test_preload_bad_line():
    mem = MainMemory()
    with pytest.raises(ValueError):
        mem.load_preload_text("not a preload line")
    with pytest.raises(ValueError):
        mem.load_preload_text("10: zz")
