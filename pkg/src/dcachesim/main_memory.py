"""Sparse byte-addressable backing store with plain and atomic accesses.

Stands in for the memory behind the cache's bus port.  Reads of
never-written locations return zero bytes.  Atomic operations follow the
RISC-V A-extension set and are indivisible by construction because the
whole model is single-threaded and serialized by the engine.
"""

import enum

from .errors import MisalignedError, UnknownOpError

_PLAIN_SIZES = frozenset((1, 2, 4, 8, 16))
_U64 = (1 << 64) - 1


class AmoOp(enum.Enum):
    SWAP = "SWAP"
    ADD = "ADD"
    AND = "AND"
    OR = "OR"
    XOR = "XOR"
    MAX = "MAX"
    MIN = "MIN"
    MAXU = "MAXU"
    MINU = "MINU"


def _signed(v):
    return v - (1 << 64) if v >> 63 else v


def apply_amo(op: AmoOp, old: int, operand: int) -> int:
    """Combine two 64-bit values according to the atomic op."""
    if op is AmoOp.SWAP:
        return operand
    if op is AmoOp.ADD:
        return (old + operand) & _U64
    if op is AmoOp.AND:
        return old & operand
    if op is AmoOp.OR:
        return old | operand
    if op is AmoOp.XOR:
        return old ^ operand
    if op is AmoOp.MAX:
        return old if _signed(old) >= _signed(operand) else operand
    if op is AmoOp.MIN:
        return old if _signed(old) <= _signed(operand) else operand
    if op is AmoOp.MAXU:
        return max(old, operand)
    if op is AmoOp.MINU:
        return min(old, operand)
    raise UnknownOpError(f"unknown atomic op {op!r}")


class MainMemory:
    def __init__(self):
        self._bytes = {}  # addr -> byte value; absent means 0

    def read(self, addr: int, size: int) -> bytes:
        if size not in _PLAIN_SIZES:
            raise MisalignedError(f"unsupported read size {size}")
        if addr % size:
            raise MisalignedError(f"read of {size} bytes at {addr:#x} is misaligned")
        get = self._bytes.get
        return bytes([get(addr + i, 0) for i in range(size)])

    def write(self, addr: int, data: bytes) -> None:
        if len(data) not in _PLAIN_SIZES:
            raise MisalignedError(f"unsupported write size {len(data)}")
        if addr % len(data):
            raise MisalignedError(f"write of {len(data)} bytes at {addr:#x} is misaligned")
        store = self._bytes
        for i, b in enumerate(data):
            store[addr + i] = b

    def write_byte(self, addr: int, value: int) -> None:
        self._bytes[addr] = value & 0xFF

    def write_masked(self, base: int, data: bytes, mask: int) -> None:
        """Store only the bytes whose mask bit is set (write-tx landing)."""
        store = self._bytes
        for i in range(len(data)):
            if (mask >> i) & 1:
                store[base + i] = data[i]

    def amo(self, op: AmoOp, addr: int, operand: bytes) -> bytes:
        """Read-modify-write one 64-bit word; returns the old value."""
        if not isinstance(op, AmoOp):
            raise UnknownOpError(f"unknown atomic op {op!r}")
        if addr % 8:
            raise MisalignedError(f"atomic access at {addr:#x} is not 8-byte aligned")
        old = self.read(addr, 8)
        new = apply_amo(op, int.from_bytes(old, "little"), int.from_bytes(operand, "little"))
        self.write(addr, new.to_bytes(8, "little"))
        return old

    # -- preload files -----------------------------------------------------

    def load_preload_text(self, text: str) -> int:
        """Load ``addr: hexbytes`` lines; returns the byte count stored."""
        count = 0
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            addr_part, sep, hex_part = line.partition(":")
            if not sep:
                raise ValueError(f"preload line {lineno}: expected 'addr: hexbytes'")
            try:
                addr = int(addr_part.strip(), 16)
                data = bytes.fromhex(hex_part.strip())
            except ValueError:
                raise ValueError(f"preload line {lineno}: bad hex") from None
            for i, b in enumerate(data):
                self._bytes[addr + i] = b
            count += len(data)
        return count

    def load_preload_file(self, path) -> int:
        with open(path, "r", encoding="utf-8") as fh:
            return self.load_preload_text(fh.read())
