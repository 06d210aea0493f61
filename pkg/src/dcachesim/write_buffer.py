"""Fully associative, coalescing store buffer with per-byte status bits.

Entries are 8-byte aligned words; stores to the same word merge into one
entry.  Every byte carries (valid, dirty, txblock) bits and moves through
exactly four states:

    000  free            the byte holds nothing
    110  valid + dirty   written, not yet sent to memory
    101  valid, inflight part of an outstanding memory transaction
    111  dirty inflight  overwritten while inflight; retransmit on return

The clean state (valid, not dirty, no transaction) is unreachable: a byte
only becomes valid by being written, and a completed write frees it.
Bit i of each mask describes byte i of the entry's word.
"""

from typing import NamedTuple, Optional

from .errors import UnknownTxError


class MemoryWriteTx(NamedTuple):
    tx_id: int
    base: int        # 8-byte aligned target address
    byte_mask: int   # which of the 8 bytes travel in this transaction
    data: bytes      # full word snapshot taken at issue time


class WriteBufferEntry:
    __slots__ = ("base", "data", "valid", "dirty", "tx", "tx_id")

    def __init__(self, base):
        self.base = base
        self.data = bytearray(8)
        self.valid = 0
        self.dirty = 0
        self.tx = 0
        self.tx_id: Optional[int] = None


class WriteBuffer:
    def __init__(self, capacity: int = 8, max_tx: int = 2):
        self.capacity = capacity
        self.max_tx = max_tx
        self.entries = {}   # base -> entry, insertion order = age order
        self.inflight = {}  # tx_id -> MemoryWriteTx
        self._next_tx = 0

    # -- CPU side -----------------------------------------------------------

    def store(self, addr: int, data: bytes, cache=None) -> bool:
        """Merge a store; returns False when the buffer is full.

        When the target line is already valid in ``cache`` the cached copy
        is updated in place (write-through hit path).  A store never
        allocates a cache line.
        """
        base = addr & ~0x7
        entry = self.entries.get(base)
        if entry is None:
            if len(self.entries) >= self.capacity:
                return False
            entry = WriteBufferEntry(base)
            self.entries[base] = entry
        lo = addr - base
        span = ((1 << len(data)) - 1) << lo
        entry.data[lo : lo + len(data)] = data
        if entry.tx & span:
            # bytes overwritten while inflight keep txblock and go dirty
            entry.valid |= span & ~entry.tx
            entry.dirty |= span
        else:
            entry.valid |= span
            entry.dirty |= span
        if cache is not None:
            index, tag, offset = cache.locate(addr)
            way, _ = cache.lookup(index, tag)
            if way is not None:
                cache.write_bytes(index, way, offset, data)
        return True

    def forward(self, addr: int, size: int):
        """Buffered bytes overlapping [addr, addr+size), or None.

        Returns (data, mask) where bit i of mask marks byte addr+i as
        supplied; unsupplied positions of data are zero.
        """
        base = addr & ~0x7
        entry = self.entries.get(base)
        if entry is None:
            return None
        lo = addr - base
        mask = 0
        out = bytearray(size)
        for i in range(size):
            if (entry.valid >> (lo + i)) & 1:
                out[i] = entry.data[lo + i]
                mask |= 1 << i
        if mask == 0:
            return None
        return bytes(out), mask

    # -- memory side ----------------------------------------------------------

    def issue(self) -> Optional[MemoryWriteTx]:
        """Start a transaction for the oldest entry with unsent dirty bytes.

        Each entry has at most one transaction outstanding.  Issued bytes
        move from 110 to 101.
        """
        if len(self.inflight) >= self.max_tx:
            return None
        for entry in self.entries.values():
            if entry.tx_id is not None:
                continue
            mask = entry.dirty & ~entry.tx
            if not mask:
                continue
            tx = MemoryWriteTx(self._next_tx, entry.base, mask, bytes(entry.data))
            self._next_tx += 1
            entry.dirty &= ~mask
            entry.tx |= mask
            entry.tx_id = tx.tx_id
            self.inflight[tx.tx_id] = tx
            return tx
        return None

    def complete(self, tx_id: int) -> MemoryWriteTx:
        """Retire a transaction; 101 bytes free, 111 bytes queue again."""
        tx = self.inflight.pop(tx_id, None)
        if tx is None:
            raise UnknownTxError(f"no inflight transaction {tx_id}")
        entry = self.entries[tx.base]
        redo = tx.byte_mask & entry.dirty      # overwritten mid-flight
        done = tx.byte_mask & ~redo
        entry.valid &= ~done
        entry.tx &= ~tx.byte_mask
        entry.tx_id = None
        if entry.valid == 0:
            del self.entries[tx.base]
        return tx

    # -- queries ------------------------------------------------------------

    def is_empty(self) -> bool:
        return not self.entries

    def overlaps(self, lo: int, hi: int) -> bool:
        """True when any entry with valid bytes intersects [lo, hi)."""
        for entry in self.entries.values():
            if entry.base < hi and entry.base + 8 > lo and entry.valid:
                return True
        return False

    def check_invariants(self):
        assert len(self.entries) <= self.capacity
        assert len(self.inflight) <= self.max_tx
        for entry in self.entries.values():
            # no byte outside {000, 110, 101, 111}
            assert (entry.dirty | entry.tx) & ~entry.valid == 0
            assert entry.valid & ~(entry.dirty | entry.tx) == 0
            assert (entry.tx != 0) == (entry.tx_id is not None)
            assert entry.valid != 0
