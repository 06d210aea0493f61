"""The storage core: per-way tag matrices and a two-bank data array.

Tags live in ``num_ways`` matrices of one (valid, tag) entry per set;
matrix n holds way n.  Line data is split across two banks: bank 0 keeps
the low half of every line, bank 1 the high half, so a 16-byte line is a
pair of 64-bit bank words.  Bytes are little-endian inside a bank word.
"""

from typing import NamedTuple, Optional

from .errors import InvalidWayError, UnalignedCrossBankError
from .geometry import CacheConfig


class LookupResult(NamedTuple):
    way: Optional[int]  # None on a miss
    valid_mask: int     # per-way valid bits of the probed set


class CacheMemory:
    def __init__(self, cfg: CacheConfig):
        self.cfg = cfg
        self.half = cfg.line_bytes // 2
        self.valid = [0] * cfg.num_sets                       # way bitmask per set
        self.tags = [[0] * cfg.num_ways for _ in range(cfg.num_sets)]
        size = cfg.num_sets * cfg.num_ways * self.half
        self.banks = (bytearray(size), bytearray(size))
        self._off_bits = cfg.offset_bits
        self._idx_mask = cfg.num_sets - 1
        self._off_mask = cfg.line_bytes - 1
        self._tag_shift = cfg.offset_bits + cfg.index_bits

    def locate(self, addr: int):
        """(index, tag, offset) of an address, using cached field widths."""
        return (
            (addr >> self._off_bits) & self._idx_mask,
            addr >> self._tag_shift,
            addr & self._off_mask,
        )

    # -- lookup and data access ------------------------------------------

    def lookup(self, index: int, tag: int) -> LookupResult:
        mask = self.valid[index]
        row = self.tags[index]
        if mask and tag in row:
            way = row.index(tag)
            while not (mask >> way) & 1:
                # stale tag of an invalidated way; keep scanning
                try:
                    way = row.index(tag, way + 1)
                except ValueError:
                    return LookupResult(None, mask)
            return LookupResult(way, mask)
        return LookupResult(None, mask)

    def _word_base(self, index, way):
        return (index * self.cfg.num_ways + way) * self.half

    def read_bytes(self, index: int, way: int, offset: int, size: int) -> bytes:
        if not (self.valid[index] >> way) & 1:
            raise InvalidWayError(f"way {way} of set {index} is not valid")
        half_off = offset % self.half
        if half_off + size > self.half:
            raise UnalignedCrossBankError(
                f"offset {offset} size {size} crosses the bank boundary"
            )
        bank = self.banks[0 if offset < self.half else 1]
        pos = self._word_base(index, way) + half_off
        return bytes(bank[pos : pos + size])

    def write_bytes(self, index: int, way: int, offset: int, data: bytes) -> None:
        if not (self.valid[index] >> way) & 1:
            raise InvalidWayError(f"way {way} of set {index} is not valid")
        half_off = offset % self.half
        if half_off + len(data) > self.half:
            raise UnalignedCrossBankError(
                f"offset {offset} size {len(data)} crosses the bank boundary"
            )
        bank = self.banks[0 if offset < self.half else 1]
        pos = self._word_base(index, way) + half_off
        bank[pos : pos + len(data)] = data

    def fill_line(self, index: int, way: int, tag: int, data: bytes) -> None:
        if len(data) != self.cfg.line_bytes:
            raise ValueError(f"line fill needs {self.cfg.line_bytes} bytes, got {len(data)}")
        hit, _ = self.lookup(index, tag)
        if hit is not None and hit != way:
            raise ValueError(
                f"tag {tag:#x} already valid in way {hit} of set {index}"
            )
        base = self._word_base(index, way)
        self.banks[0][base : base + self.half] = data[: self.half]
        self.banks[1][base : base + self.half] = data[self.half :]
        self.tags[index][way] = tag
        self.valid[index] |= 1 << way

    def read_line(self, index: int, way: int) -> bytes:
        base = self._word_base(index, way)
        return bytes(self.banks[0][base : base + self.half]) + bytes(
            self.banks[1][base : base + self.half]
        )

    # -- validity management ----------------------------------------------

    def invalidate(self, index: int, way: int) -> None:
        # clears the valid bit only; data is left in place
        self.valid[index] &= ~(1 << way)

    def flush_all(self) -> int:
        count = 0
        for index in range(self.cfg.num_sets):
            count += self.valid[index].bit_count()
            self.valid[index] = 0
        return count

    def valid_mask(self, index: int) -> int:
        return self.valid[index]

    def get_tag(self, index: int, way: int):
        return bool((self.valid[index] >> way) & 1), self.tags[index][way]

    # -- debug -------------------------------------------------------------

    def dump_tags(self) -> str:
        """Text dump of the tag array, one set per line, for golden tests."""
        digits = (self.cfg.tag_bits + 3) // 4
        idx_digits = max(1, (self.cfg.index_bits + 3) // 4)
        lines = []
        for index in range(self.cfg.num_sets):
            mask = self.valid[index]
            cells = []
            for way in range(self.cfg.num_ways):
                if (mask >> way) & 1:
                    cells.append(f"w{way}=0x{self.tags[index][way]:0{digits}x}")
                else:
                    cells.append(f"w{way}=-")
            lines.append(f"set {index:0{idx_digits}x}: " + " ".join(cells))
        return "\n".join(lines) + "\n"
