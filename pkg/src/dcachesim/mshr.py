"""Single-entry miss status holding register and the two stall predicates.

The register remembers one pending read miss (address, size, id).  Two
hazards force the pipeline to wait:

  * a store whose target line matches the pending read miss, which would
    otherwise be overtaken by the returning fill, and
  * a read miss whose line overlaps an atomic operation that is in flight.

Collision granularity is the cache line by default; that is the
conservative choice and can be narrowed to the exact word via the
``granularity`` argument.
"""


class Mshr:
    __slots__ = ("valid", "addr", "size", "id")

    def __init__(self):
        self.valid = False
        self.addr = 0
        self.size = 0
        self.id = 0

    def allocate(self, addr: int, size: int, id: int) -> bool:
        """Record a pending read miss; False means the slot is busy."""
        if self.valid:
            return False
        self.valid = True
        self.addr = addr
        self.size = size
        self.id = id
        return True

    def clear(self) -> None:
        self.valid = False


def write_collides(m: Mshr, store_addr: int, store_size: int,
                   line_bytes: int = 16, granularity: str = "line") -> bool:
    """True when a store conflicts with the pending read miss."""
    if not m.valid:
        return False
    if granularity == "line":
        shift = line_bytes.bit_length() - 1
        return (store_addr >> shift) == (m.addr >> shift)
    # word granularity: compare the 8-byte words the accesses touch
    return (store_addr & ~0x7) == (m.addr & ~0x7)


def read_overlaps_amo(read_addr: int, read_size: int, amo,
                      line_bytes: int = 16) -> bool:
    """True when a read miss's line overlaps an inflight atomic's word.

    ``amo`` is any object exposing ``valid``, ``inflight`` and ``addr``
    (the AMO buffer qualifies).
    """
    if not (amo.valid and amo.inflight):
        return False
    line_lo = read_addr & ~(line_bytes - 1)
    line_hi = line_lo + line_bytes
    word_lo = amo.addr & ~0x7
    return word_lo < line_hi and word_lo + 8 > line_lo
