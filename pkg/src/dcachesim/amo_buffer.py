"""Single-slot buffer for one atomic memory operation.

Holds the op, address and operand handed over at commit until every
buffered store has drained, then releases the request to the cache
subsystem and waits for the acknowledgement carrying the old value.
"""

from typing import NamedTuple, Optional

from .errors import InflightError, NotInflightError
from .main_memory import AmoOp


class AmoRequest(NamedTuple):
    op: AmoOp
    addr: int
    data: bytes  # 8-byte operand


class AmoBuffer:
    __slots__ = ("valid", "op", "addr", "data", "inflight", "result")

    def __init__(self):
        self.valid = False
        self.op = None
        self.addr = 0
        self.data = b""
        self.inflight = False
        self.result: Optional[bytes] = None

    def accept(self, op: AmoOp, addr: int, data: bytes) -> bool:
        """Load the slot from the commit stage; False when occupied."""
        if self.valid:
            return False
        self.valid = True
        self.op = op
        self.addr = addr
        self.data = bytes(data)
        self.inflight = False
        return True

    def issue(self, stores_drained: bool) -> Optional[AmoRequest]:
        """Release the request, but only once all stores have drained."""
        if not (self.valid and not self.inflight and stores_drained):
            return None
        self.inflight = True
        return AmoRequest(self.op, self.addr, self.data)

    def ack(self, old_value: bytes) -> None:
        """Acknowledge the served request with the previous memory value."""
        if not self.inflight:
            raise NotInflightError("no atomic operation in flight")
        self.result = bytes(old_value)
        self.valid = False
        self.inflight = False

    def flush(self) -> None:
        """Drop an uncommitted request; issued work cannot be abandoned."""
        if self.inflight:
            raise InflightError("cannot flush an inflight atomic operation")
        self.valid = False
