"""Miss-unit controller: a seven-state FSM plus victim selection.

The controller reacts to read misses, write-buffer transactions, flushes
and atomic operations.  It is written as a pure transition function: the
engine feeds one event at a time and executes the returned action list,
so the unit itself holds no hidden state.

The transition arcs are inferred from each state's documented role; they
are a behavioral closure, not a transcription of the hardware's exact
guard conditions.
"""

import enum
from dataclasses import dataclass
from typing import NamedTuple

from .errors import IllegalEventError
from .lfsr import Lfsr
from .mshr import read_overlaps_amo, write_collides
from .write_buffer import MemoryWriteTx


class MissState(enum.Enum):
    IDLE = "Idle"
    DRAIN = "Drain"
    AMO = "Amo"
    FLUSH = "Flush"
    STORE_WAIT = "StoreWait"
    LOAD_WAIT = "LoadWait"
    AMO_WAIT = "AmoWait"


class Action(enum.Enum):
    ISSUE_MEM_LOAD = "IssueMemLoad"
    ISSUE_MEM_STORE = "IssueMemStore"
    WRITE_LINE_TO_CACHE = "WriteLineToCache"
    CLEAR_MSHR = "ClearMshr"
    ISSUE_AMO_TO_MEMORY = "IssueAmoToMemory"
    INVALIDATE_ALL = "InvalidateAll"
    SIGNAL_STALL = "SignalStall"


# -- events -------------------------------------------------------------------

@dataclass(slots=True)
class ReadMiss:
    addr: int
    size: int
    id: int


@dataclass(slots=True)
class StoreIssue:
    tx: MemoryWriteTx


@dataclass(frozen=True)
class FlushReq:
    pass


@dataclass(frozen=True)
class AmoReq:
    pass


@dataclass(slots=True)
class MemLoadDone:
    line: bytes


@dataclass(slots=True)
class MemStoreDone:
    tx_id: int


@dataclass(slots=True)
class AmoDone:
    old: bytes


@dataclass(frozen=True)
class DrainComplete:
    pass


class MissContext(NamedTuple):
    """Snapshot of the neighbouring units the FSM needs for its guards."""

    inflight_tx: int = 0
    max_tx: int = 2
    wb_empty: bool = True
    mshr_valid: bool = False


def fsm_step(state: MissState, event, ctx: MissContext = MissContext()):
    """One transition: returns (next state, actions for the engine)."""
    S, A = MissState, Action
    kind = type(event)

    if state is S.IDLE:
        if kind is ReadMiss:
            return S.LOAD_WAIT, (A.ISSUE_MEM_LOAD,)
        if kind is StoreIssue:
            # serialize once the transaction budget is exhausted
            nxt = S.STORE_WAIT if ctx.inflight_tx >= ctx.max_tx else S.IDLE
            return nxt, (A.ISSUE_MEM_STORE,)
        if kind is FlushReq:
            return S.FLUSH, (A.INVALIDATE_ALL,)
        if kind is AmoReq:
            return S.DRAIN, ()
        if kind is MemStoreDone:
            return S.IDLE, ()
    elif state is S.LOAD_WAIT:
        if kind is MemLoadDone:
            return S.IDLE, (A.WRITE_LINE_TO_CACHE, A.CLEAR_MSHR)
        if kind is MemStoreDone:
            return S.LOAD_WAIT, ()
    elif state is S.STORE_WAIT:
        if kind is MemStoreDone:
            return S.IDLE, ()
    elif state is S.FLUSH:
        if kind is DrainComplete:
            return S.IDLE, ()
        if kind is MemStoreDone:
            return S.FLUSH, ()
    elif state is S.DRAIN:
        if kind is StoreIssue:
            return S.DRAIN, (A.ISSUE_MEM_STORE,)
        if kind is MemStoreDone:
            return S.DRAIN, ()
        if kind is DrainComplete:
            return S.AMO, ()
    elif state is S.AMO:
        # the drained request is re-presented and goes out to memory
        if kind is AmoReq:
            return S.AMO_WAIT, (A.ISSUE_AMO_TO_MEMORY,)
    elif state is S.AMO_WAIT:
        if kind is AmoDone:
            return S.IDLE, ()

    raise IllegalEventError(f"event {kind.__name__} is not legal in state {state.value}")


def select_victim(valid_mask: int, lfsr: Lfsr, num_ways: int = 8):
    """Choose the way a fill lands in.

    The lowest invalid way wins when one exists and the generator is left
    untouched; a full set takes the generator's pick and consumes it.
    Returns (way, whether the generator advanced).
    """
    full = (1 << num_ways) - 1
    free = ~valid_mask & full
    if free:
        return (free & -free).bit_length() - 1, False
    way = lfsr.victim_index(num_ways)
    lfsr.step()
    return way, True


def check_stall(kind: str, addr: int, size: int, mshr, amo, line_bytes: int = 16) -> bool:
    """Stall predicate consulted before the FSM acts on a request."""
    if kind == "write":
        return write_collides(mshr, addr, size, line_bytes)
    if kind == "read":
        return read_overlaps_amo(addr, size, amo, line_bytes)
    raise ValueError(f"unknown request kind {kind!r}")
