"""Deterministic request engine tying the cache subsystem together.

Requests are processed one at a time in architectural order.  Loads read
through the write buffer and the cache; a load miss allocates the MSHR,
fetches the line, picks a victim way and fills.  Stores coalesce into the
write buffer, update an already-cached line in place and go out to memory
as write-through transactions; they never allocate a line.  Atomics drain
the buffered stores, then read-modify-write main memory directly.

Time is counted in "engine events": each request is one event, and a
write transaction retires a fixed two events after it was issued, which
is what drives write-buffer bytes through their inflight states.  All
behavior is a pure function of (config, seed, request stream).
"""

import enum
import itertools
import json
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from .amo_buffer import AmoBuffer
from .cache_memory import CacheMemory
from .errors import LayoutMismatchError, MisalignedError, SimError
from .geometry import CacheConfig, DecomposedAddress, recompose, validate_config
from .lfsr import Lfsr
from .main_memory import AmoOp, MainMemory
from .miss_unit import (
    Action,
    AmoDone,
    AmoReq,
    DrainComplete,
    FlushReq,
    MemLoadDone,
    MemStoreDone,
    MissContext,
    MissState,
    ReadMiss,
    StoreIssue,
    check_stall,
    fsm_step,
    select_victim,
)
from .mshr import Mshr
from .write_buffer import WriteBuffer

STORE_DONE_DELAY = 2  # engine events between issuing a write tx and its return


class ReqKind(enum.Enum):
    LOAD = "LD"
    STORE = "ST"
    AMO = "AMO"
    FLUSH = "FLUSH"


class Outcome(enum.Enum):
    HIT = "Hit"
    MISS = "Miss"
    WRITE_THROUGH = "WriteThrough"
    AMO_DONE = "AmoDone"
    FLUSH_DONE = "FlushDone"


@dataclass(slots=True)
class CpuRequest:
    kind: ReqKind
    addr: int = 0
    size: int = 8
    data: Optional[bytes] = None
    amo_op: Optional[AmoOp] = None


@dataclass(slots=True)
class AccessResult:
    kind: ReqKind
    outcome: Outcome
    set: Optional[int]
    way: Optional[int]
    evicted: Optional[tuple]      # (tag, way) when a valid line was displaced
    stall_cycles: int
    latency_cycles: int
    data: Optional[bytes]


@dataclass
class Stats:
    num_sets: int = 256
    loads: int = 0
    stores: int = 0
    amos: int = 0
    flushes: int = 0
    load_hits: int = 0
    load_misses: int = 0
    evictions: int = 0
    stalls: int = 0
    total_cycles: int = 0
    per_set_miss_counts: list = field(default_factory=list)

    def __post_init__(self):
        if not self.per_set_miss_counts:
            self.per_set_miss_counts = [0] * self.num_sets

    def to_dict(self):
        return {
            "loads": self.loads,
            "stores": self.stores,
            "amos": self.amos,
            "flushes": self.flushes,
            "load_hits": self.load_hits,
            "load_misses": self.load_misses,
            "evictions": self.evictions,
            "stalls": self.stalls,
            "total_cycles": self.total_cycles,
            "per_set_miss_counts": list(self.per_set_miss_counts),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)


class Engine:
    def __init__(self, cfg: CacheConfig = None, seed: int = 1,
                 memory: MainMemory = None, log_fsm: bool = False):
        self.cfg = cfg = cfg if cfg is not None else CacheConfig()
        validate_config(cfg)
        self.cache = CacheMemory(cfg)
        self.mem = memory if memory is not None else MainMemory()
        self.wb = WriteBuffer(cfg.write_buffer_capacity, cfg.max_tx)
        self.mshr = Mshr()
        self.amo_buf = AmoBuffer()
        self.lfsr = Lfsr(cfg.lfsr_width, seed)
        self.state = MissState.IDLE
        self.clock = 0
        self.pending = deque()          # (due event, write tx) in issue order
        self.stats = Stats(num_sets=cfg.num_sets)
        self.fsm_log = [] if log_fsm else None
        self._miss_ids = itertools.count()
        # hot-path address arithmetic
        self._off_bits = cfg.offset_bits
        self._idx_mask = cfg.num_sets - 1
        self._off_mask = cfg.line_bytes - 1
        self._tag_shift = cfg.offset_bits + cfg.index_bits
        self._line_mask = ~(cfg.line_bytes - 1)

    # -- miss-unit plumbing ----------------------------------------------------

    def _fsm(self, event):
        ctx = MissContext(
            inflight_tx=len(self.wb.inflight),
            max_tx=self.cfg.max_tx,
            wb_empty=self.wb.is_empty(),
            mshr_valid=self.mshr.valid,
        )
        nxt, actions = fsm_step(self.state, event, ctx)
        if self.fsm_log is not None:
            text = f"{self.state.value} --{type(event).__name__}--> {nxt.value}"
            if actions:
                text += " [" + ",".join(a.value for a in actions) + "]"
            self.fsm_log.append(text)
        self.state = nxt
        return actions

    def _deliver(self, tx):
        """A write transaction returns from memory."""
        self._fsm(MemStoreDone(tx.tx_id))
        for i in range(8):
            if (tx.byte_mask >> i) & 1:
                self.mem.write_byte(tx.base + i, tx.data[i])
        self.wb.complete(tx.tx_id)

    def _deliver_due(self):
        pending = self.pending
        while pending and pending[0][0] <= self.clock:
            self._deliver(pending.popleft()[1])

    def _force_completion(self) -> int:
        """Wait for the oldest outstanding transaction; one stall cycle."""
        if not self.pending:
            raise SimError("nothing outstanding to wait for")
        due, tx = self.pending.popleft()
        if due > self.clock:
            self.clock = due
        self._deliver(tx)
        return 1

    def _issue_ready(self):
        """Send eligible write-buffer transactions out, up to the budget."""
        while len(self.wb.inflight) < self.cfg.max_tx:
            tx = self.wb.issue()
            if tx is None:
                break
            actions = self._fsm(StoreIssue(tx))
            if Action.ISSUE_MEM_STORE in actions:
                self.pending.append((self.clock + STORE_DONE_DELAY, tx))

    def _drain_wb(self, lo=None, hi=None) -> int:
        """Retire buffered stores: all of them, or an address window."""
        stall = 0
        while True:
            if lo is None:
                busy = bool(self.wb.entries) or bool(self.wb.inflight)
            else:
                busy = self.wb.overlaps(lo, hi)
            if not busy:
                return stall
            self._issue_ready()
            if self.wb.inflight:
                stall += self._force_completion()

    def _begin(self) -> int:
        """Advance the event clock and return to Idle before dispatching."""
        self.clock += 1
        self._deliver_due()
        stall = 0
        while self.state is not MissState.IDLE:
            stall += self._force_completion()
        return stall

    # -- stall resolution --------------------------------------------------------

    def _complete_pending_miss(self) -> int:
        """Finish the read miss recorded in the MSHR so conflicts clear."""
        addr = self.mshr.addr
        index = (addr >> self._off_bits) & self._idx_mask
        tag = addr >> self._tag_shift
        self._fill_from_memory(index, tag, addr & self._line_mask)
        self.mshr.clear()
        return self.cfg.miss_latency

    def _resolve_inflight_amo(self) -> int:
        """Let the outstanding atomic finish so an overlapping read may go."""
        addr = self.amo_buf.addr
        index = (addr >> self._off_bits) & self._idx_mask
        way, _ = self.cache.lookup(index, addr >> self._tag_shift)
        if way is not None:
            self.cache.invalidate(index, way)
        old = self.mem.amo(self.amo_buf.op, addr, self.amo_buf.data)
        self.amo_buf.ack(old)
        return self.cfg.miss_latency

    def _fill_from_memory(self, index, tag, line_base):
        """Fetch a line and install it in the victim way."""
        line = self.mem.read(line_base, self.cfg.line_bytes)
        mask = self.cache.valid_mask(index)
        victim, _ = select_victim(mask, self.lfsr, self.cfg.num_ways)
        evicted = None
        if (mask >> victim) & 1:
            evicted = (self.cache.tags[index][victim], victim)
            self.stats.evictions += 1
            self.cache.invalidate(index, victim)
        self.cache.fill_line(index, victim, tag, line)
        return victim, evicted

    # -- request handlers ---------------------------------------------------------

    def load(self, addr: int, size: int = 8) -> AccessResult:
        self._check_access(addr, size)
        stall = self._begin()
        cfg = self.cfg
        index = (addr >> self._off_bits) & self._idx_mask
        tag = addr >> self._tag_shift
        offset = addr & self._off_mask
        stats = self.stats
        stats.loads += 1

        way, _ = self.cache.lookup(index, tag)
        if way is not None:
            data = self.cache.read_bytes(index, way, offset, size)
            fwd = self.wb.forward(addr, size)
            if fwd is not None:
                merged = bytearray(data)
                fdata, fmask = fwd
                for i in range(size):
                    if (fmask >> i) & 1:
                        merged[i] = fdata[i]
                data = bytes(merged)
            stats.load_hits += 1
            stats.total_cycles += cfg.hit_latency + stall
            return AccessResult(ReqKind.LOAD, Outcome.HIT, index, way, None,
                                stall, cfg.hit_latency, data)

        # read miss
        while check_stall("read", addr, size, self.mshr, self.amo_buf, cfg.line_bytes):
            stall += self._resolve_inflight_amo()
            stats.stalls += 1
        miss_id = next(self._miss_ids)
        while not self.mshr.allocate(addr, size, miss_id):
            stall += self._complete_pending_miss()
            stats.stalls += 1
        line_base = addr & self._line_mask
        # buffered stores to this line must land in memory before the fetch,
        # otherwise the fill would install stale bytes
        stall += self._drain_wb(line_base, line_base + cfg.line_bytes)
        self._fsm(ReadMiss(addr, size, miss_id))
        line_data = self.mem.read(line_base, cfg.line_bytes)
        actions = self._fsm(MemLoadDone(line_data))
        victim = evicted = None
        for act in actions:
            if act is Action.WRITE_LINE_TO_CACHE:
                victim, evicted = self._fill_from_memory(index, tag, line_base)
            elif act is Action.CLEAR_MSHR:
                self.mshr.clear()
        data = self.cache.read_bytes(index, victim, offset, size)
        stats.load_misses += 1
        stats.per_set_miss_counts[index] += 1
        stats.total_cycles += cfg.miss_latency + stall
        return AccessResult(ReqKind.LOAD, Outcome.MISS, index, victim, evicted,
                            stall, cfg.miss_latency, data)

    def store(self, addr: int, data: bytes) -> AccessResult:
        size = len(data)
        self._check_access(addr, size)
        stall = self._begin()
        cfg = self.cfg
        stats = self.stats
        while check_stall("write", addr, size, self.mshr, self.amo_buf, cfg.line_bytes):
            stall += self._complete_pending_miss()
            stats.stalls += 1
        while not self.wb.store(addr, data, self.cache):
            # buffer full: the request waits until a transaction retires
            self._issue_ready()
            stall += self._force_completion()
            stats.stalls += 1
        index = (addr >> self._off_bits) & self._idx_mask
        way, _ = self.cache.lookup(index, addr >> self._tag_shift)
        self._issue_ready()
        stats.stores += 1
        stats.total_cycles += cfg.hit_latency + stall
        return AccessResult(ReqKind.STORE, Outcome.WRITE_THROUGH, index, way, None,
                            stall, cfg.hit_latency, None)

    def amo(self, op: AmoOp, addr: int, operand: bytes) -> AccessResult:
        if len(operand) != 8:
            raise MisalignedError("atomic operand must be 8 bytes")
        self._check_access(addr, 8)
        stall = self._begin()
        cfg = self.cfg
        stats = self.stats
        while not self.amo_buf.accept(op, addr, operand):
            stall += self._resolve_inflight_amo()
            stats.stalls += 1
        self._fsm(AmoReq())                 # Idle -> Drain
        stall += self._drain_wb()
        while self.mshr.valid:
            stall += self._complete_pending_miss()
            stats.stalls += 1
        self._fsm(DrainComplete())          # Drain -> Amo
        req = self.amo_buf.issue(stores_drained=self.wb.is_empty())
        actions = self._fsm(AmoReq())       # Amo -> AmoWait
        index = (addr >> self._off_bits) & self._idx_mask
        old = None
        for act in actions:
            if act is Action.ISSUE_AMO_TO_MEMORY:
                # the cached copy, if any, is dropped; memory performs the RMW
                way, _ = self.cache.lookup(index, addr >> self._tag_shift)
                if way is not None:
                    self.cache.invalidate(index, way)
                old = self.mem.amo(req.op, req.addr, req.data)
        self._fsm(AmoDone(old))             # AmoWait -> Idle
        self.amo_buf.ack(old)
        stats.amos += 1
        stats.total_cycles += cfg.miss_latency + stall
        return AccessResult(ReqKind.AMO, Outcome.AMO_DONE, index, None, None,
                            stall, cfg.miss_latency, old)

    def flush(self) -> AccessResult:
        stall = self._begin()
        actions = self._fsm(FlushReq())
        for act in actions:
            if act is Action.INVALIDATE_ALL:
                self.cache.flush_all()
        self._fsm(DrainComplete())
        self.stats.flushes += 1
        self.stats.total_cycles += self.cfg.hit_latency + stall
        return AccessResult(ReqKind.FLUSH, Outcome.FLUSH_DONE, None, None, None,
                            stall, self.cfg.hit_latency, None)

    # -- request stream -----------------------------------------------------------

    def step(self, req: CpuRequest) -> AccessResult:
        kind = req.kind
        if kind is ReqKind.LOAD:
            if req.data is not None:
                raise SimError("load carries data")
            return self.load(req.addr, req.size)
        if kind is ReqKind.STORE:
            if req.data is None or len(req.data) != req.size:
                raise SimError("store data must match its size")
            return self.store(req.addr, req.data)
        if kind is ReqKind.AMO:
            if req.amo_op is None or req.data is None:
                raise SimError("atomic request needs an op and an operand")
            return self.amo(req.amo_op, req.addr, req.data)
        if kind is ReqKind.FLUSH:
            return self.flush()
        raise SimError(f"unknown request kind {kind!r}")

    def run_trace(self, reqs):
        """Process a request sequence; returns (results, stats)."""
        results = []
        for i, req in enumerate(reqs):
            try:
                results.append(self.step(req))
            except SimError as exc:
                raise SimError(f"request {i}: {exc}") from exc
        return results, self.stats

    # -- inspection ----------------------------------------------------------------

    def quiesce(self) -> int:
        """Drain every buffered store; afterwards the model is at rest."""
        return self._drain_wb()

    def cache_matches_memory(self) -> bool:
        """Every valid cached byte equals memory.  Call at quiesced points."""
        cfg = self.cfg
        for index in range(cfg.num_sets):
            mask = self.cache.valid_mask(index)
            way = 0
            while mask:
                if mask & 1:
                    base = recompose(
                        DecomposedAddress(self.cache.tags[index][way], index, 0), cfg
                    )
                    if self.cache.read_line(index, way) != self.mem.read(base, cfg.line_bytes):
                        return False
                mask >>= 1
                way += 1
        return True

    def _check_access(self, addr, size):
        if size not in (1, 2, 4, 8):
            raise MisalignedError(f"unsupported access size {size}")
        if addr % size:
            raise MisalignedError(f"{size}-byte access at {addr:#x} is misaligned")
        if not 0 <= addr < (1 << self.cfg.addr_bits):
            raise MisalignedError(f"address {addr:#x} out of range")


# -- Prime+Probe demo ---------------------------------------------------------------

@dataclass(frozen=True)
class PrimeProbeLayout:
    """Shape of the generated channel trace, needed to decode the probes.

    Every message bit occupies a fixed-size window: one flush, eight
    priming loads, one victim load and eight probing loads.  The victim
    touches the target set only when its bit is 1; for a 0 it performs a
    placebo load in a neighbouring set so the window shape stays
    message-independent.
    """

    target_set: int
    n_bits: int
    reqs_per_bit: int = 18
    probe_start: int = 10
    probe_len: int = 8


def gen_prime_probe_trace(target_set: int, message, cfg: CacheConfig = None):
    """Build the attacker+victim request stream for a bit sequence.

    The flush at the head of each window resets the target set, which
    makes the prime phase fill the ways deterministically; without it the
    pseudo-random evictions leak leftover state across windows.
    Returns (requests, layout).
    """
    cfg = cfg if cfg is not None else CacheConfig()
    if not 0 <= target_set < cfg.num_sets:
        raise ValueError(f"target set {target_set} out of range")
    bits = [int(b) for b in message]
    if any(b not in (0, 1) for b in bits):
        raise ValueError("message must consist of 0/1 bits")

    def set_addr(tag, index):
        return recompose(DecomposedAddress(tag, index, 0), cfg)

    prime_addrs = [set_addr(1 + w, target_set) for w in range(cfg.num_ways)]
    victim_hot = set_addr(1 + cfg.num_ways, target_set)
    victim_idle = set_addr(1 + cfg.num_ways, (target_set + 1) % cfg.num_sets)

    reqs = []
    for bit in bits:
        reqs.append(CpuRequest(ReqKind.FLUSH))
        reqs.extend(CpuRequest(ReqKind.LOAD, a, 8) for a in prime_addrs)
        reqs.append(CpuRequest(ReqKind.LOAD, victim_hot if bit else victim_idle, 8))
        reqs.extend(CpuRequest(ReqKind.LOAD, a, 8) for a in prime_addrs)
    layout = PrimeProbeLayout(
        target_set=target_set,
        n_bits=len(bits),
        reqs_per_bit=2 + 2 * cfg.num_ways,
        probe_start=2 + cfg.num_ways,
        probe_len=cfg.num_ways,
    )
    return reqs, layout


def decode_probe(results, layout: PrimeProbeLayout):
    """Recover the message: a probe window with any miss reads as 1."""
    expected = layout.n_bits * layout.reqs_per_bit
    if len(results) != expected:
        raise LayoutMismatchError(
            f"expected {expected} results for {layout.n_bits} bits, got {len(results)}"
        )
    bits = []
    for b in range(layout.n_bits):
        start = b * layout.reqs_per_bit + layout.probe_start
        window = results[start : start + layout.probe_len]
        bits.append(1 if any(r.outcome is Outcome.MISS for r in window) else 0)
    return bits
