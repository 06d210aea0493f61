"""Trace-driven model of a CVA6-style L1 data cache.

32 KB, 8-way, 16-byte lines by default; write-through, no-write-allocate,
with pseudo-random (Galois LFSR) eviction, a single-entry MSHR, a
coalescing write buffer with per-byte valid/dirty/txblock status, an AMO
buffer and a seven-state miss controller.  Includes a Prime+Probe
set-contention demo.
"""

from .amo_buffer import AmoBuffer, AmoRequest
from .cache_memory import CacheMemory, LookupResult
from .engine import (
    AccessResult,
    CpuRequest,
    Engine,
    Outcome,
    PrimeProbeLayout,
    ReqKind,
    Stats,
    decode_probe,
    gen_prime_probe_trace,
)
from .errors import SimError
from .geometry import (
    CacheConfig,
    DecomposedAddress,
    bank_select,
    decompose,
    load_config,
    parse_config,
    recompose,
    validate_config,
)
from .lfsr import Lfsr, feedback_mask
from .main_memory import AmoOp, MainMemory
from .miss_unit import MissState, check_stall, fsm_step, select_victim
from .mshr import Mshr, read_overlaps_amo, write_collides
from .write_buffer import WriteBuffer

__version__ = "0.1.0"

__all__ = [
    "AccessResult",
    "AmoBuffer",
    "AmoOp",
    "AmoRequest",
    "CacheConfig",
    "CacheMemory",
    "CpuRequest",
    "DecomposedAddress",
    "Engine",
    "Lfsr",
    "LookupResult",
    "MainMemory",
    "MissState",
    "Mshr",
    "Outcome",
    "PrimeProbeLayout",
    "ReqKind",
    "SimError",
    "Stats",
    "WriteBuffer",
    "bank_select",
    "check_stall",
    "decode_probe",
    "decompose",
    "feedback_mask",
    "fsm_step",
    "gen_prime_probe_trace",
    "load_config",
    "parse_config",
    "read_overlaps_amo",
    "recompose",
    "select_victim",
    "validate_config",
    "write_collides",
]
