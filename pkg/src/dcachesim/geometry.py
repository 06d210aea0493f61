"""Cache geometry and address arithmetic.

The modeled L1 data cache is physically addressed with 64-bit addresses
split into tag / index / offset fields.  The default geometry is 256 sets
of 8 ways with 16-byte lines (32 KB total), which yields a 4-bit offset,
an 8-bit index and a 52-bit tag.  Everything is parametric; the defaults
describe the configuration this package models.
"""

from dataclasses import dataclass

from .errors import ConfigError, FieldOverflowError, NonPowerOfTwoError, WidthOutOfRangeError

LFSR_WIDTH_MIN = 4
LFSR_WIDTH_MAX = 64


def _is_pow2(n):
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class CacheConfig:
    """Geometry and policy parameters of the cache subsystem.

    Latencies are synthetic knobs (the model is cycle-approximate, not
    cycle-accurate): a hit costs ``hit_latency`` cycles, any access that
    goes out to main memory costs ``miss_latency``.
    """

    num_sets: int = 256
    num_ways: int = 8
    line_bytes: int = 16
    addr_bits: int = 64
    lfsr_width: int = 8
    write_buffer_capacity: int = 8
    max_tx: int = 2
    hit_latency: int = 1
    miss_latency: int = 20

    @property
    def offset_bits(self):
        return self.line_bytes.bit_length() - 1

    @property
    def index_bits(self):
        return self.num_sets.bit_length() - 1

    @property
    def tag_bits(self):
        return self.addr_bits - self.index_bits - self.offset_bits

    @property
    def total_bytes(self):
        return self.num_sets * self.num_ways * self.line_bytes


@dataclass(frozen=True)
class DecomposedAddress:
    """Tag / index / offset triple carved out of a physical address."""

    tag: int
    index: int
    offset: int


def validate_config(cfg: CacheConfig) -> None:
    """Raise a ConfigError naming the first violated invariant."""
    if not _is_pow2(cfg.num_sets):
        raise NonPowerOfTwoError(f"num_sets must be a power of two, got {cfg.num_sets}")
    if not _is_pow2(cfg.line_bytes):
        raise NonPowerOfTwoError(f"line_bytes must be a power of two, got {cfg.line_bytes}")
    # Not strictly required for the field split, but the victim selector
    # masks LFSR bits, which only covers power-of-two way counts.
    if not _is_pow2(cfg.num_ways):
        raise NonPowerOfTwoError(f"num_ways must be a power of two, got {cfg.num_ways}")
    if cfg.line_bytes < 2:
        raise ConfigError("line_bytes must be at least 2 (two data banks per line)")
    if cfg.addr_bits != 64:
        raise ConfigError(f"addr_bits is fixed at 64, got {cfg.addr_bits}")
    if not LFSR_WIDTH_MIN <= cfg.lfsr_width <= LFSR_WIDTH_MAX:
        raise WidthOutOfRangeError(
            f"lfsr_width must be in [{LFSR_WIDTH_MIN}, {LFSR_WIDTH_MAX}], got {cfg.lfsr_width}"
        )
    if cfg.offset_bits + cfg.index_bits >= cfg.addr_bits:
        raise ConfigError("index and offset fields exhaust the address width")
    if cfg.write_buffer_capacity < 1:
        raise ConfigError("write_buffer_capacity must be at least 1")
    if cfg.max_tx < 1:
        raise ConfigError("max_tx must be at least 1")
    if cfg.hit_latency < 0 or cfg.miss_latency < 0:
        raise ConfigError("latencies must be non-negative")


def decompose(addr: int, cfg: CacheConfig) -> DecomposedAddress:
    """Split a physical address into its tag, set index and byte offset."""
    if not 0 <= addr < (1 << cfg.addr_bits):
        raise FieldOverflowError(f"address {addr:#x} does not fit in {cfg.addr_bits} bits")
    off_bits = cfg.offset_bits
    idx_bits = cfg.index_bits
    return DecomposedAddress(
        tag=addr >> (off_bits + idx_bits),
        index=(addr >> off_bits) & ((1 << idx_bits) - 1),
        offset=addr & ((1 << off_bits) - 1),
    )


def recompose(d: DecomposedAddress, cfg: CacheConfig) -> int:
    """Rebuild the physical address; exact inverse of decompose."""
    if not 0 <= d.tag < (1 << cfg.tag_bits):
        raise FieldOverflowError(f"tag {d.tag:#x} exceeds {cfg.tag_bits} bits")
    if not 0 <= d.index < cfg.num_sets:
        raise FieldOverflowError(f"index {d.index:#x} exceeds {cfg.index_bits} bits")
    if not 0 <= d.offset < cfg.line_bytes:
        raise FieldOverflowError(f"offset {d.offset:#x} exceeds {cfg.offset_bits} bits")
    return (d.tag << (cfg.offset_bits + cfg.index_bits)) | (d.index << cfg.offset_bits) | d.offset


def bank_select(offset: int, line_bytes: int = 16) -> int:
    """Pick the data bank for a byte offset.

    The offset MSB decides: the low half of the line (bytes 0..7 by
    default) lives in bank 0, the high half in bank 1.
    """
    return 0 if offset < line_bytes // 2 else 1


# --- flat key=value config files -------------------------------------------

_CONFIG_KEYS = (
    "num_sets",
    "num_ways",
    "line_bytes",
    "addr_bits",
    "lfsr_width",
    "write_buffer_capacity",
    "max_tx",
    "hit_latency",
    "miss_latency",
)


def parse_config(text: str) -> CacheConfig:
    """Parse a flat ``key=value`` config; unknown keys are an error."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            values[key] = int(value.strip(), 0)
        except ValueError:
            raise ConfigError(f"line {lineno}: value for {key!r} is not an integer") from None
    cfg = CacheConfig(**values)
    validate_config(cfg)
    return cfg


def load_config(path) -> CacheConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())
