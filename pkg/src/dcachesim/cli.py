"""Command-line front end: trace runs and the Prime+Probe demo.

Trace files are plain text, one request per line::

    # comment
    LD <hexaddr> <size>
    ST <hexaddr> <size> <hexdata>
    AMO <op> <hexaddr> <hexdata>
    FLUSH

Sizes are 1, 2, 4 or 8 bytes; hexdata carries exactly 2*size digits;
atomics always move 8 bytes.  Addresses are naturally aligned hex.
"""

import argparse
import sys

from .engine import CpuRequest, Engine, ReqKind, decode_probe, gen_prime_probe_trace
from .errors import BadAlignmentError, BadSizeError, SimError, TraceSyntaxError
from .geometry import CacheConfig, load_config
from .main_memory import AmoOp, MainMemory

_SIZES = (1, 2, 4, 8)


def parse_trace(text: str):
    """Turn trace text into requests; errors carry the offending line."""
    reqs = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        op = fields[0].upper()

        def addr_of(token):
            try:
                value = int(token, 16)
            except ValueError:
                raise TraceSyntaxError(lineno, f"bad hex address {token!r}") from None
            if not 0 <= value < (1 << 64):
                raise TraceSyntaxError(lineno, f"address {token!r} exceeds 64 bits")
            return value

        if op == "LD" and len(fields) == 3:
            addr = addr_of(fields[1])
            size = _size_of(fields[2], lineno)
            _check_alignment(addr, size, lineno)
            reqs.append(CpuRequest(ReqKind.LOAD, addr, size))
        elif op == "ST" and len(fields) == 4:
            addr = addr_of(fields[1])
            size = _size_of(fields[2], lineno)
            _check_alignment(addr, size, lineno)
            data = _data_of(fields[3], size, lineno)
            reqs.append(CpuRequest(ReqKind.STORE, addr, size, data))
        elif op == "AMO" and len(fields) == 4:
            try:
                amo_op = AmoOp[fields[1].upper()]
            except KeyError:
                raise TraceSyntaxError(lineno, f"unknown atomic op {fields[1]!r}") from None
            addr = addr_of(fields[2])
            _check_alignment(addr, 8, lineno)
            data = _data_of(fields[3], 8, lineno)
            reqs.append(CpuRequest(ReqKind.AMO, addr, 8, data, amo_op))
        elif op == "FLUSH" and len(fields) == 1:
            reqs.append(CpuRequest(ReqKind.FLUSH))
        else:
            raise TraceSyntaxError(lineno, f"cannot parse {raw!r}")
    return reqs


def _size_of(token, lineno):
    try:
        size = int(token)
    except ValueError:
        raise BadSizeError(lineno, f"bad size {token!r}") from None
    if size not in _SIZES:
        raise BadSizeError(lineno, f"size must be one of {_SIZES}, got {size}")
    return size


def _check_alignment(addr, size, lineno):
    if addr % size:
        raise BadAlignmentError(lineno, f"{size}-byte access at {addr:#x} is misaligned")


def _data_of(token, size, lineno):
    if len(token) != 2 * size:
        raise TraceSyntaxError(lineno, f"expected {2 * size} hex digits, got {token!r}")
    try:
        return bytes.fromhex(token)
    except ValueError:
        raise TraceSyntaxError(lineno, f"bad hex data {token!r}") from None


def format_trace(reqs) -> str:
    """Inverse of parse_trace (up to whitespace and comments)."""
    lines = []
    for req in reqs:
        if req.kind is ReqKind.LOAD:
            lines.append(f"LD {req.addr:x} {req.size}")
        elif req.kind is ReqKind.STORE:
            lines.append(f"ST {req.addr:x} {req.size} {req.data.hex()}")
        elif req.kind is ReqKind.AMO:
            lines.append(f"AMO {req.amo_op.value} {req.addr:x} {req.data.hex()}")
        else:
            lines.append("FLUSH")
    return "\n".join(lines) + ("\n" if lines else "")


def format_stats_text(stats) -> str:
    d = stats.to_dict()
    per_set = d.pop("per_set_miss_counts")
    lines = [f"{key:<16} {value}" for key, value in d.items()]
    hot = [(i, n) for i, n in enumerate(per_set) if n]
    if hot:
        lines.append("misses by set:")
        lines.extend(f"  set {i:3d}        {n}" for i, n in hot)
    return "\n".join(lines)


def _format_result(i, r):
    place = ""
    if r.set is not None:
        place = f" set={r.set}"
        place += f" way={r.way}" if r.way is not None else " way=-"
    if r.evicted is not None:
        place += f" evicted=(0x{r.evicted[0]:x},w{r.evicted[1]})"
    return (
        f"{i:6d} {r.kind.value:<5} {r.outcome.value:<12}{place}"
        f" stall={r.stall_cycles} lat={r.latency_cycles}"
    )


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="dcachesim",
        description="Trace-driven L1 data-cache simulator with LFSR eviction",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, stats_default):
        p.add_argument("--config", help="flat key=value cache config file")
        p.add_argument("--seed", type=int, default=1, help="LFSR seed (default 1)")
        p.add_argument("--preload", help="memory preload file of 'addr: hexbytes' lines")
        p.add_argument("--stats", choices=("text", "json"), default=stats_default,
                       help="statistics output format")
        p.add_argument("--log-fsm", action="store_true",
                       help="print every miss-unit transition")

    run = sub.add_parser("run", help="run a trace file")
    run.add_argument("--trace", required=True, help="trace file to execute")
    run.add_argument("--results", action="store_true", help="print one line per request")
    common(run, "text")

    pp = sub.add_parser("primeprobe", help="covert-channel demo on one cache set")
    pp.add_argument("--set", type=int, required=True, dest="target_set",
                    help="target set index")
    pp.add_argument("--message", required=True, help="bit string to transmit, e.g. 1011")
    common(pp, None)
    return parser


def _make_engine(args):
    cfg = load_config(args.config) if args.config else CacheConfig()
    mem = MainMemory()
    if args.preload:
        mem.load_preload_file(args.preload)
    return cfg, Engine(cfg, seed=args.seed, memory=mem, log_fsm=args.log_fsm)


def _emit_stats(args, stats):
    if args.stats == "json":
        print(stats.to_json())
    elif args.stats == "text":
        print(format_stats_text(stats))


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg, eng = _make_engine(args)
        if args.command == "run":
            with open(args.trace, "r", encoding="utf-8") as fh:
                reqs = parse_trace(fh.read())
            results, stats = eng.run_trace(reqs)
            if args.results:
                for i, r in enumerate(results):
                    print(_format_result(i, r))
            if args.log_fsm:
                for line in eng.fsm_log:
                    print(line)
            _emit_stats(args, stats)
        else:
            if not args.message or set(args.message) - {"0", "1"}:
                raise SimError(f"message must be a nonempty 0/1 string, got {args.message!r}")
            message = [int(b) for b in args.message]
            reqs, layout = gen_prime_probe_trace(args.target_set, message, cfg)
            results, stats = eng.run_trace(reqs)
            if args.log_fsm:
                for line in eng.fsm_log:
                    print(line)
            print("".join(str(b) for b in decode_probe(results, layout)))
            _emit_stats(args, stats)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (SimError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
