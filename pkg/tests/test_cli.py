import json
import random

import pytest

from dcachesim.cli import format_trace, main, parse_trace
from dcachesim.engine import CpuRequest, ReqKind
from dcachesim.errors import BadAlignmentError, BadSizeError, TraceSyntaxError
from dcachesim.main_memory import AmoOp


def test_parse_load_line():
    reqs = parse_trace("LD 0000008000b010 8\n")
    assert reqs == [CpuRequest(ReqKind.LOAD, 0x0000008000B010, 8)]


def test_parse_store_line():
    reqs = parse_trace("ST 10 4 deadbeef\n")
    assert reqs == [CpuRequest(ReqKind.STORE, 0x10, 4, b"\xde\xad\xbe\xef")]


def test_parse_amo_and_flush():
    reqs = parse_trace("AMO ADD 1000 0500000000000000\nFLUSH\n")
    assert reqs[0].amo_op is AmoOp.ADD
    assert reqs[0].data == (5).to_bytes(8, "little")
    assert reqs[1].kind is ReqKind.FLUSH


def test_comments_and_blanks_skipped():
    assert parse_trace("# nothing\n\n  \n") == []


def test_parse_errors_carry_line_numbers():
    with pytest.raises(TraceSyntaxError) as e:
        parse_trace("LD 0 8\nnonsense\n")
    assert e.value.line == 2
    with pytest.raises(BadSizeError) as e:
        parse_trace("LD 0 3\n")
    assert e.value.line == 1
    with pytest.raises(BadAlignmentError) as e:
        parse_trace("# pad\nLD 4 8\n")
    assert e.value.line == 2
    with pytest.raises(TraceSyntaxError):
        parse_trace("ST 0 4 dead\n")  # data shorter than size
    with pytest.raises(TraceSyntaxError):
        parse_trace("AMO NOPE 0 0000000000000000\n")
    with pytest.raises(TraceSyntaxError):
        parse_trace("LD 10000000000000000 8\n")  # 65-bit address


def test_format_parse_round_trip():
    rng = random.Random(77)
    reqs = []
    for _ in range(300):
        pick = rng.random()
        if pick < 0.4:
            size = rng.choice((1, 2, 4, 8))
            reqs.append(CpuRequest(ReqKind.LOAD, rng.randrange(0, 1 << 30, size), size))
        elif pick < 0.8:
            size = rng.choice((1, 2, 4, 8))
            data = bytes(rng.randrange(256) for _ in range(size))
            reqs.append(CpuRequest(ReqKind.STORE, rng.randrange(0, 1 << 30, size), size, data))
        elif pick < 0.9:
            data = bytes(rng.randrange(256) for _ in range(8))
            reqs.append(CpuRequest(ReqKind.AMO, rng.randrange(0, 1 << 30, 8), 8, data,
                                   rng.choice(list(AmoOp))))
        else:
            reqs.append(CpuRequest(ReqKind.FLUSH))
    assert parse_trace(format_trace(reqs)) == reqs


TRACE = """\
# warm one line, then hit it
LD 0000008000b010 8
LD 0000008000b010 8
ST 0000008000b010 8 0102030405060708
"""


def test_run_text_stats(tmp_path, capsys):
    trace = tmp_path / "t.txt"
    trace.write_text(TRACE)
    assert main(["run", "--trace", str(trace)]) == 0
    out = capsys.readouterr().out
    assert "loads            2" in out
    assert "load_hits        1" in out
    assert "load_misses      1" in out
    assert "set   1" in out


def test_run_json_stats_deterministic(tmp_path, capsys):
    trace = tmp_path / "t.txt"
    trace.write_text(TRACE)
    assert main(["run", "--trace", str(trace), "--seed", "7", "--stats", "json"]) == 0
    first = capsys.readouterr().out
    assert main(["run", "--trace", str(trace), "--seed", "7", "--stats", "json"]) == 0
    second = capsys.readouterr().out
    assert first == second
    stats = json.loads(first)
    assert stats["loads"] == 2 and stats["stores"] == 1
    assert stats["per_set_miss_counts"][1] == 1


def test_run_results_listing(tmp_path, capsys):
    trace = tmp_path / "t.txt"
    trace.write_text(TRACE)
    assert main(["run", "--trace", str(trace), "--results"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0].split() == ["0", "LD", "Miss", "set=1", "way=0", "stall=0", "lat=20"]
    assert "Hit" in out[1]
    assert "WriteThrough" in out[2]


def test_run_log_fsm(tmp_path, capsys):
    trace = tmp_path / "t.txt"
    trace.write_text("LD 40 8\n")
    assert main(["run", "--trace", str(trace), "--log-fsm"]) == 0
    out = capsys.readouterr().out
    assert "Idle --ReadMiss--> LoadWait [IssueMemLoad]" in out
    assert "LoadWait --MemLoadDone--> Idle [WriteLineToCache,ClearMshr]" in out


def test_missing_trace_file(tmp_path, capsys):
    missing = tmp_path / "nope.txt"
    assert main(["run", "--trace", str(missing)]) == 1
    err = capsys.readouterr().err
    assert "nope.txt" in err


def test_bad_trace_reports_line(tmp_path, capsys):
    trace = tmp_path / "t.txt"
    trace.write_text("LD 0 8\nbogus\n")
    assert main(["run", "--trace", str(trace)]) == 1
    assert "line 2" in capsys.readouterr().err


def test_usage_error_exits_2():
    with pytest.raises(SystemExit) as e:
        main(["run"])  # --trace is required
    assert e.value.code == 2


def test_config_and_preload(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("num_sets = 16\nnum_ways = 2\nlfsr_width = 4\n")
    pre = tmp_path / "mem.txt"
    pre.write_text("40: 0102030405060708090a0b0c0d0e0f10\n")
    trace = tmp_path / "t.txt"
    trace.write_text("LD 40 8\n")
    assert main([
        "run", "--trace", str(trace), "--config", str(cfg),
        "--preload", str(pre), "--results",
    ]) == 0
    out = capsys.readouterr().out
    assert "set=4" in out.splitlines()[0].split()  # 16 sets: index bits 4..7 of 0x40


def test_bad_config_rejected(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("num_sets = 100\n")
    trace = tmp_path / "t.txt"
    trace.write_text("LD 0 8\n")
    assert main(["run", "--trace", str(trace), "--config", str(cfg)]) == 1
    assert "power of two" in capsys.readouterr().err


def test_primeprobe_decodes_message(capsys):
    assert main(["primeprobe", "--set", "1", "--message", "1011"]) == 0
    out = capsys.readouterr().out.strip()
    assert out == "1011"


def test_primeprobe_with_stats(capsys):
    assert main(["primeprobe", "--set", "3", "--message", "10", "--stats", "json",
                 "--seed", "9"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "10"
    stats = json.loads("\n".join(lines[1:]))
    assert stats["flushes"] == 2


def test_primeprobe_bad_message(capsys):
    assert main(["primeprobe", "--set", "1", "--message", "10x1"]) == 1
    assert "0/1" in capsys.readouterr().err
