import csv

from retainkv.eviction import TRACE_COLUMNS, EvictionConfig, EvictionTrace, PolicyKind, chunked_prefill_with_eviction


def test_trace_marks_evicted_units(small_weights, small_cfg, tokens):
    trace = EvictionTrace()
    ev = EvictionConfig(b=6, B=4, n_s=2, n_loc=0, policy=PolicyKind.SINK_RECENT, sink_len=1)
    chunked_prefill_with_eviction(small_weights, small_cfg, tokens[:16], ev, trace=trace)
    assert trace.n_steps == 4
    # sink, three most recent scored units, then the two stabilizers
    assert trace.retained_positions(2, 0, 0) == [0, 7, 8, 9, 10, 11]
    assert trace.retained_positions(3, 1, 1) == [0, 11, 12, 13, 14, 15]
    evicted = [r for r in trace.rows if r.chunk_step == 3 and (r.layer, r.kv_head) == (0, 0) and not r.retained]
    assert [r.original_position for r in evicted] == [7, 8, 9, 10]


def test_trace_csv_layout(tmp_path, small_weights, small_cfg, tokens):
    trace = EvictionTrace()
    ev = EvictionConfig(b=4, B=4, n_s=1, n_loc=2, policy=PolicyKind.RANDOM)
    chunked_prefill_with_eviction(small_weights, small_cfg, tokens[:10], ev, trace=trace)
    path = trace.write_csv(tmp_path / "trace.csv", ["note: synthetic", "policy: random"])
    lines = path.read_text().splitlines()
    assert lines[:2] == ["# note: synthetic", "# policy: random"]
    rows = list(csv.DictReader(lines[2:]))
    assert tuple(rows[0]) == TRACE_COLUMNS
    assert len(rows) == len(trace.rows)
    assert {r["retained"] for r in rows} <= {"0", "1"}
    assert float(rows[5]["score"]) == trace.rows[5].score
