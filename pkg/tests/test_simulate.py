"""Discrete-event semantics: hand-traced oracles, accounting, determinism."""

from __future__ import annotations

import random

import pytest

from parmodel import (
    DeadlockReport,
    RunResult,
    SimulationError,
    detect_deadlock_state,
    parse_model,
    run,
)
from parmodel.model import CostModel
from parmodel.simulate import BlockedRank

from conftest import corpus_paths, load_corpus_model

TWO_RANK = """
model "two"
topology mesh2d(1, 2)
costs { t_startup = 50us t_byte = 0.01us send_mode = %s }
role a on rank 0 {
  action "prepare" cost 100us
  send to b size 1000B %s
}
role b on rank 1 {
  recv from a size 1000B
}
"""


def _run(source: str):
    result = parse_model(source)
    assert result.ok, [d.render() for d in result.diagnostics]
    return run(result.model)


def _assert_accounting(metrics):
    for rank in range(metrics.p):
        total = metrics.compute[rank] + metrics.comm[rank] + metrics.idle[rank]
        assert total == pytest.approx(metrics.makespan, abs=1e-9)


# -- hand-traced point-to-point oracles -------------------------------------------

def test_rendezvous_send_160us():
    # 100µs compute, then C = 50 + 1000*0.01 = 60µs transfer.
    res = _run(TWO_RANK % ("rendezvous", "blocking"))
    assert isinstance(res, RunResult)
    assert res.metrics.makespan == pytest.approx(160.0, abs=1e-9)
    ends = {(e.kind, e.rank): e.time for e in res.trace.events}
    assert ends[("send_end", 0)] == pytest.approx(160.0, abs=1e-9)
    assert ends[("recv_end", 1)] == pytest.approx(160.0, abs=1e-9)
    _assert_accounting(res.metrics)


def test_rendezvous_blocks_until_receiver_ready():
    # receiver busy until 300µs; sender arrives at 100 and idles 200.
    src = """
model "late"
topology mesh2d(1, 2)
costs { t_startup = 50us t_byte = 0.01us }
role a on rank 0 { action "w" cost 100us send to b size 1000B blocking }
role b on rank 1 { action "busy" cost 300us recv from a size 1000B }
"""
    res = _run(src)
    assert res.metrics.makespan == pytest.approx(360.0, abs=1e-9)
    assert res.metrics.idle[0] == pytest.approx(200.0, abs=1e-9)
    _assert_accounting(res.metrics)


def test_buffered_send_frees_sender():
    # buffered: sender done at 160, receiver picks the data up at arrival.
    res = _run(TWO_RANK % ("buffered", "blocking"))
    assert res.metrics.makespan == pytest.approx(160.0, abs=1e-9)
    assert res.metrics.comm[0] == pytest.approx(60.0, abs=1e-9)
    assert res.metrics.comm[1] == pytest.approx(0.0, abs=1e-9)  # data already there
    _assert_accounting(res.metrics)


def test_buffered_receiver_ready_after_arrival():
    src = """
model "late_recv"
topology mesh2d(1, 2)
costs { t_startup = 50us t_byte = 0.01us send_mode = buffered }
role a on rank 0 { send to b size 1000B blocking }
role b on rank 1 { action "busy" cost 500us recv from a size 1000B }
"""
    res = _run(src)
    # arrival at 60 < receiver ready at 500: recv completes instantly
    assert res.metrics.makespan == pytest.approx(500.0, abs=1e-9)
    _assert_accounting(res.metrics)


def test_nonblocking_overlap_and_wait():
    res = _run("""
model "nb"
topology mesh2d(1, 2)
costs { t_startup = 10us t_byte = 0.01us }
role a on rank 0 {
  send to b size 1000B nonblocking as h
  action "overlap" cost 5us
  wait h
}
role b on rank 1 { recv from a size 1000B }
""")
    # transfer [0, 20]; the wait costs a's clock 20 - 5 = 15µs of comm
    assert res.metrics.makespan == pytest.approx(20.0, abs=1e-9)
    assert res.metrics.compute[0] == pytest.approx(5.0, abs=1e-9)
    assert res.metrics.comm[0] == pytest.approx(15.0, abs=1e-9)
    _assert_accounting(res.metrics)


def test_nonblocking_fully_overlapped_wait_is_free():
    res = _run("""
model "nb2"
topology mesh2d(1, 2)
costs { t_startup = 10us t_byte = 0.01us }
role a on rank 0 {
  send to b size 1000B nonblocking as h
  action "overlap" cost 100us
  wait h
}
role b on rank 1 { recv from a size 1000B }
""")
    assert res.metrics.makespan == pytest.approx(100.0, abs=1e-9)
    assert res.metrics.comm[0] == pytest.approx(0.0, abs=1e-9)
    _assert_accounting(res.metrics)


def test_hop_scaling_multiplies_cost():
    src = """
model "hops"
topology ring(6)
costs { t_startup = 10us t_byte = 0 hop_scaling = %s }
role a on rank 0 { send to d size 8B blocking }
role b on rank 1 { action "x" cost 1us }
role c on rank 2 { action "x" cost 1us }
role d on rank 3 { recv from a size 8B }
role e on rank 4 { action "x" cost 1us }
role f on rank 5 { action "x" cost 1us }
"""
    plain = _run(src % "false").metrics.makespan
    scaled = _run(src % "true").metrics.makespan
    assert plain == pytest.approx(10.0, abs=1e-9)
    assert scaled == pytest.approx(30.0, abs=1e-9)  # 3 hops around the ring


def test_fifo_ordering_per_pair():
    # two sends arrive in post order; sizes differ so a swap would show
    res = _run("""
model "fifo"
topology mesh2d(1, 2)
costs { t_startup = 0 t_byte = 1us send_mode = buffered }
role a on rank 0 {
  send to b size 100B blocking
  send to b size 1B blocking
}
role b on rank 1 {
  recv from a size 100B
  recv from a size 1B
}
""")
    recv_ends = [e.time for e in res.trace.events if e.kind == "recv_end"]
    assert recv_ends == [pytest.approx(100.0), pytest.approx(101.0)]


# -- collectives ----------------------------------------------------------------------

def test_bcast_log_rounds_cost():
    # frozen from ceil(log2 8) * (50 + 8*0.01) = 3 * 50.08 = 150.24
    res = _run("""
model "bc"
topology hypercube(3)
costs { t_startup = 50us t_byte = 0.01us }
role n on ranks 0 .. 7 { collective bcast root n size 8B }
""")
    assert res.metrics.makespan == pytest.approx(150.24, abs=1e-9)
    _assert_accounting(res.metrics)


def test_barrier_cost_and_sync():
    res = _run("""
model "bar"
topology mesh2d(2, 2)
costs { t_startup = 7us t_byte = 99us }
role a on rank 0 { action "w" cost 10us collective barrier root a size 0B }
role b on rank 1 { collective barrier root a size 0B }
role c on rank 2 { collective barrier root a size 0B }
role d on rank 3 { collective barrier root a size 0B }
""")
    # start at 10 (last arrival), plus ceil(log2 4) * 7 = 14
    assert res.metrics.makespan == pytest.approx(24.0, abs=1e-9)


def test_gather_linear_root_bottleneck():
    res = _run("""
model "ga"
topology farm(4)
costs { t_startup = 10us t_byte = 1us }
role master on rank 0 { collective gather root master size 0B }
role w on ranks 1 .. 3 { collective gather root master size me * 1B }
""")
    # sum over non-root of (10 + me*1) = 11 + 12 + 13 = 36
    assert res.metrics.makespan == pytest.approx(36.0, abs=1e-9)


def test_single_rank_collective_is_free():
    res = _run("""
model "solo"
topology mesh2d(1, 1)
costs { t_startup = 50us t_byte = 1us }
role a on rank 0 { collective bcast root a size 100B action "w" cost 42us }
""")
    assert res.metrics.makespan == pytest.approx(42.0, abs=1e-9)
    assert res.metrics.comm[0] == pytest.approx(0.0, abs=1e-9)


def test_sequential_degenerate_model():
    res = _run('model "seq" topology mesh2d(1, 1) '
               'role a on rank 0 { action "w" cost 42us }')
    assert res.metrics.makespan == pytest.approx(42.0, abs=1e-9)
    assert res.metrics.comm[0] == 0.0


# -- deadlock --------------------------------------------------------------------------

def test_two_cycle_deadlock(models_dir):
    model = load_corpus_model(f"{models_dir}/deadlock_2cycle.pmod")
    report = run(model)
    assert isinstance(report, DeadlockReport)
    assert report.cycle == (0, 1)
    assert report.kind == "cycle"
    assert report.time == pytest.approx(0.0)
    assert {b.rank for b in report.blocked} == {0, 1}


def test_three_cycle_deadlock(models_dir):
    model = load_corpus_model(f"{models_dir}/deadlock_3cycle.pmod")
    report = run(model)
    assert isinstance(report, DeadlockReport)
    assert report.cycle == (0, 1, 2)


def test_orphan_wait_classified():
    report = _run("""
model "orphan"
topology mesh2d(1, 2)
role a on rank 0 { recv from b size 8B }
role b on rank 1 { action "done" cost 5us }
""")
    assert isinstance(report, DeadlockReport)
    assert report.cycle is None
    assert report.kind == "orphan wait"
    assert [b.rank for b in report.blocked] == [0]


def test_detect_deadlock_state_directly():
    blocked = [
        BlockedRank(0, 0.0, "send to P1", (1,)),
        BlockedRank(1, 0.0, "send to P0", (0,)),
    ]
    report = detect_deadlock_state(blocked, {0: (1,), 1: (0,)})
    assert report.cycle == (0, 1) and report.kind == "cycle"
    assert [b.rank for b in report.blocked] == [0, 1]

    report = detect_deadlock_state(
        [BlockedRank(0, 7.5, "recv from P1", (1,))], {0: (1,)})
    assert report.cycle is None and report.kind == "orphan wait"
    assert report.time == 7.5
    assert "recv from P1" in report.describe()


def test_deadlock_events_in_trace():
    model = parse_model("""
model "dl"
topology mesh2d(1, 2)
role a on rank 0 { send to b size 8B blocking }
role b on rank 1 { send to a size 8B blocking }
""").model
    report = run(model)
    kinds = {e.kind for e in report.trace.events}
    assert "deadlock" in kinds


# -- runtime errors ------------------------------------------------------------------

def test_unmatched_message_at_termination():
    with pytest.raises(SimulationError, match="unmatched message"):
        _run("""
model "um"
topology mesh2d(1, 2)
costs { send_mode = buffered }
role a on rank 0 { send to b size 8B blocking }
role b on rank 1 { action "no_recv" cost 1us }
""")


def test_collective_kind_mismatch_raises():
    with pytest.raises(SimulationError, match="collective mismatch"):
        _run("""
model "cm"
topology mesh2d(1, 2)
role a on rank 0 { collective bcast root a size 8B }
role b on rank 1 { collective reduce root a size 8B }
""")


def test_expression_failure_raises():
    with pytest.raises(SimulationError):
        _run('model "bad" topology mesh2d(1, 2) params { Z = 0 } '
             'role a on rank 0 { action "w" cost 1 / Z } '
             'role b on rank 1 { action "w" cost 1us }')


def test_uncovered_rank_rejected_cleanly():
    from parmodel import EvalError

    model = parse_model('model "gap" topology ring(3) '
                        'role a on rank 0 { action "w" cost 1us } '
                        'role b on rank 2 { action "w" cost 1us }').model
    with pytest.raises(EvalError, match="rank 1 is not assigned"):
        run(model)


# -- cross-cutting properties -----------------------------------------------------------

def _non_deadlock_corpus():
    out = []
    for path in corpus_paths():
        model = load_corpus_model(path)
        outcome = run(model)
        if isinstance(outcome, RunResult):
            out.append((path, model, outcome))
    return out


def test_corpus_accounting_exact():
    for path, _model, outcome in _non_deadlock_corpus():
        _assert_accounting(outcome.metrics)
        assert outcome.metrics.makespan == pytest.approx(
            outcome.trace.final_time, abs=1e-9), path


def test_corpus_trace_order_and_times():
    for path, _model, outcome in _non_deadlock_corpus():
        events = outcome.trace.events
        assert all(e.time >= 0 for e in events), path
        per_rank_last: dict = {}
        for e in events:
            assert e.time >= per_rank_last.get(e.rank, 0.0), path
            per_rank_last[e.rank] = e.time
        times = [e.time for e in events]
        assert times == sorted(times), path


def test_determinism_byte_identical_traces():
    for path in corpus_paths():
        model = load_corpus_model(path)
        first = run(model)
        second = run(model)
        if isinstance(first, DeadlockReport):
            assert first.trace.serialize() == second.trace.serialize()
        else:
            assert first.trace.serialize() == second.trace.serialize(), path
            assert first.metrics == second.metrics


def test_makespan_monotone_in_costs():
    rng = random.Random(20260808)
    for path, model, base in _non_deadlock_corpus():
        resolved = base.resolved
        for _ in range(6):
            dt_s = rng.uniform(0, 200)
            dt_b = rng.uniform(0, 0.05)
            bumped = CostModel(
                t_startup=resolved.costs.t_startup + dt_s,
                t_byte=resolved.costs.t_byte + dt_b,
                hop_scaling=resolved.costs.hop_scaling,
                send_mode=resolved.costs.send_mode,
            )
            outcome = run(model, costs=bumped)
            assert isinstance(outcome, RunResult), path
            assert outcome.metrics.makespan >= base.metrics.makespan - 1e-9, \
                f"{path} t_s+={dt_s} t_b+={dt_b}"


def test_trace_serialization_format():
    res = _run(TWO_RANK % ("rendezvous", "blocking"))
    lines = res.trace.serialize().splitlines()
    assert lines[0].split("\t")[0] == "0.000"
    for line in lines:
        time, rank, kind, _detail = line.split("\t")
        float(time)
        int(rank)
        assert kind in ("action_start", "action_end", "send_start", "send_end",
                        "recv_start", "recv_end", "collective_start",
                        "collective_end", "task_assign", "task_done", "deadlock")
