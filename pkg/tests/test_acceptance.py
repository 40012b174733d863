"""Acceptance criteria.

Each test covers one numbered criterion at its stated tolerance and
prints one PASS/FAIL line (visible with `pytest -s` or in captured
output).  Everything here is checked against independent oracles:
Floyd-Warshall for hop counts, closed forms for pipelines and task
partitions, hand event traces for the point-to-point and PI examples,
and a standalone DOT grammar checker for the topology exports.
"""

from __future__ import annotations

import random
import re
from contextlib import contextmanager

import pytest

from parmodel import (
    DeadlockReport,
    ParadigmSpec,
    RunResult,
    build_topology,
    gen_divide_conquer,
    gen_master_worker,
    gen_monte_carlo_pi,
    gen_pipeline,
    gen_spmd,
    parse_model,
    print_model,
    render_report,
    resolve_model,
    run,
    export_sequence,
    export_swimlane,
    export_topology_dot,
    sequential_baseline,
    speedup,
    sweep,
)
from parmodel.cli import main
from parmodel.ir import CostDecl, Num
from parmodel.model import CostModel

from conftest import MODELS_DIR, corpus_paths, load_corpus_model
from test_export import STEREOTYPES, assert_valid_dot
from test_topology import all_specs, floyd_warshall

TOL = 1e-9


@contextmanager
def criterion(number: int, description: str):
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {number:2d}: FAIL - {description}")
        raise
    print(f"ACCEPTANCE {number:2d}: PASS - {description}")


def _completed_corpus_runs():
    out = []
    for path in corpus_paths():
        model = load_corpus_model(path)
        outcome = run(model)
        if isinstance(outcome, RunResult):
            out.append((path, model, outcome))
    return out


def _generated_battery():
    return [
        gen_master_worker(4, [100.0] * 8, "static"),
        gen_master_worker(2, [10.0, 10.0, 10.0, 10.0, 70.0, 70.0], "dynamic"),
        gen_spmd(4, 1_000_000, 0.1),
        gen_spmd(3, 300, 1.0, halo_bytes=64),
        gen_pipeline(4, 6, 10.0),
        gen_divide_conquer(2, 2, 10.0, 100.0, 10.0),
        gen_monte_carlo_pi(5, 1_000_000, 0.1),
    ]


def test_criterion_1_topology_suite():
    with criterion(1, "degree/connectivity invariants and BFS-exact hop "
                      "counts for every kind at p <= 64"):
        for spec in all_specs(64):
            g = build_topology(spec)
            for u in range(g.p):
                assert u not in g.adjacency[u]
                for v in g.adjacency[u]:
                    assert u in g.adjacency[v]
            dist = floyd_warshall(g.p, g.adjacency)
            for u in range(g.p):
                for v in range(g.p):
                    expected = 1 if (g.medium and u != v) else dist[u][v]
                    assert expected != float("inf"), "graph must be connected"
                    assert g.shortest_hops(u, v) == expected


def test_criterion_2_pipeline_closed_form():
    with criterion(2, "pipeline makespan equals (s + m - 1) * t for "
                      "s, m in 1..8 (tol 1e-9)"):
        t = 10.0
        for s in range(1, 9):
            for m in range(1, 9):
                outcome = run(gen_pipeline(s, m, t))
                assert isinstance(outcome, RunResult)
                assert outcome.metrics.makespan == \
                    pytest.approx((s + m - 1) * t, abs=TOL)


def test_criterion_3_master_worker():
    with criterion(3, "static 200µs even case, skewed 150/90µs hand trace, "
                      "Graham bound on 1000 random instances"):
        even = run(gen_master_worker(4, [100.0] * 8, "static"))
        assert even.metrics.makespan == pytest.approx(200.0, abs=TOL)

        tasks = [10.0, 10.0, 10.0, 10.0, 70.0, 70.0]
        static = run(gen_master_worker(2, tasks, "static"))
        dynamic = run(gen_master_worker(2, tasks, "dynamic"))
        assert static.metrics.makespan == pytest.approx(150.0, abs=TOL)
        assert dynamic.metrics.makespan == pytest.approx(90.0, abs=TOL)

        rng = random.Random(424242)
        for _ in range(1000):
            w = rng.randint(1, 8)
            costs = [rng.uniform(0.5, 100.0) for _ in range(rng.randint(1, 24))]
            outcome = run(gen_master_worker(w, costs, "dynamic"))
            assert outcome.metrics.makespan <= \
                sum(costs) / w + max(costs) + TOL


def test_criterion_4_spmd_efficiency():
    with criterion(4, "zero-comm SPMD efficiency 1.0 ± 1e-9 for p in {1,2,4}; "
                      "halo efficiency strictly decreasing in p"):
        spec = ParadigmSpec("spmd", dict(p=4, n=1_000_000,
                                         per_element_cost=0.1))
        report = sweep(spec, "process_count", [1, 2, 4])
        for row in report.rows:
            assert row.efficiency == pytest.approx(1.0, abs=TOL)

        halo_spec = ParadigmSpec("spmd", dict(
            p=4, n=1_000_000, per_element_cost=0.1, halo_bytes=1000.0,
            costs=CostDecl(t_startup=Num(50.0), t_byte=Num(0.01))))
        halo = sweep(halo_spec, "process_count", [2, 4, 8])
        effs = [row.efficiency for row in halo.rows]
        assert all(b < a for a, b in zip(effs, effs[1:]))


def test_criterion_5_point_to_point_costs():
    with criterion(5, "160µs two-rank hand trace exact; makespan monotone "
                      "under t_startup/t_byte increases across the corpus"):
        two = load_corpus_model(f"{MODELS_DIR}/two_rank_sendrecv.pmod")
        outcome = run(two)
        assert outcome.metrics.makespan == pytest.approx(160.0, abs=TOL)
        ends = {(e.kind, e.rank): e.time for e in outcome.trace.events}
        assert ends[("send_end", 0)] == pytest.approx(160.0, abs=TOL)
        assert ends[("recv_end", 1)] == pytest.approx(160.0, abs=TOL)

        rng = random.Random(8)
        for path, model, base in _completed_corpus_runs():
            costs = base.resolved.costs
            for _ in range(4):
                bumped = CostModel(
                    costs.t_startup + rng.uniform(0, 500),
                    costs.t_byte + rng.uniform(0, 0.1),
                    costs.hop_scaling, costs.send_mode)
                again = run(model, costs=bumped)
                assert isinstance(again, RunResult), path
                assert again.metrics.makespan >= base.metrics.makespan - TOL


def test_criterion_6_deadlock_detection(capsys):
    with criterion(6, "2-cycle and 3-cycle corpora exit 3 with the correct "
                      "cycle; zero-comm generated paradigms never deadlock"):
        code = main(["simulate", f"{MODELS_DIR}/deadlock_2cycle.pmod"])
        out = capsys.readouterr().out
        assert code == 3 and "P0 -> P1 -> P0" in out

        code = main(["simulate", f"{MODELS_DIR}/deadlock_3cycle.pmod"])
        out = capsys.readouterr().out
        assert code == 3 and "P0 -> P1 -> P2 -> P0" in out

        report = run(load_corpus_model(f"{MODELS_DIR}/deadlock_2cycle.pmod"))
        assert isinstance(report, DeadlockReport) and report.cycle == (0, 1)
        report = run(load_corpus_model(f"{MODELS_DIR}/deadlock_3cycle.pmod"))
        assert report.cycle == (0, 1, 2)

        zero_comm = (
            [gen_master_worker(w, [float(c) for c in range(1, n + 1)], policy)
             for w in (1, 3, 5) for n in (1, 5, 9)
             for policy in ("static", "dynamic")]
            + [gen_spmd(p, 64, 1.0, halo_bytes=8) for p in (1, 2, 3, 4, 8)]
            + [gen_pipeline(s, m, 2.0) for s in (1, 2, 6) for m in (1, 4)]
            + [gen_divide_conquer(a, d, 1.0, 10.0, 1.0)
               for a in (2, 3) for d in (0, 1, 2)]
            + [gen_monte_carlo_pi(P, 1000.0, 0.5) for P in (2, 3, 5, 9)]
        )
        for model in zero_comm:
            assert isinstance(run(model), RunResult), model.name


def test_criterion_7_monte_carlo_pi():
    with criterion(7, "PI speedup in [3.9, 4.0] at P=5 from two runs; curve "
                      "over P in {2,3,5,9} strictly increasing and <= P"):
        par = gen_monte_carlo_pi(5, 1_000_000, 0.1)
        t_par = run(par).metrics.makespan
        t_seq = run(sequential_baseline(par)).metrics.makespan
        s5 = speedup(t_seq, t_par)
        assert 3.9 <= s5 <= 4.0

        spec = ParadigmSpec("pi", dict(P=5, N=1_000_000, sample_cost=0.1))
        curve = sweep(spec, "process_count", [2, 3, 5, 9])
        speedups = [row.speedup for row in curve.rows]
        assert all(b > a for a, b in zip(speedups, speedups[1:]))
        for row in curve.rows:
            assert row.speedup <= row.p + TOL


def test_criterion_8_accounting():
    with criterion(8, "per rank compute + comm + idle = makespan within "
                      "1e-9 µs on every corpus run"):
        runs = _completed_corpus_runs()
        assert runs, "corpus must contain completing models"
        for path, _model, outcome in runs:
            m = outcome.metrics
            for rank in range(m.p):
                total = m.compute[rank] + m.comm[rank] + m.idle[rank]
                assert total == pytest.approx(m.makespan, abs=TOL), \
                    (path, rank)


def test_criterion_9_round_trips():
    with criterion(9, "parse∘print fixpoint on corpus and generated models; "
                      "sweep CSV re-parses within 1e-6"):
        for path in corpus_paths():
            model = load_corpus_model(path)
            assert parse_model(print_model(model)).model == model, path
        for model in _generated_battery():
            assert parse_model(print_model(model)).model == model, model.name

        pi = load_corpus_model(f"{MODELS_DIR}/pi_montecarlo.pmod")
        report = sweep(pi, "t_startup", [0, 25, 125])
        lines = render_report(report, "csv").strip().split("\n")
        assert lines[0] == "value,makespan_us,speedup,efficiency"
        for line, row in zip(lines[1:], report.rows):
            got = [float(x) for x in line.split(",")]
            want = [row.value, row.makespan_us, row.speedup, row.efficiency]
            for g, w in zip(got, want):
                assert g == pytest.approx(w, abs=1e-6)


def test_criterion_10_exports():
    with criterion(10, "exports deterministic; topology is valid DOT; "
                       "sequence vocabulary closed; arrow count = "
                       "message_count"):
        for path in corpus_paths():
            model = load_corpus_model(path)
            resolved = resolve_model(model)
            dot = export_topology_dot(resolved)
            assert_valid_dot(dot)
            assert dot == export_topology_dot(resolve_model(model))
            lanes = export_swimlane(model)
            assert lanes == export_swimlane(model)
            for token in re.findall(r"<<[^>]*>>", lanes):
                assert token in STEREOTYPES, (path, token)

            outcome = run(model)
            if isinstance(outcome, DeadlockReport):
                continue
            seq = export_sequence(outcome.trace, outcome.resolved)
            assert seq == export_sequence(outcome.trace, outcome.resolved)
            for token in re.findall(r"<<[^>]*>>", seq):
                assert token in STEREOTYPES, (path, token)
            arrows = [l for l in seq.splitlines() if " -> " in l]
            assert len(arrows) == outcome.metrics.message_count, path
            for rank in range(outcome.metrics.p):
                assert seq.count(f"<<create>> P{rank}") == 1
                assert seq.count(f"<<destroy>> P{rank}") == 1
