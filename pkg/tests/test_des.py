import pytest

from bwaqos import ctmc, des
from bwaqos.ctmc import METRIC_NAMES
from bwaqos.model import CellConfig, TrafficModel
from bwaqos.scenario import bundled, load

from oracles import erlang_b

SMALL = load(bundled("small.cfg"))


def sim(cell, traffic, events, seed=7, **kw):
    return des.run(des.SimConfig(seed, events, traffic, cell, **kw))


def test_no_arrivals():
    rep = sim(CellConfig(15584.4), TrafficModel.uniform(0.0), 1000)
    assert rep.events_processed == 0
    assert all(v == 0.0 for v in rep.report.metrics().values())
    cmp = des.compare_with_ctmc(rep, ctmc.solve(CellConfig(15584.4), TrafficModel.uniform(0.0)).report)
    assert all(c.difference == 0 and c.within_ci for c in cmp.values())


@pytest.mark.slow
def test_erlang_b_four_servers():
    # A single 95% interval misses one run in twenty, so check coverage over
    # twenty seeds and the pooled estimate instead of one hand-picked seed.
    cell = CellConfig(4 * 256, outage_check=False)
    traffic = TrafficModel((0.2, 0, 0), (0.2, 0, 0), (0.2,) * 3)  # 2 erlangs
    want = erlang_b(4, 2.0)
    assert want == pytest.approx(0.0952, abs=1e-4)
    reps = [sim(cell, traffic, 200_000, seed=s) for s in range(20)]
    hits = sum(abs(r.report.ncbp[0] - want) <= r.half_width["ncbp_ugs"] for r in reps)
    assert hits >= 16  # P(fewer) is about 0.3% at 95% coverage
    pooled = des.merge(reps)
    for name, k in (("ncbp_ugs", 0), ("hcdp_ugs", 0)):
        est = getattr(pooled.report, name[:4])[k]
        assert abs(est - want) <= pooled.half_width[name]


def test_same_seed_same_report():
    a = sim(SMALL.cell, SMALL.traffic, 20_000, seed=11)
    b = sim(SMALL.cell, SMALL.traffic, 20_000, seed=11)
    assert a.batches == b.batches and a.occupancy == b.occupancy
    assert des.sim_rows_csv([(0.2, "x", a)]) == des.sim_rows_csv([(0.2, "x", b)])
    c = sim(SMALL.cell, SMALL.traffic, 20_000, seed=12)
    assert c.batches != a.batches


def test_visited_states_are_enumerated():
    rep = sim(SMALL.cell, SMALL.traffic, 50_000)
    space = ctmc.enumerate_states(SMALL.cell, SMALL.traffic)
    assert set(rep.occupancy) <= set(space.states)
    assert sum(rep.occupancy.values()) == pytest.approx(1.0)


def test_mismatched_load_is_detected():
    sol = ctmc.solve(SMALL.cell, SMALL.traffic)
    rep = sim(SMALL.cell, TrafficModel.uniform(0.6), 200_000)
    cmp = des.compare_with_ctmc(rep, sol.report)
    assert not all(c.within_ci for c in cmp.values())


def test_mismatched_cell_raises():
    rep = sim(SMALL.cell, SMALL.traffic, 1000)
    with pytest.raises(des.ConfigMismatchError):
        des.compare_with_ctmc(rep, ctmc.solve(SMALL.cell, SMALL.traffic).report,
                              CellConfig(4000, degradation_step=256))


@pytest.mark.slow
def test_occupancy_converges():
    sol = ctmc.solve(SMALL.cell, SMALL.traffic)
    tv = [des.total_variation(sim(SMALL.cell, SMALL.traffic, n, seed=42).occupancy,
                              sol.space, sol.stationary.pi) for n in (10**4, 10**5, 10**6)]
    assert tv[0] > tv[1] > tv[2]
    assert tv[2] < 0.01


def test_merge_pools_batches():
    reps = [sim(SMALL.cell, SMALL.traffic, 20_000, seed=s) for s in (1, 2)]
    m = des.merge(reps)
    assert len(m.batches["bu"]) == 2 * des.N_BATCHES
    assert m.report.bu == pytest.approx((reps[0].report.bu + reps[1].report.bu) / 2)
    assert m.events_processed == sum(r.events_processed for r in reps)
    with pytest.raises(ValueError):
        des.merge([])


def test_half_width():
    assert des.batch_half_width([1.0] * 20) == 0.0
    # t(0.975, 3) * sd / 2 with sd of [0,1,2,3]
    assert des.batch_half_width([0, 1, 2, 3]) == pytest.approx(3.182446 * 1.290994 / 2, rel=1e-5)
    assert des.batch_half_width([1.0]) == float("inf")


@pytest.mark.parametrize("kw", [dict(horizon_events=0), dict(warmup_events=500),
                                dict(horizon_events=10, warmup_events=0)])
def test_bad_sim_config(kw):
    base = dict(seed=1, horizon_events=500, traffic=SMALL.traffic, cell=SMALL.cell)
    base.update(kw)
    with pytest.raises(ValueError):
        des.run(des.SimConfig(**base))


def test_schedule_averages_are_sane():
    rep = sim(SMALL.cell, SMALL.traffic, 50_000)
    assert 0 <= rep.bu_before <= rep.bu_after + 1e-12 <= 1 + 1e-12
    assert 0 < rep.jfi_before <= 1 and 0 < rep.jfi_after <= 1


def test_csv_layout():
    rep = sim(SMALL.cell, SMALL.traffic, 2000)
    header = des.sim_rows_csv([(0.2, "QPSK-1/2", rep)]).splitlines()[0].split(",")
    assert header[:4] == ["lambda", "mcs", "seed", "events"]
    assert header[4:4 + len(METRIC_NAMES)] == list(METRIC_NAMES)
    text = des.comparison_csv(des.compare_with_ctmc(rep, ctmc.solve(SMALL.cell, SMALL.traffic).report))
    assert text.splitlines()[0] == "metric,analytic,empirical,ci_half_width,difference,within_ci"
