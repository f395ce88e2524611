from dataclasses import replace

import pytest

from bwaqos.model import (CLASSES, CellConfig, ServiceClass, SystemState, TrafficModel,
                          canonical, db_to_linear, default_classes, state_violations,
                          used_bandwidth, validate)
from bwaqos.phy import ALL_MCS, PhyConfig, raw_data_rate
from bwaqos.scenario import ScenarioError, build, bundled, load, parse_pairs


def with_class(cell, idx, **kw):
    classes = list(cell.classes)
    classes[idx] = replace(classes[idx], **kw)
    return replace(cell, classes=tuple(classes))


@pytest.mark.parametrize("mcs", ALL_MCS)
def test_defaults_valid_for_every_mcs(mcs):
    assert validate(CellConfig(raw_data_rate(mcs, PhyConfig()) / 1e3)) == []


def test_mrtr_above_mstr():
    bad = with_class(CellConfig(15584.4), 2, mrtr=2048)
    assert any("exceeds mstr" in v for v in validate(bad))


def test_non_dividing_grid():
    assert any("does not divide" in v for v in validate(CellConfig(15584.4, degradation_step=100)))


@pytest.mark.parametrize("kw,needle", [
    (dict(total_bandwidth=0), "total_bandwidth"),
    (dict(frame_duration=-1), "frame_duration"),
    (dict(degradation_step=0), "degradation_step"),
])
def test_positivity(kw, needle):
    assert any(needle in v for v in validate(replace(CellConfig(1000), **kw)))


def test_latency_rules():
    cell = CellConfig(10000)
    assert any("not an integer" in v for v in validate(replace(cell, frame_duration=2.0)))
    assert any("required" in v for v in validate(with_class(cell, 1, max_latency=None)))
    assert any("exceed the frame" in v for v in validate(with_class(cell, 1, max_latency=1.0)))


def test_ugs_must_be_fixed_rate():
    assert validate(with_class(CellConfig(1000), 0, mstr=512))


def test_class_params():
    ugs, rtps, nrtps = default_classes()
    assert (ugs.mstr, rtps.mrtr, rtps.max_latency, nrtps.mrtr) == (256, 512, 21.0, 256)
    assert rtps.rate == rtps.mrtr
    assert replace(rtps, token_rate=700.0).rate == 700.0
    assert ugs.eb_n0 == pytest.approx(10 ** 0.36)
    assert db_to_linear(0.0) == 1.0


def test_grid_and_empty_state():
    cell = CellConfig(5000, degradation_step=256)
    assert list(cell.grid(ServiceClass.RTPS)) == [512, 768, 1024]
    assert list(cell.grid(ServiceClass.NRTPS)) == [256, 512, 768, 1024]
    assert list(cell.grid(ServiceClass.UGS)) == [256]
    assert cell.empty_state() == SystemState(0, 0, 1024, 0, 1024)


def test_state_helpers():
    cell = CellConfig(2048)
    s = SystemState(1, 1, 512, 1, 256)
    assert used_bandwidth(s, cell) == 1024
    assert [s.count(c) for c in CLASSES] == [1, 1, 1]
    assert canonical(SystemState(0, 0, 512, 0, 256), cell) == cell.empty_state()
    assert state_violations(s, cell) == []
    assert state_violations(SystemState(9, 0, 1024, 0, 1024), cell)
    assert state_violations(SystemState(0, 1, 600, 0, 1024), cell)


def test_ebn0_offset_shifts_every_class():
    cell = CellConfig(1000).with_ebn0_offset(2.0)
    assert [p.eb_n0_db for p in cell.classes] == pytest.approx([5.6, 8.3, 10.1])


def test_traffic_violations():
    assert TrafficModel.uniform(1.0).violations() == []
    assert TrafficModel((1, -1, 0), (0, 0, 0)).violations()
    assert TrafficModel((1, 1, 1), (0, 0, 0), (0.2, 0, 0.2)).violations()


def test_default_scenario():
    scn = load()
    assert scn.cell.total_bandwidth == pytest.approx(15584.4156, abs=1e-4)
    assert scn.traffic == TrafficModel.uniform(10.0, 0.2)
    assert scn.load_grid == tuple(float(x) for x in range(1, 11))
    assert len(scn.ebn0_grid) == 20 and scn.seed is None


def test_bundled_scenarios_load():
    assert load(bundled("small.cfg")).cell.total_bandwidth == 3000
    two = load(bundled("ugs_two_state.cfg"))
    assert two.cell.outage_check is False
    assert two.traffic.lambda_new == (0.3, 0.0, 0.0)


def test_overrides_and_class_keys():
    scn = load(overrides=["mcs=64QAM-3/4", "rtps.max_latency_ms=42", "load_grid=1,2.5"])
    assert scn.cell.total_bandwidth == pytest.approx(70129.87, abs=0.01)
    assert scn.cell.rtps.max_latency == 42.0
    assert scn.load_grid == (1.0, 2.5)


@pytest.mark.parametrize("text", [
    "bogus = 1",
    "no equals sign",
    "mcs = QPSK-9/10",
    "degradation_step_kbps = 100",
    "alpha = 0",
    "lambda_new = 1, 2",
    "outage_check = maybe",
])
def test_bad_scenarios(text):
    with pytest.raises(ScenarioError):
        build(parse_pairs(text))


def test_comments_and_blank_lines():
    assert parse_pairs("# c\n\nmcs = QPSK-3/4  # trailing\n") == {"mcs": "QPSK-3/4"}
