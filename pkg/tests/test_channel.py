"""Channel model: loss curve, ordering, reliability, scenario determinism."""

import random

import numpy as np
import pytest

from tactilesim.channel import (
    Medium,
    ProtocolModel,
    builtin_protocol,
    run_scenario,
)
from tactilesim.config import DeviceConfig
from tactilesim.errors import ConfigError
from tactilesim.scenarios import load_scenario
from tactilesim.sensor import StimulusScript


def model(**kw):
    base = dict(
        name="test", ordered=False, reliable=False,
        airtime_us_per_packet=100, capacity_fps=100.0,
        base_loss=0.0, contention_coeff=1.0,
    )
    base.update(kw)
    return ProtocolModel(**base)


def test_single_sender_under_capacity_never_loses():
    medium = Medium(model(capacity_fps=100.0), random.Random(1))
    outcomes = [medium.offer(1, t * 20_000) for t in range(500)]  # 50 fps offered
    assert all(not o.lost for o in outcomes)
    assert all(o.attempts == 1 for o in outcomes)


def test_ordered_model_never_reorders():
    # high base loss + reliability forces retransmissions, which would
    # reorder without the per-sender delivery floor
    medium = Medium(
        model(ordered=True, reliable=True, base_loss=0.3, capacity_fps=1e6),
        random.Random(7),
    )
    deliveries = [medium.offer(1, t * 50) for t in range(400)]
    delivered_at = [o.delivered_at_us for o in deliveries if not o.lost]
    assert delivered_at == sorted(delivered_at)


def test_reliable_under_capacity_zero_loss():
    medium = Medium(
        model(reliable=True, base_loss=0.2, capacity_fps=1e6), random.Random(3)
    )
    outcomes = [medium.offer(1, t * 10_000) for t in range(3000)]
    assert sum(o.lost for o in outcomes) == 0
    assert any(o.attempts > 1 for o in outcomes)


def test_retry_budget_exhaustion_counts_as_loss():
    medium = Medium(
        model(reliable=True, base_loss=1.0, capacity_fps=1e6, retry_limit=4),
        random.Random(3),
    )
    outcome = medium.offer(1, 0)
    assert outcome.lost
    assert outcome.attempts == 5  # first try + 4 retries
    assert len(outcome.retransmit_times_us) == 4
    assert outcome.completed_at_us == 5 * 100


def test_contention_loss_matches_analytic_curve():
    # 3 senders at 300 fps aggregate vs capacity 240: excess 0.25,
    # p_loss = 0.01 + 0.8 * 0.25 = 0.21; compare after 1.5 s of warm-up
    m = model(capacity_fps=240.0, base_loss=0.01, contention_coeff=0.8)
    medium = Medium(m, random.Random(11))
    lost = offered = 0
    for round_ in range(4000):
        for sender in range(3):
            t = round_ * 10_000 + sender * 7
            outcome = medium.offer(sender, t)
            if t >= 1_500_000:
                offered += 1
                lost += outcome.lost
    analytic = 0.21
    measured = lost / offered
    sigma = (analytic * (1 - analytic) / offered) ** 0.5
    assert abs(measured - analytic) < 4 * sigma


def test_offered_load_window():
    medium = Medium(model(), random.Random(0))
    for k in range(10):
        medium.offer(1, k * 100_000)  # 10 offers over 0.9 s
    assert medium.offered_load_fps(999_999) == pytest.approx(10.0)
    assert medium.offered_load_fps(1_000_000) == pytest.approx(9.0)  # window is (t-1s, t]
    assert medium.offered_load_fps(2_000_000) == pytest.approx(0.0)


def quiet(noise=0.0):
    return StimulusScript(events=(), noise_std_counts=noise)


def dev(device_id=1, **kw):
    base = dict(device_id=device_id, rows=4, cols=4, protocol="espnow", scan_delay_us=20_000)
    base.update(kw)
    return DeviceConfig(**base)


def test_scenario_determinism_bytes_identical():
    devices = [dev(1), dev(2)]
    a = run_scenario(devices, None, quiet(3.0), 5_000_000, seed=42)
    b = run_scenario(devices, None, quiet(3.0), 5_000_000, seed=42)
    assert a.to_json() == b.to_json()
    c = run_scenario(devices, None, quiet(3.0), 5_000_000, seed=43)
    assert c.to_json() != a.to_json()


def test_scenario_conservation_per_sender():
    trace = run_scenario([dev(i) for i in (1, 2, 3)], None, quiet(), 10_000_000, seed=5)
    for sender in trace.senders:
        s = sender.stats
        assert s.sent == s.delivered + s.lost + s.in_flight
        assert s.sent > 0


def test_throughput_non_increasing_in_sender_count():
    fps = []
    for n in range(1, 6):
        trace = run_scenario(
            [dev(i, scan_delay_us=10_000) for i in range(1, n + 1)],
            None,
            quiet(),
            20_000_000,
            seed=9,
        )
        per_sender = [s.fps for s in trace.senders]
        fps.append(sum(per_sender) / len(per_sender))
    for a, b in zip(fps, fps[1:]):
        assert b <= a + 0.05  # tiny slack for horizon edge effects


def test_scenario_validates_sender_count_and_ids():
    with pytest.raises(ConfigError, match="1..5"):
        run_scenario([dev(i) for i in range(1, 7)], None, quiet(), 1_000_000, 0)
    with pytest.raises(ConfigError, match="unique"):
        run_scenario([dev(1), dev(1)], None, quiet(), 1_000_000, 0)


def test_lossless_intermittent_scenario_reconstructs_exactly():
    wifi = builtin_protocol("wifi")
    devices = [
        dev(1, rows=16, cols=16, protocol="wifi", intermittent=True, p=3, d=6,
            scan_delay_us=30_000)
    ]
    script = load_scenario("repeated_press").stimulus
    trace = run_scenario(devices, {"wifi": wifi}, script, 8_000_000, seed=2)
    sender = trace.senders[0]
    assert sender.stats.lost == 0
    assert sender.frames_reconstructed > 0
    # received frames carry the actual scan bit for bit
    received = [f for _, f in sender.emitted if not f.reconstructed]
    assert received
    for frame in received:
        assert np.array_equal(frame.values, sender.truth[frame.packet_id].values)
    # reconstruction guarantee: skipped frames stay within d on average
    d, n = 6, 256
    for _, frame in sender.emitted:
        if frame.reconstructed:
            actual = sender.truth[frame.packet_id]
            err = np.abs(frame.values.astype(int) - actual.values.astype(int)).sum()
            assert err <= d * n


def test_builtin_protocol_unknown_name():
    with pytest.raises(ConfigError, match="unknown protocol"):
        builtin_protocol("zigbee")


def test_capacity_jitter_off_by_default_and_deterministic_when_on():
    assert builtin_protocol("wifi").capacity_jitter == 0.0
    # overloaded medium: jitter changes which packets fall to contention
    jittered = model(capacity_fps=50.0, contention_coeff=0.5, capacity_jitter=0.3)
    steady = model(capacity_fps=50.0, contention_coeff=0.5)

    def losses(m, seed):
        medium = Medium(m, random.Random(seed))
        return [medium.offer(1, t * 10_000).lost for t in range(2000)]  # 100 fps

    assert losses(jittered, 5) == losses(jittered, 5)  # same seed, same trace
    assert losses(jittered, 5) != losses(steady, 5)
    with pytest.raises(ConfigError, match="capacityJitter"):
        model(capacity_jitter=1.5)


@pytest.mark.slow
def test_paper_anchor_scenarios():
    wifi = load_scenario("wifi_n1").run()
    assert wifi.senders[0].fps >= 60.0
    assert wifi.senders[0].loss_pct == 0.0

    espnow = load_scenario("espnow_n3").run()
    for sender in espnow.senders:
        assert sender.fps == pytest.approx(11.76, abs=0.5)
        assert sender.loss_pct < 1.0

    ble = load_scenario("ble_n3").run()
    for sender in ble.senders:
        assert sender.fps == pytest.approx(0.75, abs=0.05)
        assert sender.loss_pct < 1.0
