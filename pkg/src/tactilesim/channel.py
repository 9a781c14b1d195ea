"""Discrete-event simulation of the wireless channel.

Each protocol is a small parameterized model rather than a stack
emulation: it has an ordering guarantee, a reliability mode (retransmit
up to a retry budget), a per-packet airtime, and a contention loss curve

    p_loss = min(1, baseLoss + contentionCoeff * max(0, load/capacityFps - 1))

where the offered load is measured over a sliding one-second window of
transmission attempts. A sender's radio is busy for the airtime of every
attempt, so transmission time throttles the device's frame cadence: the
next scan happens ``scanDelayUs`` after the radio frees. Skipped frames
never touch the radio, which is where intermittent mode saves time and
power.

The simulation is single-threaded and fully deterministic: events are
processed from a min-heap keyed by (time, senderId, sequence) and all
randomness flows from the scenario seed.
"""

from __future__ import annotations

import heapq
import json
import random
import zlib
from dataclasses import dataclass, field
from importlib import resources
from typing import Sequence

from .config import DeviceConfig
from .errors import ConfigError
from .firmware import DeviceState, device_step
from .receiver import DeviceSession, nrmse
from .sensor import DEFAULT_MATRIX_MODEL, MatrixModel, StimulusRenderer, StimulusScript
from .wire import Frame

LOAD_WINDOW_US = 1_000_000
MAX_SENDERS = 5


@dataclass(frozen=True)
class ProtocolModel:
    name: str
    ordered: bool
    reliable: bool
    airtime_us_per_packet: int
    capacity_fps: float
    base_loss: float = 0.0
    contention_coeff: float = 1.0
    retry_limit: int = 8
    # optional medium-speed variation: each attempt sees the capacity scaled
    # by U(1 - jitter, 1 + jitter); off by default so runs stay reproducible
    # across parameter tweaks
    capacity_jitter: float = 0.0

    def __post_init__(self) -> None:
        if self.airtime_us_per_packet <= 0:
            raise ConfigError("airtimeUsPerPacket must be > 0")
        if not 0.0 <= self.base_loss <= 1.0:
            raise ConfigError("baseLoss must be a probability")
        if self.capacity_fps <= 0:
            raise ConfigError("capacityFps must be > 0")
        if not 0.0 <= self.capacity_jitter < 1.0:
            raise ConfigError("capacityJitter must be in [0, 1)")

    @classmethod
    def from_dict(cls, name: str, obj: dict) -> "ProtocolModel":
        return cls(
            name=name,
            ordered=bool(obj["ordered"]),
            reliable=bool(obj["reliable"]),
            airtime_us_per_packet=int(obj["airtimeUsPerPacket"]),
            capacity_fps=float(obj["capacityFps"]),
            base_loss=float(obj.get("baseLoss", 0.0)),
            contention_coeff=float(obj.get("contentionCoeff", 1.0)),
            retry_limit=int(obj.get("retryLimit", 8)),
            capacity_jitter=float(obj.get("capacityJitter", 0.0)),
        )


def _load_protocol_table() -> dict[str, dict]:
    text = resources.files("tactilesim").joinpath("data/protocols.json").read_text()
    return json.loads(text)


def builtin_protocol(name: str) -> ProtocolModel:
    table = _load_protocol_table()
    if name not in table:
        raise ConfigError(f"unknown protocol {name!r}; have {sorted(table)}")
    return ProtocolModel.from_dict(name, table[name])


@dataclass
class DeliveryOutcome:
    delivered_at_us: int | None  # None means lost
    completed_at_us: int         # when the sender's radio frees
    attempts: int
    retransmit_times_us: list[int] = field(default_factory=list)

    @property
    def lost(self) -> bool:
        return self.delivered_at_us is None


class Medium:
    """Shared channel state for one protocol; senders contend on it."""

    def __init__(self, model: ProtocolModel, rng: random.Random):
        self.model = model
        self.rng = rng
        self._attempts: list[int] = []  # timestamps inside the load window
        self._last_delivery: dict[int, int] = {}

    def offered_load_fps(self, t_us: int) -> float:
        cutoff = t_us - LOAD_WINDOW_US
        attempts = self._attempts
        drop = 0
        while drop < len(attempts) and attempts[drop] <= cutoff:
            drop += 1
        if drop:
            del attempts[:drop]
        return len(attempts) / (LOAD_WINDOW_US / 1e6)

    def loss_probability(self, t_us: int) -> float:
        load = self.offered_load_fps(t_us)
        capacity = self.model.capacity_fps
        if self.model.capacity_jitter > 0.0:
            capacity *= 1.0 + self.rng.uniform(-1.0, 1.0) * self.model.capacity_jitter
        excess = max(0.0, load / capacity - 1.0)
        return min(1.0, self.model.base_loss + self.model.contention_coeff * excess)

    def offer(self, sender_id: int, t_us: int) -> DeliveryOutcome:
        """Transmit one packet starting at t; returns when and whether it lands.

        Reliable models retransmit after a full airtime per retry until the
        budget runs out; every attempt occupies the medium and counts toward
        the offered load.
        """
        model = self.model
        t_attempt = t_us
        attempts = 0
        retransmits: list[int] = []
        while True:
            attempts += 1
            if attempts > 1:
                retransmits.append(t_attempt)
            self._attempts.append(t_attempt)
            p_loss = self.loss_probability(t_attempt)
            failed = p_loss > 0.0 and self.rng.random() < p_loss
            completed = t_attempt + model.airtime_us_per_packet
            if not failed:
                delivered = completed
                if model.ordered:
                    delivered = max(delivered, self._last_delivery.get(sender_id, 0))
                    self._last_delivery[sender_id] = delivered
                return DeliveryOutcome(delivered, completed, attempts, retransmits)
            if not model.reliable or attempts > model.retry_limit:
                return DeliveryOutcome(None, completed, attempts, retransmits)
            t_attempt = completed


@dataclass
class SenderStats:
    sent: int = 0
    delivered: int = 0
    lost: int = 0

    @property
    def in_flight(self) -> int:
        return self.sent - self.delivered - self.lost


@dataclass
class SenderTrace:
    device_id: int
    stats: SenderStats
    emitted: list[tuple[int, Frame]]  # (arrivalUs, frame), received + reconstructed
    truth: list[Frame]                # every scanned frame, sent or skipped
    frames_reconstructed: int
    fps: float
    loss_pct: float
    nrmse_vs_truth: float | None


@dataclass
class Trace:
    duration_us: int
    seed: int
    senders: list[SenderTrace]

    def stats_json_dict(self) -> dict:
        def per_sender(getter):
            return {str(s.device_id): getter(s) for s in self.senders}

        return {
            "version": 1,
            "durationUs": self.duration_us,
            "seed": self.seed,
            "fpsPerSender": per_sender(lambda s: s.fps),
            "lossPctPerSender": per_sender(lambda s: s.loss_pct),
            "framesReconstructed": per_sender(lambda s: s.frames_reconstructed),
            "nrmse": per_sender(lambda s: s.nrmse_vs_truth),
            "sentPerSender": per_sender(lambda s: s.stats.sent),
            "deliveredPerSender": per_sender(lambda s: s.stats.delivered),
            "lostPerSender": per_sender(lambda s: s.stats.lost),
            "inFlightPerSender": per_sender(lambda s: s.stats.in_flight),
        }

    def to_json(self, include_frames: bool = True) -> str:
        doc = self.stats_json_dict()
        if include_frames:
            doc["frames"] = {
                str(s.device_id): [
                    {
                        "packetId": frame.packet_id,
                        "timestampUs": frame.timestamp_us,
                        "arrivalUs": arrival,
                        "reconstructed": frame.reconstructed,
                        "valuesCrc32": zlib.crc32(frame.values.astype("<u2").tobytes()),
                    }
                    for arrival, frame in s.emitted
                ]
                for s in self.senders
            }
        return json.dumps(doc, sort_keys=True, indent=2)


_SCAN, _DELIVERY = 0, 1


def run_scenario(
    devices: Sequence[DeviceConfig],
    protocols: ProtocolModel | dict[str, ProtocolModel] | None,
    stimulus: StimulusScript,
    duration_us: int,
    seed: int,
    matrix_model: MatrixModel = DEFAULT_MATRIX_MODEL,
    on_emitted=None,
) -> Trace:
    """Simulate senders, channel, and receiver for the given horizon.

    ``protocols`` maps protocol names to models (missing names fall back to
    the bundled defaults); a single model is used for every device. The
    optional ``on_emitted(device_id, frames, arrival_us)`` callback sees
    every receiver-side frame as it appears, e.g. for recording.
    """
    if not 1 <= len(devices) <= MAX_SENDERS:
        raise ConfigError(f"scenario needs 1..{MAX_SENDERS} devices, got {len(devices)}")
    ids = [c.device_id for c in devices]
    if len(set(ids)) != len(ids):
        raise ConfigError("device ids must be unique")
    if duration_us <= 0:
        raise ConfigError("durationUs must be > 0")

    if isinstance(protocols, ProtocolModel):
        model_table = {c.protocol: protocols for c in devices}
    else:
        model_table = dict(protocols or {})
        for c in devices:
            if c.protocol not in model_table:
                model_table[c.protocol] = builtin_protocol(c.protocol)

    rng = random.Random(seed)
    mediums = {name: Medium(model, rng) for name, model in model_table.items()}

    states = [DeviceState(c) for c in devices]
    renderers = [
        StimulusRenderer(
            stimulus,
            rows=c.rows,
            cols=c.cols,
            v_ref=c.v_ref,
            v_supply=c.v_supply,
            model=matrix_model,
            adc_bits=c.adc_bits,
            seed=(seed, c.device_id),
        )
        for c in devices
    ]
    sessions = [DeviceSession(c) for c in devices]
    stats = [SenderStats() for _ in devices]
    truth: list[list[Frame]] = [[] for _ in devices]
    emitted: list[list[tuple[int, Frame]]] = [[] for _ in devices]

    heap: list[tuple[int, int, int, int, bytes | None]] = []
    seq = 0
    for idx, config in enumerate(devices):
        heapq.heappush(heap, (0, config.device_id, seq, _SCAN, None))
        seq += 1
    # map heap's senderId slot back to the device index
    idx_of = {c.device_id: i for i, c in enumerate(devices)}

    while heap:
        t_us, device_id, _, kind, payload = heapq.heappop(heap)
        if t_us > duration_us:
            break
        idx = idx_of[device_id]
        config = devices[idx]
        if kind == _SCAN:
            raw_field = renderers[idx].field_at(t_us)
            packet = device_step(states[idx], t_us, raw_field)
            truth[idx].append(states[idx].last_scan)
            completed = t_us
            if packet is not None:
                stats[idx].sent += 1
                outcome = mediums[config.protocol].offer(device_id, t_us)
                completed = outcome.completed_at_us
                if outcome.lost:
                    stats[idx].lost += 1
                else:
                    heapq.heappush(
                        heap, (outcome.delivered_at_us, device_id, seq, _DELIVERY, packet)
                    )
                    seq += 1
            next_scan = max(t_us + 1, completed + config.scan_delay_us)
            if next_scan <= duration_us:
                heapq.heappush(heap, (next_scan, device_id, seq, _SCAN, None))
                seq += 1
        else:
            stats[idx].delivered += 1
            frames = sessions[idx].ingest(payload, t_us)
            emitted[idx].extend((t_us, f) for f in frames)
            if on_emitted is not None:
                on_emitted(device_id, frames, t_us)

    duration_s = duration_us / 1e6
    senders = []
    for idx, config in enumerate(devices):
        truth_by_id = truth[idx]
        pairs = [
            (frame, truth_by_id[frame.packet_id])
            for _, frame in emitted[idx]
            if frame.packet_id < len(truth_by_id)
        ]
        error = (
            nrmse([p for p, _ in pairs], [t for _, t in pairs], config.adc_bits)
            if pairs
            else None
        )
        senders.append(
            SenderTrace(
                device_id=config.device_id,
                stats=stats[idx],
                emitted=emitted[idx],
                truth=truth_by_id,
                frames_reconstructed=sessions[idx].metrics.frames_reconstructed,
                fps=stats[idx].delivered / duration_s,
                loss_pct=100.0 * stats[idx].lost / stats[idx].sent if stats[idx].sent else 0.0,
                nrmse_vs_truth=error,
            )
        )
    return Trace(duration_us=duration_us, seed=seed, senders=senders)
