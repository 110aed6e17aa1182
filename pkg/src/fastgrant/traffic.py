"""Synthetic event-driven transmission traces for machine-type devices.

A network is described declaratively: each device either transmits at a fixed
set of slots within an event, transmits uniformly at random, or is triggered
by another device's transmissions after a fixed lag. Events are independent
fixed-length blocks; triggers never cross an event boundary.

Reproducibility contract: event ``k`` of a record is generated from a PCG64
generator seeded with ``SeedSequence(seed, spawn_key=(k,))``, and within an
event one uniform variate is consumed per (device, slot) pair, devices in spec
order, slots ascending. Identical (spec, num_events, seed) therefore yield
bit-identical records, and events can be generated concurrently.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from fastgrant.errors import SpecificationError


@dataclass(frozen=True)
class PeriodicSlots:
    """Transmits independently with ``p_transmit`` at each allowed slot, never elsewhere."""

    allowed_slots: frozenset
    p_transmit: float

    def __post_init__(self):
        object.__setattr__(self, "allowed_slots", frozenset(int(s) for s in self.allowed_slots))


@dataclass(frozen=True)
class IidRandom:
    """Transmits independently with ``p_transmit`` at every slot."""

    p_transmit: float


@dataclass(frozen=True)
class Triggered:
    """Transmits ``lag`` slots after each source transmission with ``p_trigger``."""

    source: str
    lag: int
    p_trigger: float


DeviceBehavior = Union[PeriodicSlots, IidRandom, Triggered]


@dataclass(frozen=True)
class NetworkSpec:
    """Ordered device behaviors plus the number of time steps per event."""

    devices: tuple
    event_len: int

    def __post_init__(self):
        object.__setattr__(self, "devices", tuple((str(d), b) for d, b in self.devices))
        object.__setattr__(self, "event_len", int(self.event_len))

    @property
    def device_ids(self) -> tuple:
        return tuple(d for d, _ in self.devices)

    @property
    def num_devices(self) -> int:
        return len(self.devices)

    def behavior(self, device_id: str) -> DeviceBehavior:
        for d, b in self.devices:
            if d == device_id:
                return b
        raise KeyError(device_id)

    def trigger_edges(self) -> list:
        """(source, target, lag, p_trigger) for every triggered device."""
        return [
            (b.source, d, b.lag, b.p_trigger)
            for d, b in self.devices
            if isinstance(b, Triggered)
        ]


@dataclass
class TransmissionRecord:
    """Binary transmission history: one row per time step, one column per device."""

    data: np.ndarray
    event_len: int
    device_ids: tuple

    def __post_init__(self):
        self.data = np.ascontiguousarray(self.data, dtype=np.uint8)
        self.device_ids = tuple(self.device_ids)
        if self.data.ndim != 2 or self.data.shape[1] != len(self.device_ids):
            raise SpecificationError(
                f"record data shape {self.data.shape} does not match {len(self.device_ids)} devices"
            )
        if self.data.shape[0] % self.event_len != 0:
            raise SpecificationError(
                f"total steps {self.data.shape[0]} is not a multiple of event_len {self.event_len}"
            )

    @property
    def total_steps(self) -> int:
        return self.data.shape[0]

    @property
    def num_events(self) -> int:
        return self.total_steps // self.event_len

    def column(self, device_id: str) -> np.ndarray:
        return self.data[:, self.device_ids.index(device_id)]


def five_device_scenario(p_periodic: float = 0.5, p_random: float = 0.5) -> NetworkSpec:
    """Built-in five-device demo network covering three levels of entropy.

    X transmits at six fixed slots of a 12-step event, Y at any slot, Z fires
    3 steps after X (p=0.7), T fires 2 steps after Y (p=0.7), and W fires one
    step after T with certainty. Slot indices are 0-based.
    """
    return NetworkSpec(
        devices=(
            ("X", PeriodicSlots(allowed_slots=frozenset({2, 3, 4, 5, 8, 9}), p_transmit=p_periodic)),
            ("Y", IidRandom(p_transmit=p_random)),
            ("Z", Triggered(source="X", lag=3, p_trigger=0.7)),
            ("T", Triggered(source="Y", lag=2, p_trigger=0.7)),
            ("W", Triggered(source="T", lag=1, p_trigger=1.0)),
        ),
        event_len=12,
    )


def validate_spec(spec: NetworkSpec) -> list:
    """Return a list of human-readable invariant violations; empty means valid."""
    violations = []
    ids = [d for d, _ in spec.devices]
    if spec.event_len < 1:
        violations.append(f"event_len must be >= 1, got {spec.event_len}")
    seen = set()
    for d in ids:
        if d in seen:
            violations.append(f"device id {d!r} is not unique")
        seen.add(d)
    for d, b in spec.devices:
        if isinstance(b, (PeriodicSlots, IidRandom)):
            if not 0.0 <= b.p_transmit <= 1.0:
                violations.append(f"device {d!r}: p_transmit {b.p_transmit} outside [0, 1]")
        if isinstance(b, PeriodicSlots):
            bad = sorted(s for s in b.allowed_slots if not 0 <= s < spec.event_len)
            if bad:
                violations.append(
                    f"device {d!r}: allowed_slots {bad} outside [0, {spec.event_len})"
                )
        if isinstance(b, Triggered):
            if not 0.0 <= b.p_trigger <= 1.0:
                violations.append(f"device {d!r}: p_trigger {b.p_trigger} outside [0, 1]")
            if b.lag < 1:
                violations.append(f"device {d!r}: lag must be >= 1, got {b.lag}")
            if b.source not in seen and b.source not in ids:
                violations.append(f"device {d!r}: trigger source {b.source!r} does not exist")
    for cycle in _dependency_cycles(spec):
        violations.append("trigger dependency cycle: " + " -> ".join(cycle))
    return violations


def _dependency_cycles(spec: NetworkSpec) -> list:
    ids = set(spec.device_ids)
    parents = {d: b.source for d, b in spec.devices if isinstance(b, Triggered) and b.source in ids}
    cycles = []
    resolved = set()
    for start in parents:
        if start in resolved:
            continue
        chain, node = [], start
        while node in parents and node not in resolved:
            if node in chain:
                cycles.append(chain[chain.index(node):] + [node])
                break
            chain.append(node)
            node = parents[node]
        resolved.update(chain)
    return cycles


def _topological_order(spec: NetworkSpec) -> list:
    """Device indices with every trigger source before its dependents."""
    index = {d: i for i, (d, _) in enumerate(spec.devices)}
    order, placed = [], set()

    def visit(i):
        if i in placed:
            return
        behavior = spec.devices[i][1]
        if isinstance(behavior, Triggered):
            visit(index[behavior.source])
        placed.add(i)
        order.append(i)

    for i in range(spec.num_devices):
        visit(i)
    return order


def generate_event(spec: NetworkSpec, rng: np.random.Generator) -> np.ndarray:
    """Generate one event as an (event_len, num_devices) binary matrix.

    One uniform variate is consumed per (device, slot), devices in spec order,
    slots ascending, regardless of whether the draw ends up used; trigger draws
    for a slot reuse the triggered device's own variate at that slot.
    """
    violations = validate_spec(spec)
    if violations:
        raise SpecificationError("; ".join(violations))
    L, n = spec.event_len, spec.num_devices
    u = rng.random((n, L))
    out = np.zeros((L, n), dtype=np.uint8)
    for j in _topological_order(spec):
        _, behavior = spec.devices[j]
        if isinstance(behavior, PeriodicSlots):
            slots = np.fromiter(sorted(behavior.allowed_slots), dtype=np.intp, count=len(behavior.allowed_slots))
            out[slots, j] = u[j, slots] < behavior.p_transmit
        elif isinstance(behavior, IidRandom):
            out[:, j] = u[j] < behavior.p_transmit
        else:
            src = spec.device_ids.index(behavior.source)
            lag = behavior.lag
            if lag < L:
                fired = (out[: L - lag, src] == 1) & (u[j, lag:] < behavior.p_trigger)
                out[lag:, j] = fired
    return out


def generate_record(spec: NetworkSpec, num_events: int, seed: int) -> TransmissionRecord:
    """Concatenate ``num_events`` independent events into one record."""
    if num_events < 1:
        raise ValueError(f"num_events must be >= 1, got {num_events}")
    blocks = np.empty((num_events * spec.event_len, spec.num_devices), dtype=np.uint8)
    for k in range(num_events):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(k,))))
        blocks[k * spec.event_len:(k + 1) * spec.event_len] = generate_event(spec, rng)
    return TransmissionRecord(data=blocks, event_len=spec.event_len, device_ids=spec.device_ids)


# --- serialization -----------------------------------------------------------

_KIND_NAMES = {PeriodicSlots: "periodic_slots", IidRandom: "iid_random", Triggered: "triggered"}


def spec_to_dict(spec: NetworkSpec) -> dict:
    devices = []
    for d, b in spec.devices:
        entry = {"id": d, "kind": _KIND_NAMES[type(b)]}
        if isinstance(b, PeriodicSlots):
            entry["allowed_slots"] = sorted(b.allowed_slots)
            entry["p_transmit"] = b.p_transmit
        elif isinstance(b, IidRandom):
            entry["p_transmit"] = b.p_transmit
        else:
            entry.update({"source": b.source, "lag": b.lag, "p_trigger": b.p_trigger})
        devices.append(entry)
    return {"event_len": spec.event_len, "devices": devices}


def spec_from_dict(payload: dict) -> NetworkSpec:
    devices = []
    for entry in payload["devices"]:
        kind = entry["kind"]
        if kind == "periodic_slots":
            behavior = PeriodicSlots(frozenset(entry["allowed_slots"]), float(entry["p_transmit"]))
        elif kind == "iid_random":
            behavior = IidRandom(float(entry["p_transmit"]))
        elif kind == "triggered":
            behavior = Triggered(str(entry["source"]), int(entry["lag"]), float(entry["p_trigger"]))
        else:
            raise SpecificationError(f"unknown device kind {kind!r}")
        devices.append((entry["id"], behavior))
    return NetworkSpec(devices=tuple(devices), event_len=int(payload["event_len"]))


def save_record(record: TransmissionRecord, csv_path, sidecar: dict | None = None) -> None:
    """Write the record as CSV (header of device ids) plus a JSON sidecar."""
    csv_path = Path(csv_path)
    with csv_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(record.device_ids)
        writer.writerows(record.data.tolist())
    meta = {"event_len": record.event_len}
    if sidecar:
        meta.update(sidecar)
    csv_path.with_suffix(".json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def load_record(csv_path) -> TransmissionRecord:
    """Read a record CSV and its sidecar back into a TransmissionRecord."""
    csv_path = Path(csv_path)
    with csv_path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[int(v) for v in row] for row in reader]
    meta = json.loads(csv_path.with_suffix(".json").read_text())
    return TransmissionRecord(
        data=np.array(rows, dtype=np.uint8),
        event_len=int(meta["event_len"]),
        device_ids=tuple(header),
    )
