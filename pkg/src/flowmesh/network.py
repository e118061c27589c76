"""Device graph, capacitated FCFS links, and routing-table construction.

Routes are all-pairs minimum-hop (BFS per source) with ties broken by the
smallest next-hop device id; explicit per-pair overrides may replace entries.
Links are full-duplex: each direction has its own FCFS server, and packets
are forwarded store-and-forward, one full packet per hop.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional

from .compute import HostSpec
from .errors import DisconnectedTopologyError, NoRouteError

DEFAULT_LINK_BANDWIDTH_MBPS = 1000.0

DeviceId = int


@dataclass(frozen=True)
class LinkSpec:
    """Undirected link between two devices; endpoints are normalized a < b."""

    a: DeviceId
    b: DeviceId
    bandwidth_mbps: float = DEFAULT_LINK_BANDWIDTH_MBPS
    latency_s: float = 0.0


@dataclass(frozen=True)
class DeviceSpec:
    """One fog device: a vertex of the topology containing hosts."""

    id: DeviceId
    hosts: tuple[HostSpec, ...]
    vm_allocation_policy: str = "simple"


@dataclass
class Topology:
    """Parsed device graph plus optional explicit route overrides."""

    devices: dict[DeviceId, DeviceSpec]
    links: list[LinkSpec]
    route_overrides: list[tuple[DeviceId, DeviceId, DeviceId]] = field(
        default_factory=list)

    def device_ids(self) -> list[DeviceId]:
        return sorted(self.devices)

    def neighbors(self, device: DeviceId) -> list[DeviceId]:
        out = set()
        for link in self.links:
            if link.a == device:
                out.add(link.b)
            elif link.b == device:
                out.add(link.a)
        return sorted(out)

    def link_between(self, a: DeviceId, b: DeviceId) -> Optional[LinkSpec]:
        lo, hi = min(a, b), max(a, b)
        for link in self.links:
            if (link.a, link.b) == (lo, hi):
                return link
        return None


class RoutingTable:
    """(source, destination) -> next-hop map over the device graph."""

    def __init__(self, entries: dict[tuple[DeviceId, DeviceId], DeviceId]):
        self.entries = entries

    def next_hop(self, source: DeviceId, destination: DeviceId) -> DeviceId:
        if source == destination:
            return destination
        try:
            return self.entries[(source, destination)]
        except KeyError:
            raise NoRouteError(f"no route from {source} to {destination}") from None

    def path(self, source: DeviceId, destination: DeviceId) -> list[DeviceId]:
        """Device sequence after ``source``, ending at ``destination``."""
        hops: list[DeviceId] = []
        current = source
        while current != destination:
            current = self.next_hop(current, destination)
            hops.append(current)
            if len(hops) > len(self.entries) + 1:
                raise NoRouteError(
                    f"routing loop between {source} and {destination}")
        return hops


def _bfs_distances(topology: Topology, source: DeviceId) -> dict[DeviceId, int]:
    distances = {source: 0}
    frontier = [source]
    while frontier:
        nxt = []
        for device in frontier:
            for neighbor in topology.neighbors(device):
                if neighbor not in distances:
                    distances[neighbor] = distances[device] + 1
                    nxt.append(neighbor)
        frontier = nxt
    return distances


def build_routing_tables(topology: Topology) -> RoutingTable:
    """All-pairs minimum-hop routes, ties to the smallest next-hop id.

    Raises DisconnectedTopologyError naming the first unreachable ordered
    pair, checked in ascending id order.
    """
    ids = topology.device_ids()
    dist = {d: _bfs_distances(topology, d) for d in ids}
    for source in ids:
        for destination in ids:
            if destination not in dist[source]:
                raise DisconnectedTopologyError(source, destination)

    entries: dict[tuple[DeviceId, DeviceId], DeviceId] = {}
    for source in ids:
        for destination in ids:
            if source == destination:
                continue
            candidates = [n for n in topology.neighbors(source)
                          if dist[n][destination] == dist[source][destination] - 1]
            entries[(source, destination)] = min(candidates)

    for source, destination, hop in topology.route_overrides:
        if hop not in topology.neighbors(source):
            raise NoRouteError(
                f"route override ({source},{destination})->{hop}: "
                f"{hop} is not a neighbor of {source}")
        entries[(source, destination)] = hop

    table = RoutingTable(entries)
    for source in ids:
        for destination in ids:
            if source != destination:
                table.path(source, destination)  # raises on override loops
    return table


@dataclass
class Packet:
    """One unfragmented message traversing the network hop by hop."""

    packet_id: int
    origin: DeviceId
    final_destination: DeviceId
    size_mb: float
    payload: Any = None


class _DirectionState:
    __slots__ = ("bandwidth", "latency", "busy_until", "busy_time", "packets")

    def __init__(self, bandwidth: float, latency: float):
        self.bandwidth = bandwidth
        self.latency = latency
        self.busy_until = 0.0
        self.busy_time = 0.0
        self.packets = 0


class NetworkFabric:
    """Shared runtime state of every link direction, plus packet identity."""

    def __init__(self, topology: Topology, routing: RoutingTable):
        self.topology = topology
        self.routing = routing
        self._directions: dict[tuple[DeviceId, DeviceId], _DirectionState] = {}
        for link in topology.links:
            self._directions[(link.a, link.b)] = _DirectionState(
                link.bandwidth_mbps, link.latency_s)
            self._directions[(link.b, link.a)] = _DirectionState(
                link.bandwidth_mbps, link.latency_s)
        self._packet_seq = 0

    def new_packet(self, origin: DeviceId, destination: DeviceId,
                   size_mb: float, payload: Any = None) -> Packet:
        packet = Packet(self._packet_seq, origin, destination, size_mb, payload)
        self._packet_seq += 1
        return packet

    def enqueue_hop(self, u: DeviceId, v: DeviceId, size_mb: float,
                    now: float) -> tuple[float, float]:
        """FCFS service on direction u->v: returns (service_start, arrival).

        Serialization (size/bandwidth) begins when the direction frees up;
        arrival at ``v`` is serialization end plus propagation latency.
        """
        direction = self._directions[(u, v)]
        service_start = max(now, direction.busy_until)
        service_end = service_start + size_mb / direction.bandwidth
        direction.busy_until = service_end
        direction.busy_time += service_end - service_start
        direction.packets += 1
        return service_start, service_end + direction.latency

    def direction_stats(self) -> list[tuple[DeviceId, DeviceId, float, int]]:
        """(u, v, busy_time, packet count) per direction, sorted."""
        return [(u, v, s.busy_time, s.packets)
                for (u, v), s in sorted(self._directions.items())]
