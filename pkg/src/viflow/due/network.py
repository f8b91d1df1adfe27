"""Traffic network data: graph, trip table, and explicit path lists.

Path enumeration is input data here, not something the package computes;
fixtures and network files ship explicit link-id sequences per path.

File formats (all plain text, comma separated, one record per line, a header
line required, lines starting with '#' ignored):

- nodes file:    id
- links file:    id,from,to,free_flow_time,capacity
- od file:       origin,destination,demand,target_arrival
- paths file:    path_id,od_index,links   (links are colon-separated link ids)

Times are hours, capacities vehicles/hour, demands vehicles.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

__all__ = [
    "Link", "ODPair", "Network", "PathSet", "NetworkFormatError",
    "read_network", "read_paths", "write_network", "write_paths", "fixture",
    "FIXTURE_NAMES",
]


class NetworkFormatError(ValueError):
    """A network file violated the documented format."""


@dataclass(frozen=True)
class Link:
    id: str
    tail: str
    head: str
    free_flow_time: float  # hours
    capacity: float        # vehicles/hour

    def __post_init__(self):
        if self.free_flow_time <= 0:
            raise ValueError(f"link {self.id}: free_flow_time must be positive")
        if self.capacity <= 0:
            raise ValueError(f"link {self.id}: capacity must be positive")


@dataclass(frozen=True)
class ODPair:
    origin: str
    destination: str
    demand: float          # vehicles
    target_arrival: float  # hours

    def __post_init__(self):
        if self.demand <= 0:
            raise ValueError(
                f"od pair {self.origin}->{self.destination}: demand must be positive"
            )


@dataclass(frozen=True)
class Network:
    nodes: tuple[str, ...]
    links: tuple[Link, ...]
    od_pairs: tuple[ODPair, ...]

    def __post_init__(self):
        node_set = set(self.nodes)
        if len(node_set) != len(self.nodes):
            raise ValueError("duplicate node ids")
        seen = set()
        for link in self.links:
            if link.id in seen:
                raise ValueError(f"duplicate link id {link.id}")
            seen.add(link.id)
            if link.tail not in node_set or link.head not in node_set:
                raise ValueError(f"link {link.id} references unknown nodes")
        for od in self.od_pairs:
            if od.origin not in node_set or od.destination not in node_set:
                raise ValueError(
                    f"od pair {od.origin}->{od.destination} references unknown nodes"
                )

    def link_by_id(self) -> dict[str, Link]:
        return {link.id: link for link in self.links}

    @property
    def demands(self) -> tuple[float, ...]:
        return tuple(od.demand for od in self.od_pairs)


@dataclass(frozen=True)
class PathSet:
    """Explicit paths as link-id sequences; owner[i] is the index of the o/d
    pair path i serves."""

    paths: tuple[tuple[str, ...], ...]
    owner: tuple[int, ...]

    def __post_init__(self):
        if len(self.paths) != len(self.owner):
            raise ValueError("paths and owner must have equal length")

    def __len__(self) -> int:
        return len(self.paths)

    @classmethod
    def for_network(cls, network: Network, paths, owner) -> "PathSet":
        """Construct and validate against the graph: each path must be a
        connected, non-repeating walk from its pair's origin to destination,
        and every o/d pair must own at least one path."""
        ps = cls(tuple(tuple(p) for p in paths), tuple(int(o) for o in owner))
        by_id = network.link_by_id()
        for i, (path, own) in enumerate(zip(ps.paths, ps.owner)):
            if not 0 <= own < len(network.od_pairs):
                raise ValueError(f"path {i}: owner index {own} out of range")
            od = network.od_pairs[own]
            if not path:
                raise ValueError(f"path {i} is empty")
            links = []
            for lid in path:
                if lid not in by_id:
                    raise ValueError(f"path {i} uses unknown link {lid}")
                links.append(by_id[lid])
            if links[0].tail != od.origin or links[-1].head != od.destination:
                raise ValueError(
                    f"path {i} does not run {od.origin} -> {od.destination}"
                )
            visited = [links[0].tail]
            for prev, nxt in zip(links, links[1:]):
                if prev.head != nxt.tail:
                    raise ValueError(f"path {i} is not connected at link {nxt.id}")
            for link in links:
                if link.head in visited:
                    raise ValueError(f"path {i} repeats node {link.head}")
                visited.append(link.head)
        owned = set(ps.owner)
        missing = [w for w in range(len(network.od_pairs)) if w not in owned]
        if missing:
            raise ValueError(f"o/d pairs without any path: {missing}")
        return ps


# ------------------------------------------------------------------ file I/O

def _records(path: Path, expected_header: list[str]):
    """Yield (line_number, fields) for data records, enforcing the header."""
    header_seen = False
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            fields = [f.strip() for f in line.split(",")]
            if not header_seen:
                if fields != expected_header:
                    raise NetworkFormatError(
                        f"{path}:{lineno}: expected header "
                        f"{','.join(expected_header)!r}, got {line!r}"
                    )
                header_seen = True
                continue
            if len(fields) != len(expected_header):
                raise NetworkFormatError(
                    f"{path}:{lineno}: expected {len(expected_header)} fields, "
                    f"got {len(fields)}"
                )
            yield lineno, fields
    if not header_seen:
        raise NetworkFormatError(f"{path}: missing header line")


def _parse_float(path: Path, lineno: int, name: str, text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise NetworkFormatError(
            f"{path}:{lineno}: field {name} is not a number: {text!r}"
        ) from None


def read_network(nodes_path, links_path, od_path) -> Network:
    nodes_path, links_path, od_path = Path(nodes_path), Path(links_path), Path(od_path)
    nodes = tuple(fields[0] for _, fields in _records(nodes_path, ["id"]))
    links = []
    for lineno, f in _records(links_path, ["id", "from", "to", "free_flow_time",
                                           "capacity"]):
        links.append(Link(f[0], f[1], f[2],
                          _parse_float(links_path, lineno, "free_flow_time", f[3]),
                          _parse_float(links_path, lineno, "capacity", f[4])))
    ods = []
    for lineno, f in _records(od_path, ["origin", "destination", "demand",
                                        "target_arrival"]):
        ods.append(ODPair(f[0], f[1],
                          _parse_float(od_path, lineno, "demand", f[2]),
                          _parse_float(od_path, lineno, "target_arrival", f[3])))
    try:
        return Network(nodes, tuple(links), tuple(ods))
    except ValueError as err:
        raise NetworkFormatError(str(err)) from err


def read_paths(paths_path, network: Network) -> PathSet:
    paths_path = Path(paths_path)
    paths = []
    owner = []
    for lineno, f in _records(paths_path, ["path_id", "od_index", "links"]):
        try:
            owner.append(int(f[1]))
        except ValueError:
            raise NetworkFormatError(
                f"{paths_path}:{lineno}: od_index is not an integer: {f[1]!r}"
            ) from None
        paths.append(tuple(part.strip() for part in f[2].split(":") if part.strip()))
    try:
        return PathSet.for_network(network, paths, owner)
    except ValueError as err:
        raise NetworkFormatError(str(err)) from err


def write_network(network: Network, nodes_path, links_path, od_path) -> None:
    with open(nodes_path, "w", encoding="utf-8") as fh:
        fh.write("id\n")
        for node in network.nodes:
            fh.write(f"{node}\n")
    with open(links_path, "w", encoding="utf-8") as fh:
        fh.write("id,from,to,free_flow_time,capacity\n")
        for link in network.links:
            fh.write(f"{link.id},{link.tail},{link.head},"
                     f"{link.free_flow_time!r},{link.capacity!r}\n")
    with open(od_path, "w", encoding="utf-8") as fh:
        fh.write("origin,destination,demand,target_arrival\n")
        for od in network.od_pairs:
            fh.write(f"{od.origin},{od.destination},{od.demand!r},"
                     f"{od.target_arrival!r}\n")


def write_paths(path_set: PathSet, paths_path) -> None:
    with open(paths_path, "w", encoding="utf-8") as fh:
        fh.write("path_id,od_index,links\n")
        for i, (path, own) in enumerate(zip(path_set.paths, path_set.owner)):
            fh.write(f"p{i},{own},{':'.join(path)}\n")


# ------------------------------------------------------------------ fixtures

def _two_path_toy() -> tuple[Network, PathSet]:
    nodes = ("1", "2")
    links = (
        Link("1", "1", "2", free_flow_time=0.25, capacity=1500.0),
        Link("2", "1", "2", free_flow_time=0.30, capacity=1000.0),
    )
    ods = (ODPair("1", "2", demand=2000.0, target_arrival=1.0),)
    network = Network(nodes, links, ods)
    return network, PathSet.for_network(network, [("1",), ("2",)], [0, 0])


# the classic 13-node test network; all numeric parameters below are
# synthetic placeholders (the topology is the published part)
_NGUYEN_ARCS = [
    ("1", "1", "5"), ("2", "1", "12"), ("3", "4", "5"), ("4", "4", "9"),
    ("5", "5", "6"), ("6", "5", "9"), ("7", "6", "7"), ("8", "6", "10"),
    ("9", "7", "8"), ("10", "7", "11"), ("11", "8", "2"), ("12", "9", "10"),
    ("13", "9", "13"), ("14", "10", "11"), ("15", "11", "2"),
    ("16", "11", "3"), ("17", "12", "6"), ("18", "12", "8"),
    ("19", "13", "3"),
]

# 24 declared paths (node sequences), 4 o/d pairs: (1,2), (1,3), (4,2), (4,3)
_NGUYEN_PATHS = [
    # 1 -> 2
    (0, "1,5,6,7,8,2"), (0, "1,5,6,7,11,2"), (0, "1,5,6,10,11,2"),
    (0, "1,12,6,7,8,2"), (0, "1,12,6,7,11,2"), (0, "1,12,6,10,11,2"),
    (0, "1,12,8,2"),
    # 1 -> 3
    (1, "1,5,6,7,11,3"), (1, "1,5,6,10,11,3"), (1, "1,5,9,10,11,3"),
    (1, "1,5,9,13,3"), (1, "1,12,6,7,11,3"), (1, "1,12,6,10,11,3"),
    # 4 -> 2
    (2, "4,5,6,7,8,2"), (2, "4,5,6,7,11,2"), (2, "4,5,6,10,11,2"),
    (2, "4,5,9,10,11,2"), (2, "4,9,10,11,2"),
    # 4 -> 3
    (3, "4,5,6,7,11,3"), (3, "4,5,6,10,11,3"), (3, "4,5,9,10,11,3"),
    (3, "4,5,9,13,3"), (3, "4,9,10,11,3"), (3, "4,9,13,3"),
]


def _paths_from_node_lists(network: Network, entries) -> PathSet:
    arc_index = {(l.tail, l.head): l.id for l in network.links}
    paths = []
    owner = []
    for own, node_text in entries:
        seq = node_text.split(",")
        paths.append(tuple(arc_index[(a, b)] for a, b in zip(seq, seq[1:])))
        owner.append(own)
    return PathSet.for_network(network, paths, owner)


def _nguyen_topology() -> tuple[Network, PathSet]:
    nodes = tuple(str(i) for i in range(1, 14))
    links = tuple(
        Link(lid, a, b,
             free_flow_time=0.1 + 0.01 * int(lid),
             capacity=1200.0 + 100.0 * (int(lid) % 5))
        for lid, a, b in _NGUYEN_ARCS
    )
    ods = (
        ODPair("1", "2", demand=1200.0, target_arrival=1.2),
        ODPair("1", "3", demand=900.0, target_arrival=1.2),
        ODPair("4", "2", demand=800.0, target_arrival=1.3),
        ODPair("4", "3", demand=700.0, target_arrival=1.3),
    )
    network = Network(nodes, links, ods)
    return network, _paths_from_node_lists(network, _NGUYEN_PATHS)


# the 24-node / 76-link grid: 38 undirected edges, both directions each
_SIOUX_EDGES = [
    (1, 2), (1, 3), (2, 6), (3, 4), (3, 12), (4, 5), (4, 11), (5, 6),
    (5, 9), (6, 8), (7, 8), (7, 18), (8, 9), (8, 16), (9, 10), (10, 11),
    (10, 15), (10, 16), (10, 17), (11, 12), (11, 14), (12, 13), (13, 24),
    (14, 15), (14, 23), (15, 19), (15, 22), (16, 17), (16, 18), (17, 19),
    (18, 20), (19, 20), (20, 21), (20, 22), (21, 22), (21, 24), (22, 23),
    (23, 24),
]

_SIOUX_PATHS = [
    # 1 -> 20
    (0, "1,2,6,8,16,18,20"), (0, "1,3,12,13,24,21,20"),
    (0, "1,2,6,8,9,10,16,18,20"),
    # 4 -> 24
    (1, "4,11,14,23,24"), (1, "4,5,9,10,15,22,23,24"), (1, "4,11,12,13,24"),
]


def _sioux_topology() -> tuple[Network, PathSet]:
    """Smoke-run slice of the classic 24-node grid: published node/link
    counts, synthetic parameters, and a small hand-picked path sample for
    two o/d pairs (nowhere near the full trip table)."""
    nodes = tuple(str(i) for i in range(1, 25))
    links = []
    lid = 0
    for a, b in _SIOUX_EDGES:
        for tail, head in ((a, b), (b, a)):
            lid += 1
            links.append(Link(str(lid), str(tail), str(head),
                              free_flow_time=0.05 + 0.005 * (lid % 7),
                              capacity=1000.0 + 150.0 * (lid % 4)))
    ods = (
        ODPair("1", "20", demand=600.0, target_arrival=0.9),
        ODPair("4", "24", demand=500.0, target_arrival=0.9),
    )
    network = Network(nodes, tuple(links), ods)
    return network, _paths_from_node_lists(network, _SIOUX_PATHS)


_FIXTURES = {
    "two_path_toy": _two_path_toy,
    "nguyen_topology": _nguyen_topology,
    "sioux_topology": _sioux_topology,
}

FIXTURE_NAMES = tuple(sorted(_FIXTURES))


def fixture(name: str) -> tuple[Network, PathSet]:
    """Bundled test networks with explicit path lists."""
    try:
        builder = _FIXTURES[name]
    except KeyError:
        raise ValueError(
            f"unknown fixture {name!r}; available: {', '.join(FIXTURE_NAMES)}"
        ) from None
    return builder()
