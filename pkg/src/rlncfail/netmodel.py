"""Single-source multicast networks.

A network is a finite acyclic directed multigraph with one source node, at
least one sink, and unit-capacity channels.  Parallel channels between the
same node pair are allowed, so cuts and paths everywhere are sets/sequences
of channel ids, never endpoint pairs.

The source's inputs are modeled as w imaginary channels d1..dw that carry the
raw messages; they are not stored on the Network (they depend on the chosen
rate) but their ids are reserved and produced by `imaginary_inputs`.
"""

from __future__ import annotations

import heapq
import io
import re
from dataclasses import dataclass

from .galois import RandomStream, uniform_int

SOURCE = "source"
INTERNAL = "internal"
SINK = "sink"
_ROLES = (SOURCE, INTERNAL, SINK)

_IMAGINARY_ID = re.compile(r"^d[0-9]+$")


class NetworkFormatError(ValueError):
    """Malformed network file; carries the line number when known."""


class NetworkValidationError(ValueError):
    """Structurally parseable network that violates a model invariant."""

    def __init__(self, report: "ValidationReport"):
        super().__init__("invalid network: " + "; ".join(report.violations))
        self.report = report


class CycleError(ValueError):
    """Raised when a topological order is requested for a cyclic graph."""


@dataclass(frozen=True)
class Channel:
    id: str
    tail: str
    head: str


@dataclass(frozen=True)
class ImaginaryInputs:
    """The rate-many imaginary source inputs d1..dw carrying messages X_1..X_w."""

    rate: int
    ids: tuple[str, ...]


def imaginary_inputs(rate: int) -> ImaginaryInputs:
    if rate < 1:
        raise ValueError(f"rate must be >= 1, got {rate}")
    return ImaginaryInputs(rate, tuple(f"d{i}" for i in range(1, rate + 1)))


@dataclass
class Network:
    """Immutable-by-convention network; do not mutate after construction.

    nodes maps node id -> role ("source" | "internal" | "sink").  Channels
    are kept sorted by id, which is the canonical order used everywhere.
    """

    nodes: dict[str, str]
    channels: list[Channel]
    rate_hint: int | None = None

    def __post_init__(self) -> None:
        self.channels = sorted(self.channels, key=lambda c: c.id)
        self._by_id: dict[str, Channel] = {}
        self._ins: dict[str, list[Channel]] = {n: [] for n in self.nodes}
        self._outs: dict[str, list[Channel]] = {n: [] for n in self.nodes}
        for c in self.channels:
            self._by_id[c.id] = c
            if c.head in self._ins:
                self._ins[c.head].append(c)
            if c.tail in self._outs:
                self._outs[c.tail].append(c)

    @property
    def source(self) -> str:
        srcs = [n for n, role in self.nodes.items() if role == SOURCE]
        if len(srcs) != 1:
            raise ValueError(f"network has {len(srcs)} source nodes, expected exactly 1")
        return srcs[0]

    @property
    def sinks(self) -> frozenset[str]:
        return frozenset(n for n, role in self.nodes.items() if role == SINK)

    @property
    def internal_nodes(self) -> frozenset[str]:
        return frozenset(n for n, role in self.nodes.items() if role == INTERNAL)

    def channel(self, cid: str) -> Channel:
        return self._by_id[cid]

    def in_channels(self, node: str) -> list[Channel]:
        return self._ins.get(node, [])

    def out_channels(self, node: str) -> list[Channel]:
        return self._outs.get(node, [])

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Network)
            and self.nodes == other.nodes
            and self.channels == other.channels
            and self.rate_hint == other.rate_hint
        )


def input_channel_ids(net: Network, node: str, rate: int) -> tuple[str, ...]:
    """In(node) as channel ids; for the source these are the imaginary inputs."""
    if node == net.source:
        return imaginary_inputs(rate).ids
    return tuple(c.id for c in net.in_channels(node))


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def _find_cycle(net: Network) -> list[str] | None:
    """One directed node cycle, as a node list, or None if acyclic."""
    color: dict[str, int] = {}
    stack: list[str] = []

    def dfs(u: str) -> list[str] | None:
        color[u] = 1
        stack.append(u)
        for c in net.out_channels(u):
            v = c.head
            if v not in net.nodes:
                continue
            st = color.get(v, 0)
            if st == 0:
                found = dfs(v)
                if found:
                    return found
            elif st == 1:
                return stack[stack.index(v):] + [v]
        stack.pop()
        color[u] = 2
        return None

    for n in sorted(net.nodes):
        if color.get(n, 0) == 0:
            cyc = dfs(n)
            if cyc:
                return cyc
    return None


def validate(net: Network) -> ValidationReport:
    """Every violated model invariant; an empty report means a legal network."""
    found: list[str] = []
    roles = [r for r in net.nodes.values()]
    for n, role in net.nodes.items():
        if role not in _ROLES:
            found.append(f"node {n} has unknown role {role!r}")
    n_src = roles.count(SOURCE)
    if n_src != 1:
        found.append(f"expected exactly one source node, found {n_src}")
    if roles.count(SINK) == 0:
        found.append("network has no sink node")
    seen_ids: set[str] = set()
    for c in net.channels:
        if c.id in seen_ids:
            found.append(f"duplicate channel id {c.id}")
        seen_ids.add(c.id)
        if _IMAGINARY_ID.match(c.id):
            found.append(f"channel id {c.id} is reserved for imaginary source inputs")
        if c.tail == c.head:
            found.append(f"channel {c.id} is a self-loop at {c.tail}")
        for end, what in ((c.tail, "tail"), (c.head, "head")):
            if end not in net.nodes:
                found.append(f"channel {c.id} has dangling {what} {end}")
        if c.head in net.nodes and net.nodes[c.head] == SOURCE:
            found.append(f"source node {c.head} has incoming channel {c.id}")
        if c.tail in net.nodes and net.nodes[c.tail] == SINK:
            found.append(f"sink node {c.tail} has outgoing channel {c.id}")
    cyc = _find_cycle(net)
    if cyc:
        found.append("channel graph has a cycle: " + " -> ".join(cyc))
    return ValidationReport(tuple(found))


def topological_order(net: Network) -> list[str]:
    """Nodes ordered so every channel goes forward; ties broken by node id."""
    indeg = {n: 0 for n in net.nodes}
    for c in net.channels:
        if c.head in indeg and c.tail in indeg:
            indeg[c.head] += 1
    ready = [n for n, d in indeg.items() if d == 0]
    heapq.heapify(ready)
    order: list[str] = []
    while ready:
        u = heapq.heappop(ready)
        order.append(u)
        for c in net.out_channels(u):
            indeg[c.head] -= 1
            if indeg[c.head] == 0:
                heapq.heappush(ready, c.head)
    if len(order) != len(net.nodes):
        cyc = _find_cycle(net)
        raise CycleError("cycle detected: " + " -> ".join(cyc or ["?"]))
    return order


# --- canonical generators ---------------------------------------------------

def plait(w: int, r: int) -> Network:
    """Chain s, i1..ir, t with w parallel channels per stage ((r+1)*w total)."""
    if w < 1 or r < 0:
        raise ValueError("plait requires w >= 1 and r >= 0")
    names = ["s"] + [f"i{k}" for k in range(1, r + 1)] + ["t"]
    nodes = {n: INTERNAL for n in names}
    nodes["s"] = SOURCE
    nodes["t"] = SINK
    channels = []
    idx = 0
    for k in range(r + 1):
        for _ in range(w):
            channels.append(Channel(f"e{idx:03d}", names[k], names[k + 1]))
            idx += 1
    return Network(nodes, channels, rate_hint=w)


def butterfly() -> Network:
    """The standard single-source two-sink butterfly (9 channels, min-cut 2)."""
    nodes = {
        "s": SOURCE,
        "u1": INTERNAL,
        "u2": INTERNAL,
        "b1": INTERNAL,
        "b2": INTERNAL,
        "t1": SINK,
        "t2": SINK,
    }
    channels = [
        Channel("e1", "s", "u1"),
        Channel("e2", "s", "u2"),
        Channel("e3", "u1", "b1"),
        Channel("e4", "u2", "b1"),
        Channel("e5", "b1", "b2"),
        Channel("e6", "u1", "t1"),
        Channel("e7", "b2", "t1"),
        Channel("e8", "u2", "t2"),
        Channel("e9", "b2", "t2"),
    ]
    return Network(nodes, channels, rate_hint=2)


def random_dag(num_internal: int, w: int, channel_density: float, seed: int) -> Network:
    """Seeded random DAG s -> i1..ik -> t with min-cut(s, t) >= w.

    Forward node pairs get a channel with the given probability; if the
    resulting max-flow falls short of w, direct s->t channels are added.
    """
    if num_internal < 0 or w < 1:
        raise ValueError("num_internal must be >= 0 and w >= 1")
    if not 0.0 < channel_density <= 1.0:
        raise ValueError(f"channel_density must be in (0, 1], got {channel_density}")
    names = ["s"] + [f"i{k}" for k in range(1, num_internal + 1)] + ["t"]
    nodes = {n: INTERNAL for n in names}
    nodes["s"] = SOURCE
    nodes["t"] = SINK
    rng = RandomStream(seed)
    channels: list[Channel] = []
    idx = 0
    # density threshold in 2^-32 units, drawn against 32-bit words
    thresh = int(channel_density * (1 << 32))
    for a in range(len(names)):
        for b in range(a + 1, len(names)):
            if uniform_int(1 << 32, rng) < thresh:
                channels.append(Channel(f"e{idx:03d}", names[a], names[b]))
                idx += 1
    net = Network(nodes, channels, rate_hint=w)
    from .flowpaths import min_cut  # deferred: flowpaths imports netmodel

    short = w - min_cut(net, "t")
    for _ in range(max(0, short)):
        channels.append(Channel(f"e{idx:03d}", "s", "t"))
        idx += 1
    if short > 0:
        net = Network(nodes, channels, rate_hint=w)
    return net


# --- line-oriented file format -----------------------------------------------
#
#   node <id> <source|internal|sink>
#   channel <id> <tail-id> <head-id>
#   rate <w>          (optional hint)
#
# '#' starts a comment; blank lines ignored; line order is irrelevant except
# that the canonical writer emits nodes topologically, then channels by id.

def network_from_text(text: str) -> Network:
    nodes: dict[str, str] = {}
    raw_channels: list[tuple[int, str, str, str]] = []
    rate_hint: int | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        kind = parts[0]
        if kind == "node":
            if len(parts) != 3:
                raise NetworkFormatError(f"line {lineno}: expected 'node <id> <role>'")
            nid, role = parts[1], parts[2]
            if role not in _ROLES:
                raise NetworkFormatError(f"line {lineno}: unknown role {role!r}")
            if nid in nodes:
                raise NetworkFormatError(f"line {lineno}: duplicate node id {nid}")
            nodes[nid] = role
        elif kind == "channel":
            if len(parts) != 4:
                raise NetworkFormatError(
                    f"line {lineno}: expected 'channel <id> <tail> <head>'"
                )
            raw_channels.append((lineno, parts[1], parts[2], parts[3]))
        elif kind == "rate":
            if len(parts) != 2 or not parts[1].isdigit():
                raise NetworkFormatError(f"line {lineno}: expected 'rate <w>'")
            rate_hint = int(parts[1])
        else:
            raise NetworkFormatError(f"line {lineno}: unknown directive {kind!r}")
    channels: list[Channel] = []
    seen: set[str] = set()
    for lineno, cid, tail, head in raw_channels:
        if cid in seen:
            raise NetworkFormatError(f"line {lineno}: duplicate channel id {cid}")
        seen.add(cid)
        if _IMAGINARY_ID.match(cid):
            raise NetworkFormatError(
                f"line {lineno}: channel id {cid} is reserved for imaginary inputs"
            )
        for end in (tail, head):
            if end not in nodes:
                raise NetworkFormatError(f"line {lineno}: unknown node {end} in channel {cid}")
        channels.append(Channel(cid, tail, head))
    net = Network(nodes, channels, rate_hint=rate_hint)
    report = validate(net)
    if not report.ok:
        raise NetworkValidationError(report)
    return net


def network_to_text(net: Network) -> str:
    report = validate(net)
    if not report.ok:
        raise NetworkValidationError(report)
    out = io.StringIO()
    for n in topological_order(net):
        out.write(f"node {n} {net.nodes[n]}\n")
    for c in net.channels:  # already sorted by id
        out.write(f"channel {c.id} {c.tail} {c.head}\n")
    if net.rate_hint is not None:
        out.write(f"rate {net.rate_hint}\n")
    return out.getvalue()


def read_network(source) -> Network:
    """Read from a path or a text file object."""
    if hasattr(source, "read"):
        return network_from_text(source.read())
    with open(source, "r", encoding="utf-8") as fh:
        return network_from_text(fh.read())


def write_network(net: Network, dest) -> None:
    """Write canonical form to a path or a text file object."""
    text = network_to_text(net)
    if hasattr(dest, "write"):
        dest.write(text)
        return
    with open(dest, "w", encoding="utf-8") as fh:
        fh.write(text)
