"""Independent oracles used across the test suite.

Everything here is deliberately naive (brute-force enumeration, closed
forms computed from scratch) so that it cannot share a bug with the
library code paths it checks.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations

from rlncfail.netmodel import Network


def reaches(net: Network, t: str, removed: frozenset[str] = frozenset()) -> bool:
    """BFS reachability from the source to t, avoiding the removed channels."""
    seen = {net.source}
    frontier = [net.source]
    while frontier:
        node = frontier.pop()
        for c in net.out_channels(node):
            if c.id in removed or c.head in seen:
                continue
            if c.head == t:
                return True
            seen.add(c.head)
            frontier.append(c.head)
    return t in seen


def brute_force_min_cut(net: Network, t: str) -> int:
    """Smallest channel set whose removal disconnects source from t.
    Exponential; only for networks with a handful of channels."""
    ids = [c.id for c in net.channels]
    assert len(ids) <= 14, "brute force oracle limited to small networks"
    if not reaches(net, t):
        return 0
    for k in range(len(ids) + 1):
        for combo in combinations(ids, k):
            if not reaches(net, t, frozenset(combo)):
                return k
    return len(ids)


def all_simple_paths(net: Network, t: str) -> list[tuple[str, ...]]:
    """Every source->t channel path, by straightforward DFS."""
    out: list[tuple[str, ...]] = []

    def walk(node: str, trail: list[str]) -> None:
        if node == t:
            out.append(tuple(trail))
            return
        for c in net.out_channels(node):
            trail.append(c.id)
            walk(c.head, trail)
            trail.pop()

    walk(net.source, [])
    return out


def exhaustive_min_internal(net: Network, t: str, w: int) -> int:
    """Minimum distinct internal-node count over every w-set of
    channel-disjoint source->t paths, by full enumeration."""
    paths = all_simple_paths(net, t)
    internal = net.internal_nodes
    best = None
    for combo in combinations(paths, w):
        chans = [cid for p in combo for cid in p]
        if len(chans) != len(set(chans)):
            continue
        nodes = {
            net.channel(cid).head for p in combo for cid in p
        } & internal
        if best is None or len(nodes) < best:
            best = len(nodes)
    assert best is not None, "no channel-disjoint path set exists"
    return best


def plait_failure_law(q: int, w: int, r: int) -> Fraction:
    """Closed form 1 - [prod_{i=1..w} (1 - q^-i)]^(r+1), computed from scratch."""
    stage = Fraction(1)
    for i in range(1, w + 1):
        stage *= Fraction(q**i - 1, q**i)
    return 1 - stage ** (r + 1)


def butterfly_failure_law(q: int) -> Fraction:
    """Closed form 1 - (q+1)(q-1)^6 / q^7 for the standard butterfly."""
    return 1 - Fraction((q + 1) * (q - 1) ** 6, q**7)


def rank_gf2(rows: list[int], width: int) -> int:
    """GF(2) rank of rows packed as ints, by xor elimination."""
    rank = 0
    rows = [r for r in rows]
    for col in range(width):
        bit = 1 << col
        piv = next((i for i in range(rank, len(rows)) if rows[i] & bit), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        for i in range(len(rows)):
            if i != rank and rows[i] & bit:
                rows[i] ^= rows[rank]
        rank += 1
    return rank


def corpus_params(n: int = 200) -> list[tuple[int, int, int, float]]:
    """Deterministic (seed, w, q, density) grid for the random-DAG corpus."""
    qs = (2, 3, 4)
    densities = (0.25, 0.4, 0.6, 0.85)
    out = []
    for i in range(n):
        w = 1 + i % 3
        q = qs[(i // 3) % 3]
        density = densities[(i // 7) % 4]
        out.append((i, w, q, density))
    return out


def corpus_network(seed: int, w: int, density: float):
    from rlncfail.netmodel import random_dag

    return random_dag(seed % 7, w, density, seed=seed)
