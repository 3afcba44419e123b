"""Writes the bundled datasets into crates/core/data.

karate.edges comes from networkx (Zachary's club, ids shifted to 1..34).
The other graphs are seeded synthetic community graphs sized like
dolphins, us-football and polblogs.
"""

import random
from pathlib import Path

import networkx as nx

OUT = Path(__file__).resolve().parent.parent / "crates" / "core" / "data"


def write(name, edges, groups):
    OUT.mkdir(parents=True, exist_ok=True)
    with open(OUT / f"{name}.edges", "w") as f:
        for u, v in sorted(edges):
            f.write(f"{u} {v}\n")
    with open(OUT / f"{name}.groups", "w") as f:
        for node in sorted(groups):
            f.write(f"{node}\t{groups[node]}\n")


def karate():
    g = nx.karate_club_graph()
    edges = {(min(u, v) + 1, max(u, v) + 1) for u, v in g.edges()}
    groups = {v + 1: (0 if g.nodes[v]["club"] == "Mr. Hi" else 1) for v in g.nodes()}
    write("karate", edges, groups)


def community_graph(name, sizes, m, intra, exponent, seed, regular=False):
    rng = random.Random(seed)
    members, groups, node = [], {}, 1
    for c, size in enumerate(sizes):
        block = list(range(node, node + size))
        members.append(block)
        for v in block:
            groups[v] = c
        node += size
    n = node - 1
    weight = {v: (rng.random() ** (-1.0 / (exponent - 1.0)) if exponent else 1.0) for v in groups}
    edges = set()
    degree = {v: 0 for v in groups}

    def add(u, v):
        e = (min(u, v), max(u, v))
        if u != v and e not in edges:
            edges.add(e)
            degree[u] += 1
            degree[v] += 1

    for block in members:
        order = block[:]
        rng.shuffle(order)
        for i in range(1, len(order)):
            add(order[i], rng.choice(order[:i]))
    for c in range(1, len(members)):
        add(rng.choice(members[c]), rng.choice(members[rng.randrange(c)]))

    target = 2 * m / n

    def pick(block):
        if regular:
            w = [max(target + 0.5 - degree[v], 0.0) + 1e-3 for v in block]
        else:
            w = [weight[v] for v in block]
        return rng.choices(block, weights=w)[0]

    while len(edges) < m:
        a = rng.randrange(len(members))
        if rng.random() < intra or len(members) == 1:
            b = a
        else:
            b = rng.choice([c for c in range(len(members)) if c != a])
        add(pick(members[a]), pick(members[b]))
    assert len(edges) == m and len({x for e in edges for x in e}) == n
    write(name, edges, groups)


if __name__ == "__main__":
    karate()
    community_graph("dolphins", [42, 20], 159, 0.88, 0, 62)
    community_graph("football", [8, 9, 10, 10, 10, 10, 11, 11, 12, 12, 12], 613, 0.7, 0, 115, regular=True)
    community_graph("polblogs", [588, 636], 19090, 0.91, 2.5, 1224)
