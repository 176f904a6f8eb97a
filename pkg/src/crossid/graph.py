"""Mention graphs, seeded cross-domain alignment, and graph features.

Each domain gets an undirected weighted graph: vertices are posting users,
mentioned users, and hashtags (keyed "user:<label>" / "tag:<label>", labels
lowercased); every post contributes author-mention and author-hashtag edges
whose weights count co-occurrences. Seed pairs (shared hashtags, optionally
identical usernames) are merged into single vertices in the aligned graph,
which is the union of the two domain graphs with weights summed on merge.

Communities are detected on the largest connected component with greedy
modularity maximization (Louvain-style local moves plus aggregation levels),
deterministic given the random seed, with ties broken by vertex key.

Features per user vertex: a community histogram of the <=hop neighbors and a
neighborhood weight vector over the <=hop neighbors (1-hop entries weighted
by edge weight, 2-hop ring entries by 1), both L2-normalized. Similarity is
the dot product of the normalized vectors (DP) or a linear SVM over the
elementwise product of the pair's vectors.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator

from .learners import LinearSVM
from .records import Post
from .validation import check_random_state

logger = logging.getLogger(__name__)

SEED_MODES = ("hashtags", "hashtags_and_usernames")


def user_key(label: str) -> str:
    return "user:" + label.lower()


def hashtag_key(label: str) -> str:
    return "tag:" + label.lower().lstrip("#")


@dataclass
class DomainGraph:
    """Undirected weighted mention/hashtag co-occurrence graph of one domain."""

    domain: str
    kinds: dict[str, str] = field(default_factory=dict)  # key -> "user" | "hashtag"
    adj: dict[str, dict[str, int]] = field(default_factory=dict)
    skipped_posts: int = 0

    def add_vertex(self, key: str, kind: str) -> None:
        if key not in self.kinds:
            self.kinds[key] = kind
            self.adj[key] = {}

    def add_edge(self, a: str, b: str, weight: int = 1) -> None:
        if a == b:
            return
        self.adj[a][b] = self.adj[a].get(b, 0) + weight
        self.adj[b][a] = self.adj[b].get(a, 0) + weight

    @property
    def vertex_count(self) -> int:
        return len(self.kinds)

    @property
    def edge_count(self) -> int:
        return sum(len(nbrs) for nbrs in self.adj.values()) // 2

    def hashtag_labels(self) -> set[str]:
        return {k.split(":", 1)[1] for k, kind in self.kinds.items() if kind == "hashtag"}

    def user_labels(self) -> set[str]:
        return {k.split(":", 1)[1] for k, kind in self.kinds.items() if kind == "user"}


def build_graph(posts: Sequence[Post]) -> DomainGraph:
    """Build the domain graph; permuting the input posts yields the same graph."""
    domains = {p.domain for p in posts}
    if len(domains) > 1:
        raise ValueError(f"posts span multiple domains: {sorted(domains)}")
    graph = DomainGraph(domain=domains.pop() if domains else "")
    for post in posts:
        if not post.username:
            graph.skipped_posts += 1
            continue
        author = user_key(post.username)
        graph.add_vertex(author, "user")
        for mention in post.mentions:
            other = user_key(mention)
            if other == author:
                continue
            graph.add_vertex(other, "user")
            graph.add_edge(author, other)
        for tag in post.hashtags:
            tkey = hashtag_key(tag)
            graph.add_vertex(tkey, "hashtag")
            graph.add_edge(author, tkey)
    return graph


@dataclass(frozen=True)
class SeedSet:
    """Cross-domain vertex correspondences used to merge the graphs."""

    mode: str
    pairs: tuple[tuple[str, str], ...]

    @property
    def is_empty(self) -> bool:
        return not self.pairs


def select_seeds(gt: DomainGraph, gi: DomainGraph, mode: str) -> SeedSet:
    """Shared hashtags, plus exactly-matching usernames in the wider mode."""
    if mode not in SEED_MODES:
        raise ValueError(f"unknown seed mode {mode!r}; expected one of {SEED_MODES}")
    pairs = [(hashtag_key(t), hashtag_key(t))
             for t in sorted(gt.hashtag_labels() & gi.hashtag_labels())]
    if mode == "hashtags_and_usernames":
        pairs.extend((user_key(u), user_key(u))
                     for u in sorted(gt.user_labels() & gi.user_labels()))
    if not pairs:
        logger.warning("empty seed set: the aligned graph degenerates to a disjoint union")
    return SeedSet(mode=mode, pairs=tuple(pairs))


class AlignedGraph:
    """Union of the two domain graphs with seed pairs collapsed.

    Aligned keys are "t:<key>" / "i:<key>" for unmerged vertices and
    "m:<key>" for merged seed vertices.
    """

    def __init__(self):
        self.kinds: dict[str, str] = {}
        self.adj: dict[str, dict[str, float]] = {}
        self.domain_map: dict[tuple[str, str], str] = {}  # (domain, key) -> aligned key
        self.communities: dict[str, int] | None = None

    @property
    def vertex_count(self) -> int:
        return len(self.kinds)

    def vertex_for(self, domain: str, key: str) -> str | None:
        return self.domain_map.get((domain, key))

    def neighbors(self, key: str) -> dict[str, float]:
        return self.adj.get(key, {})


def align_graphs(gt: DomainGraph, gi: DomainGraph, seeds: SeedSet) -> AlignedGraph:
    """Merge at seeds; |V| = |V_t| + |V_i| - |pairs|, weights summed on merge."""
    seeded_t = {}
    seeded_i = {}
    for tk, ik in seeds.pairs:
        if tk not in gt.kinds:
            raise ValueError(f"seed references missing twitter vertex {tk!r}")
        if ik not in gi.kinds:
            raise ValueError(f"seed references missing instagram vertex {ik!r}")
        seeded_t[tk] = "m:" + tk
        seeded_i[ik] = "m:" + tk
    aligned = AlignedGraph()

    def admit(domain: str, graph: DomainGraph, seeded: dict[str, str], prefix: str) -> None:
        for key, kind in graph.kinds.items():
            akey = seeded.get(key, prefix + key)
            aligned.domain_map[(domain, key)] = akey
            if akey not in aligned.kinds:
                aligned.kinds[akey] = kind
                aligned.adj[akey] = {}
        for a, nbrs in graph.adj.items():
            aa = aligned.domain_map[(domain, a)]
            for b, w in nbrs.items():
                ab = aligned.domain_map[(domain, b)]
                aligned.adj[aa][ab] = aligned.adj[aa].get(ab, 0.0) + w

    admit("twitter", gt, seeded_t, "t:")
    admit("instagram", gi, seeded_i, "i:")
    return aligned


def _connected_components(adj: Mapping[str, Mapping[str, float]],
                          vertices: Iterable[str]) -> list[set[str]]:
    seen: set[str] = set()
    components = []
    for start in sorted(vertices):
        if start in seen:
            continue
        stack = [start]
        comp = {start}
        seen.add(start)
        while stack:
            node = stack.pop()
            for nbr in adj.get(node, {}):
                if nbr not in comp:
                    comp.add(nbr)
                    seen.add(nbr)
                    stack.append(nbr)
        components.append(comp)
    return components


def largest_component(graph: AlignedGraph) -> set[str]:
    comps = _connected_components(graph.adj, graph.kinds)
    if not comps:
        return set()
    return max(comps, key=lambda c: (len(c), min(c)))


def _louvain_level(nodes: list[str], adj: dict[str, dict[str, float]],
                   loops: dict[str, float], rng: np.random.Generator):
    """One Louvain level: local moves until no gain. Returns node -> community
    (communities named by a representative node key)."""
    m2 = sum(sum(nbrs.values()) for nbrs in adj.values()) + 2.0 * sum(loops.values())
    if m2 == 0.0:
        return {n: n for n in nodes}
    strength = {n: sum(adj[n].values()) + 2.0 * loops.get(n, 0.0) for n in nodes}
    community = {n: n for n in nodes}
    tot = dict(strength)  # total strength per community

    improved = True
    passes = 0
    while improved and passes < 100:
        improved = False
        passes += 1
        order = list(nodes)
        rng.shuffle(order)
        for u in order:
            cu = community[u]
            k_u = strength[u]
            # weight from u to each neighboring community
            links: dict[str, float] = {}
            for v, w in adj[u].items():
                links[community[v]] = links.get(community[v], 0.0) + w
            tot[cu] -= k_u
            base = links.get(cu, 0.0) - tot[cu] * k_u / m2
            best_c, best_gain = cu, base
            for c in sorted(links):
                if c == cu:
                    continue
                gain = links[c] - tot[c] * k_u / m2
                if gain > best_gain + 1e-12 or (abs(gain - best_gain) <= 1e-12 and c < best_c):
                    best_c, best_gain = c, gain
            tot[best_c] += k_u
            if best_c != cu:
                community[u] = best_c
                improved = True
    return community


def detect_communities(graph: AlignedGraph, seed: int = 0) -> dict[str, int | None]:
    """Assign a community id to every vertex of the largest connected
    component; all other vertices map to None. Deterministic given `seed`."""
    if graph.vertex_count == 0:
        raise ValueError("aligned graph is empty")
    lcc = largest_component(graph)
    rng = check_random_state(seed)

    # current partition state, on the aggregated graph; adjacency is rebuilt
    # in sorted order so the result is independent of graph insertion order
    nodes = sorted(lcc)
    adj = {n: {v: float(w) for v, w in sorted(graph.adj[n].items()) if v in lcc}
           for n in nodes}
    loops = {n: 0.0 for n in nodes}
    membership = {n: n for n in nodes}  # original vertex -> current supernode

    for _level in range(20):
        community = _louvain_level(nodes, adj, loops, rng)
        n_comms = len(set(community.values()))
        if n_comms == len(nodes):
            break
        # canonical representative per community: smallest member key
        rep: dict[str, str] = {}
        for node in nodes:
            c = community[node]
            if c not in rep or node < rep[c]:
                rep[c] = node
        membership = {orig: rep[community[membership[orig]]] for orig in membership}
        # aggregate
        new_nodes = sorted(set(rep.values()))
        new_adj: dict[str, dict[str, float]] = {n: {} for n in new_nodes}
        new_loops = {n: 0.0 for n in new_nodes}
        for u in nodes:
            ru = rep[community[u]]
            new_loops[ru] += loops.get(u, 0.0)
            for v, w in adj[u].items():
                rv = rep[community[v]]
                if ru == rv:
                    new_loops[ru] += w / 2.0
                else:
                    new_adj[ru][rv] = new_adj[ru].get(rv, 0.0) + w
        nodes, adj, loops = new_nodes, new_adj, new_loops

    final_reps = sorted(set(membership.values()))
    ids = {r: i for i, r in enumerate(final_reps)}
    assignment: dict[str, int | None] = {v: None for v in graph.kinds}
    for orig, repnode in membership.items():
        assignment[orig] = ids[repnode]
    graph.communities = {k: v for k, v in assignment.items() if v is not None}
    return assignment


@dataclass(frozen=True)
class GraphFeature:
    """L2-normalized sparse feature vector; empty vector means missing."""

    kind: str  # "community" | "neighborhood"
    hop: int
    vector: Mapping[str | int, float]

    @property
    def is_missing(self) -> bool:
        return not self.vector


def _normalized(vector: dict, kind: str, hop: int) -> GraphFeature:
    norm = sum(w * w for w in vector.values()) ** 0.5
    if norm == 0.0:
        return GraphFeature(kind, hop, {})
    return GraphFeature(kind, hop, {k: w / norm for k, w in vector.items()})


def _hop_sets(graph: AlignedGraph, vertex: str):
    """(1-hop neighbor -> edge weight, 2-hop ring set), excluding the vertex."""
    one_hop = {v: w for v, w in graph.neighbors(vertex).items() if v != vertex}
    ring = set()
    for v in one_hop:
        for u in graph.neighbors(v):
            if u != vertex and u not in one_hop:
                ring.add(u)
    return one_hop, ring


def community_feature(graph: AlignedGraph, vertex: str, hop: int,
                      ring_only: bool = False) -> GraphFeature:
    """Histogram over community ids of the <=hop neighbors (1-hop weighted by
    edge weight, 2-hop ring by 1). Missing outside the largest component."""
    if hop not in (1, 2):
        raise ValueError("hop must be 1 or 2")
    if graph.communities is None:
        raise ValueError("communities not detected yet")
    if graph.communities.get(vertex) is None:
        return GraphFeature("community", hop, {})
    one_hop, ring = _hop_sets(graph, vertex)
    hist: dict[int, float] = {}
    if hop == 1 or not ring_only:
        for v, w in one_hop.items():
            c = graph.communities.get(v)
            if c is not None:
                hist[c] = hist.get(c, 0.0) + w
    if hop == 2:
        for v in ring:
            c = graph.communities.get(v)
            if c is not None:
                hist[c] = hist.get(c, 0.0) + 1.0
    return _normalized(hist, "community", hop)


def neighborhood_feature(graph: AlignedGraph, vertex: str, hop: int,
                         ring_only: bool = False) -> GraphFeature:
    """Weight vector over the <=hop neighbor vertex ids (1-hop entries carry
    the edge weight, 2-hop ring entries 1). Missing for isolates."""
    if hop not in (1, 2):
        raise ValueError("hop must be 1 or 2")
    if vertex not in graph.kinds:
        return GraphFeature("neighborhood", hop, {})
    one_hop, ring = _hop_sets(graph, vertex)
    vector: dict[str, float] = {}
    if hop == 1 or not ring_only:
        vector.update({v: float(w) for v, w in one_hop.items()})
    if hop == 2:
        for v in ring:
            vector[v] = vector.get(v, 0.0) + 1.0
    return _normalized(vector, "neighborhood", hop)


def dp_similarity(f1: GraphFeature, f2: GraphFeature) -> float | None:
    """Dot product of the two normalized vectors; None when either is missing.

    Identical vectors (e.g. the two sides of a merged seed pair) score 1.0
    exactly rather than accumulating float rounding.
    """
    if f1.kind != f2.kind or f1.hop != f2.hop:
        raise ValueError(
            f"feature mismatch: {f1.kind}/{f1.hop} vs {f2.kind}/{f2.hop}"
        )
    if f1.is_missing or f2.is_missing:
        return None
    if f1.vector == f2.vector:
        return 1.0
    if len(f2.vector) < len(f1.vector):
        f1, f2 = f2, f1
    return sum(w * f2.vector.get(k, 0.0) for k, w in f1.vector.items())


class PairProductSVM(BaseEstimator):
    """Linear SVM over the elementwise product of a pair's feature vectors."""

    def __init__(self, C: float = 1.0, max_iter: int = 1000, tol: float = 1e-6,
                 random_state: int = 0):
        self.C = C
        self.max_iter = max_iter
        self.tol = tol
        self.random_state = random_state

    @staticmethod
    def _product(f1: GraphFeature, f2: GraphFeature) -> dict | None:
        if f1.kind != f2.kind or f1.hop != f2.hop:
            raise ValueError("feature mismatch in pair")
        if f1.is_missing or f2.is_missing:
            return None
        return {k: w * f2.vector[k] for k, w in f1.vector.items() if k in f2.vector}

    def fit(self, pairs: Sequence[tuple[GraphFeature, GraphFeature]], labels: Sequence[bool]):
        products = []
        y = []
        for (f1, f2), label in zip(pairs, labels):
            prod = self._product(f1, f2)
            if prod is None:
                continue
            products.append(prod)
            y.append(1 if label else -1)
        if not products:
            raise ValueError("no complete training pairs")
        keys = sorted({k for prod in products for k in prod}, key=str)
        self.key_index_ = {k: i for i, k in enumerate(keys)}
        X = np.zeros((len(products), max(len(keys), 1)))
        for row, prod in enumerate(products):
            for k, v in prod.items():
                X[row, self.key_index_[k]] = v
        self.svm_ = LinearSVM(C=self.C, max_iter=self.max_iter, tol=self.tol,
                              random_state=self.random_state).fit(X, np.asarray(y))
        return self

    def score(self, f1: GraphFeature, f2: GraphFeature) -> float | None:
        """Signed decision value; None when either side is missing."""
        prod = self._product(f1, f2)
        if prod is None:
            return None
        total = self.svm_.bias_
        for k, v in prod.items():
            i = self.key_index_.get(k)
            if i is not None:
                total += self.svm_.weights_[i] * v
        return float(total)
