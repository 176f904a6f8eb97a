import itertools

import numpy as np
import pytest

from crossid.graph import (
    GraphFeature,
    PairProductSVM,
    align_graphs,
    build_graph,
    community_feature,
    detect_communities,
    dp_similarity,
    neighborhood_feature,
    select_seeds,
)
from crossid.records import Post

from oracles import best_bipartition, modularity


def _post(domain, pid, user, mentions=(), hashtags=()):
    return Post(domain=domain, post_id=pid, user_id=user, username=user, text="",
                mentions=tuple(mentions), hashtags=tuple(hashtags))


def _clique_posts(domain, names, start=0):
    posts = []
    i = start
    for u, v in itertools.combinations(names, 2):
        posts.append(_post(domain, f"p{i}", u, mentions=[v]))
        i += 1
    return posts


# ---------------------------------------------------------------------------
# graph construction
# ---------------------------------------------------------------------------

def test_build_graph_single_post():
    g = build_graph([_post("twitter", "p0", "a", mentions=["B"], hashtags=["X"])])
    assert set(g.kinds) == {"user:a", "user:b", "tag:x"}
    assert g.adj["user:a"] == {"user:b": 1, "tag:x": 1}
    assert g.edge_count == 2


def test_build_graph_weights_are_additive():
    posts = [_post("twitter", "p0", "a", mentions=["b"]),
             _post("twitter", "p1", "a", mentions=["b"])]
    g = build_graph(posts)
    assert g.adj["user:a"]["user:b"] == 2


def test_build_graph_empty():
    g = build_graph([])
    assert g.vertex_count == 0 and g.edge_count == 0


def test_build_graph_order_independent():
    posts = [_post("twitter", f"p{i}", f"u{i % 3}", mentions=[f"u{(i + 1) % 3}"],
                   hashtags=[f"t{i % 2}"]) for i in range(12)]
    g1 = build_graph(posts)
    g2 = build_graph(list(reversed(posts)))
    assert g1.kinds == g2.kinds
    assert {k: dict(v) for k, v in g1.adj.items()} == {k: dict(v) for k, v in g2.adj.items()}


def test_build_graph_skips_self_mentions_and_counts_authorless():
    g = build_graph([_post("twitter", "p0", "a", mentions=["a"]),
                     Post(domain="twitter", post_id="p1", user_id="x", username="",
                          text="hello")])
    assert g.adj["user:a"] == {}
    assert g.skipped_posts == 1


# ---------------------------------------------------------------------------
# seeds and alignment
# ---------------------------------------------------------------------------

def _two_domain_graphs():
    gt = build_graph([
        _post("twitter", "t0", "alice", mentions=["bob"], hashtags=["boston"]),
        _post("twitter", "t1", "bob", hashtags=["boston", "sports"]),
    ])
    gi = build_graph([
        _post("instagram", "i0", "alice", hashtags=["boston"]),
        _post("instagram", "i1", "carol", mentions=["alice"], hashtags=["food"]),
    ])
    return gt, gi


def test_select_seeds_hashtags_mode():
    gt, gi = _two_domain_graphs()
    seeds = select_seeds(gt, gi, "hashtags")
    assert seeds.pairs == (("tag:boston", "tag:boston"),)


def test_select_seeds_usernames_mode_adds_users():
    gt, gi = _two_domain_graphs()
    seeds = select_seeds(gt, gi, "hashtags_and_usernames")
    assert ("user:alice", "user:alice") in seeds.pairs
    assert ("tag:boston", "tag:boston") in seeds.pairs
    assert all(pair != ("user:carol", "user:carol") for pair in seeds.pairs)


def test_select_seeds_empty_intersection_flagged():
    gt = build_graph([_post("twitter", "t0", "a", hashtags=["x"])])
    gi = build_graph([_post("instagram", "i0", "b", hashtags=["y"])])
    seeds = select_seeds(gt, gi, "hashtags")
    assert seeds.is_empty


def test_select_seeds_unknown_mode():
    gt, gi = _two_domain_graphs()
    with pytest.raises(ValueError):
        select_seeds(gt, gi, "usernames_only")


def test_align_vertex_count_identity():
    gt, gi = _two_domain_graphs()
    for mode in ("hashtags", "hashtags_and_usernames"):
        seeds = select_seeds(gt, gi, mode)
        aligned = align_graphs(gt, gi, seeds)
        assert aligned.vertex_count == gt.vertex_count + gi.vertex_count - len(seeds.pairs)


def test_align_zero_seeds_disjoint_union():
    gt = build_graph([_post("twitter", "t0", "a", mentions=["b"])])
    gi = build_graph([_post("instagram", "i0", "c", mentions=["d"])])
    from crossid.graph import SeedSet

    aligned = align_graphs(gt, gi, SeedSet("hashtags", ()))
    assert aligned.vertex_count == 4
    assert aligned.vertex_for("twitter", "user:a") == "t:user:a"
    assert aligned.vertex_for("instagram", "user:c") == "i:user:c"


def test_align_sums_weights_across_merged_edges():
    gt = build_graph([_post("twitter", f"t{i}", "a", hashtags=["x"]) for i in range(2)])
    gi = build_graph([_post("instagram", f"i{i}", "a", hashtags=["x"]) for i in range(5)])
    seeds = select_seeds(gt, gi, "hashtags_and_usernames")
    aligned = align_graphs(gt, gi, seeds)
    assert aligned.adj["m:user:a"]["m:tag:x"] == 7


def test_align_missing_seed_vertex_raises_with_name():
    gt, gi = _two_domain_graphs()
    from crossid.graph import SeedSet

    with pytest.raises(ValueError, match="tag:nowhere"):
        align_graphs(gt, gi, SeedSet("hashtags", (("tag:nowhere", "tag:nowhere"),)))


# ---------------------------------------------------------------------------
# community detection
# ---------------------------------------------------------------------------

def _aligned_from_twitter(posts):
    from crossid.graph import SeedSet

    gt = build_graph(posts)
    gi = build_graph([])
    return align_graphs(gt, gi, SeedSet("hashtags", ()))


def test_two_cliques_split_matches_exhaustive_modularity():
    names_a = [f"a{i}" for i in range(5)]
    names_b = [f"b{i}" for i in range(5)]
    posts = _clique_posts("twitter", names_a) + _clique_posts("twitter", names_b, start=50)
    posts.append(_post("twitter", "bridge", "a0", mentions=["b0"]))
    aligned = _aligned_from_twitter(posts)
    assignment = detect_communities(aligned, seed=0)

    adj = {v: dict(nbrs) for v, nbrs in aligned.adj.items()}
    _, best_side = best_bipartition(adj)
    expected = {frozenset(best_side), frozenset(set(adj) - best_side)}
    groups = {}
    for v, c in assignment.items():
        groups.setdefault(c, set()).add(v)
    assert {frozenset(g) for g in groups.values()} == expected


def test_single_clique_one_community():
    aligned = _aligned_from_twitter(_clique_posts("twitter", [f"u{i}" for i in range(6)]))
    assignment = detect_communities(aligned, seed=0)
    assert len(set(assignment.values())) == 1


def test_vertices_outside_largest_component_unassigned():
    posts = _clique_posts("twitter", ["a", "b", "c"]) + [_post("twitter", "x", "lone")]
    aligned = _aligned_from_twitter(posts)
    assignment = detect_communities(aligned, seed=0)
    assert assignment["t:user:lone"] is None
    assert assignment["t:user:a"] is not None


def test_community_detection_deterministic_and_order_independent():
    posts = [_post("twitter", f"p{i}", f"u{i % 7}",
                   mentions=[f"u{(i + 1) % 7}", f"u{(2 * i) % 7}"]) for i in range(25)]
    a1 = detect_communities(_aligned_from_twitter(posts), seed=42)
    a2 = detect_communities(_aligned_from_twitter(posts), seed=42)
    a3 = detect_communities(_aligned_from_twitter(list(reversed(posts))), seed=42)
    assert a1 == a2 == a3


def test_detected_partition_is_a_local_modularity_optimum():
    rng = np.random.default_rng(1)
    posts = []
    for i in range(40):
        u, v = rng.integers(0, 12, size=2)
        if u != v:
            posts.append(_post("twitter", f"p{i}", f"u{u}", mentions=[f"u{v}"]))
    aligned = _aligned_from_twitter(posts)
    assignment = detect_communities(aligned, seed=0)
    adj = {v: dict(n) for v, n in aligned.adj.items() if assignment[v] is not None}
    part = {v: c for v, c in assignment.items() if c is not None}
    q = modularity(adj, part)
    # moving any single vertex to a neighboring community must not help
    for v in sorted(part):
        for target in sorted(set(part[n] for n in adj[v])):
            moved = dict(part)
            moved[v] = target
            assert modularity(adj, moved) <= q + 1e-9


# ---------------------------------------------------------------------------
# graph features
# ---------------------------------------------------------------------------

def test_community_feature_one_hot():
    names = [f"a{i}" for i in range(5)]
    aligned = _aligned_from_twitter(_clique_posts("twitter", names))
    detect_communities(aligned, seed=0)
    feature = community_feature(aligned, "t:user:a0", 1)
    assert list(feature.vector.values()) == [1.0]


def test_community_feature_star_histogram():
    posts = (_clique_posts("twitter", ["a0", "a1", "a2", "a3"]) +
             _clique_posts("twitter", ["b0", "b1", "b2", "b3"], start=20))
    posts += [_post("twitter", "s1", "hub", mentions=["a0"]),
              _post("twitter", "s2", "hub", mentions=["a1"]),
              _post("twitter", "s3", "hub", mentions=["b0"])]
    aligned = _aligned_from_twitter(posts)
    assignment = detect_communities(aligned, seed=0)
    feature = community_feature(aligned, "t:user:hub", 1)
    ca = assignment["t:user:a0"]
    cb = assignment["t:user:b0"]
    norm = (2.0 ** 2 + 1.0 ** 2) ** 0.5
    assert feature.vector[ca] == pytest.approx(2.0 / norm)
    assert feature.vector[cb] == pytest.approx(1.0 / norm)


def test_isolated_user_features_missing():
    posts = _clique_posts("twitter", ["a", "b", "c"]) + [_post("twitter", "x", "lone")]
    aligned = _aligned_from_twitter(posts)
    detect_communities(aligned, seed=0)
    assert community_feature(aligned, "t:user:lone", 1).is_missing
    assert neighborhood_feature(aligned, "t:user:lone", 2).is_missing


def test_two_hop_ball_vs_ring():
    # path: a - b - c
    posts = [_post("twitter", "p0", "a", mentions=["b"]),
             _post("twitter", "p1", "b", mentions=["c"])]
    aligned = _aligned_from_twitter(posts)
    detect_communities(aligned, seed=0)
    ball = neighborhood_feature(aligned, "t:user:a", 2)
    ring = neighborhood_feature(aligned, "t:user:a", 2, ring_only=True)
    assert set(ball.vector) == {"t:user:b", "t:user:c"}
    assert set(ring.vector) == {"t:user:c"}
    one = neighborhood_feature(aligned, "t:user:a", 1)
    assert set(one.vector) == {"t:user:b"}


def test_seeded_pair_has_identical_features_and_dp_one():
    gt = build_graph([_post("twitter", "t0", "alice", mentions=["bob"], hashtags=["x"])])
    gi = build_graph([_post("instagram", "i0", "alice", hashtags=["y"])])
    seeds = select_seeds(gt, gi, "hashtags_and_usernames")
    aligned = align_graphs(gt, gi, seeds)
    detect_communities(aligned, seed=0)
    vt = aligned.vertex_for("twitter", "user:alice")
    vi = aligned.vertex_for("instagram", "user:alice")
    assert vt == vi == "m:user:alice"
    f1 = neighborhood_feature(aligned, vt, 1)
    f2 = neighborhood_feature(aligned, vi, 1)
    assert f1.vector == f2.vector
    assert dp_similarity(f1, f2) == pytest.approx(1.0, abs=1e-12)


def test_dp_similarity_cases():
    a = GraphFeature("neighborhood", 1, {"x": 1.0})
    b = GraphFeature("neighborhood", 1, {"y": 1.0})
    assert dp_similarity(a, b) == 0.0
    c = GraphFeature("neighborhood", 1, {"x": 1.0 / 2 ** 0.5, "y": 1.0 / 2 ** 0.5})
    d = GraphFeature("neighborhood", 1, {"x": 1.0})
    assert dp_similarity(c, d) == pytest.approx(0.7071, abs=1e-4)
    assert dp_similarity(a, GraphFeature("neighborhood", 1, {})) is None
    with pytest.raises(ValueError):
        dp_similarity(a, GraphFeature("community", 1, {"x": 1.0}))
    with pytest.raises(ValueError):
        dp_similarity(a, GraphFeature("neighborhood", 2, {"x": 1.0}))


def test_feature_vectors_unit_norm_or_missing():
    rng = np.random.default_rng(2)
    posts = []
    for i in range(60):
        u, v = rng.integers(0, 15, size=2)
        if u != v:
            posts.append(_post("twitter", f"p{i}", f"u{u}", mentions=[f"u{v}"],
                               hashtags=[f"t{i % 4}"] if i % 3 else []))
    aligned = _aligned_from_twitter(posts)
    detect_communities(aligned, seed=0)
    for vertex, kind in aligned.kinds.items():
        if kind != "user":
            continue
        for fn in (community_feature, neighborhood_feature):
            for hop in (1, 2):
                feature = fn(aligned, vertex, hop)
                if not feature.is_missing:
                    norm = sum(w * w for w in feature.vector.values()) ** 0.5
                    assert norm == pytest.approx(1.0, abs=1e-9)


# ---------------------------------------------------------------------------
# SVM pair similarity
# ---------------------------------------------------------------------------

def test_pair_svm_matches_dp_ranking_on_separable_pairs():
    rng = np.random.default_rng(3)
    pairs, labels = [], []
    for i in range(30):
        if i % 2:
            v = {f"k{i}": 1.0}
            pairs.append((GraphFeature("community", 1, v), GraphFeature("community", 1, v)))
            labels.append(True)
        else:
            pairs.append((GraphFeature("community", 1, {f"k{i}": 1.0}),
                          GraphFeature("community", 1, {f"j{i}": 1.0})))
            labels.append(False)
    model = PairProductSVM().fit(pairs, labels)
    same = model.score(GraphFeature("community", 1, {"k1": 1.0}),
                       GraphFeature("community", 1, {"k1": 1.0}))
    diff = model.score(GraphFeature("community", 1, {"k2": 1.0}),
                       GraphFeature("community", 1, {"j9": 1.0}))
    assert same > diff


def test_pair_svm_zero_product_scores_bias():
    pairs = [(GraphFeature("community", 1, {"a": 1.0}), GraphFeature("community", 1, {"a": 1.0})),
             (GraphFeature("community", 1, {"b": 1.0}), GraphFeature("community", 1, {"c": 1.0}))]
    model = PairProductSVM().fit(pairs, [True, False])
    score = model.score(GraphFeature("community", 1, {"x": 1.0}),
                        GraphFeature("community", 1, {"y": 1.0}))
    assert score == pytest.approx(model.svm_.bias_)


def test_pair_svm_missing_side_is_skipped_and_scored_none():
    pairs = [(GraphFeature("community", 1, {"a": 1.0}), GraphFeature("community", 1, {"a": 1.0})),
             (GraphFeature("community", 1, {}), GraphFeature("community", 1, {"a": 1.0})),
             (GraphFeature("community", 1, {"b": 1.0}), GraphFeature("community", 1, {"c": 1.0}))]
    model = PairProductSVM().fit(pairs, [True, True, False])
    assert model.score(GraphFeature("community", 1, {}),
                       GraphFeature("community", 1, {"a": 1.0})) is None


def test_pair_svm_no_complete_pairs_error():
    pairs = [(GraphFeature("community", 1, {}), GraphFeature("community", 1, {"a": 1.0}))]
    with pytest.raises(ValueError, match="no complete training pairs"):
        PairProductSVM().fit(pairs, [True])
