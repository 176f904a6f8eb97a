"""Independent reference implementations used to freeze expected values.

These deliberately avoid sharing code or algorithmic structure with the
package: rotation enumeration for the BW transform, recursive edit-sequence
search for the edit distances, exhaustive threshold sweeps for the EER, and
exhaustive bipartition search for modularity.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import combinations


def bw_oracle(value: str) -> str:
    """Rotation-matrix BW with the single-'@' sigil anchor."""
    if value.count("@") == 1:
        while not value.startswith("@"):
            value = value[-1] + value[:-1]
        return "@" + bw_oracle_plain(value[1:])
    return bw_oracle_plain(value)


def bw_oracle_plain(value: str) -> str:
    matrix = []
    for i in range(len(value)):
        matrix.append(value[i:] + value[:i])
    matrix.sort()
    return "".join(row[-1] for row in matrix)


@lru_cache(maxsize=None)
def brute_levenshtein(a: str, b: str) -> int:
    """Edit-sequence search from the front: match/substitute/delete/insert."""
    if not a:
        return len(b)
    if not b:
        return len(a)
    options = []
    if a[0] == b[0]:
        options.append(brute_levenshtein(a[1:], b[1:]))
    else:
        options.append(1 + brute_levenshtein(a[1:], b[1:]))  # substitute
    options.append(1 + brute_levenshtein(a[1:], b))  # delete from a
    options.append(1 + brute_levenshtein(a, b[1:]))  # insert into a
    return min(options)


@lru_cache(maxsize=None)
def brute_damerau(a: str, b: str) -> int:
    """Edit-sequence search with adjacent transposition (no re-editing)."""
    if not a:
        return len(b)
    if not b:
        return len(a)
    options = []
    if a[0] == b[0]:
        options.append(brute_damerau(a[1:], b[1:]))
    else:
        options.append(1 + brute_damerau(a[1:], b[1:]))
    options.append(1 + brute_damerau(a[1:], b))
    options.append(1 + brute_damerau(a, b[1:]))
    if len(a) >= 2 and len(b) >= 2 and a[0] == b[1] and a[1] == b[0] and a[0] != b[0]:
        options.append(1 + brute_damerau(a[2:], b[2:]))
    return min(options)


def eer_sweep_oracle(scores: list[float], labels: list[bool]) -> tuple[float, float]:
    """Evaluate P_m/P_fa at every threshold position (below the minimum, at
    each distinct score, between each consecutive pair, above the maximum) by
    direct counting; return ((P_m+P_fa)/2, |P_m-P_fa|) at the minimum gap."""
    true_scores = sorted(s for s, l in zip(scores, labels) if l)
    false_scores = sorted(s for s, l in zip(scores, labels) if not l)
    distinct = sorted(set(scores))
    positions = [distinct[0] - 1.0]
    for lo, hi in zip(distinct, distinct[1:]):
        positions.append(lo)
        positions.append((lo + hi) / 2.0)
    positions.append(distinct[-1])
    positions.append(distinct[-1] + 1.0)
    best = None
    for t in positions:
        p_m = sum(1 for s in true_scores if s < t) / len(true_scores)
        p_fa = sum(1 for s in false_scores if s >= t) / len(false_scores)
        gap = abs(p_m - p_fa)
        if best is None or gap < best[1]:
            best = ((p_m + p_fa) / 2.0, gap)
    return best


def modularity(adj: dict, partition: dict) -> float:
    """Q = sum over edges of [A_uv - k_u k_v / 2m] delta(c_u, c_v) / 2m."""
    m2 = sum(sum(nbrs.values()) for nbrs in adj.values())
    if m2 == 0:
        return 0.0
    strength = {u: sum(nbrs.values()) for u, nbrs in adj.items()}
    q = 0.0
    for u in adj:
        for v in adj:
            if partition[u] != partition[v]:
                continue
            a_uv = adj[u].get(v, 0.0)
            q += a_uv - strength[u] * strength[v] / m2
    return q / m2


def best_bipartition(adj: dict) -> tuple[float, frozenset]:
    """Exhaustive best-modularity split into at most two groups."""
    nodes = sorted(adj)
    best_q = modularity(adj, {n: 0 for n in nodes})
    best_side = frozenset()
    for size in range(1, len(nodes) // 2 + 1):
        for side in combinations(nodes, size):
            part = {n: (0 if n in side else 1) for n in nodes}
            q = modularity(adj, part)
            if q > best_q:
                best_q = q
                best_side = frozenset(side)
    return best_q, best_side


def soft_tfidf_two_token_oracle(
    tokens_a: tuple[str, str],
    tokens_b: tuple[str, str],
    idf: dict[str, float],
    jw,
    threshold: float = 0.9,
) -> float:
    """Directional soft-TFIDF for two-token names with unit term frequencies,
    written out longhand, averaged over both directions."""

    def weights(tokens):
        raw = [idf[t] for t in tokens]
        norm = (raw[0] ** 2 + raw[1] ** 2) ** 0.5
        return [r / norm for r in raw]

    def directed(ta, tb):
        wa = weights(ta)
        wb = weights(tb)
        total = 0.0
        for i, t in enumerate(ta):
            sims = [jw(t, u) for u in tb]
            j = 0 if sims[0] >= sims[1] else 1
            if sims[j] >= threshold:
                total += wa[i] * wb[j] * sims[j]
        return total

    return (directed(tokens_a, tokens_b) + directed(tokens_b, tokens_a)) / 2.0
