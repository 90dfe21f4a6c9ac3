"""Independent reference implementations the tests check the library against.

Everything here is deliberately written from scratch with different
algorithms than the package uses: brute-force enumerations, dense
fraction-free elimination, exhaustive subset scans.
"""

from __future__ import annotations

import itertools
import random
from fractions import Fraction

from gcx.diagrams import Diagram, validate


def bareiss_rank(matrix) -> int:
    """Rank via fraction-free Bareiss elimination."""
    a = [list(map(int, row)) for row in matrix]
    if not a or not a[0]:
        return 0
    rows, cols = len(a), len(a[0])
    rank = 0
    prev = 1
    for c in range(cols):
        piv = next((i for i in range(rank, rows) if a[i][c]), None)
        if piv is None:
            continue
        a[rank], a[piv] = a[piv], a[rank]
        for i in range(rank + 1, rows):
            for j in range(c + 1, cols):
                a[i][j] = (a[rank][c] * a[i][j] - a[i][c] * a[rank][j]) // prev
            a[i][c] = 0
        prev = a[rank][c]
        rank += 1
    return rank


def rref_kernel_dim(matrix) -> int:
    a = [[Fraction(x) for x in row] for row in matrix]
    cols = len(a[0]) if a else 0
    rank = 0
    for c in range(cols):
        p = next((i for i in range(rank, len(a)) if a[i][c]), None)
        if p is None:
            continue
        a[rank], a[p] = a[p], a[rank]
        a[rank] = [x / a[rank][c] for x in a[rank]]
        for i in range(len(a)):
            if i != rank and a[i][c]:
                f = a[i][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[rank])]
        rank += 1
    return cols - rank


def subset_connected(vertices, edges) -> bool:
    vs = set(vertices)
    if not vs:
        return False
    adj = {v: set() for v in vs}
    for a, b in edges:
        if a in vs and b in vs and a != b:
            adj[a].add(b)
            adj[b].add(a)
    seen = {next(iter(vs))}
    stack = list(seen)
    while stack:
        for w in adj[stack.pop()]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return seen == vs


def subset_biconnected(vertices, edges) -> bool:
    vs = set(vertices)
    if len(vs) < 2:
        return False
    if not subset_connected(vs, edges):
        return False
    if len(vs) == 2:
        return True
    return all(subset_connected(vs - {v}, edges) for v in vs)


def brute_blocks(n, edges):
    """Maximal biconnected induced vertex sets with at least one edge."""
    touched = {v for e in edges for v in e if e[0] != e[1]}
    cands = []
    for size in range(2, n + 1):
        for combo in itertools.combinations(sorted(touched), size):
            if subset_biconnected(combo, edges):
                cands.append(frozenset(combo))
    return {c for c in cands if not any(c < other for other in cands)}


def brute_articulation(n, edges):
    touched = sorted({v for e in edges for v in e if e[0] != e[1]})

    def comp_count(skip=None):
        vs = [v for v in touched if v != skip]
        seen = set()
        count = 0
        adj = {v: set() for v in vs}
        for a, b in edges:
            if a != b and a in adj and b in adj:
                adj[a].add(b)
                adj[b].add(a)
        for v in vs:
            if v in seen:
                continue
            count += 1
            stack = [v]
            seen.add(v)
            while stack:
                for w in adj[stack.pop()]:
                    if w not in seen:
                        seen.add(w)
                        stack.append(w)
        return count

    base = comp_count()
    out = set()
    for v in touched:
        if comp_count(v) > base:
            out.add(v)
    return out


def brute_automorphism_signs(d: Diagram) -> set[int]:
    """Signs over every strand-preserving vertex bijection, no pruning."""
    frees = list(d.free)
    signs = set()
    base_key = _edge_key_set(d, {v: v for v in range(1, d.n_vertices + 1)})
    for perm in itertools.permutations(frees):
        rho = {v: v for v in d.segment_vertices}
        rho.update(dict(zip(frees, perm)))
        key, sign = _edge_key_set(d, rho, with_sign=True)
        if key == base_key:
            signs.add(sign)
    return signs


def _edge_key_set(d: Diagram, rho, with_sign=False):
    flips = 0
    recs = []
    for a, b, lo in d.edges:
        na, nb = rho[a], rho[b]
        if a == b:
            if lo == "rl":
                flips += 1
            recs.append((na, na, "lr"))
        else:
            if na > nb:
                na, nb = nb, na
                flips += 1
            recs.append((na, nb, None))
    if d.convention == "even":
        order = sorted(range(len(recs)), key=lambda i: recs[i])
        inv = sum(1 for i in range(len(order)) for j in range(i + 1, len(order))
                  if order[i] > order[j])
        sign = -1 if inv % 2 else 1
        key = tuple(recs[i] for i in order)
    else:
        perm_sign = 1
        seen = set()
        for v in rho:
            if v in seen:
                continue
            ln, w = 0, v
            while w not in seen:
                seen.add(w)
                w = rho[w]
                ln += 1
            if ln % 2 == 0:
                perm_sign = -perm_sign
        sign = perm_sign * (-1) ** flips
        key = tuple(sorted(recs))
    if with_sign:
        return key, sign
    return key


def random_valid_diagram(rng: random.Random, convention="odd", max_m=2,
                         max_q=4, max_t=2, max_extra_edges=2):
    """Rejection-sample a small valid diagram."""
    for _ in range(400):
        m = rng.randint(1, max_m)
        q = rng.randint(0, max_q)
        t = rng.randint(0, max_t)
        if q == 0 and t > 0:
            continue
        split = sorted(rng.randint(0, q) for _ in range(m - 1))
        sizes = []
        prev = 0
        for s in split + [q]:
            sizes.append(s - prev)
            prev = s
        strands = []
        nxt = 1
        for size in sizes:
            strands.append(tuple(range(nxt, nxt + size)))
            nxt += size
        free = tuple(range(q + 1, q + t + 1))
        pairs = [(a, b) for a in range(1, q + t + 1)
                 for b in range(a + 1, q + t + 1)]
        pairs += [(v, v) for v in range(1, q + 1)]
        rng.shuffle(pairs)
        needed = {v: 1 for v in range(1, q + 1)}
        needed.update({v: 3 for v in free})
        chosen = []
        deg = {v: 0 for v in range(1, q + t + 1)}
        for a, b in pairs:
            if len(chosen) >= q + 3 * t + max_extra_edges:
                break
            if deg[a] >= needed[a] and deg[b] >= needed[b] and rng.random() < 0.7:
                continue
            chosen.append((a, b))
            deg[a] += 2 if a == b else 1
            if a != b:
                deg[b] += 1
        if q + t == 0:
            chosen = []
        edges = [
            (a, b, "lr" if (a == b and convention == "odd") else None)
            for a, b in chosen
        ]
        # drop duplicate pairs to stay out of the multi-edge ideal
        seen_pairs = set()
        filtered = []
        for a, b, lo in edges:
            key = (min(a, b), max(a, b))
            if key in seen_pairs:
                continue
            seen_pairs.add(key)
            filtered.append((a, b, lo))
        try:
            return validate(convention, strands, free, filtered)
        except Exception:
            continue
    raise RuntimeError("could not sample a valid diagram")


def random_relabeling(rng: random.Random, d: Diagram):
    """A random admissible relabeling: id bijection, edge flips, loop swaps."""
    n = d.n_vertices
    ids = list(range(1, n + 1))
    rng.shuffle(ids)
    rho = {v: ids[v - 1] for v in range(1, n + 1)}
    strands = tuple(tuple(rho[v] for v in s) for s in d.strands)
    free = tuple(sorted(rho[v] for v in d.free))
    edges = []
    flip_count = 0
    loop_swaps = 0
    for a, b, lo in d.edges:
        na, nb = rho[a], rho[b]
        if a == b:
            if d.convention == "odd" and rng.random() < 0.5:
                lo = "rl" if lo == "lr" else "lr"
                loop_swaps += 1
            edges.append((na, na, lo))
        else:
            if rng.random() < 0.5:
                na, nb = nb, na
                flip_count += 1
            edges.append((na, nb, lo))
    if d.convention == "even":
        order = list(range(len(edges)))
        rng.shuffle(order)
        inv = sum(1 for i in range(len(order)) for j in range(i + 1, len(order))
                  if order[i] > order[j])
        sign = -1 if inv % 2 else 1
        edges = [edges[i] for i in order]
        flip_count = 0
        loop_swaps = 0
    else:
        seen = set()
        sign = 1
        for v in rho:
            if v in seen:
                continue
            ln, w = 0, v
            while w not in seen:
                seen.add(w)
                w = rho[w]
                ln += 1
            if ln % 2 == 0:
                sign = -sign
        sign *= (-1) ** (flip_count + loop_swaps)
    out = Diagram(d.convention, strands, free, tuple(edges))
    return out, sign, rho
