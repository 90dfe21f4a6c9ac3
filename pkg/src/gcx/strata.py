"""Combinatorial stratification of compactified configuration spaces.

Everything here is graph combinatorics on the view of a diagram where arcs
count as edges (collisions do not distinguish them): block decompositions,
codimension-1 face enumeration and classification, exact codimension
certificates for degenerate faces, corner posets, and the dimension and
Poincare-polynomial formulas.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .diagrams import BudgetError, Diagram, GcxError, arcs
from .graph_complex import CochainElement, grading


# ---------------------------------------------------------------------------
# graph views


def t_graph(d: Diagram) -> tuple[int, list[tuple[int, int]]]:
    """Vertices and edge list of the diagram with arcs adjoined (loops kept)."""
    edges = [(a, b) for a, b, _ in d.edges]
    edges += [pair for pair, _ in arcs(d)]
    return d.n_vertices, edges


def u_graph(d: Diagram) -> tuple[int, list[tuple[int, int]]]:
    """Vertices and edge list with the link forgotten (edges only)."""
    return d.n_vertices, [(a, b) for a, b, _ in d.edges]


def _adjacency(n: int, edges) -> dict[int, set[int]]:
    adj: dict[int, set[int]] = {v: set() for v in range(1, n + 1)}
    for a, b in edges:
        if a != b:
            adj[a].add(b)
            adj[b].add(a)
    return adj


def _connected(vertices: frozenset[int], adj) -> bool:
    if not vertices:
        return False
    start = next(iter(vertices))
    seen = {start}
    stack = [start]
    while stack:
        for w in adj[stack.pop()]:
            if w in vertices and w not in seen:
                seen.add(w)
                stack.append(w)
    return seen == vertices


def induced_biconnected(vertices: frozenset[int], n: int, edges) -> bool:
    """Is the induced subgraph on the vertex set biconnected?

    A single edge counts (two vertices, at least one connecting edge or arc);
    a lone vertex does not.  Parallel edges are harmless since biconnectivity
    only needs one path each way.
    """
    if len(vertices) < 2:
        return False
    adj = _adjacency(n, [(a, b) for a, b in edges
                         if a in vertices and b in vertices])
    if not _connected(vertices, adj):
        return False
    if len(vertices) == 2:
        return True
    for v in vertices:
        if not _connected(vertices - {v}, adj):
            return False
    return True


# ---------------------------------------------------------------------------
# blocks and the block-cut tree


@dataclass(frozen=True)
class BlockDecomposition:
    blocks: tuple[frozenset[int], ...]
    cut_vertices: frozenset[int]
    tree_edges: tuple[tuple[int, int], ...]  # (block index, cut vertex)

    def counting_identity(self, n_nonisolated: int) -> bool:
        lhs = sum(len(b) for b in self.blocks)
        return lhs == n_nonisolated + len(self.tree_edges) - len(self.cut_vertices)


def blocks_and_tree(n: int, edges) -> BlockDecomposition:
    """Biconnected components, articulation points and block-cut incidences.

    Iterative Hopcroft--Tarjan on a multigraph; self-loops belong to no
    block.  The corrected counting identity (vertex total = non-isolated
    vertices + tree edges - cut vertices) is asserted on every call.
    """
    if n < 1:
        raise GcxError("blocks_and_tree needs a nonempty graph")
    incidence: dict[int, list[tuple[int, int]]] = {v: [] for v in range(1, n + 1)}
    real_edges = []
    for idx, (a, b) in enumerate(edges):
        if a == b:
            continue
        real_edges.append((a, b))
        eid = len(real_edges) - 1
        incidence[a].append((b, eid))
        incidence[b].append((a, eid))

    disc: dict[int, int] = {}
    low: dict[int, int] = {}
    timer = [0]
    stack: list[tuple[int, int]] = []  # edge stack as (vertex pair)
    blocks: list[frozenset[int]] = []
    cuts: set[int] = set()

    for root in range(1, n + 1):
        if root in disc or not incidence[root]:
            continue
        work = [(root, -1, iter(incidence[root]))]
        disc[root] = low[root] = timer[0]
        timer[0] += 1
        root_children = 0
        while work:
            v, parent_eid, it = work[-1]
            advanced = False
            for w, eid in it:
                if eid == parent_eid:
                    continue
                if w not in disc:
                    stack.append((v, w))
                    disc[w] = low[w] = timer[0]
                    timer[0] += 1
                    if v == root:
                        root_children += 1
                    work.append((w, eid, iter(incidence[w])))
                    advanced = True
                    break
                if disc[w] < disc[v]:
                    stack.append((v, w))
                    low[v] = min(low[v], disc[w])
            if advanced:
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
                if low[v] >= disc[u]:
                    comp: set[int] = set()
                    while stack and stack[-1] != (u, v):
                        x, y = stack.pop()
                        comp.update((x, y))
                    if stack:
                        x, y = stack.pop()
                        comp.update((x, y))
                    if comp:
                        blocks.append(frozenset(comp))
                    if u != root or root_children > 1:
                        cuts.add(u)
        # leftover edges of this root component form one block
        if stack:
            comp = set()
            while stack:
                x, y = stack.pop()
                comp.update((x, y))
            blocks.append(frozenset(comp))

    # a vertex is a cut vertex iff it lies in >= 2 blocks
    count: dict[int, int] = {}
    for b in blocks:
        for v in b:
            count[v] = count.get(v, 0) + 1
    cut_vertices = frozenset(v for v, c in count.items() if c > 1)
    tree_edges = tuple(
        (i, v) for i, b in enumerate(blocks) for v in sorted(b) if v in cut_vertices
    )
    deco = BlockDecomposition(tuple(blocks), cut_vertices, tree_edges)
    nonisolated = len({v for a, b in real_edges for v in (a, b)})
    if not deco.counting_identity(nonisolated):
        raise AssertionError("block counting identity violated")
    return deco


# ---------------------------------------------------------------------------
# faces


@dataclass(frozen=True)
class FaceDescriptor:
    kind: str  # "principal" | "hidden" | "infinity"
    vertices: frozenset[int]
    labels: tuple[str, ...] = ()  # principal only: "arc" and/or "e<i>"

    def sort_key(self):
        return (self.kind, tuple(sorted(self.vertices)), self.labels)

    def to_json(self):
        if self.kind == "principal":
            return {"pair": sorted(self.vertices), "labels": list(self.labels)}
        return sorted(self.vertices)


def _face_label_to_contraction(d: Diagram, face: "FaceDescriptor", name: str):
    if name.startswith("e"):
        return ("edge", int(name[1:]))
    u, v = sorted(face.vertices)
    for (x, y), (si, pi) in arcs(d):
        if {x, y} == {u, v}:
            return ("arc", si, pi)
    raise GcxError(f"no arc joins {u},{v}")


def principal_label_names(d: Diagram, u: int, v: int) -> tuple[str, ...]:
    names = []
    if any(set(pair) == {u, v} for pair, _ in arcs(d)):
        names.append("arc")
    for i, (a, b, _) in enumerate(d.edges):
        if {a, b} == {u, v} and a != b:
            names.append(f"e{i}")
    return tuple(names)


def enumerate_faces(d: Diagram, max_vertices: int = 16) -> list[FaceDescriptor]:
    """All codimension-1 faces of the compactified configuration space.

    Principal: vertex pairs joined by an edge or arc (one face per pair).
    Hidden: vertex sets of size >= 3 spanning a biconnected subgraph once
    arcs are adjoined.  Infinity: nonempty connected vertex sets.
    """
    n = d.n_vertices
    if n > max_vertices:
        raise BudgetError(f"face enumeration over {n} vertices exceeds "
                          f"max_vertices={max_vertices}")
    _, tedges = t_graph(d)
    out: list[FaceDescriptor] = []
    pairs = set()
    for a, b in tedges:
        if a != b:
            pairs.add(frozenset((a, b)))
    for pair in sorted(pairs, key=sorted):
        u, v = sorted(pair)
        out.append(FaceDescriptor("principal", pair, principal_label_names(d, u, v)))
    adj = _adjacency(n, tedges)
    for size in range(3, n + 1):
        for combo in itertools.combinations(range(1, n + 1), size):
            s = frozenset(combo)
            if induced_biconnected(s, n, tedges):
                out.append(FaceDescriptor("hidden", s))
    for size in range(1, n + 1):
        for combo in itertools.combinations(range(1, n + 1), size):
            s = frozenset(combo)
            if _connected(s, adj):
                out.append(FaceDescriptor("infinity", s))
    return out


def faces_to_json(faces: list[FaceDescriptor]) -> dict:
    return {
        "principal": [f.to_json() for f in faces if f.kind == "principal"],
        "hidden": [f.to_json() for f in faces if f.kind == "hidden"],
        "infinity": [f.to_json() for f in faces if f.kind == "infinity"],
    }


# ---------------------------------------------------------------------------
# codimension certificates


@dataclass(frozen=True)
class CodimCertificate:
    case: str  # "I" | "II" | "III" | "IV" | "principal-multiedge"
    r: int
    s: int
    edge_count: int
    bound: int  # exact count, (d-1)|E'| - screen dimension
    simplified_bound: Fraction  # the closed-form lower estimate
    anomalous: bool

    def to_json(self):
        return {
            "case": self.case,
            "r": self.r,
            "s": self.s,
            "edges": self.edge_count,
            "bound": str(self.bound),
            "simplified_bound": str(self.simplified_bound),
            "anomalous": self.anomalous,
        }


def codim_certificate(face: FaceDescriptor, d: int, diagram: Diagram
                      ) -> CodimCertificate:
    """Exact codimension of the spherical image of a degenerate-locus face.

    Hidden faces count edges internal to the collision set; faces at
    infinity count every edge incident to it, since the escape direction
    pins crossing edges as well (self-loops included, through the tangent
    factor).  Principal faces are accepted only with a multiple-edge
    quotient, whose image lies in a diagonal of the sphere power.
    """
    s_verts = face.vertices
    r = sum(1 for v in s_verts if not diagram.is_free(v))
    s = len(s_verts) - r
    if face.kind == "principal":
        from .diagrams import _has_multi_edge, contract_raw

        quotient = None
        for name in face.labels:
            lab = _face_label_to_contraction(diagram, face, name)
            quotient = contract_raw(diagram, lab)
            break
        if quotient is None or not _has_multi_edge(quotient):
            raise GcxError("principal faces are certified only with a "
                           "multiple-edge quotient")
        e_count = len([x for x in face.labels if x != "arc"])
        return CodimCertificate("principal-multiedge", r, s, e_count,
                                d - 1, Fraction(d - 1), d - 1 <= 0)
    if face.kind == "hidden":
        e_count = sum(1 for a, b, _ in diagram.edges
                      if a != b and a in s_verts and b in s_verts)
        if r == 0:
            screen = d * s - d - 1
            simplified = Fraction(d - 3, 2) * (s + 2) + 4
            case = "I"
        else:
            screen = d + r + d * s - 3
            simplified = Fraction(d - 3, 2) * (r + s - 2)
            case = "III"
    else:
        e_count = sum(1 for a, b, _ in diagram.edges
                      if a in s_verts or b in s_verts)
        if r == 0:
            screen = d * s - 1
            simplified = Fraction(d - 3, 2) * s + 1
            case = "II"
        else:
            screen = r + d * s - 1
            simplified = Fraction(d - 3, 2) * (r + s) + 1
            case = "IV"
    bound = (d - 1) * e_count - screen
    return CodimCertificate(case, r, s, e_count, bound, simplified, bound <= 0)


def anomalous_faces(d: Diagram) -> list[FaceDescriptor]:
    """Hidden faces where the dimension-3 codimension argument degenerates.

    These are whole connected components of the link-forgotten graph that
    are biconnected once arcs are adjoined, trivalent at free vertices,
    univalent at segment vertices, and crossed by no other component.
    """
    n, uedges = u_graph(d)
    _, tedges = t_graph(d)
    uadj = _adjacency(n, uedges)
    comps: list[frozenset[int]] = []
    left = set(range(1, n + 1))
    while left:
        start = left.pop()
        comp = {start}
        stack = [start]
        while stack:
            for w in uadj[stack.pop()]:
                if w not in comp:
                    comp.add(w)
                    stack.append(w)
        left -= comp
        comps.append(frozenset(comp))

    def degree_in(v: int, vertices: frozenset[int]) -> int:
        deg = 0
        for a, b, _ in d.edges:
            if a == v and b in vertices:
                deg += 1
            if b == v and a in vertices:
                deg += 1
        return deg

    def crossed(component: frozenset[int]) -> bool:
        for strand in d.strands:
            inside = [i for i, v in enumerate(strand) if v in component]
            if inside and any(
                    strand[i] not in component
                    for i in range(min(inside), max(inside) + 1)):
                return True
        return False

    out = []
    for comp in comps:
        if len(comp) < 3 or not any((a in comp) for a, b, _ in d.edges):
            continue
        if not induced_biconnected(comp, n, tedges):
            continue
        free_ok = all(degree_in(v, comp) == 3 for v in comp if d.is_free(v))
        seg_ok = all(degree_in(v, comp) == 1 for v in comp if not d.is_free(v))
        if free_ok and seg_ok and not crossed(comp):
            out.append(FaceDescriptor("hidden", comp))
    return out


# ---------------------------------------------------------------------------
# corner poset


def _compatible(a: frozenset, a_inf: bool, b: frozenset, b_inf: bool) -> bool:
    """Corner compatibility: disjoint, nested, or sharing exactly one vertex,
    computed in the suspension when faces at infinity participate."""
    inter = a & b
    if a_inf and b_inf:
        return a <= b or b <= a or not inter
    if a_inf or b_inf:
        small, big_inf = (a, b) if b_inf else (b, a)
        if small <= (b if b_inf else a):
            return True
        return len(inter) <= 1
    return a <= b or b <= a or len(inter) <= 1


def corner_poset(d: Diagram, max_size: int, include_infinity: bool = False,
                 max_families: int = 100000) -> list[list[tuple[frozenset[int], str]]]:
    """All compatible families of face-indexing vertex sets, up to max_size.

    A family of j pairwise compatible sets indexes a corner of codimension j.
    Finite faces are the biconnected vertex sets (principal pairs included);
    sets tagged "infinity" join in with suspension compatibility when
    requested.
    """
    faces = enumerate_faces(d)
    elements: list[tuple[frozenset[int], str]] = []
    seen = set()
    for f in faces:
        if f.kind == "infinity" and not include_infinity:
            continue
        tag = "infinity" if f.kind == "infinity" else "finite"
        key = (f.vertices, tag)
        if key not in seen:
            seen.add(key)
            elements.append(key)
    elements.sort(key=lambda t: (t[1], sorted(t[0]), len(t[0])))

    out: list[list[tuple[frozenset[int], str]]] = []

    def rec(start: int, family: list):
        if len(out) >= max_families:
            raise BudgetError(f"corner poset exceeded {max_families} families")
        if family:
            out.append(list(family))
        if len(family) == max_size:
            return
        for i in range(start, len(elements)):
            s, tag = elements[i]
            if all(_compatible(s, tag == "infinity", t, ttag == "infinity")
                   for t, ttag in family):
                family.append(elements[i])
                rec(i + 1, family)
                family.pop()

    rec(0, [])
    return out


# ---------------------------------------------------------------------------
# Poincare polynomials


class OrderingError(GcxError):
    """Raised when an ordering violates the earlier-neighborhood clique rule."""


def poincare_polynomial_graph(n: int, edges, d: int,
                              order: Optional[list[int]] = None) -> dict[int, int]:
    """H* of the ordered-forgetting tower for a graph's configuration space.

    Returns the polynomial as {degree: coefficient}.  Each vertex in order
    contributes a factor 1 + e_k t^(d-1) with e_k its number of distinct
    earlier neighbors, provided those earlier neighbors form a clique;
    otherwise the point-forgetting maps are not fibrations and the ordering
    is rejected.
    """
    adj = _adjacency(n, [(a, b) for a, b in edges if a != b])
    if order is None:
        order = _admissible_order(n, adj)
        if order is None:
            raise OrderingError("no admissible ordering exists")
    if sorted(order) != list(range(1, n + 1)):
        raise GcxError("order must list every vertex exactly once")
    poly = {0: 1}
    placed: list[int] = []
    for v in order:
        earlier = [u for u in placed if u in adj[v]]
        for x, y in itertools.combinations(earlier, 2):
            if y not in adj[x]:
                raise OrderingError(
                    f"ordering not admissible: earlier neighbors {x},{y} of "
                    f"{v} are not adjacent")
        placed.append(v)
        e_k = len(earlier)
        if e_k:
            new = dict(poly)
            for deg, c in poly.items():
                new[deg + d - 1] = new.get(deg + d - 1, 0) + e_k * c
            poly = new
    return poly


def _admissible_order(n: int, adj) -> Optional[list[int]]:
    order: list[int] = []

    def rec(remaining: set[int]) -> bool:
        if not remaining:
            return True
        for v in sorted(remaining):
            earlier = [u for u in order if u in adj[v]]
            if all(y in adj[x] for x, y in itertools.combinations(earlier, 2)):
                order.append(v)
                if rec(remaining - {v}):
                    return True
                order.pop()
        return False

    return order if rec(set(range(1, n + 1))) else None


def poincare_polynomial(d: Diagram, dim: int, mode: str = "ambient",
                        order: Optional[list[int]] = None) -> dict[int, int]:
    """Poincare polynomial of the (ambient or fiber) configuration space.

    Ambient mode works with arcs adjoined; fiber mode forgets the link and
    requires the segment vertices to come first, where they contribute
    nothing (their configuration space is a product of simplices).
    """
    if mode == "ambient":
        n, edges = t_graph(d)
        return poincare_polynomial_graph(n, edges, dim, order)
    if mode != "fiber":
        raise GcxError(f"unknown mode {mode!r}")
    n, edges = u_graph(d)
    segs = list(d.segment_vertices)
    if order is None:
        adj = _adjacency(n, [(a, b) for a, b in edges if a != b])
        frees = [v for v in range(1, n + 1) if d.is_free(v)]
        suborder = _admissible_fiber_order(segs, frees, adj)
        if suborder is None:
            raise OrderingError("no admissible ordering exists")
        order = suborder
    else:
        if order[: len(segs)] != sorted(segs) and set(order[: len(segs)]) != set(segs):
            raise GcxError("fiber mode needs the segment vertices first")
    return poincare_polynomial_graph(n, edges, dim, order)


def _admissible_fiber_order(segs, frees, adj) -> Optional[list[int]]:
    order = list(segs)

    def rec(remaining: set[int]) -> bool:
        if not remaining:
            return True
        for v in sorted(remaining):
            earlier = [u for u in order if u in adj[v]]
            if all(y in adj[x] for x, y in itertools.combinations(earlier, 2)):
                order.append(v)
                if rec(remaining - {v}):
                    return True
                order.pop()
        return False

    return order if rec(set(frees)) else None


# ---------------------------------------------------------------------------
# dimensions


def dimensions(x, d: int) -> dict[str, int]:
    """Fiber dimension, class degree and sphere dimension of a cocycle or diagram.

    fiber_dim = (3-d)n - k + N(d-1) with N the maximal edge count over the
    support; the same number equals q + d t + (d-1)(N - E) for every support
    diagram, which the per-diagram identity check exposes.
    """
    if isinstance(x, CochainElement):
        if x.is_zero:
            return {"fiber_dim": 0, "class_degree": 0, "sphere_dim": 0}
        diagrams = [t[0] for t in x.terms]
        n, k = x.order, x.defect
    else:
        diagrams = [x]
        g = grading(x)
        n, k = g.order, g.defect
    big_n = max(dd.n_edges for dd in diagrams)
    fiber = (3 - d) * n - k + big_n * (d - 1)
    for dd in diagrams:
        q = len(dd.segment_vertices)
        t = len(dd.free)
        alt = q + d * t + (d - 1) * (big_n - dd.n_edges)
        if alt != fiber:
            raise AssertionError(
                f"dimension identity failed on {dd.sort_key()}: {alt} != {fiber}")
    return {
        "fiber_dim": fiber,
        "class_degree": n * (d - 3) + k,
        "sphere_dim": big_n * (d - 1),
    }
