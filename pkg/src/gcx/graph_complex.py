"""The diagram cochain complex: grading, basis enumeration, coboundary.

Elements are finite combinations of canonical diagrams over Z, Q or Z/2,
homogeneous in (order, defect, strand count, convention).  The coboundary
contracts every arc and non-loop edge with an explicit sign and raises the
defect by one.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional

from .diagrams import (
    BudgetError,
    Diagram,
    GcxError,
    canonicalize,
    contract,
    contract_labels,
    epsilon,
    from_json_dict,
    validate,
)

RINGS = ("Z", "Q", "Z2")

DEFAULT_MAX_VERTICES = 12


def coeff_from_string(ring: str, s: str):
    if ring == "Q":
        return Fraction(s)
    return int(s) % 2 if ring == "Z2" else int(s)


def coeff_to_string(c) -> str:
    return str(c)


def _normalize_coeff(ring: str, c):
    if ring == "Z2":
        return int(c) % 2
    if ring == "Q":
        return Fraction(c)
    if isinstance(c, Fraction):
        if c.denominator != 1:
            raise GcxError(f"non-integer coefficient {c} over Z")
        return int(c)
    return int(c)


@dataclass(frozen=True)
class Grading:
    order: int
    defect: int


def grading(d: Diagram) -> Grading:
    """Order |E| - |V_free| and defect 2|E| - |V_seg| - 3|V_free|."""
    e = d.n_edges
    q = len(d.segment_vertices)
    t = len(d.free)
    return Grading(e - t, 2 * e - q - 3 * t)


@dataclass(frozen=True)
class CochainElement:
    """A combination of canonical diagrams, homogeneous in its grading."""

    ring: str
    convention: str
    strand_count: int
    order: int
    defect: int
    terms: tuple[tuple[Diagram, object], ...]  # sorted by Diagram.sort_key

    def coeff(self, d: Diagram):
        for k, c in self.terms:
            if k == d:
                return c
        return 0

    def support(self) -> frozenset[Diagram]:
        return frozenset(d for d, _ in self.terms)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def scaled(self, factor) -> "CochainElement":
        return cochain(
            self.ring,
            self.convention,
            self.strand_count,
            {d: c * factor for d, c in self.terms},
            (self.order, self.defect),
        )

    def __add__(self, other: "CochainElement") -> "CochainElement":
        if (self.ring, self.convention, self.strand_count) != (
            other.ring,
            other.convention,
            other.strand_count,
        ):
            raise GcxError("cannot add elements over different rings or conventions")
        if not other.terms:
            return self
        if not self.terms:
            return other
        if (self.order, self.defect) != (other.order, other.defect):
            raise GcxError("cannot add elements of different gradings")
        acc = dict(self.terms)
        for d, c in other.terms:
            acc[d] = acc.get(d, 0) + c
        return cochain(self.ring, self.convention, self.strand_count, acc,
                       (self.order, self.defect))

    def to_json_dict(self) -> dict:
        return {
            "ring": self.ring,
            "grading": {
                "m": self.strand_count,
                "n": self.order,
                "k": self.defect,
                "convention": self.convention,
            },
            "terms": [
                {"diagram": d.to_json_dict(), "coeff": coeff_to_string(c)}
                for d, c in self.terms
            ],
        }


def cochain(ring, convention, m, terms: dict, grading_hint=None) -> CochainElement:
    """Build an element from a diagram -> coefficient map, dropping zeros."""
    clean = {}
    for d, c in terms.items():
        c = _normalize_coeff(ring, c)
        if c != 0:
            clean[d] = c
    gradings = {(grading(d).order, grading(d).defect) for d in clean}
    convs = {d.convention for d in clean}
    ms = {d.strand_count for d in clean}
    if len(gradings) > 1:
        raise GcxError(f"mixed gradings in element: {sorted(gradings)}")
    if (convs and convs != {convention}) or (ms and ms != {m}):
        raise GcxError("term diagrams disagree with the element's convention or strand count")
    if clean:
        n, k = next(iter(gradings))
    elif grading_hint is not None:
        n, k = grading_hint
    else:
        n, k = 0, 0
    items = tuple(sorted(clean.items(), key=lambda t: t[0].sort_key()))
    return CochainElement(ring, convention, m, n, k, items)


def cochain_from_raw(ring, convention, m, raw_terms: Iterable, grading_hint=None
                     ) -> CochainElement:
    """Like cochain() but canonicalizes arbitrary labeled diagrams first."""
    acc: dict[Diagram, object] = {}
    for d, c in raw_terms:
        res = canonicalize(d, ring)
        if res.is_zero:
            continue
        acc[res.canonical] = acc.get(res.canonical, 0) + res.sign * c
    return cochain(ring, convention, m, acc, grading_hint)


def element_from_json(data: dict) -> CochainElement:
    ring = data["ring"]
    g = data.get("grading", {})
    terms = []
    for t in data["terms"]:
        terms.append((from_json_dict(t["diagram"]), coeff_from_string(ring, t["coeff"])))
    if terms:
        m = terms[0][0].strand_count
        conv = terms[0][0].convention
    else:
        m, conv = g.get("m", 1), g.get("convention", "odd")
    hint = (g["n"], g["k"]) if "n" in g else None
    return cochain_from_raw(ring, conv, m, terms, hint)


# ---------------------------------------------------------------------------
# basis enumeration


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _edge_candidates(q: int, t: int) -> list[tuple[int, int]]:
    """Unordered vertex pairs that may carry an edge: loops on segments only."""
    n = q + t
    pairs = [(a, b) for a in range(1, n + 1) for b in range(a + 1, n + 1)]
    pairs += [(v, v) for v in range(1, q + 1)]
    return sorted(pairs)


def _enumerate_graphs(q: int, t: int, n_edges: int, defect: int):
    """Backtracking enumeration of edge sets with the valence constraints.

    Degrees count edge-ends: segment vertices need >= 1, free >= 3; the total
    slack above those minima is exactly the defect.  Free vertices must be
    first touched in increasing id order (a symmetry breaker; canonical
    deduplication removes what remains).
    """
    cands = _edge_candidates(q, t)
    n = q + t
    mindeg = [0] * (n + 1)
    for v in range(1, q + 1):
        mindeg[v] = 1
    for v in range(q + 1, n + 1):
        mindeg[v] = 3

    out = []
    deg = [0] * (n + 1)
    chosen: list[tuple[int, int]] = []

    def deficit() -> int:
        return sum(max(0, mindeg[v] - deg[v]) for v in range(1, n + 1))

    def rec(start: int, remaining: int):
        if remaining == 0:
            if all(deg[v] >= mindeg[v] for v in range(1, n + 1)):
                out.append(list(chosen))
            return
        if deficit() > 2 * remaining:
            return
        for i in range(start, len(cands)):
            if len(cands) - i < remaining:
                break
            a, b = cands[i]
            # symmetry breaker: free vertices enter in increasing id order
            fresh = {v for v in (a, b) if v > q and deg[v] == 0}
            if any(u not in fresh and deg[u] == 0
                   for v in fresh for u in range(q + 1, v)):
                continue
            if a == b:
                deg[a] += 2
            else:
                deg[a] += 1
                deg[b] += 1
            chosen.append((a, b))
            # slack above the valence minima only ever grows; it must end at
            # exactly the defect
            slack = sum(max(0, deg[v] - mindeg[v]) for v in range(1, n + 1))
            if slack <= defect:
                rec(i + 1, remaining - 1)
            chosen.pop()
            if a == b:
                deg[a] -= 2
            else:
                deg[a] -= 1
                deg[b] -= 1
        return

    rec(0, n_edges)
    return out


def generate_basis(m: int, n: int, k: int, convention: str, ring: str = "Z",
                   max_vertices: int = DEFAULT_MAX_VERTICES) -> tuple[Diagram, ...]:
    """All canonical nonzero diagrams on m strands with order n and defect k.

    Output is sorted by Diagram.sort_key (chord diagrams first, then by edge
    pattern), which fixes the basis order used everywhere else.
    """
    if m < 1 or n < 0 or k < 0:
        raise GcxError("need m >= 1, n >= 0, k >= 0")
    found: set[Diagram] = set()
    for t in range(0, 2 * n - k + 1):
        q = 2 * n - t - k
        n_edges = n + t
        if q < 0:
            continue
        if q + t > max_vertices:
            raise BudgetError(
                f"basis at (m={m}, n={n}, k={k}) needs {q + t} vertices"
                f" > max_vertices={max_vertices}")
        if q == 0 and (t > 0 or n_edges > 0):
            continue  # nothing can attach to L
        for comp in _compositions(q, m):
            strands = []
            nxt = 1
            for size in comp:
                strands.append(tuple(range(nxt, nxt + size)))
                nxt += size
            free = tuple(range(q + 1, q + t + 1))
            for edge_set in _enumerate_graphs(q, t, n_edges, k):
                edges = tuple(
                    (a, b, "lr" if (a == b and convention == "odd") else None)
                    for a, b in edge_set
                )
                cand = Diagram(convention, tuple(strands), free, edges)
                if any(not any(not cand.is_free(v) for v in c)
                       for c in _diagram_components(cand)):
                    continue
                res = canonicalize(cand, ring)
                if res.is_zero:
                    continue
                found.add(res.canonical)
    return tuple(sorted(found, key=lambda d: d.sort_key()))


def _diagram_components(d: Diagram):
    from .diagrams import _components

    return _components(d)


# ---------------------------------------------------------------------------
# coboundary


def coboundary(x: CochainElement) -> CochainElement:
    """Signed sum of contractions over every arc and non-loop edge of each term."""
    acc: dict[Diagram, object] = {}
    for d, c in x.terms:
        for label in contract_labels(d):
            oc = contract(d, label, x.ring)
            if oc.is_zero:
                continue
            key = oc.diagram
            acc[key] = acc.get(key, 0) + c * epsilon(d, label) * oc.sign
    return cochain(x.ring, x.convention, x.strand_count, acc,
                   (x.order, x.defect + 1))


@dataclass(frozen=True)
class SparseMatrix:
    """Exact sparse integer/rational matrix in row-major triplet form."""

    rows: int
    cols: int
    entries: tuple[tuple[int, int, object], ...]  # (row, col, value), 0-based

    def dense(self) -> list[list]:
        out = [[0] * self.cols for _ in range(self.rows)]
        for i, j, v in self.entries:
            out[i][j] = v
        return out

    def to_json_dict(self) -> dict:
        return {
            "rows": self.rows,
            "cols": self.cols,
            "entries": [[i, j, str(v)] for i, j, v in self.entries],
        }

    @staticmethod
    def from_json_dict(data: dict, ring: str = "Z") -> "SparseMatrix":
        entries = tuple(
            (i, j, coeff_from_string(ring, v)) for i, j, v in data["entries"]
        )
        return SparseMatrix(data["rows"], data["cols"], entries)


def _coboundary_column(args):
    d, ring = args
    cols = {}
    for label in contract_labels(d):
        oc = contract(d, label, ring)
        if oc.is_zero:
            continue
        cols[oc.diagram] = cols.get(oc.diagram, 0) + epsilon(d, label) * oc.sign
    return cols


def coboundary_matrix(m: int, n: int, k: int, convention: str, ring: str = "Z",
                      max_vertices: int = DEFAULT_MAX_VERTICES,
                      jobs: int = 1) -> SparseMatrix:
    """Matrix of the coboundary from defect k to k+1 in the canonical bases.

    Columns follow generate_basis(m, n, k), rows generate_basis(m, n, k+1).
    """
    src = generate_basis(m, n, k, convention, ring, max_vertices)
    dst = generate_basis(m, n, k + 1, convention, ring, max_vertices)
    index = {d: i for i, d in enumerate(dst)}
    work = [(d, ring) for d in src]
    if jobs > 1 and len(work) > 1:
        import multiprocessing

        with multiprocessing.Pool(jobs) as pool:
            columns = pool.map(_coboundary_column, work)
    else:
        columns = [_coboundary_column(w) for w in work]
    entries = []
    for j, col in enumerate(columns):
        for target, value in sorted(col.items(), key=lambda t: t[0].sort_key()):
            value = _normalize_coeff(ring, value)
            if value == 0:
                continue
            if target not in index:
                raise GcxError("contraction left the generated basis; "
                               "raise max_vertices")
            entries.append((index[target], j, value))
    entries.sort(key=lambda t: (t[0], t[1]))
    return SparseMatrix(len(dst), len(src), tuple(entries))
