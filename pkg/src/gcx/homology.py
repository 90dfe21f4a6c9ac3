"""Exact linear algebra over Z, Q and Z/2 for the diagram complex.

Smith normal form with unimodular transforms, cocycle lattices, cohomology
with torsion, support-minimal decomposition, consistent orientation of a
minimal cocycle, and extension of partial coefficient data to a cocycle.
No floating point anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import chain as itertools_chain
from typing import Optional

from .diagrams import (
    Diagram,
    GcxError,
    automorphism_maps,
    canonical_map,
    canonicalize,
    contract,
    contract_labels,
    contract_raw,
    epsilon,
    label_endpoints,
)
from .graph_complex import (
    BudgetError,
    CochainElement,
    SparseMatrix,
    cochain,
    cochain_from_raw,
    coboundary,
    coboundary_matrix,
    generate_basis,
)


class PropagationError(GcxError):
    """Consistent orientation could not be propagated (input not minimal?)."""


# ---------------------------------------------------------------------------
# Smith normal form


@dataclass(frozen=True)
class SmithDecomposition:
    """A = U . D . V with U, V unimodular and D a divisibility-chained diagonal."""

    u: tuple[tuple[int, ...], ...]
    d: tuple[tuple[int, ...], ...]
    v: tuple[tuple[int, ...], ...]

    def diagonal(self) -> list[int]:
        out = []
        for i in range(min(len(self.d), len(self.d[0]) if self.d else 0)):
            if self.d[i][i]:
                out.append(self.d[i][i])
        return out

    @property
    def rank(self) -> int:
        return len(self.diagonal())


def _identity(n: int) -> list[list[int]]:
    return [[1 if i == j else 0 for j in range(n)] for i in range(n)]


class _SnfState:
    """Work matrix plus the four unimodular companions.

    Row op R on D updates U := U R^-1 and Uinv := R Uinv;
    column op C updates V := C^-1 V and W := W C (W = V^-1).
    """

    def __init__(self, dense: list[list[int]]):
        self.d = [row[:] for row in dense]
        self.rows = len(dense)
        self.cols = len(dense[0]) if dense else 0
        self.u = _identity(self.rows)
        self.uinv = _identity(self.rows)
        self.v = _identity(self.cols)
        self.w = _identity(self.cols)

    def row_add(self, i, j, q):  # row i += q * row j
        d, u, uinv = self.d, self.u, self.uinv
        d[i] = [x + q * y for x, y in zip(d[i], d[j])]
        for r in range(self.rows):
            u[r][j] -= q * u[r][i]
        uinv[i] = [x + q * y for x, y in zip(uinv[i], uinv[j])]

    def row_swap(self, i, j):
        if i == j:
            return
        self.d[i], self.d[j] = self.d[j], self.d[i]
        for r in range(self.rows):
            self.u[r][i], self.u[r][j] = self.u[r][j], self.u[r][i]
        self.uinv[i], self.uinv[j] = self.uinv[j], self.uinv[i]

    def row_negate(self, i):
        self.d[i] = [-x for x in self.d[i]]
        for r in range(self.rows):
            self.u[r][i] = -self.u[r][i]
        self.uinv[i] = [-x for x in self.uinv[i]]

    def col_add(self, j, i, q):  # col j += q * col i
        d, v, w = self.d, self.v, self.w
        for r in range(self.rows):
            d[r][j] += q * d[r][i]
        v[i] = [x - q * y for x, y in zip(v[i], v[j])]
        for r in range(self.cols):
            w[r][j] += q * w[r][i]

    def col_swap(self, i, j):
        if i == j:
            return
        for r in range(self.rows):
            self.d[r][i], self.d[r][j] = self.d[r][j], self.d[r][i]
        self.v[i], self.v[j] = self.v[j], self.v[i]
        for r in range(self.cols):
            self.w[r][i], self.w[r][j] = self.w[r][j], self.w[r][i]

    def col_negate(self, j):
        for r in range(self.rows):
            self.d[r][j] = -self.d[r][j]
        self.v[j] = [-x for x in self.v[j]]
        for r in range(self.cols):
            self.w[r][j] = -self.w[r][j]


def _snf_state(dense: list[list[int]]) -> _SnfState:
    st = _SnfState(dense)
    d = st.d
    size = min(st.rows, st.cols)
    k = 0
    while k < size:
        # minimal-absolute-value pivot limits entry growth
        pivot = None
        best = None
        for i in range(k, st.rows):
            for j in range(k, st.cols):
                x = abs(d[i][j])
                if x and (best is None or x < best):
                    best, pivot = x, (i, j)
        if pivot is None:
            break
        st.row_swap(k, pivot[0])
        st.col_swap(k, pivot[1])
        dirty = False
        for i in range(k + 1, st.rows):
            if d[i][k]:
                q = d[i][k] // d[k][k]
                if q:
                    st.row_add(i, k, -q)
                if d[i][k]:
                    dirty = True
        for j in range(k + 1, st.cols):
            if d[k][j]:
                q = d[k][j] // d[k][k]
                if q:
                    st.col_add(j, k, -q)
                if d[k][j]:
                    dirty = True
        if dirty:
            continue
        # enforce the divisibility chain before moving on
        q0 = d[k][k]
        culprit = None
        for i in range(k + 1, st.rows):
            for j in range(k + 1, st.cols):
                if d[i][j] % q0:
                    culprit = i
                    break
            if culprit is not None:
                break
        if culprit is not None:
            st.row_add(k, culprit, 1)
            continue
        if d[k][k] < 0:
            st.row_negate(k)
        k += 1
    return st


def smith_normal_form(matrix) -> SmithDecomposition:
    """Exact Smith normal form of an integer matrix (dense rows or SparseMatrix)."""
    dense = matrix.dense() if isinstance(matrix, SparseMatrix) else [
        [int(x) for x in row] for row in matrix
    ]
    st = _snf_state(dense)
    freeze = lambda m: tuple(tuple(row) for row in m)
    return SmithDecomposition(freeze(st.u), freeze(st.d), freeze(st.v))


def kernel_lattice(matrix) -> list[list[int]]:
    """Basis of the integer kernel lattice, as coefficient vectors."""
    dense = matrix.dense() if isinstance(matrix, SparseMatrix) else [
        [int(x) for x in row] for row in matrix
    ]
    if not dense or not dense[0]:
        cols = len(dense[0]) if dense else (matrix.cols if isinstance(matrix, SparseMatrix) else 0)
        return [[1 if i == j else 0 for i in range(cols)] for j in range(cols)]
    st = _snf_state(dense)
    rank = sum(1 for i in range(min(st.rows, st.cols)) if st.d[i][i])
    out = []
    for j in range(rank, st.cols):
        vec = [st.w[r][j] for r in range(st.cols)]
        out.append(_sign_normalize(vec))
    out.sort(key=_vec_key)
    return out


def solve_integer(matrix, rhs: list[int]) -> Optional[list[int]]:
    """One integer solution of A x = rhs, or None."""
    dense = matrix.dense() if isinstance(matrix, SparseMatrix) else [
        [int(x) for x in row] for row in matrix
    ]
    rows = len(dense)
    cols = len(dense[0]) if dense else 0
    if rows == 0:
        return [0] * cols
    st = _snf_state(dense)
    y = [sum(st.uinv[i][r] * rhs[r] for r in range(rows)) for i in range(rows)]
    z = [0] * cols
    for i in range(min(rows, cols)):
        di = st.d[i][i]
        if di:
            if y[i] % di:
                return None
            z[i] = y[i] // di
        elif y[i]:
            return None
    for i in range(min(rows, cols), rows):
        if y[i]:
            return None
    return [sum(st.w[r][c] * z[c] for c in range(cols)) for r in range(cols)]


def _sign_normalize(vec):
    for x in vec:
        if x:
            return [-v for v in vec] if x < 0 else list(vec)
    return list(vec)


def _vec_key(vec):
    lead = next((i for i, x in enumerate(vec) if x), len(vec))
    return (lead, [abs(x) for x in vec], vec)


def rank_gaussian_Q(dense) -> int:
    """Rank by dense fraction elimination (independent of the SNF path)."""
    a = [[Fraction(x) for x in row] for row in dense]
    rank = 0
    cols = len(a[0]) if a else 0
    for c in range(cols):
        p = next((i for i in range(rank, len(a)) if a[i][c]), None)
        if p is None:
            continue
        a[rank], a[p] = a[p], a[rank]
        inv = 1 / a[rank][c]
        a[rank] = [x * inv for x in a[rank]]
        for i in range(len(a)):
            if i != rank and a[i][c]:
                f = a[i][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[rank])]
        rank += 1
    return rank


def kernel_gf2(dense, cols: int) -> list[list[int]]:
    """Kernel basis over GF(2); rows are 0/1 integer lists."""
    pivots: dict[int, int] = {}  # pivot column -> fully reduced row bitmask
    for row in dense:
        cur = sum((1 << j) for j, x in enumerate(row) if x % 2)
        while cur:
            lead = cur.bit_length() - 1
            if lead in pivots:
                cur ^= pivots[lead]
                continue
            # clear any other pivot columns from the incoming row; their rows
            # carry free-column bits only, so one pass settles it
            for p, prow in pivots.items():
                if (cur >> p) & 1:
                    cur ^= prow
            for other in list(pivots):
                if (pivots[other] >> lead) & 1:
                    pivots[other] ^= cur
            pivots[lead] = cur
            break
    basis = []
    for j in range(cols):
        if j in pivots:
            continue
        vec = [0] * cols
        vec[j] = 1
        # reduced rows touch only their own pivot and free columns
        for lead, row in pivots.items():
            if (row >> j) & 1:
                vec[lead] = 1
        basis.append(vec)
    return basis


def rank_gfp(dense, p: int) -> int:
    a = [[x % p for x in row] for row in dense]
    rank = 0
    cols = len(a[0]) if a else 0
    for c in range(cols):
        piv = next((i for i in range(rank, len(a)) if a[i][c] % p), None)
        if piv is None:
            continue
        a[rank], a[piv] = a[piv], a[rank]
        inv = pow(a[rank][c], -1, p)
        a[rank] = [(x * inv) % p for x in a[rank]]
        for i in range(len(a)):
            if i != rank and a[i][c]:
                f = a[i][c]
                a[i] = [(x - f * y) % p for x, y in zip(a[i], a[rank])]
        rank += 1
    return rank


# ---------------------------------------------------------------------------
# cocycle spaces and cohomology


@dataclass(frozen=True)
class CohomologyGroup:
    free_rank: int
    torsion: tuple[int, ...]  # in divisibility order

    def __str__(self):
        parts = ["Z"] * self.free_rank + [f"Z/{t}" for t in self.torsion]
        return " + ".join(parts) if parts else "0"


def _vectors_to_elements(vectors, basis, ring, convention, m, grading):
    out = []
    for vec in vectors:
        terms = {basis[i]: c for i, c in enumerate(vec) if c}
        out.append(cochain(ring, convention, m, terms, grading))
    return out


def cocycle_space(m, n, k, convention, ring="Z", max_vertices=12) -> list[CochainElement]:
    """Spanning set of ker d at the given grading (a lattice basis over Z/Q)."""
    basis = generate_basis(m, n, k, convention, ring, max_vertices)
    if not basis:
        return []
    matrix = coboundary_matrix(m, n, k, convention, ring, max_vertices)
    if ring == "Z2":
        vecs = kernel_gf2(matrix.dense(), matrix.cols)
    else:
        vecs = kernel_lattice(matrix)
        if ring == "Q":
            vecs = [[Fraction(x) for x in v] for v in vecs]
    return _vectors_to_elements(vecs, basis, ring, convention, m, (n, k))


def cohomology_group(m, n, k, convention, max_vertices=12) -> CohomologyGroup:
    """H^k at order n over Z: kernel of d_k modulo the image of d_{k-1}."""
    basis = generate_basis(m, n, k, convention, "Z", max_vertices)
    if not basis:
        return CohomologyGroup(0, ())
    ker = kernel_lattice(coboundary_matrix(m, n, k, convention, "Z", max_vertices))
    if not ker:
        return CohomologyGroup(0, ())
    if k == 0:
        return CohomologyGroup(len(ker), ())
    prev = coboundary_matrix(m, n, k - 1, convention, "Z", max_vertices)
    kmat = [[ker[j][i] for j in range(len(ker))] for i in range(len(basis))]
    image_cols = []
    dense_prev = prev.dense()
    for j in range(prev.cols):
        image_cols.append([dense_prev[i][j] for i in range(prev.rows)])
    x_cols = []
    for b in image_cols:
        x = solve_integer(kmat, b)
        if x is None:
            raise GcxError("image does not lie in the kernel; d^2 != 0?")
        x_cols.append(x)
    if not x_cols:
        return CohomologyGroup(len(ker), ())
    xmat = [[col[i] for col in x_cols] for i in range(len(ker))]
    snf = smith_normal_form(xmat)
    diag = snf.diagonal()
    torsion = tuple(d for d in diag if d > 1)
    return CohomologyGroup(len(ker) - len(diag), torsion)


def extend_to_cocycle(partial, m, n, k, convention, ring="Z", max_vertices=12
                      ) -> Optional[CochainElement]:
    """A cocycle agreeing with the given diagram -> coefficient data, or None.

    Keys may be arbitrary labeled diagrams; they are canonicalized (with
    signs) before the linear system is solved.
    """
    basis = generate_basis(m, n, k, convention, ring, max_vertices)
    index = {d: i for i, d in enumerate(basis)}
    fixed: dict[int, object] = {}
    items = partial.items() if isinstance(partial, dict) else partial
    for d, c in items:
        res = canonicalize(d, ring)
        if res.is_zero:
            if c != 0:
                return None
            continue
        i = index.get(res.canonical)
        if i is None:
            return None
        target = res.sign * c
        if i in fixed and fixed[i] != target:
            return None
        fixed[i] = target

    matrix = coboundary_matrix(m, n, k, convention, ring, max_vertices)
    dense = matrix.dense()
    free_idx = [j for j in range(len(basis)) if j not in fixed]
    rhs = [
        -sum(dense[i][j] * fixed[j] for j in fixed)
        for i in range(matrix.rows)
    ]
    sub = [[dense[i][j] for j in free_idx] for i in range(matrix.rows)]
    if ring == "Z":
        sol = solve_integer(sub, rhs)
    elif ring == "Z2":
        sol = _solve_gf2(sub, rhs)
    else:
        sol = _solve_q(sub, rhs)
    if sol is None:
        return None
    full = dict(fixed)
    for j, val in zip(free_idx, sol):
        full[j] = val
    terms = {basis[i]: c for i, c in full.items() if c}
    return cochain(ring, convention, m, terms, (n, k))


def _solve_gf2(a, b):
    rows = len(a)
    cols = len(a[0]) if a else 0
    aug = [(sum((1 << j) for j, x in enumerate(a[i]) if x % 2), b[i] % 2)
           for i in range(rows)]
    pivots: dict[int, tuple[int, int]] = {}
    for row, rb in aug:
        cur, cb = row, rb
        while cur:
            lead = cur.bit_length() - 1
            if lead in pivots:
                prow, pb = pivots[lead]
                cur ^= prow
                cb ^= pb
            else:
                pivots[lead] = (cur, cb)
                break
        else:
            if cb:
                return None
    x = [0] * cols
    for lead in sorted(pivots):  # row supports lie at or below the lead
        row, rb = pivots[lead]
        val = rb
        for j in range(lead):
            if x[j] and ((row >> j) & 1):
                val ^= 1
        x[lead] = val
    return x


def _solve_q(a, b):
    rows = len(a)
    cols = len(a[0]) if a else 0
    aug = [[Fraction(x) for x in a[i]] + [Fraction(b[i])] for i in range(rows)]
    rank = 0
    piv_cols = []
    for c in range(cols):
        p = next((i for i in range(rank, rows) if aug[i][c]), None)
        if p is None:
            continue
        aug[rank], aug[p] = aug[p], aug[rank]
        inv = 1 / aug[rank][c]
        aug[rank] = [x * inv for x in aug[rank]]
        for i in range(rows):
            if i != rank and aug[i][c]:
                f = aug[i][c]
                aug[i] = [x - f * y for x, y in zip(aug[i], aug[rank])]
        piv_cols.append(c)
        rank += 1
    for i in range(rank, rows):
        if aug[i][cols]:
            return None
    x = [Fraction(0)] * cols
    for r, c in enumerate(piv_cols):
        x[c] = aug[r][cols]
    return x


# ---------------------------------------------------------------------------
# minimal cocycles


@dataclass(frozen=True)
class MinimalCocycle:
    element: CochainElement
    support: frozenset[Diagram]


def _content(vec) -> int:
    from math import gcd

    g = 0
    for x in vec:
        g = gcd(g, abs(int(x)))
    return g or 1


def minimal_decomposition(space: list[CochainElement], max_support: int = 16,
                          max_vertices: int = 12) -> list[MinimalCocycle]:
    """Support-minimal, content-1 cocycles whose integer span contains the input.

    Sub-supports are searched exhaustively in increasing cardinality against
    the full cocycle lattice at the grading, so minimality is certified, not
    heuristic.  The search is exponential in the support-universe size, hence
    the max_support bound.
    """
    if not space:
        return []
    first = space[0]
    if first.ring != "Z":
        raise GcxError("minimal_decomposition works over Z")
    m, n, k = first.strand_count, first.order, first.defect
    conv = first.convention
    for el in space:
        if not coboundary(el).is_zero:
            raise GcxError("input element is not a cocycle")

    basis = generate_basis(m, n, k, conv, "Z", max_vertices)
    index = {d: i for i, d in enumerate(basis)}
    universe = sorted({d for el in space for d in el.support()},
                      key=lambda d: d.sort_key())
    if len(universe) > max_support:
        raise BudgetError(
            f"support universe has {len(universe)} diagrams > max_support={max_support}")

    full_kernel = kernel_lattice(coboundary_matrix(m, n, k, conv, "Z", max_vertices))
    uni_idx = [index[d] for d in universe]
    uni_set = set(uni_idx)
    # restrict the kernel to vectors supported inside the universe
    outside = [i for i in range(len(basis)) if i not in uni_set]
    if outside:
        proj = [[vec[i] for vec in full_kernel] for i in outside]
        coeffs = kernel_lattice(proj)
    else:
        coeffs = [[1 if i == j else 0 for i in range(len(full_kernel))]
                  for j in range(len(full_kernel))]
    kernel_in_universe = [
        [sum(c[t] * full_kernel[t][i] for t in range(len(full_kernel))) for i in range(len(basis))]
        for c in coeffs
    ]

    def sub_lattice(support_positions: frozenset[int]):
        if not kernel_in_universe:
            return []
        off = [i for i in uni_idx if i not in support_positions]
        if off:
            proj = [[vec[i] for vec in kernel_in_universe] for i in off]
            cs = kernel_lattice(proj)
        else:
            cs = [[1 if i == j else 0 for i in range(len(kernel_in_universe))]
                  for j in range(len(kernel_in_universe))]
        vecs = []
        for c in cs:
            v = [sum(c[t] * kernel_in_universe[t][i] for t in range(len(kernel_in_universe)))
                 for i in range(len(basis))]
            if any(v):
                vecs.append(v)
        return vecs

    import itertools as it

    minimal_supports: list[frozenset[int]] = []
    generators: list[list[int]] = []
    for size in range(1, len(universe) + 1):
        for combo in it.combinations(uni_idx, size):
            s = frozenset(combo)
            if any(ms < s or ms == s for ms in minimal_supports):
                continue
            vecs = sub_lattice(s)
            vecs = [v for v in vecs if {i for i, x in enumerate(v) if x} == s]
            if not vecs:
                continue
            minimal_supports.append(s)
            for v in vecs:
                g = _content(v)
                generators.append(_sign_normalize([x // g for x in v]))

    generators.sort(key=_vec_key)
    # the input span must be contained in the span of the minimal generators
    if generators:
        gmat = [[gen[i] for gen in generators] for i in range(len(basis))]
        for el in space:
            vec = [0] * len(basis)
            for d, c in el.terms:
                vec[index[d]] = int(c)
            if solve_integer(gmat, vec) is None:
                raise GcxError(
                    "input span is not generated by support-minimal cocycles")
    elif any(not el.is_zero for el in space):
        raise GcxError("no minimal cocycles found for a nonzero input")

    out = []
    for gen in generators:
        terms = {basis[i]: gen[i] for i in range(len(basis)) if gen[i]}
        el = cochain("Z", conv, m, terms, (n, k))
        out.append(MinimalCocycle(el, el.support()))
    return out


# ---------------------------------------------------------------------------
# consistent orientation


@dataclass(frozen=True)
class OrientedExpression:
    """A cocycle written with explicit labeled representatives.

    Unlike CochainElement terms, the diagrams here are generally not
    canonical: their labelings are chosen so that isomorphic contractions of
    different terms carry equal contraction signs and orientation-equivalent
    quotients.
    """

    ring: str
    convention: str
    strand_count: int
    order: int
    defect: int
    terms: tuple[tuple[Diagram, int], ...]

    def to_cochain(self) -> CochainElement:
        return cochain_from_raw(self.ring, self.convention, self.strand_count,
                                self.terms, (self.order, self.defect))

    def to_json_dict(self) -> dict:
        return {
            "kind": "oriented_expression",
            "ring": self.ring,
            "grading": {"m": self.strand_count, "n": self.order,
                        "k": self.defect, "convention": self.convention},
            "terms": [{"diagram": d.to_json_dict(), "coeff": str(c)}
                      for d, c in self.terms],
        }


def _labeled_quotient(d: Diagram, label) -> Optional[Diagram]:
    return contract_raw(d, label)


def _oriented_equal(a: Diagram, b: Diagram) -> Optional[int]:
    """Orientation-relation sign between two labeled diagrams on the same
    underlying graph, None if the underlying graphs differ."""
    ra = canonicalize(a, "Z2")
    rb = canonicalize(b, "Z2")
    if ra.canonical != rb.canonical:
        return None
    _, sa, _ = canonical_map(a)
    _, sb, _ = canonical_map(b)
    return sa * sb


def _contraction_classes(terms) -> dict:
    """Group (term index, label) by the canonical class of the quotient."""
    classes: dict[Diagram, list[tuple[int, tuple]]] = {}
    for i, (d, _) in enumerate(terms):
        for label in contract_labels(d):
            oc = contract(d, label, "Z")
            if oc.is_zero:
                continue
            classes.setdefault(oc.diagram, []).append((i, label))
    return classes


def _relabel_diagram(d: Diagram, rho: dict[int, int], orient: dict) -> Diagram:
    strands = tuple(tuple(rho[v] for v in s) for s in d.strands)
    free = tuple(sorted(rho[v] for v in d.free))
    edges = []
    for idx, (a, b, lo) in enumerate(d.edges):
        na, nb = rho[a], rho[b]
        if a == b:
            edges.append((na, na, orient.get(("loop", idx), lo)))
        else:
            if orient.get(("flip", idx), False):
                na, nb = nb, na
            edges.append((na, nb, lo))
    return Diagram(d.convention, strands, free, tuple(edges))


def _candidate_labelings(canon: Diagram, f_label, eps_target: int,
                         q_star: Diagram):
    """Labelings of canon matching a target contraction, as (diagram, label,
    label translation) triples.

    A labeling matches when its contraction along the translated label is
    orientation-equivalent (sign +1) to q_star and carries the target
    coboundary sign.  Odd convention: vertex labels are forced through the
    quotient identification up to the insertion point of the lost label and
    the endpoint swap; edge orientations and loop orders are searched and
    verified.  Even convention: the edge order is searched outright.
    """
    identity_map = {lab: lab for lab in contract_labels(canon)}
    if canon.convention == "even":
        import itertools as it

        base = list(canon.edges)
        for perm in it.permutations(range(len(base))):
            edges = tuple(base[i] for i in perm)
            cand = Diagram(canon.convention, canon.strands, canon.free, edges)
            lab_map = dict(identity_map)
            for old, new in ((i, p) for p, i in enumerate(perm)):
                lab_map[("edge", old)] = ("edge", new)
            f_new = lab_map[f_label]
            quot = contract_raw(cand, f_new)
            if quot is None:
                continue
            if (epsilon(cand, f_new) == eps_target
                    and _oriented_equal(quot, q_star) == 1):
                yield cand, f_new, lab_map
        return

    u, v = label_endpoints(canon, f_label)
    quot0 = contract_raw(canon, f_label)
    if quot0 is None:
        return
    rc_q, _, rho_q = canonical_map(quot0)
    rc_s, _, rho_s = canonical_map(q_star)
    if rc_q != rc_s:
        return
    inv_rho_s = {val: key for key, val in rho_s.items()}

    n = canon.n_vertices
    w, drop = min(u, v), max(u, v)

    def quot_label(x: int) -> int:
        if x in (u, v):
            return w
        return x - 1 if x > drop else x

    flippable = [i for i, (a, b, _) in enumerate(canon.edges) if a != b]
    loops = [i for i, (a, b, _) in enumerate(canon.edges) if a == b]
    import itertools as it

    seen: set[Diagram] = set()
    # every quotient identification differs from the base one by an
    # automorphism of the common canonical form
    for alpha in automorphism_maps(rc_q):
        psi = {x: inv_rho_s[alpha[rho_q[x]]] for x in rho_q}
        a_target = psi[w]
        for b_target in range(a_target + 1, n + 1):
            for first, second in ((u, v), (v, u)):
                rho = {}
                for x in range(1, n + 1):
                    if x == first:
                        rho[x] = a_target
                    elif x == second:
                        rho[x] = b_target
                    else:
                        y = psi[quot_label(x)]
                        rho[x] = y + 1 if y >= b_target else y
                for flip_set in it.chain.from_iterable(
                        it.combinations(flippable, r) for r in range(len(flippable) + 1)):
                    for loop_set in it.chain.from_iterable(
                            it.combinations(loops, r) for r in range(len(loops) + 1)):
                        orient = {("flip", i): True for i in flip_set}
                        for i in loop_set:
                            cur = canon.edges[i][2]
                            orient[("loop", i)] = "rl" if cur == "lr" else "lr"
                        cand = _relabel_diagram(canon, rho, orient)
                        if cand in seen:
                            continue
                        seen.add(cand)
                        if epsilon(cand, f_label) != eps_target:
                            continue
                        quot = contract_raw(cand, f_label)
                        if quot is not None and _oriented_equal(quot, q_star) == 1:
                            yield cand, f_label, identity_map


def consistent_orientation(gamma) -> OrientedExpression:
    """Relabel the terms of a minimal cocycle so matching contractions agree.

    The output expression satisfies: whenever two contractions have
    isomorphic quotients, their coboundary signs are equal and the labeled
    quotients are orientation-equivalent.  It is unique up to reversing the
    orientation of every term at once.
    """
    element = gamma.element if isinstance(gamma, MinimalCocycle) else gamma
    if element.ring != "Z":
        raise GcxError("consistent orientation is defined over Z")
    if element.convention != "odd":
        # even-convention contraction signs depend on a segment-vertex
        # ordering that the normalized encoding pins to strand order, which
        # removes exactly the freedom the propagation needs; integer plans
        # are odd-parity anyway
        raise GcxError("consistent orientation requires the odd convention")
    if not coboundary(element).is_zero:
        raise GcxError("input is not a cocycle")
    terms = list(element.terms)
    if not terms:
        return OrientedExpression(element.ring, element.convention,
                                  element.strand_count, element.order,
                                  element.defect, ())

    classes = _contraction_classes(terms)
    ordered_classes = sorted(classes.items(), key=lambda kv: kv[0].sort_key())
    _orientability_precheck(terms, ordered_classes)

    def pair_data(diagram: Diagram, label):
        return epsilon(diagram, label), contract_raw(diagram, label)

    def compatible(diagram: Diagram, label, eps_t, q_star) -> bool:
        eps, quot = pair_data(diagram, label)
        return eps == eps_t and _oriented_equal(quot, q_star) == 1

    def self_consistent(term_idx: int, diagram: Diagram, lab_map) -> bool:
        for _, members in ordered_classes:
            mine = [lab_map[lab] for i, lab in members if i == term_idx]
            if len(mine) > 1:
                eps0, q0 = pair_data(diagram, mine[0])
                for lab in mine[1:]:
                    if not compatible(diagram, lab, eps0, q0):
                        return False
        return True

    chosen: dict[int, Diagram] = {}
    label_maps: dict[int, dict] = {}

    def constraints_for(j: int):
        out = []
        for _, members in ordered_classes:
            anchors = [(i, lab) for i, lab in members if i in chosen]
            mine = [lab for i, lab in members if i == j]
            if anchors and mine:
                ai, alab = anchors[0]
                eps_t, q_star = pair_data(chosen[ai], label_maps[ai][alab])
                for lab in mine:
                    out.append((lab, eps_t, q_star))
        return out

    def next_term():
        for _, members in ordered_classes:
            if any(i in chosen for i, _ in members):
                for i, _ in members:
                    if i not in chosen:
                        return i
        return None

    def assign(count: int) -> bool:
        if count == len(terms):
            return True
        j = next_term() if chosen else 0
        if j is None:
            raise PropagationError("cocycle is not connected through "
                                   "contraction classes; is it minimal?")
        cons = constraints_for(j)
        if cons:
            first_lab, eps_t, q_star = cons[0]
            candidates = _candidate_labelings(terms[j][0], first_lab, eps_t, q_star)
        else:
            ident = {lab: lab for lab in contract_labels(terms[j][0])}
            candidates = itertools_chain(
                [(terms[j][0], None, ident)], _seed_relabelings(terms[j][0]))
        for cand, _, lab_map in candidates:
            if not all(compatible(cand, lab_map[lab], e, q)
                       for lab, e, q in cons[1:]):
                continue
            if not self_consistent(j, cand, lab_map):
                continue
            chosen[j] = cand
            label_maps[j] = lab_map
            if assign(count + 1):
                return True
            del chosen[j]
            del label_maps[j]
        return False

    if not assign(0):
        raise PropagationError("no globally consistent labeling exists; "
                               "input may not be a minimal cocycle")

    out_terms = []
    for i, (canon, coeff) in enumerate(terms):
        labeled = chosen[i]
        _, sgn, _ = canonical_map(labeled)
        out_terms.append((labeled, int(coeff) * sgn))

    expr = OrientedExpression(element.ring, element.convention,
                              element.strand_count, element.order,
                              element.defect, tuple(out_terms))
    check_consistency(expr)
    return expr


def contraction_sign(diagram: Diagram, label) -> int:
    """Labeling-invariant sign of one coboundary summand against the canonical
    representative of its class: the summand equals this sign times the
    canonical quotient."""
    oc = contract(diagram, label, "Z")
    if oc.is_zero:
        raise GcxError("contraction_sign of a vanishing contraction")
    return epsilon(diagram, label) * oc.sign


def _orientability_precheck(terms, ordered_classes) -> None:
    """Necessary condition for a consistently oriented expression to exist.

    Within each class the invariant contraction signs must agree after an
    orientation flip per term; this reduces to a 2-coloring of the terms,
    which can be obstructed by an odd cycle even for a minimal cocycle.
    """
    lam = {}
    for q, members in ordered_classes:
        for i, lab in members:
            lam[(i, lab)] = contraction_sign(terms[i][0], lab)
        by_term: dict[int, set[int]] = {}
        for i, lab in members:
            by_term.setdefault(i, set()).add(lam[(i, lab)])
        for i, signs in by_term.items():
            if len(signs) > 1:
                raise PropagationError(
                    f"term {i} meets class {q.sort_key()} with both signs; "
                    "no consistently oriented expression exists")
    constraints = []  # color[i] * color[j] must equal rel
    for q, members in ordered_classes:
        i0, lab0 = members[0]
        for i, lab in members[1:]:
            if i != i0:
                constraints.append((i0, i, lam[(i0, lab0)] * lam[(i, lab)]))
    color: dict[int, int] = {}
    for seed in range(len(terms)):
        if seed in color:
            continue
        color[seed] = 1
        queue = [seed]
        while queue:
            u = queue.pop()
            for a, b, rel in constraints:
                if u in (a, b):
                    v = b if u == a else a
                    want = color[u] * rel
                    if v in color:
                        if color[v] != want:
                            raise PropagationError(
                                "parity obstruction: the contraction classes "
                                "force both orientations on one term, so no "
                                "consistently oriented expression exists for "
                                "this cocycle")
                    else:
                        color[v] = want
                        queue.append(v)


def _seed_relabelings(canon: Diagram):
    """Orientation-flip relabelings of a seed term, for diagrams whose
    canonical labeling violates its own internal contraction constraints."""
    import itertools as it

    ident = {lab: lab for lab in contract_labels(canon)}
    flippable = [i for i, (a, b, _) in enumerate(canon.edges) if a != b]
    for r in range(len(flippable) + 1):
        for flip_set in it.combinations(flippable, r):
            if not flip_set:
                continue  # the identity was already tried
            orient = {("flip", i): True for i in flip_set}
            yield _relabel_diagram(canon, {v: v for v in range(1, canon.n_vertices + 1)},
                                   orient), None, ident


def check_consistency(expr: OrientedExpression) -> None:
    """Definitional check on every pair of matching contractions."""
    recs: dict[Diagram, list[tuple[int, Diagram]]] = {}
    for d, _ in expr.terms:
        for label in contract_labels(d):
            oc = contract(d, label, expr.ring if expr.ring != "Q" else "Z")
            if oc.is_zero:
                continue
            recs.setdefault(oc.diagram, []).append(
                (epsilon(d, label), contract_raw(d, label)))
    for q_canon, items in recs.items():
        eps0, quot0 = items[0]
        for eps, quot in items[1:]:
            if eps != eps0:
                raise PropagationError(
                    f"contraction signs disagree on class {q_canon.sort_key()}")
            if _oriented_equal(quot0, quot) != 1:
                raise PropagationError(
                    f"quotients not orientation-equivalent on class "
                    f"{q_canon.sort_key()}")
