"""Face-accounting plans for glued configuration-space bundles.

A plan takes an integer (or mod-2) cocycle and ledgers every codimension-1
face of every copy of every configuration space in its support: principal
faces are glued in pairs or folded, hidden faces with a bivalent free vertex
are folded by the reflection involution, hidden faces with an edgeless
segment vertex or spanning several link-forgotten components are collapsed,
and the remainder (multiple-edge quotients, rigid hidden faces, faces at
infinity) is the degenerate locus the fundamental cycle is taken relative
to.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Optional

from .diagrams import (
    Diagram,
    GcxError,
    arcs,
    automorphism_maps_signed,
    canonical_map,
    canonicalize,
    contract_raw,
    from_json_dict,
    label_endpoints,
)
from .graph_complex import CochainElement, cochain_from_raw, coboundary, grading
from .homology import OrientedExpression, consistent_orientation, contraction_sign
from .strata import (
    FaceDescriptor,
    codim_certificate,
    enumerate_faces,
    principal_label_names,
    t_graph,
    u_graph,
    induced_biconnected,
    _adjacency,
    _connected,
)


class PlanningError(GcxError):
    """Raised when no valid plan exists (non-cocycle input, parity trouble)."""


# ---------------------------------------------------------------------------
# plan data model


@dataclass(frozen=True)
class Space:
    diagram: Diagram  # a labeled representative
    coefficient: int
    copies: int
    orientation: int
    absent_edges: int

    def to_json(self):
        return {
            "diagram": self.diagram.to_json_dict(),
            "coefficient": self.coefficient,
            "copies": self.copies,
            "orientation": self.orientation,
            "absent_edges": self.absent_edges,
        }


@dataclass(frozen=True)
class FaceRef:
    space: int
    copy: int
    face: FaceDescriptor
    label: Optional[str] = None

    def sort_key(self):
        return (self.space, self.copy, self.face.sort_key(), self.label or "")

    def to_json(self):
        out = {"space": self.space, "copy": self.copy,
               "face": {"kind": self.face.kind, "vertices": sorted(self.face.vertices),
                        "labels": list(self.face.labels)}}
        if self.label is not None:
            out["label"] = self.label
        return out


@dataclass(frozen=True)
class Identification:
    vertex_map: tuple[tuple[int, int], ...]  # every vertex of side a -> side b
    label_match: tuple[str, str]
    perm: tuple[int, ...]  # 1-based: side-a factor i -> side-b factor perm[i-1]
    flips: tuple[int, ...]  # side-a factor indices composed with the antipode

    def to_json(self):
        return {
            "vertex_map": [list(p) for p in self.vertex_map],
            "label_match": list(self.label_match),
            "perm": list(self.perm),
            "flips": list(self.flips),
        }


@dataclass(frozen=True)
class Pairing:
    side_a: FaceRef
    side_b: FaceRef
    identification: Identification

    def to_json(self):
        return {"side_a": self.side_a.to_json(), "side_b": self.side_b.to_json(),
                "identification": self.identification.to_json()}


@dataclass(frozen=True)
class PrincipalFold:
    ref: FaceRef
    vertex_map: tuple[tuple[int, int], ...]
    flips: tuple[int, ...]
    end_convention: str  # "identity" | "transpose"

    def to_json(self):
        return {"ref": self.ref.to_json(), "vertex_map": [list(p) for p in self.vertex_map],
                "flips": list(self.flips), "end_convention": self.end_convention}


@dataclass(frozen=True)
class HiddenFold:
    ref: FaceRef
    vertex: int
    neighbors: tuple[int, int]

    def to_json(self):
        return {"ref": self.ref.to_json(), "vertex": self.vertex,
                "neighbors": list(self.neighbors)}


@dataclass(frozen=True)
class Collapse:
    ref: FaceRef
    kind: str  # "c1" | "c2"
    forgotten: dict

    def to_json(self):
        return {"ref": self.ref.to_json(), "kind": self.kind,
                "forgotten": self.forgotten}


@dataclass(frozen=True)
class DegenerateFace:
    ref: FaceRef
    reason: str  # "multi-edge-quotient" | "rigid-hidden" | "infinity"
    certificate: dict

    def to_json(self):
        return {"ref": self.ref.to_json(), "reason": self.reason,
                "certificate": self.certificate}


@dataclass(frozen=True)
class VerificationReport:
    passed: bool
    failures: tuple[str, ...]
    unbalanced: tuple[str, ...]

    def to_json(self):
        return {"pass": self.passed, "failures": list(self.failures),
                "unbalanced": list(self.unbalanced)}


@dataclass(frozen=True)
class GluingPlan:
    d: int
    d_parity: str
    ring: str
    big_n: int
    mode: str  # "integer" | "mod2" | "chord-mod2"
    spaces: tuple[Space, ...]
    pairings: tuple[Pairing, ...]
    principal_folds: tuple[PrincipalFold, ...]
    hidden_folds: tuple[HiddenFold, ...]
    collapses: tuple[Collapse, ...]
    degenerate: tuple[DegenerateFace, ...]
    verification: Optional[VerificationReport] = None

    def to_json_dict(self) -> dict:
        return {
            "d": self.d,
            "d_parity": self.d_parity,
            "ring": self.ring,
            "N": self.big_n,
            "mode": self.mode,
            "spaces": [s.to_json() for s in self.spaces],
            "pairings": [p.to_json() for p in self.pairings],
            "principal_folds": [p.to_json() for p in self.principal_folds],
            "hidden_folds": [h.to_json() for h in self.hidden_folds],
            "collapses": [c.to_json() for c in self.collapses],
            "degenerate": [g.to_json() for g in self.degenerate],
            "verification": self.verification.to_json() if self.verification else None,
        }


def _face_from_json(data: dict) -> FaceDescriptor:
    return FaceDescriptor(data["kind"], frozenset(data["vertices"]),
                          tuple(data.get("labels", ())))


def _ref_from_json(data: dict) -> FaceRef:
    return FaceRef(data["space"], data["copy"], _face_from_json(data["face"]),
                   data.get("label"))


def plan_from_json(data: dict) -> GluingPlan:
    spaces = tuple(
        Space(from_json_dict(s["diagram"]), s["coefficient"], s["copies"],
              s["orientation"], s["absent_edges"])
        for s in data["spaces"]
    )
    pairings = tuple(
        Pairing(
            _ref_from_json(p["side_a"]), _ref_from_json(p["side_b"]),
            Identification(
                tuple(tuple(x) for x in p["identification"]["vertex_map"]),
                tuple(p["identification"]["label_match"]),
                tuple(p["identification"]["perm"]),
                tuple(p["identification"]["flips"]),
            ),
        )
        for p in data["pairings"]
    )
    folds = tuple(
        PrincipalFold(_ref_from_json(f["ref"]),
                      tuple(tuple(x) for x in f["vertex_map"]),
                      tuple(f["flips"]), f["end_convention"])
        for f in data["principal_folds"]
    )
    hfolds = tuple(
        HiddenFold(_ref_from_json(h["ref"]), h["vertex"], tuple(h["neighbors"]))
        for h in data["hidden_folds"]
    )
    collapses = tuple(
        Collapse(_ref_from_json(c["ref"]), c["kind"], c["forgotten"])
        for c in data["collapses"]
    )
    degenerate = tuple(
        DegenerateFace(_ref_from_json(g["ref"]), g["reason"], g["certificate"])
        for g in data["degenerate"]
    )
    verification = None
    if data.get("verification"):
        v = data["verification"]
        verification = VerificationReport(v["pass"], tuple(v["failures"]),
                                          tuple(v["unbalanced"]))
    return GluingPlan(data["d"], data["d_parity"], data["ring"], data["N"],
                      data.get("mode", "integer"), spaces, pairings, folds,
                      hfolds, collapses, degenerate, verification)


# ---------------------------------------------------------------------------
# label helpers


def _label_to_contraction(d: Diagram, name: str):
    if name.startswith("e"):
        return ("edge", int(name[1:]))
    # "arc": positional label of the arc joining the face's pair is resolved
    raise GcxError(f"arc labels need the face pair: {name}")


def _face_contraction_label(d: Diagram, face: FaceDescriptor, name: str):
    if name.startswith("e"):
        return ("edge", int(name[1:]))
    u, v = sorted(face.vertices)
    for (x, y), (si, pi) in arcs(d):
        if {x, y} == {u, v}:
            return ("arc", si, pi)
    raise GcxError(f"no arc joins {u},{v}")


def _merge_map(d: Diagram, label) -> dict[int, int]:
    u, v = label_endpoints(d, label)
    w, drop = min(u, v), max(u, v)
    out = {}
    for x in range(1, d.n_vertices + 1):
        if x in (u, v):
            out[x] = w
        else:
            out[x] = x - 1 if x > drop else x
    return out


def _pinched(d: Diagram, face: FaceDescriptor) -> bool:
    """Principal faces whose collision locus is empty or of higher
    codimension in the fiber: segment pairs not consecutive on a strand."""
    if face.kind != "principal":
        return False
    u, v = sorted(face.vertices)
    if d.is_free(u) or d.is_free(v):
        return False
    for s in d.strands:
        for i in range(len(s) - 1):
            if {s[i], s[i + 1]} == {u, v}:
                return False
    return True


def _quotient_diagram(d: Diagram, face: FaceDescriptor) -> Optional[Diagram]:
    """The labeled quotient at a principal face (any label gives the same
    underlying result)."""
    name = face.labels[0]
    return contract_raw(d, _face_contraction_label(d, face, name))


# ---------------------------------------------------------------------------
# identifications


def _factor_count(space: Space) -> int:
    return space.diagram.n_edges + space.absent_edges


def _perm_parity(pairs) -> int:
    """Sign of a bijection given as (source, target) pairs over equal label sets."""
    mapping = dict(pairs)
    seen, sign = set(), 1
    for v in mapping:
        if v in seen:
            continue
        length, w = 0, v
        while w not in seen:
            seen.add(w)
            w = mapping[w]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def _build_identification(space_a: Space, face_a: FaceDescriptor, name_a: str,
                          space_b: Space, face_b: FaceDescriptor, name_b: str,
                          big_n: int, want_or_parity: Optional[int],
                          enforce_even_flips: bool):
    """Identification data between two principal face instances.

    Matches vertices through the canonical forms of the labeled quotients,
    matches sphere factors edge-by-edge, and uses the two free levers (the
    endpoint transposition and the sign of factor matchings that carry no
    geometric direction) to reach the requested orientation parity with an
    even flip set.  Returns None if the targets cannot be met.
    """
    da, db = space_a.diagram, space_b.diagram
    lab_a = _face_contraction_label(da, face_a, name_a)
    lab_b = _face_contraction_label(db, face_b, name_b)
    qa = contract_raw(da, lab_a)
    qb = contract_raw(db, lab_b)
    ca, _, rho_a = canonical_map(qa)
    cb, _, rho_b = canonical_map(qb)
    if ca != cb:
        raise PlanningError("paired faces have non-isomorphic quotients")
    inv_b = {val: key for key, val in rho_b.items()}
    psi = {x: inv_b[rho_a[x]] for x in rho_a}

    ma = _merge_map(da, lab_a)
    mb = _merge_map(db, lab_b)
    inv_mb = {}
    for x, y in mb.items():
        inv_mb.setdefault(y, []).append(x)

    ua, va = label_endpoints(da, lab_a)
    ub, vb = label_endpoints(db, lab_b)

    # factor indices: edges of the diagram then the absent spheres
    ea_idx = lab_a[1] + 1 if lab_a[0] == "edge" else None
    eb_idx = lab_b[1] + 1 if lab_b[0] == "edge" else None

    def quotient_edge_record(d, m, i):
        a, b, lo = d.edges[i]
        if m[a] == m[b] and a != b:
            first = a if _earlier_vertex(d, a, b) else b
            return (m[a], m[a], "lr" if a == first else "rl")
        return (m[a], m[b], lo)

    # match non-contracted edge factors through the quotient
    target_pairs = {}
    for j, _ in enumerate(db.edges):
        if eb_idx is not None and j + 1 == eb_idx:
            continue
        rec = quotient_edge_record(db, mb, j)
        target_pairs[frozenset((rec[0], rec[1]))] = (j, rec)
    perm = [0] * big_n
    base_flips = set()
    for i, _ in enumerate(da.edges):
        if ea_idx is not None and i + 1 == ea_idx:
            continue
        rec = quotient_edge_record(da, ma, i)
        key = frozenset((psi[rec[0]], psi[rec[1]]))
        if key not in target_pairs:
            raise PlanningError("edge matching failed across the pairing")
        j, trec = target_pairs[key]
        perm[i] = j + 1
        if rec[0] == rec[1]:
            if rec[2] != trec[2]:
                base_flips.add(i + 1)
        else:
            if (psi[rec[0]], psi[rec[1]]) != (trec[0], trec[1]):
                base_flips.add(i + 1)

    # free-sign factor matchings: contracted-vs-absent and absent-vs-absent
    free_sign_factors = []
    avail_b = [j for j in range(1, big_n + 1)
               if j > db.n_edges or (eb_idx is not None and j == eb_idx)]
    avail_b = [j for j in avail_b if j not in perm]
    avail_a = [i for i in range(1, big_n + 1)
               if (i > da.n_edges or (ea_idx is not None and i == ea_idx))
               and perm[i - 1] == 0 if i <= big_n]
    avail_a = [i for i in range(1, big_n + 1) if (i - 1 < len(perm) and perm[i - 1] == 0)]

    coupled = None  # the factor toggled together with the endpoint transposition
    if ea_idx is not None and eb_idx is not None:
        perm[ea_idx - 1] = eb_idx
        coupled = ea_idx
        avail_a = [i for i in avail_a if i != ea_idx]
        avail_b = [j for j in avail_b if j != eb_idx]
    elif ea_idx is not None:
        # collision direction on side a matches an absent factor of side b
        perm[ea_idx - 1] = avail_b.pop(0)
        free_sign_factors.append(ea_idx)
        avail_a = [i for i in avail_a if i != ea_idx]
    elif eb_idx is not None:
        i = avail_a.pop(0)
        perm[i - 1] = eb_idx
        free_sign_factors.append(i)
        avail_b = [j for j in avail_b if j != eb_idx]
    for i, j in zip(avail_a, avail_b):
        perm[i - 1] = j
        free_sign_factors.append(i)

    if 0 in perm:
        raise PlanningError("factor matching left a hole")

    def vertex_map_for(assignment):
        vm = {}
        for x in range(1, da.n_vertices + 1):
            if x == ua:
                vm[x] = assignment[0]
            elif x == va:
                vm[x] = assignment[1]
            else:
                targets = inv_mb[psi[ma[x]]]
                vm[x] = next(t for t in targets if t not in (ub, vb))
        return vm

    candidates = []
    for assignment in ((ub, vb), (vb, ub)):
        vm = vertex_map_for(assignment)
        parity = _perm_parity([(x, vm[x]) for x in vm]) if len(vm) else 1
        flips = set(base_flips)
        if coupled is not None:
            # direction comparison of the contracted edges under vm
            head_a = da.edges[lab_a[1]][1]
            tail_a = da.edges[lab_a[1]][0]
            tail_b, head_b = db.edges[lab_b[1]][0], db.edges[lab_b[1]][1]
            if (vm[tail_a], vm[head_a]) != (tail_b, head_b):
                flips.add(coupled)
        candidates.append((assignment, vm, parity, flips))

    for assignment, vm, parity, flips in candidates:
        or_parity = 0 if parity == 1 else 1
        if want_or_parity is not None and or_parity != want_or_parity:
            continue
        flips = set(flips)
        if enforce_even_flips and len(flips) % 2 == 1:
            if free_sign_factors:
                toggle = free_sign_factors[0]
                flips.symmetric_difference_update({toggle})
            else:
                continue
        return Identification(
            tuple(sorted(vm.items())),
            (name_a, name_b),
            tuple(perm),
            tuple(sorted(flips)),
        )
    return None


def _earlier_vertex(d: Diagram, a: int, b: int) -> bool:
    if not d.is_free(a) and not d.is_free(b):
        return d.strand_position(a) < d.strand_position(b)
    return a < b


# ---------------------------------------------------------------------------
# face classification shared by all plan modes


def classify_faces(d: Diagram, ring: str = "Z"):
    """Split the codimension-1 faces of one diagram into plan buckets.

    Returns a dict with keys "pairing", "fold", "hidden_fold", "c1", "c2",
    "degenerate"; pinched principal faces are dropped (not faces of the
    fiber).  The fold bucket is empty over Z/2, where quotient orientation
    classes never vanish.
    """
    n, tedges = t_graph(d)
    _, uedges = u_graph(d)
    uadj = _adjacency(n, uedges)
    g = grading(d)
    u_components = []
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
        u_components.append(frozenset(comp))

    out = {"pairing": [], "fold": [], "hidden_fold": [], "c1": [], "c2": [],
           "degenerate": []}
    for face in enumerate_faces(d):
        if face.kind == "principal":
            if _pinched(d, face):
                continue
            quot = _quotient_diagram(d, face)
            res = canonicalize(quot, ring)
            if res.is_zero and res.zero_reason == "multi-edge":
                out["degenerate"].append((face, "multi-edge-quotient"))
            elif res.is_zero:  # orientation-reversing automorphism, Z only
                out["fold"].append(face)
            else:
                out["pairing"].append(face)
        elif face.kind == "hidden":
            s = face.vertices
            fold_v = sorted(
                v for v in s if d.is_free(v)
                and sum(1 for a, b, _ in d.edges
                        if (a == v and b in s and b != v)
                        or (b == v and a in s and a != v)) == 2
            )
            if fold_v:
                out["hidden_fold"].append((face, fold_v[0]))
                continue
            edgeless = sorted(
                v for v in s if not d.is_free(v)
                and not any((a == v and b in s) or (b == v and a in s)
                            for a, b, _ in d.edges if a != b)
                and not any(a == b == v for a, b, _ in d.edges)
            )
            if edgeless:
                out["c1"].append((face, edgeless[0]))
                continue
            crossed = [c for c in u_components if c & s]
            if g.defect == 0 and len(u_components) > 1 and len(crossed) > 1:
                out["c2"].append((face, crossed))
                continue
            out["degenerate"].append((face, "rigid-hidden"))
        else:
            out["degenerate"].append((face, "infinity"))
    return out


def _hidden_fold_record(d: Diagram, face: FaceDescriptor, v: int, ref: FaceRef
                        ) -> HiddenFold:
    s = face.vertices
    nbrs = sorted(
        (b if a == v else a)
        for a, b, _ in d.edges
        if a != b and v in (a, b) and (b if a == v else a) in s
    )
    return HiddenFold(ref, v, (nbrs[0], nbrs[1]))


def _c1_record(d: Diagram, face: FaceDescriptor, v: int, ref: FaceRef) -> Collapse:
    si, pi = d.strand_position(v)
    strand = d.strands[si]
    u = strand[pi - 1] if pi > 0 else None
    w = strand[pi + 1] if pi + 1 < len(strand) else None
    return Collapse(ref, "c1", {
        "vertex": v, "segment_neighbors": [x for x in (u, w) if x is not None],
        "forgets": "relative rate of approach of the edgeless segment vertex",
    })


def _c2_record(d: Diagram, face: FaceDescriptor, components, ref: FaceRef
               ) -> Collapse:
    s = face.vertices
    pair = None
    for (x, y), _ in arcs(d):
        if x in s and y in s:
            cx = next(c for c in components if x in c)
            if y not in cx:
                pair = (x, y)
                break
    data = {"forgets": "two relative rates of approach across components"}
    if pair:
        x, y = pair
        data["arc_pair"] = [x, y]
        outer = []
        for v in (x, y):
            si, pi = d.strand_position(v)
            strand = d.strands[si]
            for cand in (strand[pi - 1] if pi > 0 else None,
                         strand[pi + 1] if pi + 1 < len(strand) else None):
                if cand is not None and cand not in (x, y) and cand in s:
                    outer.append(cand)
                    break
        data["outer_neighbors"] = outer
    return Collapse(ref, "c2", data)


def _degenerate_record(d: Diagram, face: FaceDescriptor, reason: str, dim: int,
                       ref: FaceRef) -> DegenerateFace:
    cert = codim_certificate(face, dim, d).to_json()
    return DegenerateFace(ref, reason, cert)


# ---------------------------------------------------------------------------
# integer plans


def plan_gluing(gamma, d: int) -> GluingPlan:
    """Full gluing plan for an integer cocycle in odd ambient dimension.

    Accepts a consistently oriented expression or any integer cocycle (which
    is then paired through the labeling-invariant contraction signs; for a
    consistently oriented input this reduces to matching positive against
    negative copies).
    """
    if d % 2 == 0:
        raise PlanningError("parity violation: integer plans need odd d; "
                            "use plan_mod2 over Z/2 for even dimensions")
    if isinstance(gamma, OrientedExpression):
        expr = gamma
    elif isinstance(gamma, CochainElement):
        if gamma.ring != "Z":
            raise PlanningError("plan_gluing needs an integer cocycle")
        if not coboundary(gamma).is_zero:
            raise PlanningError("unpairable class: input is not a cocycle")
        try:
            expr = consistent_orientation(gamma)
        except GcxError:
            expr = OrientedExpression(gamma.ring, gamma.convention,
                                      gamma.strand_count, gamma.order,
                                      gamma.defect, tuple(gamma.terms))
    else:
        raise PlanningError(f"cannot plan from {type(gamma).__name__}")
    if expr.convention != "odd":
        raise PlanningError("parity violation: integer plans use the odd "
                            "labeling convention")
    return _plan(expr.terms, d, ring="Z", mode="integer",
                 convention=expr.convention)


def plan_mod2(gamma: CochainElement, d: int) -> GluingPlan:
    """Mod-2 plan: pair principal faces without orientation bookkeeping."""
    if gamma.ring != "Z2":
        raise PlanningError("plan_mod2 needs a Z/2 cocycle")
    if not coboundary(gamma).is_zero:
        raise PlanningError("odd class multiplicity: input is not a mod-2 cocycle")
    return _plan(gamma.terms, d, ring="Z2", mode="mod2",
                 convention=gamma.convention)


def _plan(terms, d: int, ring: str, mode: str, convention: str) -> GluingPlan:
    terms = [(dd, int(c)) for dd, c in terms]
    if not terms:
        plan = GluingPlan(d, "odd" if d % 2 else "even", ring, 0, mode,
                          (), (), (), (), (), ())
        return replace(plan, verification=verify_fundamental_cycle(plan))
    big_n = max(dd.n_edges for dd, _ in terms)
    spaces = tuple(
        Space(dd, c, abs(c) if ring == "Z" else 1,
              1 if c > 0 else -1, big_n - dd.n_edges)
        for dd, c in terms
    )

    pairings: list[Pairing] = []
    folds: list[PrincipalFold] = []
    hidden_folds: list[HiddenFold] = []
    collapses: list[Collapse] = []
    degenerate: list[DegenerateFace] = []

    classes: dict[Diagram, list[tuple[FaceRef, int]]] = {}
    for si, sp in enumerate(spaces):
        buckets = classify_faces(sp.diagram, ring)
        for copy in range(sp.copies):
            for face in buckets["pairing"]:
                for name in face.labels:
                    lab = _face_contraction_label(sp.diagram, face, name)
                    if ring == "Z":
                        lam = contraction_sign(sp.diagram, lab)
                        sigma = sp.orientation * lam
                    else:
                        sigma = 1
                    quot = contract_raw(sp.diagram, lab)
                    key = canonicalize(quot, ring).canonical
                    classes.setdefault(key, []).append(
                        (FaceRef(si, copy, face, name), sigma))
            for face in buckets["fold"]:
                folds.append(_principal_fold(sp, FaceRef(si, copy, face)))
            for face, v in buckets["hidden_fold"]:
                hidden_folds.append(
                    _hidden_fold_record(sp.diagram, face, v, FaceRef(si, copy, face)))
            for face, v in buckets["c1"]:
                collapses.append(_c1_record(sp.diagram, face, v, FaceRef(si, copy, face)))
            for face, comps in buckets["c2"]:
                collapses.append(_c2_record(sp.diagram, face, comps,
                                            FaceRef(si, copy, face)))
            for face, reason in buckets["degenerate"]:
                degenerate.append(_degenerate_record(sp.diagram, face, reason, d,
                                                     FaceRef(si, copy, face)))

    for key in sorted(classes, key=lambda q: q.sort_key()):
        members = classes[key]
        if ring == "Z2":
            members.sort(key=lambda t: t[0].sort_key())
            if len(members) % 2:
                raise PlanningError(
                    f"odd class multiplicity on quotient {key.sort_key()}")
            halves = [(members[i][0], members[i + 1][0])
                      for i in range(0, len(members), 2)]
        else:
            plus = sorted((r for r, s in members if s > 0), key=FaceRef.sort_key)
            minus = sorted((r for r, s in members if s < 0), key=FaceRef.sort_key)
            if len(plus) != len(minus):
                raise PlanningError(
                    "unpairable class: quotient %s has %d positive and %d "
                    "negative face instances" % (key.sort_key(), len(plus),
                                                 len(minus)))
            halves = list(zip(plus, minus))
        for ref_a, ref_b in halves:
            sp_a, sp_b = spaces[ref_a.space], spaces[ref_b.space]
            if ring == "Z":
                # opposite copy signs glue by an orientation-preserving map,
                # equal signs by a reversing one; flips stay even
                same = sp_a.orientation == sp_b.orientation
                ident = _build_identification(
                    sp_a, ref_a.face, ref_a.label, sp_b, ref_b.face, ref_b.label,
                    big_n, want_or_parity=1 if same else 0,
                    enforce_even_flips=True)
                if ident is None:
                    raise PlanningError(
                        "parity violation: no orientation-compatible "
                        f"identification for class {key.sort_key()}")
            else:
                ident = _build_identification(
                    sp_a, ref_a.face, ref_a.label, sp_b, ref_b.face, ref_b.label,
                    big_n, want_or_parity=None, enforce_even_flips=False)
            pairings.append(Pairing(ref_a, ref_b, ident))

    plan = GluingPlan(d, "odd" if d % 2 else "even", ring, big_n, mode,
                      spaces, tuple(pairings), tuple(folds),
                      tuple(hidden_folds), tuple(collapses), tuple(degenerate))
    return replace(plan, verification=verify_fundamental_cycle(plan))


def _principal_fold(space: Space, ref: FaceRef) -> PrincipalFold:
    """Fold data for a principal face whose quotient has an
    orientation-reversing automorphism."""
    d = space.diagram
    name = ref.face.labels[0]
    lab = _face_contraction_label(d, ref.face, name)
    quot = contract_raw(d, lab)
    c, _, rho = canonical_map(quot)
    rev = [(m, s) for m, s in automorphism_maps_signed(c) if s == -1]
    if not rev:
        raise PlanningError("fold requested without a reversing automorphism")
    alpha = min(rev, key=lambda t: sorted(t[0].items()))[0]
    inv_rho = {v: k for k, v in rho.items()}
    m = _merge_map(d, lab)
    u, v = label_endpoints(d, lab)
    vm = {}
    for x in range(1, d.n_vertices + 1):
        if x in (u, v):
            continue
        target_q = inv_rho[alpha[rho[m[x]]]]
        cands = [y for y in range(1, d.n_vertices + 1)
                 if y not in (u, v) and m[y] == target_q]
        vm[x] = cands[0]
    parity_base = _perm_parity([(x, y) for x, y in vm.items()]
                               + [(u, u), (v, v)]) if vm else 1
    # pick the endpoint convention that makes the fold orientation-reversing
    if parity_base == 1:
        vm[u], vm[v] = v, u
        convention = "transpose"
    else:
        vm[u], vm[v] = u, v
        convention = "identity"
    flips: set[int] = set()
    for i, (a, b, lo) in enumerate(d.edges):
        if lab[0] == "edge" and i == lab[1]:
            continue
        ia, ib = vm[a], vm[b]
        for jj, (x, y, _) in enumerate(d.edges):
            if {x, y} == {ia, ib} and (x, y) != (ia, ib) and a != b:
                flips.add(i + 1)
    if len(flips) % 2 == 1 and lab[0] == "edge":
        flips.symmetric_difference_update({lab[1] + 1})
    return PrincipalFold(ref, tuple(sorted(vm.items())), tuple(sorted(flips)),
                         convention)


# ---------------------------------------------------------------------------
# chord-diagram mod-2 plans (d = 3)


def plan_chord_mod2(diagram: Diagram, d: int = 3) -> GluingPlan:
    """Fold-everything plan for a chord diagram over Z/2 in dimension 3.

    Points move freely on the link here, so every pair joined by a chord or
    arc indexes a genuine codimension-1 face; each is folded onto itself by
    the transposition of the colliding pair, every hidden face is collapsed,
    and only the faces at infinity remain degenerate.
    """
    if not diagram.is_chord_diagram():
        raise PlanningError("not a chord diagram: free vertices present")
    big_n = diagram.n_edges
    space = Space(diagram, 1, 1, 1, 0)
    folds: list[PrincipalFold] = []
    collapses: list[Collapse] = []
    degenerate: list[DegenerateFace] = []
    for face in enumerate_faces(diagram):
        ref = FaceRef(0, 0, face)
        if face.kind == "principal":
            u, v = sorted(face.vertices)
            vm = {x: x for x in range(1, diagram.n_vertices + 1)}
            vm[u], vm[v] = v, u
            flips = tuple(
                i + 1 for i, (a, b, _) in enumerate(diagram.edges)
                if {a, b} == {u, v}
            )
            folds.append(PrincipalFold(ref, tuple(sorted(vm.items())), flips,
                                       "transpose"))
        elif face.kind == "hidden":
            s = face.vertices
            edgeless = sorted(
                w for w in s
                if not any((a == w and b in s) or (b == w and a in s)
                           for a, b, _ in diagram.edges if a != b)
            )
            if edgeless:
                collapses.append(_c1_record(diagram, face, edgeless[0], ref))
            else:
                n, uedges = u_graph(diagram)
                uadj = _adjacency(n, uedges)
                comps = []
                left = set(range(1, n + 1))
                while left:
                    start = left.pop()
                    comp = {start}
                    stack = [start]
                    while stack:
                        for wv in uadj[stack.pop()]:
                            if wv not in comp:
                                comp.add(wv)
                                stack.append(wv)
                    left -= comp
                    comps.append(frozenset(comp))
                collapses.append(_c2_record(diagram, face, comps, ref))
        else:
            degenerate.append(_degenerate_record(diagram, face, "infinity", d, ref))
    plan = GluingPlan(d, "odd" if d % 2 else "even", "Z2", big_n, "chord-mod2",
                      (space,), (), tuple(folds), (), tuple(collapses),
                      tuple(degenerate))
    return replace(plan, verification=verify_fundamental_cycle(plan))


# ---------------------------------------------------------------------------
# verification


def verify_fundamental_cycle(plan: GluingPlan) -> VerificationReport:
    """Check the exactly-once face accounting and, over Z, the orientation
    conditions that make the signed boundary sum vanish."""
    failures: list[str] = []
    unbalanced: list[str] = []

    expected: dict[tuple, int] = {}
    for si, sp in enumerate(plan.spaces):
        chord_mode = plan.mode == "chord-mod2"
        faces = enumerate_faces(sp.diagram)
        buckets = None
        if not chord_mode:
            buckets = classify_faces(sp.diagram, plan.ring)
            pairing_faces = {f.sort_key() for f in buckets["pairing"]}
        for copy in range(sp.copies):
            for face in faces:
                if not chord_mode and _pinched(sp.diagram, face):
                    continue
                if (not chord_mode and face.kind == "principal"
                        and face.sort_key() in pairing_faces):
                    for name in face.labels:
                        expected[(si, copy, face.sort_key(), name)] = 1
                else:
                    expected[(si, copy, face.sort_key(), None)] = 1

    seen: dict[tuple, int] = {}

    def see(ref: FaceRef, with_label: bool):
        key = (ref.space, ref.copy, ref.face.sort_key(),
               ref.label if with_label else None)
        seen[key] = seen.get(key, 0) + 1

    for p in plan.pairings:
        see(p.side_a, True)
        see(p.side_b, True)
    for f in plan.principal_folds:
        if plan.mode == "chord-mod2":
            see(f.ref, False)
        else:
            see(f.ref, False)
    for h in plan.hidden_folds:
        see(h.ref, False)
    for c in plan.collapses:
        see(c.ref, False)
    for g in plan.degenerate:
        see(g.ref, False)

    for key, count in expected.items():
        got = seen.get(key, 0)
        if got != count:
            unbalanced.append(f"face {key} covered {got} times")
    for key in seen:
        if key not in expected:
            unbalanced.append(f"unexpected face entry {key}")

    # structural checks per bucket
    for h in plan.hidden_folds:
        sp = plan.spaces[h.ref.space]
        s = h.ref.face.vertices
        d = sp.diagram
        deg = sum(1 for a, b, _ in d.edges
                  if a != b and h.vertex in (a, b)
                  and (b if a == h.vertex else a) in s)
        if not d.is_free(h.vertex) or deg != 2:
            failures.append(f"hidden fold at {h.ref.to_json()} has no bivalent "
                            "free vertex")
        got = sorted(
            (b if a == h.vertex else a)
            for a, b, _ in d.edges
            if a != b and h.vertex in (a, b) and (b if a == h.vertex else a) in s)
        if tuple(got) != tuple(sorted(h.neighbors)):
            failures.append(f"hidden fold neighbors mismatch at {h.ref.to_json()}")

    if plan.ring == "Z":
        for idx, p in enumerate(plan.pairings):
            msgs = _check_pairing(plan, p)
            failures.extend(f"pairing {idx}: {m}" for m in msgs)
        for idx, f in enumerate(plan.principal_folds):
            msgs = _check_fold(plan, f)
            failures.extend(f"fold {idx}: {m}" for m in msgs)

    passed = not failures and not unbalanced
    return VerificationReport(passed, tuple(failures), tuple(unbalanced))


def _check_pairing(plan: GluingPlan, p: Pairing) -> list[str]:
    msgs = []
    sp_a = plan.spaces[p.side_a.space]
    sp_b = plan.spaces[p.side_b.space]
    da, db = sp_a.diagram, sp_b.diagram
    vm = dict(p.identification.vertex_map)
    if sorted(vm) != list(range(1, da.n_vertices + 1)):
        return ["vertex map does not cover side a"]
    parity = _perm_parity(list(vm.items()))
    same_sign = sp_a.orientation == sp_b.orientation
    want = -1 if same_sign else 1
    if parity != want:
        msgs.append("identification orientation does not cancel the boundary "
                    f"(copies {'same' if same_sign else 'opposite'} sign, "
                    f"vertex parity {parity:+d})")
    if len(p.identification.flips) % 2 == 1:
        msgs.append(f"odd flip set {list(p.identification.flips)}")
    lab_a = _face_contraction_label(da, p.side_a.face, p.side_a.label)
    lab_b = _face_contraction_label(db, p.side_b.face, p.side_b.label)
    ma = _merge_map(da, lab_a)
    mb = _merge_map(db, lab_b)

    # the vertex map must descend to an isomorphism of the quotients
    psi = {}
    for x, y in vm.items():
        q_from, q_to = ma[x], mb[y]
        if psi.setdefault(q_from, q_to) != q_to:
            return ["vertex map does not descend to the quotients"]

    def qrecord(d, m, idx):
        a, b, lo = d.edges[idx]
        if m[a] == m[b] and a != b:
            first = a if _earlier_vertex(d, a, b) else b
            return (m[a], m[a], "lr" if a == first else "rl")
        return (m[a], m[b], lo)

    for i, (a, b, lo) in enumerate(da.edges):
        if lab_a[0] == "edge" and i == lab_a[1]:
            # the contracted factor: if matched to side b's contracted edge,
            # the flip record reflects the collision-direction comparison
            j = p.identification.perm[i] - 1
            if lab_b[0] == "edge" and j == lab_b[1]:
                tail_b, head_b = db.edges[lab_b[1]][0], db.edges[lab_b[1]][1]
                flipped = (vm[a], vm[b]) != (tail_b, head_b)
                if flipped != ((i + 1) in p.identification.flips):
                    msgs.append(f"flip record wrong on the contracted factor {i + 1}")
            continue
        j = p.identification.perm[i] - 1
        if j >= db.n_edges:
            msgs.append(f"edge factor {i + 1} matched to an absent factor")
            continue
        rec_a = qrecord(da, ma, i)
        rec_b = qrecord(db, mb, j)
        img = (psi[rec_a[0]], psi[rec_a[1]], rec_a[2])
        if {img[0], img[1]} != {rec_b[0], rec_b[1]}:
            msgs.append(f"factor {i + 1} does not map to its edge image")
            continue
        if img[0] == img[1]:
            flipped = img[2] != rec_b[2]
        else:
            flipped = (img[0], img[1]) != (rec_b[0], rec_b[1])
        if flipped != ((i + 1) in p.identification.flips):
            msgs.append(f"flip record wrong on factor {i + 1}")
    return msgs


def _check_fold(plan: GluingPlan, f: PrincipalFold) -> list[str]:
    msgs = []
    sp = plan.spaces[f.ref.space]
    vm = dict(f.vertex_map)
    if sorted(vm) != list(range(1, sp.diagram.n_vertices + 1)):
        return ["fold vertex map does not cover the diagram"]
    if _perm_parity(list(vm.items())) != -1:
        msgs.append("fold is not orientation-reversing")
    if len(f.flips) % 2 == 1:
        msgs.append("odd flip set on a fold")
    return msgs


# ---------------------------------------------------------------------------
# corner collapse analysis


def corner_collapse_analysis(plan: GluingPlan, pairing_index: int,
                             max_size: int = 4) -> list[dict]:
    """Transport the corners of both sides of a pairing and count collapses.

    For every corner family containing the contracted pair, each member set
    is pushed through the identification; a transported set that is no
    longer biconnected splits, on removal of the contracted label, into two
    components, and each split with both parts of size >= 2 forgets one
    relative rate of approach (codimension +1).
    """
    p = plan.pairings[pairing_index]
    out = []
    for side, ref, other_ref, forward in (
            ("a", p.side_a, p.side_b, True), ("b", p.side_b, p.side_a, False)):
        d = plan.spaces[ref.space].diagram
        d_other = plan.spaces[other_ref.space].diagram
        vm = dict(p.identification.vertex_map)
        if not forward:
            vm = {v: k for k, v in vm.items()}
        pair = ref.face.vertices
        target_pair = other_ref.face.vertices
        n_o, tedges_o = t_graph(d_other)
        lab_other = _face_contraction_label(d_other, other_ref.face,
                                            other_ref.label)
        from .strata import corner_poset

        for family in corner_poset(d, max_size):
            sets = [s for s, _ in family]
            if pair not in sets:
                continue
            transported = [frozenset(vm[x] for x in s) for s in sets]
            splits = 0
            details = []
            for s, ts in zip(sets, transported):
                if ts == target_pair or not (target_pair <= ts):
                    continue
                if induced_biconnected(ts, n_o, tedges_o):
                    continue
                parts = _split_components(d_other, ts, lab_other)
                if len(parts) == 2 and all(len(pp) >= 2 for pp in parts):
                    splits += 1
                    details.append({"set": sorted(s), "image": sorted(ts),
                                    "parts": [sorted(pp) for pp in parts]})
            out.append({
                "side": side,
                "family": [sorted(s) for s in sets],
                "transported": [sorted(t) for t in transported],
                "codim_before": len(sets),
                "codim_after": len(sets) + splits,
                "collapses": splits,
                "splits": details,
            })
    return out


def _split_components(d: Diagram, vertices: frozenset[int], lab) -> list[set[int]]:
    """Components of the induced subgraph after removing the contracted label."""
    u, v = label_endpoints(d, lab)
    n, tedges = t_graph(d)
    edges = []
    removed = False
    for a, b in tedges:
        if not removed and {a, b} == {u, v}:
            removed = True  # drop one copy of the contracted label
            continue
        if a in vertices and b in vertices:
            edges.append((a, b))
    adj = _adjacency(n, edges)
    comps = []
    left = set(vertices)
    while left:
        start = left.pop()
        comp = {start}
        stack = [start]
        while stack:
            for w in adj[stack.pop()]:
                if w in vertices and w not in comp:
                    comp.add(w)
                    stack.append(w)
        left -= comp
        comps.append(comp)
    return comps


# ---------------------------------------------------------------------------
# spherical signatures


def spherical_signatures(plan: GluingPlan) -> list[dict]:
    """Permutation-and-flip data of every identification in the plan.

    Pairings carry their stored matching; hidden folds swap the two sphere
    factors at the folded vertex; collapses leave the spherical map alone.
    """
    out = []
    for idx, p in enumerate(plan.pairings):
        out.append({"source": {"kind": "pairing", "index": idx},
                    "perm": list(p.identification.perm),
                    "flips": list(p.identification.flips)})
    for idx, f in enumerate(plan.principal_folds):
        sp = plan.spaces[f.ref.space]
        vm = dict(f.vertex_map)
        perm = list(range(1, plan.big_n + 1))
        for i, (a, b, _) in enumerate(sp.diagram.edges):
            ia, ib = vm.get(a, a), vm.get(b, b)
            for j, (x, y, _) in enumerate(sp.diagram.edges):
                if {x, y} == {ia, ib}:
                    perm[i] = j + 1
                    break
        out.append({"source": {"kind": "principal_fold", "index": idx},
                    "perm": perm, "flips": list(f.flips)})
    for idx, h in enumerate(plan.hidden_folds):
        sp = plan.spaces[h.ref.space]
        u, w = h.neighbors
        factors = []
        for i, (a, b, _) in enumerate(sp.diagram.edges):
            if {a, b} == {u, h.vertex} or {a, b} == {h.vertex, w}:
                factors.append(i + 1)
        perm = list(range(1, plan.big_n + 1))
        if len(factors) == 2:
            perm[factors[0] - 1], perm[factors[1] - 1] = factors[1], factors[0]
        out.append({"source": {"kind": "hidden_fold", "index": idx},
                    "perm": perm, "flips": []})
    for idx, c in enumerate(plan.collapses):
        out.append({"source": {"kind": "collapse", "index": idx, "collapse": c.kind},
                    "perm": list(range(1, plan.big_n + 1)), "flips": []})
    return out
