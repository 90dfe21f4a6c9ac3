"""Graph cochain complexes on long links, exact cohomology, and face-gluing
plans for the associated configuration-space bundles."""

__version__ = "0.1.0"

from .diagrams import (  # noqa: F401
    BudgetError,
    CanonicalResult,
    ContractionOutcome,
    Diagram,
    DiagramError,
    GcxError,
    SignAmbiguityError,
    arcs,
    automorphism_signs,
    canonicalize,
    contract,
    epsilon,
    from_json_dict,
    iso_sign,
    validate,
)
from .graph_complex import (  # noqa: F401
    CochainElement,
    Grading,
    SparseMatrix,
    coboundary,
    coboundary_matrix,
    cochain,
    cochain_from_raw,
    element_from_json,
    generate_basis,
    grading,
)
from .homology import (  # noqa: F401
    CohomologyGroup,
    MinimalCocycle,
    OrientedExpression,
    PropagationError,
    SmithDecomposition,
    cocycle_space,
    cohomology_group,
    consistent_orientation,
    extend_to_cocycle,
    kernel_lattice,
    minimal_decomposition,
    smith_normal_form,
)
from .strata import (  # noqa: F401
    BlockDecomposition,
    CodimCertificate,
    FaceDescriptor,
    OrderingError,
    anomalous_faces,
    blocks_and_tree,
    codim_certificate,
    corner_poset,
    dimensions,
    enumerate_faces,
    poincare_polynomial,
    poincare_polynomial_graph,
)
from .gluing import (  # noqa: F401
    GluingPlan,
    PlanningError,
    corner_collapse_analysis,
    plan_chord_mod2,
    plan_from_json,
    plan_gluing,
    plan_mod2,
    spherical_signatures,
    verify_fundamental_cycle,
)
