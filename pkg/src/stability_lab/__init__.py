"""Quantitative stability witnesses and certificates for the Hilbert-space
inner product and its nonlinear connectives.

The library constructs explicit ordered witness families (binary-tree,
shifted, and margin-shattering configurations), verifies their margins in
exact rational arithmetic, evaluates the discrete-Hilbert-transform
certificate that caps witness sizes, computes polynomial-approximation
functionals for continuous connectives, and measures margin-based
VC-dimension, all at desk scale.
"""

__version__ = "0.1.0"

from .constructions import (
    TreeEdge,
    VCWitness,
    WitnessFamily,
    build_shifted_witness,
    build_tree_witness,
    build_vc_witness,
    edge_count,
    lex_order,
)
from .linalg import (
    DenseMatrix,
    ExactScalar,
    OperatorNormEstimate,
    ScaleTag,
    SparseVector,
    inner_product,
    materialize_tensor_power,
    norm_squared,
    operator_norm,
    tensor_power_inner,
)
from .predicates import (
    Inner,
    IntPower,
    PolyOfInner,
    PowerPlus,
    Predicate,
    evaluate,
    holder_gap_transfer,
    lipschitz_gap_transfer,
    parse_predicate_spec,
    stability_bounds,
    stability_exponents,
)
from .certify import (
    HalfGraphReport,
    SFunctionalReport,
    check_half_graph,
    harmonic_pair_sum,
    harmonic_pair_sum_exact,
    hilbert_matrix,
    max_half_graph,
    pairwise_inner_products,
    pairwise_predicate_values,
    ordered_value_ranges,
    s_functional,
    vector_valued_bound_check,
)
from .approx import (
    PolyApproxResult,
    block_embedding_check,
    compute_Ag,
    connective_upper_bound,
    parse_connective,
)
from .vc import (
    VCReport,
    averaging_upper_check,
    check_vc_graph,
    min_norm_realizer,
    shattering_impossible,
    vc_dimension_formula,
    zaslavsky_cells,
)
