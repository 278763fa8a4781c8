"""Orthonormal bases of group-invariant tensor subspaces, reference solvers
for cross-validation, and group-invariant tensor-train classifiers."""

from .basis import (
    FactoredBasis,
    ModeEigen,
    UnitProductSelection,
    choose_first_generator,
    count_unit_products,
    eig_normal,
    expand_basis,
    invariant_basis,
    khatri_rao,
    realify_basis,
    select_unit_products,
    solve_eigenspace_one,
)
from .groups import (
    GeneratorRep,
    GroupEnumeration,
    InvariantProblem,
    RepMatrix,
    combine,
    dualize,
    enumerate_group,
    load_group_spec,
    octahedral_generators,
    parse_group_spec,
    standard_representation,
)
from .learning import (
    BIT_FEATURES,
    DNA_FEATURES,
    Dataset,
    FeatureMap,
    TrainConfig,
    TrainRun,
    auroc,
    count_params,
    forward_loss,
    gradient,
    parity_dataset,
    train,
)
from .solvers import (
    ConstraintOperator,
    averaging_basis,
    averaging_projector,
    constraint_matrix_dense,
    invariance_residual,
    iterative_nullspace,
    multilinear_apply,
    naive_nullspace,
    subspace_distance,
)
from .tensortrain import (
    InvariantTTN,
    PlainTTN,
    RCTensorTrain,
    TensorTrain,
    assemble_core,
    build_invariant_ttn,
    build_parity_invariant_ttn,
    build_plain_ttn,
    build_rc_ttn,
    evaluate,
    load_checkpoint,
    rc_invariance_deviation,
    reverse_complement,
    save_checkpoint,
    verify_model_invariance,
)

__version__ = "0.1.0"
