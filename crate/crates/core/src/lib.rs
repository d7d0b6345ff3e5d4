//! Exact-arithmetic laboratory for order-3 tensor rank.
//!
//! The crate provides, from the bottom up:
//!
//! * exact scalars over F_p and Q, and sparse multivariate polynomials
//!   with formal derivatives ([`field`], [`poly`], [`jacobian`]);
//! * labeled order-3 tensors with slicing, tagged direct sums, cloning
//!   along a finite copy set, slice adjunction and slice-space quotients
//!   ([`label`], [`tensor`], [`linalg`]);
//! * an exact rank engine over prime fields with certificates, plus
//!   substitution-style lower bounds ([`rank`]);
//! * the clone-and-adjoin matrix family machinery used to transport
//!   slice spaces through constructions ([`construction`]);
//! * degrees-of-freedom and fill checks for generic tensor families
//!   ([`genericity`]).

#![allow(clippy::needless_range_loop)]

pub mod construction;
pub mod error;
pub mod field;
pub mod genericity;
pub mod io;
pub mod jacobian;
pub mod label;
pub mod linalg;
pub mod poly;
pub mod rank;
pub mod tensor;

pub use construction::{
    adjoin_construction, build_m_family, build_m_phi, clone_matrix, counterexample_assembly,
    dichotomy_witness, find_unremoved_diagonal, recursive_construction, sigma_names, u_parts,
    verify_clone_in_span, verify_offdiag_structure, verify_partition, verify_rank_one,
    AdjoinOutcome, AssemblyReport, ConstructionParams, DiagonalTemplate, DichotomyWitness,
    FamilyMember, MFamily, MemberKind, PhiFunction, PiFamily, RecursiveBuild, StepRecord,
    DEFAULT_MATERIALIZE_BUDGET,
};
pub use error::{Error, Result};
pub use field::{FieldSpec, Scalar};
pub use genericity::{
    assign_random, build_generic_t, build_phi, degrees_of_freedom, degrees_of_freedom_report,
    dimension_threshold, dof_threshold_check, evaluate_tensor, first_positive_threshold,
    lickteig_pipeline, project_tensor, r_of_n, random_assignment, weak_column_scan,
    CoeffAssignment, ColumnScanReport, ColumnStatus, FillReport, GenericityParams, InstanceCatalog,
    ThresholdReport, VarFamily,
};
pub use jacobian::{algebraically_independent, jacobian_rank, Independence, JacobianReport};
pub use label::{IndexSet, Label};
pub use linalg::{kron_with_identity, Matrix, MatrixSpan};
pub use poly::{Monomial, MultiPoly, VarCatalog};
pub use rank::{
    exact_rank, flattening_lower_bound, lickteig_fill_check, min_rank_mod, rank_bounds,
    rank_extension_scan, slice_elimination_check, verify_decomposition, Decomposition,
    EliminationReport, ExtensionRank, LickteigReport, ModRankReport, RankCertificate, SearchBudget,
};
pub use tensor::Tensor3;
