#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! γ-radonifying norms, uniform γ-radonification bounds, Hilbert sequences,
//! Laplace-transform families and the stochastic Weiss quantities on
//! truncated sequence spaces.
//!
//! Every routine is generic over the real scalar (`f32` or `f64`); the
//! `…F64` aliases below fix the common case.

pub mod error;
pub mod families;
pub mod gallery;
pub mod gamma_norm;
pub mod hilbert_sequences;
pub mod laplace;
pub mod quadrature;
pub mod sampling;
pub mod scalar;
pub mod spaces;
pub mod weiss;

pub use error::{Error, Result};
pub use families::{OperatorFamily, SearchOptions, UnifGammaBoundReport};
pub use gamma_norm::{ColumnOperator, OrthonormalBasis};
pub use hilbert_sequences::{GramSummary, HilbertSequenceSpec};
pub use laplace::{RepresentableOperator, SectorGrid};
pub use sampling::{GaussianDrawConfig, GaussianSumEstimate};
pub use scalar::Real;
pub use spaces::{FiniteVector, SpaceSpec};
pub use weiss::{DiagonalSystem, OffDiagonalSystem};

pub type SpaceSpecF64 = SpaceSpec<f64>;
pub type FiniteVectorF64 = FiniteVector<f64>;
pub type ColumnOperatorF64 = ColumnOperator<f64>;
pub type OperatorFamilyF64 = OperatorFamily<f64>;
pub type UnifGammaBoundReportF64 = UnifGammaBoundReport<f64>;
pub type GaussianSumEstimateF64 = GaussianSumEstimate<f64>;
pub type HilbertSequenceSpecF64 = HilbertSequenceSpec<f64>;
pub type RepresentableOperatorF64 = RepresentableOperator<f64>;
pub type DiagonalSystemF64 = DiagonalSystem<f64>;
pub type OffDiagonalSystemF64 = OffDiagonalSystem<f64>;
pub type Complex64 = num_complex::Complex<f64>;
