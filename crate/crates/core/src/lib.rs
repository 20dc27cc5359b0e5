//! Two-sided bounds on the sample-boundedness constant of processes on a ball in a
//! finite-dimensional normed space, under a φ-Lipschitz increment condition with respect
//! to a distorted metric `η(‖s − t‖)`, plus numerical checks of the companion
//! Sobolev-type inequality.
//!
//! Every routine is generic over [`Scalar`] (`f32` or `f64`); the `*64` aliases fix `f64`.

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod extremal;
pub mod geometry;
pub mod orlicz;
pub mod partition;
pub mod quadrature;
pub mod roots;
pub mod scalar;
pub mod sobolev;

pub use bounds::{embedding_criterion, BoundsContext, BoundsReport, Bracket, LevelKind, LevelSolution, SolverOptions};
pub use error::{Error, Result};
pub use extremal::{build_density, evaluate_path, verify_increment_condition, verify_sup_identity, DensityG, IncrementReport, SupIdentity};
pub use geometry::{metric, Modulus, NormKind, NormSpace};
pub use orlicz::{luxemburg_norm, EmpiricalSample, OrliczFunction};
pub use partition::{build_partition, Partition, PartitionOptions, StepLabel};
pub use scalar::Scalar;
pub use sobolev::{check_theorem, holder_check, Family, HolderCheck, SobolevCheck, SobolevEvaluator, SobolevOptions, TestFunction};

pub type Orlicz64 = OrliczFunction<f64>;
pub type Space64 = NormSpace<f64>;
pub type Modulus64 = Modulus<f64>;
pub type Partition64 = Partition<f64>;
pub type BoundsReport64 = BoundsReport<f64>;
pub type Density64 = DensityG<f64>;
pub type TestFunction64 = TestFunction<f64>;
