//! Symbolic and numeric verification of a (2+1)-dimensional non-isospectral
//! hierarchy: its Lax pair, a family of Lie point symmetries, the similarity
//! reductions those symmetries induce, and the spectral flows that remain.

pub mod commands;
pub mod expr;
pub mod hierarchy;
pub mod laxpair;
pub mod numeric;
pub mod reduction;
pub mod report;
pub mod symmetry;

pub use expr::{Coeff, Context, Expr, Jet, Rat, Verdict};
pub use hierarchy::{GridFunction, GridScalar, Spectral};
pub use laxpair::LaxPair;
pub use numeric::{LambdaLaw, Real, Trajectory};
pub use reduction::{Catalog, ReductionCase, Spectrality};
pub use report::{Format, Report};
pub use symmetry::Generator;

/// Periodic grid samples in double precision.
pub type Grid = GridFunction<f64>;
/// Periodic grid samples in single precision.
pub type Grid32 = GridFunction<f32>;
pub type Spectral64 = Spectral<f64>;
pub type Spectral32 = Spectral<f32>;
pub type Trajectory64 = Trajectory<f64>;
pub type Trajectory32 = Trajectory<f32>;
