//! Heteroclinic connections, equivariant strip minimizers and interface flows
//! for planar Allen-Cahn systems with symmetric double-well potentials.

pub mod connections;
pub mod contour;
pub mod error;
pub mod flow;
pub mod minimizer2d;
pub mod numerics;
pub mod path;
pub mod potential;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub use path::{Classification, Path};
pub use potential::{
    evaluate, fold_into_quadrant, hessian, DihedralElement, Family, PlanePoint, Potential,
    PotentialSpec,
};
