//! Symmetric double-well potentials, their symmetry group and hypothesis checks.

mod analysis;
mod point;
mod spec;

pub use analysis::{
    build_c0, check_q_monotonicity, check_q_monotonicity_on, check_symmetry, minima_and_convexity,
    q_product, ConvexSetC0, MinimaInfo, QCandidate, QReport, C0_MARGIN, C0_RADII, DEGENERACY_TOL,
    Q_TOL,
};
pub use point::{fold_into_quadrant, DihedralElement, PlanePoint};
pub(crate) use spec::fd_hessian;
pub use spec::{
    evaluate, hessian, sym_eigenvalues, Family, Matrix2, Potential, PotentialSpec, DEFAULT_CAP,
    DEFAULT_MOLLIFY_RADIUS, HESSIAN_STEP,
};
