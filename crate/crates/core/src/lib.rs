//! Learning tree-structured and polytree-structured Gaussian models.
//!
//! Two learners are provided:
//!
//! * [`chow_liu::chow_liu`], a maximum-weight spanning tree over plug-in
//!   Gaussian mutual information estimates (distribution learning under KL).
//! * [`pc_tree::pc_tree`], a constraint-based structure learner that only
//!   tests marginal independence and independence given a single node, then
//!   orients the skeleton into a CPDAG.
//!
//! Around them sit the pieces needed to check their guarantees: exact
//! covariance of linear SEMs ([`model`]), correlation and information
//! estimators ([`estimators`]), ground-truth graph machinery ([`graphs`]),
//! Gaussian KL and tree projections ([`kl`]), adversarial instance
//! generators ([`hard_instances`]) and a benchmark harness ([`bench`]).

#[cfg(test)]
macro_rules! assert_close {
    ($a:expr, $b:expr, $tol:expr) => {{
        let (a, b, tol): (f64, f64, f64) = ($a, $b, $tol);
        assert!((a - b).abs() <= tol, "{} vs {} (tol {})", a, b, tol);
    }};
}

pub mod bench;
pub mod chow_liu;
pub mod error;
pub mod estimators;
pub mod graphs;
pub mod hard_instances;
pub mod io;
pub mod kl;
pub mod model;
pub mod pc_tree;
pub mod rng;

pub use error::{Error, Result, Separator};
