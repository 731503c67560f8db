//! Second-moment estimators, partial correlations and Gaussian (conditional)
//! mutual information, plus the thresholded testers built on them.
//!
//! All estimates use raw second moments `(1/n) Σ x xᵀ` without centering:
//! the models are zero-mean.

use nalgebra::{DMatrix, Matrix2, Vector2};

use crate::error::{Error, Result};
use crate::model::{validate_ci_query, CovarianceMatrix, SampleMatrix};

/// Relative size below which a conditional variance is treated as zero.
const DEGENERATE_VARIANCE: f64 = 1e-12;
/// Correlations within this distance beyond ±1 are treated as roundoff.
const CLAMP_SLACK: f64 = 1e-9;
const CLAMPED_MAGNITUDE: f64 = 1.0 - 1e-12;

/// `(1/n) Σ_i x⁽ⁱ⁾ x⁽ⁱ⁾ᵀ`.
pub fn sample_covariance(data: &SampleMatrix) -> CovarianceMatrix {
    let x = data.matrix();
    let mut m = x.tr_mul(x) / data.n() as f64;
    // force exact symmetry
    let d = m.nrows();
    for i in 0..d {
        for j in (i + 1)..d {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    CovarianceMatrix::symmetric(m, Some(data.n())).expect("second-moment matrix is symmetric and finite")
}

/// A (partial) correlation `ρ̂_{jk|S}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationEstimate {
    pub value: f64,
    pub pair: (usize, usize),
    pub given: Vec<usize>,
    /// Sample count behind the covariance; `None` when it was exact.
    pub n_effective: Option<usize>,
}

fn clamp_correlation(r: f64, j: usize, k: usize) -> Result<f64> {
    if !r.is_finite() {
        return Err(Error::CorrelationOutOfRange { j, k, value: r });
    }
    let a = r.abs();
    if a < 1.0 {
        Ok(r)
    } else if a < 1.0 + CLAMP_SLACK {
        Ok(r.signum() * CLAMPED_MAGNITUDE)
    } else {
        Err(Error::CorrelationOutOfRange { j, k, value: r })
    }
}

fn is_degenerate(value: f64, scale: f64) -> bool {
    value <= 0.0 || value <= DEGENERATE_VARIANCE * scale.abs()
}

fn check_variance(value: f64, scale: f64, node: usize, given: &[usize]) -> Result<()> {
    if is_degenerate(value, scale) {
        return Err(Error::DegenerateVariance {
            node,
            given: given.to_vec(),
            value,
        });
    }
    Ok(())
}

/// Partial correlation given at most one node, by the closed form on the
/// 3×3 block. No allocation; this is the hot path of the PC-Tree tests.
pub(crate) fn partial_correlation_small(m: &DMatrix<f64>, j: usize, k: usize, given: Option<usize>) -> Result<f64> {
    let (sjj, skk, sjk) = (m[(j, j)], m[(k, k)], m[(j, k)]);
    let (num, vj, vk) = match given {
        None => (sjk, sjj, skk),
        Some(l) => {
            let sll = m[(l, l)];
            check_variance(sll, 0.0, l, &[])?;
            let (sjl, skl) = (m[(j, l)], m[(k, l)]);
            (sjk - sjl * skl / sll, sjj - sjl * sjl / sll, skk - skl * skl / sll)
        }
    };
    for (node, v, scale) in [(j, vj, sjj), (k, vk, skk)] {
        if is_degenerate(v, scale) {
            return Err(Error::DegenerateVariance {
                node,
                given: given.into_iter().collect(),
                value: v,
            });
        }
    }
    clamp_correlation(num / (vj * vk).sqrt(), j, k)
}

/// Partial correlation through a Cholesky factorization of `Σ_SS`.
pub fn partial_correlation_general(sigma: &CovarianceMatrix, j: usize, k: usize, given: &[usize]) -> Result<f64> {
    validate_ci_query(sigma.d(), j, k, given)?;
    let m = sigma.matrix();
    let (mut vj, mut vk, mut cjk) = (m[(j, j)], m[(k, k)], m[(j, k)]);
    if !given.is_empty() {
        let chol = sigma
            .submatrix(given)
            .cholesky()
            .ok_or_else(|| Error::DegenerateConditioning { given: given.to_vec() })?;
        let cross = DMatrix::from_fn(given.len(), 2, |a, b| m[(given[a], [j, k][b])]);
        let solved = chol.solve(&cross);
        let corr = cross.transpose() * solved;
        vj -= corr[(0, 0)];
        vk -= corr[(1, 1)];
        cjk -= corr[(0, 1)];
    }
    check_variance(vj, m[(j, j)], j, given)?;
    check_variance(vk, m[(k, k)], k, given)?;
    clamp_correlation(cjk / (vj * vk).sqrt(), j, k)
}

/// `ρ̂_{jk|S} = (Σ_jk − Σ_jS Σ_SS⁻¹ Σ_Sk) / sqrt(Σ_{jj|S} Σ_{kk|S})`.
///
/// Conditioning sets of size 0 or 1 use the explicit three-variable formula;
/// larger sets go through a Cholesky solve.
pub fn partial_correlation(sigma: &CovarianceMatrix, j: usize, k: usize, given: &[usize]) -> Result<CorrelationEstimate> {
    validate_ci_query(sigma.d(), j, k, given)?;
    if sigma.d() < 2 || given.len() > sigma.d() - 2 {
        return Err(Error::InvalidParameter("conditioning set too large".into()));
    }
    let value = match given {
        [] => partial_correlation_small(sigma.matrix(), j, k, None)?,
        [l] => partial_correlation_small(sigma.matrix(), j, k, Some(*l))?,
        _ => partial_correlation_general(sigma, j, k, given)?,
    };
    Ok(CorrelationEstimate {
        value,
        pair: (j, k),
        given: given.to_vec(),
        n_effective: sigma.n_samples(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CiOutcome {
    AcceptIndependence,
    RejectIndependence,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CiDecision {
    pub outcome: CiOutcome,
    pub statistic: f64,
    pub cutoff: f64,
}

impl CiDecision {
    pub fn independent(&self) -> bool {
        self.outcome == CiOutcome::AcceptIndependence
    }
}

/// Thresholded test of `H0: X_j ⊥ X_k | X_S`: independence is rejected when
/// `|ρ̂| ≥ cutoff`.
pub fn ci_test(rho: &CorrelationEstimate, cutoff: f64) -> CiDecision {
    ci_decide(rho.value, cutoff)
}

pub(crate) fn ci_decide(rho: f64, cutoff: f64) -> CiDecision {
    let statistic = rho.abs();
    let outcome = if statistic >= cutoff {
        CiOutcome::RejectIndependence
    } else {
        CiOutcome::AcceptIndependence
    };
    CiDecision {
        outcome,
        statistic,
        cutoff,
    }
}

/// A mutual information value in nats.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct MiEstimate(pub f64);

impl MiEstimate {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// `Î(X_j; X_k) = −½ ln(1 − ρ̂²_{jk} / (σ̂_j² σ̂_k²))`.
pub fn empirical_mi(sigma: &CovarianceMatrix, j: usize, k: usize) -> Result<MiEstimate> {
    validate_ci_query(sigma.d(), j, k, &[])?;
    mi_from_matrix(sigma.matrix(), j, k)
}

pub(crate) fn mi_from_matrix(m: &DMatrix<f64>, j: usize, k: usize) -> Result<MiEstimate> {
    let (sj, sk) = (m[(j, j)], m[(k, k)]);
    for (node, v) in [(j, sj), (k, sk)] {
        if v.is_nan() || v <= 0.0 {
            return Err(Error::DegenerateVariance {
                node,
                given: Vec::new(),
                value: v,
            });
        }
    }
    let r = m[(j, k)] / (sj * sk).sqrt();
    let r = clamp_correlation(r, j, k).map_err(|_| Error::InfiniteMutualInformation { j, k })?;
    Ok(MiEstimate((-0.5 * (1.0 - r * r).ln()).max(0.0)))
}

/// Regression quantities of the triple `(x, y, z)`: `Y = β X + η_y`,
/// `Z = γ_x X + γ_y Y + η_z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripleRegression {
    pub beta_xy: f64,
    pub gamma_xz: f64,
    pub gamma_yz: f64,
    /// `σ̂²_{y|x}`
    pub var_y_given_x: f64,
    /// `σ̂²_{z|x,y}`
    pub var_z_given_xy: f64,
}

/// Fits the two regressions behind [`empirical_cmi`].
pub fn triple_regression(sigma: &CovarianceMatrix, x: usize, y: usize, z: usize) -> Result<TripleRegression> {
    let d = sigma.d();
    for v in [x, y, z] {
        if v >= d {
            return Err(Error::NodeOutOfRange { node: v, d });
        }
    }
    if x == y || y == z || x == z {
        return Err(Error::InvalidParameter(format!("triple ({x}, {y}, {z}) must be distinct")));
    }
    let idx = [x, y, z];
    if sigma.submatrix(&idx).cholesky().is_none() {
        return Err(Error::DegenerateConditioning { given: idx.to_vec() });
    }
    let m = sigma.matrix();
    let (sx, sy, sz) = (m[(x, x)], m[(y, y)], m[(z, z)]);
    let (rxy, rxz, ryz) = (m[(x, y)], m[(x, z)], m[(y, z)]);
    let beta_xy = rxy / sx;
    let a = Matrix2::new(sx, rxy, rxy, sy);
    let gamma = a
        .cholesky()
        .ok_or_else(|| Error::DegenerateConditioning { given: vec![x, y] })?
        .solve(&Vector2::new(rxz, ryz));
    let (gamma_xz, gamma_yz) = (gamma[0], gamma[1]);
    let var_y_given_x = sy - beta_xy * beta_xy * sx;
    // residual variance of the joint regression of z on (x, y)
    let var_z_given_xy = sz - gamma_xz * rxz - gamma_yz * ryz;
    check_variance(var_y_given_x, sy, y, &[x])?;
    check_variance(var_z_given_xy, sz, z, &[x, y])?;
    Ok(TripleRegression {
        beta_xy,
        gamma_xz,
        gamma_yz,
        var_y_given_x,
        var_z_given_xy,
    })
}

/// `Î(Y; Z | X) = ½ ln(1 + γ̂²_{yz} σ̂²_{y|x} / σ̂²_{z|x,y})`.
pub fn empirical_cmi(sigma: &CovarianceMatrix, y: usize, z: usize, given_x: usize) -> Result<MiEstimate> {
    let r = triple_regression(sigma, given_x, y, z)?;
    let ratio = r.gamma_yz * r.gamma_yz * r.var_y_given_x / r.var_z_given_xy;
    Ok(MiEstimate(0.5 * ratio.ln_1p()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmiDecision {
    Independent,
    Dependent,
}

/// Conditional-independence tester on `Î(X_i; X_j | X_k)` with accuracy
/// parameter `ε`: dependence is declared iff `Î > ε/100`.
pub fn cmi_test(
    sigma: &CovarianceMatrix,
    i: usize,
    j: usize,
    given_k: usize,
    epsilon: f64,
) -> Result<(MiEstimate, CmiDecision)> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
    }
    let mi = empirical_cmi(sigma, i, j, given_k)?;
    let decision = if mi.value() > epsilon / 100.0 {
        CmiDecision::Dependent
    } else {
        CmiDecision::Independent
    };
    Ok((mi, decision))
}
