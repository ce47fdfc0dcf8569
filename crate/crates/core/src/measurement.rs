//! Galerkin measurement matrix `F_m(σ)` and its Jacobian.
//!
//! The measurement currents are the orthonormal trigonometric basis
//! `(1/√π) sin φ, (1/√π) cos φ, (1/√π) sin 2φ, …` on the unit circle. Both
//! functions of mode `j` are eigenfunctions of the NtD operator with
//! eigenvalue `λ_j`, so `F_m(σ) = diag(λ_1, λ_1, λ_2, λ_2, …)` truncated
//! after `m` entries; column `k` (1-based) carries mode `⌈k/2⌉`. An odd `m`
//! keeps only the sine column of the last mode.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::forward::{self, Geometry};
use crate::linalg::SymMatrix;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MeasurementModel {
    pub geometry: Geometry,
    pub m: usize,
}

/// Mode carried by 0-based measurement column `k`.
#[inline]
pub fn column_mode(k: usize) -> u32 {
    (k / 2 + 1) as u32
}

impl MeasurementModel {
    pub fn new(geometry: Geometry, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidOption("number of measurements must be at least 1"));
        }
        Ok(MeasurementModel { geometry, m })
    }

    pub fn layers(&self) -> usize {
        self.geometry.layers()
    }

    /// Number of distinct modes `⌈m/2⌉`.
    pub fn modes(&self) -> usize {
        self.m.div_ceil(2)
    }

    /// `(λ_1, …, λ_{⌈m/2⌉})`
    pub fn eigenvalues(&self, sigma: &[f64]) -> Result<Vec<f64>> {
        (1..=self.modes() as u32)
            .map(|j| forward::ntd_eigenvalue(&self.geometry, sigma, j))
            .collect()
    }

    /// Diagonal of `F_m(σ)`.
    pub fn diagonal(&self, sigma: &[f64]) -> Result<Vec<f64>> {
        let lambdas = self.eigenvalues(sigma)?;
        Ok((0..self.m).map(|k| lambdas[k / 2]).collect())
    }

    pub fn assemble_f(&self, sigma: &[f64]) -> Result<SymMatrix> {
        Ok(SymMatrix::from_diagonal(&self.diagonal(sigma)?))
    }

    /// Diagonal of `F_m(σ)` and, for every layer `i`, the diagonal of
    /// `∂F_m/∂σ_i`.
    pub fn diagonal_and_jacobian(&self, sigma: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        let n = self.layers();
        let mut values = Vec::with_capacity(self.modes());
        let mut grads = Vec::with_capacity(self.modes());
        for j in 1..=self.modes() as u32 {
            let (l, g) = forward::ntd_eigenvalue_and_gradient(&self.geometry, sigma, j)?;
            values.push(l);
            grads.push(g);
        }
        let diag = (0..self.m).map(|k| values[k / 2]).collect();
        let jac = (0..n).map(|i| (0..self.m).map(|k| grads[k / 2][i]).collect()).collect();
        Ok((diag, jac))
    }

    pub fn assemble_jacobian(&self, sigma: &[f64]) -> Result<JacobianStack> {
        let (_, jac) = self.diagonal_and_jacobian(sigma)?;
        Ok(JacobianStack {
            entries: jac.iter().map(|d| SymMatrix::from_diagonal(d)).collect(),
        })
    }

    /// `‖F_m(σ) − Ŷ‖_F²`
    pub fn frobenius_residual(&self, sigma: &[f64], y: &SymMatrix) -> Result<f64> {
        if y.order() != self.m {
            return Err(Error::DimensionMismatch {
                expected: self.m,
                found: y.order(),
            });
        }
        let f = self.assemble_f(sigma)?;
        Ok(y.as_row_major()
            .iter()
            .zip(f.as_row_major())
            .map(|(a, b)| (b - a) * (b - a))
            .sum())
    }
}

/// Partial derivatives `∂F_m/∂σ_i`, one symmetric matrix per layer. Each
/// entry is negative semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianStack {
    pub entries: Vec<SymMatrix>,
}

impl JacobianStack {
    pub fn layers(&self) -> usize {
        self.entries.len()
    }

    /// `F'(σ) d = Σ_i d_i ∂F/∂σ_i`
    pub fn directional(&self, d: &[f64]) -> SymMatrix {
        assert_eq!(d.len(), self.entries.len(), "direction length must equal layer count");
        let order = self.entries.first().map_or(0, SymMatrix::order);
        let mut out = SymMatrix::zeros(order);
        for (di, e) in d.iter().zip(&self.entries) {
            if *di != 0.0 {
                out.add_scaled(*di, e);
            }
        }
        out
    }

    /// Negates every entry. Only useful to construct deliberately broken
    /// Jacobians when exercising the property suites.
    pub fn negated(&self) -> Self {
        JacobianStack {
            entries: self.entries.iter().map(|e| e.scaled(-1.0)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::lambda_max_value;
    use alloc::vec;
    use approx::assert_relative_eq;

    fn model(m: usize) -> MeasurementModel {
        MeasurementModel::new(Geometry::new(vec![0.5, 0.25]).unwrap(), m).unwrap()
    }

    #[test]
    fn homogeneous_f() {
        let f = model(6).assemble_f(&[1.0, 1.0, 1.0]).unwrap();
        let expected = [1.0, 1.0, 0.5, 0.5, 1.0 / 3.0, 1.0 / 3.0];
        for (k, e) in expected.iter().enumerate() {
            assert_relative_eq!(f.get(k, k), *e, epsilon = 1e-15);
        }
        assert_relative_eq!(
            f.frobenius_norm().powi(2),
            f.diagonal().iter().map(|x| x * x).sum::<f64>(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn single_measurement() {
        let f = model(1).assemble_f(&[1.0, 2.0, 4.0]).unwrap();
        assert_eq!(f.order(), 1);
        assert_eq!(
            f.get(0, 0),
            forward::ntd_eigenvalue(&model(1).geometry, &[1.0, 2.0, 4.0], 1).unwrap()
        );
    }

    #[test]
    fn matches_componentwise_forward() {
        let md = model(6);
        let sigma = [1.0, 2.0, 4.0];
        let f = md.assemble_f(&sigma).unwrap();
        for k in 0..6 {
            let l = forward::ntd_eigenvalue(&md.geometry, &sigma, column_mode(k)).unwrap();
            assert_eq!(f.get(k, k), l);
        }
        let odd = model(5).assemble_f(&sigma).unwrap();
        assert_eq!(odd.get(4, 4), f.get(4, 4));
    }

    #[test]
    fn jacobian_homogeneous_mode_one() {
        let s = 1.6;
        let jac = model(4).assemble_jacobian(&[s; 3]).unwrap();
        let total: f64 = jac.entries.iter().map(|e| e.get(0, 0)).sum();
        assert_relative_eq!(total, -1.0 / (s * s), max_relative = 1e-12);
        for e in &jac.entries {
            assert!(lambda_max_value(e).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn residual_examples() {
        let md = model(2);
        let y = SymMatrix::zeros(2);
        assert_relative_eq!(md.frobenius_residual(&[1.0; 3], &y).unwrap(), 2.0, epsilon = 1e-15);
        let yhat = md.assemble_f(&[1.0, 0.7, 1.9]).unwrap();
        assert_eq!(md.frobenius_residual(&[1.0, 0.7, 1.9], &yhat).unwrap(), 0.0);
        assert!(md.frobenius_residual(&[1.0; 3], &SymMatrix::zeros(3)).is_err());
    }

    #[test]
    fn residual_sums_diagonal_gaps() {
        let md = model(7);
        let yhat = md.assemble_f(&[0.8, 1.2, 3.0]).unwrap();
        let sigma = [1.1, 0.6, 0.9];
        let f = md.diagonal(&sigma).unwrap();
        let direct: f64 = f.iter().zip(yhat.diagonal()).map(|(a, b)| (a - b).powi(2)).sum();
        assert_relative_eq!(
            md.frobenius_residual(&sigma, &yhat).unwrap(),
            direct,
            max_relative = 1e-14
        );
    }

    #[test]
    fn zero_measurements_rejected() {
        assert!(MeasurementModel::new(Geometry::homogeneous(), 0).is_err());
    }
}
