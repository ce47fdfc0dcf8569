//! Dense symmetric matrices, a cyclic Jacobi eigensolver and Loewner-order
//! predicates.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Sub};

use crate::error::{Error, Result};
use crate::math;

/// Dense symmetric `m × m` matrix. Storage is the full row-major square;
/// every write goes to both `(i, j)` and `(j, i)`, so symmetry is exact.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    order: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(order: usize) -> Self {
        SymMatrix {
            order,
            data: vec![0.0; order * order],
        }
    }

    pub fn identity(order: usize) -> Self {
        Self::from_diagonal(&vec![1.0; order])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut a = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            a.data[i * a.order + i] = d;
        }
        a
    }

    /// Builds a matrix from a full row-major square, averaging `(i,j)` and
    /// `(j,i)`.
    pub fn from_row_major(order: usize, data: &[f64]) -> Result<Self> {
        if data.len() != order * order {
            return Err(Error::DimensionMismatch {
                expected: order * order,
                found: data.len(),
            });
        }
        let mut a = Self::zeros(order);
        for i in 0..order {
            for j in i..order {
                a.set(i, j, 0.5 * (data[i * order + j] + data[j * order + i]));
            }
        }
        Ok(a)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.order + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.order + j] = value;
        self.data[j * self.order + i] = value;
    }

    /// Row-major view of the full square.
    pub fn as_row_major(&self) -> &[f64] {
        &self.data
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.order).map(|i| self.get(i, i)).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn frobenius_norm(&self) -> f64 {
        math::sqrt(self.data.iter().map(|x| x * x).sum())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        SymMatrix {
            order: self.order,
            data: self.data.iter().map(|x| x * factor).collect(),
        }
    }

    /// `self + t I`
    pub fn shifted(&self, t: f64) -> Self {
        let mut a = self.clone();
        for i in 0..a.order {
            a.data[i * a.order + i] += t;
        }
        a
    }

    /// `self += factor * other`
    pub fn add_scaled(&mut self, factor: f64, other: &SymMatrix) {
        assert_eq!(self.order, other.order, "matrix orders differ");
        for (x, y) in self.data.iter_mut().zip(&other.data) {
            *x += factor * y;
        }
    }

    /// `xᵀ A x`
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        (0..self.order)
            .map(|i| x[i] * math::dot(&self.data[i * self.order..(i + 1) * self.order], x))
            .sum()
    }

    fn check_same_order(&self, other: &SymMatrix) -> Result<()> {
        if self.order != other.order {
            return Err(Error::DimensionMismatch {
                expected: self.order,
                found: other.order,
            });
        }
        Ok(())
    }

    pub fn try_sub(&self, other: &SymMatrix) -> Result<SymMatrix> {
        self.check_same_order(other)?;
        let mut out = self.clone();
        out.add_scaled(-1.0, other);
        Ok(out)
    }
}

impl Add for &SymMatrix {
    type Output = SymMatrix;

    fn add(self, rhs: &SymMatrix) -> SymMatrix {
        let mut out = self.clone();
        out.add_scaled(1.0, rhs);
        out
    }
}

impl Sub for &SymMatrix {
    type Output = SymMatrix;

    fn sub(self, rhs: &SymMatrix) -> SymMatrix {
        let mut out = self.clone();
        out.add_scaled(-1.0, rhs);
        out
    }
}

/// Spectral decomposition `A = V diag(w) Vᵀ` with eigenvalues ascending.
/// Column `k` of `V` (stored row-major) is the eigenvector of `values[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    vectors: Vec<f64>,
    order: usize,
}

impl EigenDecomposition {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn vector(&self, k: usize) -> Vec<f64> {
        (0..self.order).map(|i| self.vectors[i * self.order + k]).collect()
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn reconstruct(&self) -> SymMatrix {
        let m = self.order;
        let mut a = SymMatrix::zeros(m);
        for i in 0..m {
            for j in i..m {
                let s = (0..m)
                    .map(|k| self.vectors[i * m + k] * self.values[k] * self.vectors[j * m + k])
                    .sum();
                a.set(i, j, s);
            }
        }
        a
    }
}

const MAX_SWEEPS: usize = 100;

/// Full eigen-decomposition by cyclic Jacobi rotations.
///
/// Sweeps stop once the off-diagonal Frobenius mass is at most
/// `1e-14 ‖A‖_F`. The rotation order is fixed, so the result is
/// deterministic for a given input.
pub fn eigh(a: &SymMatrix) -> Result<EigenDecomposition> {
    if !a.is_finite() {
        return Err(Error::NonFinite);
    }
    let m = a.order;
    let mut w = a.data.clone();
    let mut v = vec![0.0; m * m];
    for i in 0..m {
        v[i * m + i] = 1.0;
    }
    let threshold = 1e-14 * a.frobenius_norm();

    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..m {
            for q in p + 1..m {
                off += 2.0 * w[p * m + q] * w[p * m + q];
            }
        }
        if math::sqrt(off) <= threshold {
            break;
        }
        for p in 0..m {
            for q in p + 1..m {
                let apq = w[p * m + q];
                if apq == 0.0 {
                    continue;
                }
                let app = w[p * m + p];
                let aqq = w[q * m + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                    sign / (theta.abs() + math::hypot(theta, 1.0))
                };
                let c = 1.0 / math::hypot(t, 1.0);
                let s = t * c;

                w[p * m + p] = app - t * apq;
                w[q * m + q] = aqq + t * apq;
                w[p * m + q] = 0.0;
                w[q * m + p] = 0.0;
                for r in 0..m {
                    if r != p && r != q {
                        let arp = w[r * m + p];
                        let arq = w[r * m + q];
                        let new_rp = c * arp - s * arq;
                        let new_rq = s * arp + c * arq;
                        w[r * m + p] = new_rp;
                        w[p * m + r] = new_rp;
                        w[r * m + q] = new_rq;
                        w[q * m + r] = new_rq;
                    }
                    let vrp = v[r * m + p];
                    let vrq = v[r * m + q];
                    v[r * m + p] = c * vrp - s * vrq;
                    v[r * m + q] = s * vrp + c * vrq;
                }
            }
        }
    }

    let diag: Vec<f64> = (0..m).map(|i| w[i * m + i]).collect();
    let mut idx: Vec<usize> = (0..m).collect();
    idx.sort_by(|&x, &y| diag[x].total_cmp(&diag[y]));
    let values = idx.iter().map(|&k| diag[k]).collect();
    let mut vectors = vec![0.0; m * m];
    for (col, &k) in idx.iter().enumerate() {
        for i in 0..m {
            vectors[i * m + col] = v[i * m + k];
        }
    }
    Ok(EigenDecomposition {
        values,
        vectors,
        order: m,
    })
}

/// Largest eigenvalue and a unit eigenvector attaining it.
pub fn lambda_max(a: &SymMatrix) -> Result<(f64, Vec<f64>)> {
    let e = eigh(a)?;
    if a.order == 0 {
        return Ok((0.0, Vec::new()));
    }
    let k = a.order - 1;
    Ok((e.values[k], e.vector(k)))
}

/// Largest eigenvalue only.
pub fn lambda_max_value(a: &SymMatrix) -> Result<f64> {
    Ok(eigh(a)?.max())
}

pub fn lambda_min_value(a: &SymMatrix) -> Result<f64> {
    Ok(eigh(a)?.min())
}

/// Spectral norm `‖A‖₂ = max |w_k|`.
pub fn spectral_norm(a: &SymMatrix) -> Result<f64> {
    let e = eigh(a)?;
    Ok(e.max().abs().max(e.min().abs()))
}

/// `A ⪯ B` up to `tol`, i.e. `λ_max(A − B) ≤ tol`.
pub fn loewner_leq(a: &SymMatrix, b: &SymMatrix, tol: f64) -> Result<bool> {
    let d = a.try_sub(b)?;
    Ok(lambda_max_value(&d)? <= tol)
}

/// Solves the small dense SPD system `H x = g` by Cholesky. Returns `None`
/// if `H` is not numerically positive definite.
pub(crate) fn cholesky_solve(h: &[f64], g: &[f64]) -> Option<Vec<f64>> {
    let n = g.len();
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = h[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(s > 0.0) || !s.is_finite() {
                    return None;
                }
                l[i * n + i] = math::sqrt(s);
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = g[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sym(m: usize, seed: u64) -> SymMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = SymMatrix::zeros(m);
        for i in 0..m {
            for j in i..m {
                a.set(i, j, rng.random_range(-1.0..1.0));
            }
        }
        a
    }

    #[test]
    fn identity_eigenvalues() {
        let e = eigh(&SymMatrix::identity(3)).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn diagonal_sorted_with_axis_vectors() {
        let e = eigh(&SymMatrix::from_diagonal(&[3.0, -1.0])).unwrap();
        assert_eq!(e.values, vec![-1.0, 3.0]);
        let v0 = e.vector(0);
        let v1 = e.vector(1);
        assert_eq!(v0[0].abs(), 0.0);
        assert_eq!(v0[1].abs(), 1.0);
        assert_eq!(v1[0].abs(), 1.0);
    }

    #[test]
    fn random_reconstruction_and_orthonormality() {
        for seed in 0..20 {
            let a = random_sym(8, seed);
            let e = eigh(&a).unwrap();
            let err = (&e.reconstruct() - &a).frobenius_norm();
            assert!(err <= 1e-10 * (1.0 + a.frobenius_norm()), "err {err}");
            for p in 0..8 {
                for q in 0..8 {
                    let d = math::dot(&e.vector(p), &e.vector(q));
                    let expect = if p == q { 1.0 } else { 0.0 };
                    assert!((d - expect).abs() < 1e-10);
                }
            }
            assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn paired_eigenvalues() {
        // rotate diag(1,1,2,2) by a Householder reflection
        let u = [0.5, -0.5, 0.5, 0.5];
        let mut a = SymMatrix::zeros(4);
        let d = [1.0, 1.0, 2.0, 2.0];
        for i in 0..4 {
            for j in i..4 {
                let mut s = 0.0;
                for k in 0..4 {
                    let hik = if i == k { 1.0 } else { 0.0 } - 2.0 * u[i] * u[k];
                    let hjk = if j == k { 1.0 } else { 0.0 } - 2.0 * u[j] * u[k];
                    s += hik * d[k] * hjk;
                }
                a.set(i, j, s);
            }
        }
        let e = eigh(&a).unwrap();
        for (x, y) in e.values.iter().zip(d) {
            assert_relative_eq!(*x, y, epsilon = 1e-13);
        }
    }

    #[test]
    fn lambda_max_examples() {
        assert_eq!(lambda_max(&SymMatrix::zeros(3)).unwrap().0, 0.0);
        let (l, v) = lambda_max(&SymMatrix::from_diagonal(&[1.0, 2.0, -5.0])).unwrap();
        assert_eq!(l, 2.0);
        assert_eq!(v[1].abs(), 1.0);
        let a = random_sym(6, 99);
        let (l, v) = lambda_max(&a).unwrap();
        assert!((a.quadratic_form(&v) - l).abs() <= 1e-10);
    }

    #[test]
    fn loewner_examples() {
        let a = random_sym(5, 3);
        assert!(loewner_leq(&a, &a, 0.0).unwrap());
        let d = SymMatrix::from_diagonal(&[2.0, 0.0]);
        assert!(!loewner_leq(&d, &SymMatrix::identity(2), 1e-9).unwrap());
        assert!(loewner_leq(&a, &a.shifted(1e-3), 0.0).unwrap());
        assert!(loewner_leq(&a, &SymMatrix::identity(4), 0.0).is_err());
    }

    #[test]
    fn shift_equivariance() {
        let a = random_sym(7, 11);
        let base = lambda_max_value(&a).unwrap();
        for t in [-3.0, -0.5, 0.0, 0.25, 10.0] {
            assert_relative_eq!(lambda_max_value(&a.shifted(t)).unwrap(), base + t, epsilon = 1e-12);
        }
    }

    #[test]
    fn non_finite_rejected() {
        let mut a = SymMatrix::zeros(2);
        a.set(0, 1, f64::NAN);
        assert_eq!(eigh(&a), Err(Error::NonFinite));
    }

    #[test]
    fn cholesky_solves_spd() {
        let h = [4.0, 1.0, 1.0, 3.0];
        let x = cholesky_solve(&h, &[1.0, 2.0]).unwrap();
        assert_relative_eq!(4.0 * x[0] + x[1], 1.0, epsilon = 1e-14);
        assert_relative_eq!(x[0] + 3.0 * x[1], 2.0, epsilon = 1e-14);
        assert!(cholesky_solve(&[1.0, 2.0, 2.0, 1.0], &[1.0, 1.0]).is_none());
    }
}
