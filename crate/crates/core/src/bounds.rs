//! Per-layer conductivity bounds `[a_i, b_i]`.
//!
//! A layer with `a_i = b_i` is pinned: its conductivity is known and it is
//! not a decision variable. The remaining layers are the free layers; most
//! of the crate works in the reduced coordinates over those.

use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SigmaBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl SigmaBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let b = SigmaBox { lower, upper };
        b.validate()?;
        Ok(b)
    }

    /// `[a, b]^n`
    pub fn uniform(n: usize, a: f64, b: f64) -> Result<Self> {
        Self::new(alloc::vec![a; n], alloc::vec![b; n])
    }

    pub fn validate(&self) -> Result<()> {
        if self.lower.len() != self.upper.len() {
            return Err(Error::DimensionMismatch {
                expected: self.lower.len(),
                found: self.upper.len(),
            });
        }
        if self.lower.is_empty() {
            return Err(Error::InvalidBox("box has no layers"));
        }
        for (a, b) in self.lower.iter().zip(&self.upper) {
            if !(a.is_finite() && b.is_finite()) || *a <= 0.0 {
                return Err(Error::InvalidBox("bounds must be finite and positive"));
            }
            if a > b {
                return Err(Error::InvalidBox("lower bound exceeds upper bound"));
            }
        }
        Ok(())
    }

    pub fn layers(&self) -> usize {
        self.lower.len()
    }

    pub fn is_pinned(&self, layer: usize) -> bool {
        self.lower[layer] == self.upper[layer]
    }

    /// Indices of the layers with `a_i < b_i`, in increasing depth.
    pub fn free_layers(&self) -> Vec<usize> {
        (0..self.layers()).filter(|&i| !self.is_pinned(i)).collect()
    }

    pub fn contains(&self, sigma: &[f64]) -> bool {
        sigma.len() == self.layers()
            && sigma
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(s, (a, b))| a <= s && s <= b)
    }

    pub fn clamp(&self, sigma: &mut [f64]) {
        for (s, (a, b)) in sigma.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *s = s.clamp(*a, *b);
        }
    }

    /// Largest side length over the free layers (zero when all are pinned).
    pub fn width(&self) -> f64 {
        self.lower.iter().zip(&self.upper).fold(0.0, |w, (a, b)| w.max(b - a))
    }

    /// Writes the free coordinates `x` into a full-length copy of `base`.
    pub fn embed(&self, free: &[usize], x: &[f64], base: &[f64]) -> Vec<f64> {
        let mut sigma = base.to_vec();
        for (&i, &v) in free.iter().zip(x) {
            sigma[i] = v;
        }
        sigma
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn free_layers_skip_pinned() {
        let b = SigmaBox::new(vec![1.0, 0.5, 0.5], vec![1.0, 2.0, 2.0]).unwrap();
        assert_eq!(b.free_layers(), vec![1, 2]);
        assert!(b.is_pinned(0));
        assert_eq!(b.width(), 1.5);
        assert_eq!(b.embed(&[1, 2], &[0.7, 1.9], &b.upper), vec![1.0, 0.7, 1.9]);
        let mut s = vec![3.0, 0.1, 1.0];
        b.clamp(&mut s);
        assert_eq!(s, vec![1.0, 0.5, 1.0]);
        assert!(b.contains(&s));
    }

    #[test]
    fn invalid_boxes() {
        assert!(SigmaBox::new(vec![2.0], vec![1.0]).is_err());
        assert!(SigmaBox::new(vec![0.0], vec![1.0]).is_err());
        assert!(SigmaBox::new(vec![1.0], vec![1.0, 2.0]).is_err());
        assert!(SigmaBox::new(vec![], vec![]).is_err());
    }
}
