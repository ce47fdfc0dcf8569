//! Analytic Neumann-to-Dirichlet eigenvalues of a radially layered unit disk.
//!
//! For a conductivity that is constant on `n` concentric layers, the boundary
//! current `sin(jφ)` (or `cos(jφ)`) is an eigenfunction of the NtD operator.
//! Inside layer `i` the potential is `(α_i r^j + β_i r^{-j}) sin(jφ)`, with
//! `α_n = 1, β_n = 0` in the inner disk. Continuity of `u` and of `σ ∂_r u`
//! at every interface fixes the remaining pairs, and the eigenvalue is the
//! ratio of Dirichlet to Neumann data on the unit circle:
//!
//! ```text
//! λ_j = (α_1 + β_1) / (j σ_1 (α_1 − β_1))
//! ```
//!
//! The recursion is carried out on the components `A = α r^j` and
//! `B = β r^{-j}` evaluated at the current radius. Moving outward through a
//! layer multiplies `A` by `t^{-1}` and `B` by `t` with `t = (r_in/r_out)^j`;
//! since `λ_j` is invariant under joint rescaling we instead keep `A` and
//! multiply `B` by `t²`, which never overflows. The pair is renormalized to
//! unit max-magnitude after every interface.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Interface radii of the layered disk, strictly decreasing in `(0, 1)`.
///
/// Layer 1 touches the boundary; layer `i` occupies `ρ_i < |x| < ρ_{i-1}`
/// with `ρ_0 = 1`, and layer `n` is the inner disk `|x| < ρ_{n-1}`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "Vec<f64>", into = "Vec<f64>"))]
pub struct Geometry {
    radii: Vec<f64>,
}

impl Geometry {
    pub fn new(radii: Vec<f64>) -> Result<Self> {
        let mut outer = 1.0;
        for &r in &radii {
            if !r.is_finite() || r <= 0.0 || r >= 1.0 {
                return Err(Error::InvalidGeometry("interface radii must lie in (0, 1)"));
            }
            if r >= outer {
                return Err(Error::InvalidGeometry("interface radii must be strictly decreasing"));
            }
            outer = r;
        }
        Ok(Geometry { radii })
    }

    /// The homogeneous disk (a single layer).
    pub fn homogeneous() -> Self {
        Geometry { radii: Vec::new() }
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn layers(&self) -> usize {
        self.radii.len() + 1
    }

    /// Outer radius of layer `layer` (0-based), i.e. `ρ_{layer}` with `ρ_0 = 1`.
    pub fn outer_radius(&self, layer: usize) -> f64 {
        if layer == 0 {
            1.0
        } else {
            self.radii[layer - 1]
        }
    }

    pub(crate) fn check_sigma(&self, sigma: &[f64]) -> Result<()> {
        if sigma.len() != self.layers() {
            return Err(Error::DimensionMismatch {
                expected: self.layers(),
                found: sigma.len(),
            });
        }
        for (layer, &value) in sigma.iter().enumerate() {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::NonPositiveConductivity { layer, value });
            }
        }
        Ok(())
    }
}

impl TryFrom<Vec<f64>> for Geometry {
    type Error = Error;

    fn try_from(radii: Vec<f64>) -> Result<Self> {
        Geometry::new(radii)
    }
}

impl From<Geometry> for Vec<f64> {
    fn from(g: Geometry) -> Self {
        g.radii
    }
}

/// Harmonic-solution coefficients of one angular mode, layer by layer.
///
/// `components[i] = (α_i ρ_{i-1}^j, β_i ρ_{i-1}^{-j}) / κ_i` are the two
/// radial components at the outer radius of layer `i`, each stored with its
/// own scale `κ_i = exp(log_scale[i])`. The true values are relative to the
/// inner-disk normalization `α_n = 1, β_n = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerCoefficients {
    pub mode: u32,
    pub components: Vec<(f64, f64)>,
    pub log_scale: Vec<f64>,
}

impl LayerCoefficients {
    /// `(α_i, β_i)` without the stored scaling. Overflows for deep layers and
    /// large modes; intended for small examples and tests.
    pub fn alpha_beta(&self, geom: &Geometry, layer: usize) -> (f64, f64) {
        let (a, b) = self.components[layer];
        let kappa = math::exp(self.log_scale[layer]);
        let rj = math::pow(geom.outer_radius(layer), self.mode as f64);
        (a * kappa / rj, b * kappa * rj)
    }
}

/// Result of propagating one mode through all interfaces: boundary
/// components and, optionally, their tangents with respect to every `σ_k`.
struct Propagation {
    a: f64,
    b: f64,
    da: Vec<f64>,
    db: Vec<f64>,
}

fn propagate(
    geom: &Geometry,
    sigma: &[f64],
    j: u32,
    tangents: bool,
    mut record: Option<&mut LayerCoefficients>,
) -> Propagation {
    let n = geom.layers();
    let jf = j as f64;
    let (mut a, mut b) = (1.0_f64, 0.0_f64);
    let width = if tangents { n } else { 0 };
    let mut da = vec![0.0; width];
    let mut db = vec![0.0; width];

    // ln κ of the current stored pair; starts at the inner disk: A = ρ_{n-1}^j.
    let mut log_kappa = jf * math::ln(geom.outer_radius(n - 1));
    if let Some(rec) = record.as_deref_mut() {
        rec.components[n - 1] = (a, b);
        rec.log_scale[n - 1] = log_kappa;
    }

    // Interface ρ_i sits between the inner layer i+1 and the outer layer i
    // (1-based); with 0-based layers `outer = i - 1`, `inner = i`.
    for outer in (0..n - 1).rev() {
        let inner = outer + 1;
        let rho = geom.radii[outer];
        let s = sigma[inner] / sigma[outer];
        let sum = a + b;
        let diff = a - b;
        let mut a_new = 0.5 * (sum + s * diff);
        let mut b_new = 0.5 * (sum - s * diff);
        if tangents {
            for k in 0..n {
                let dsum = da[k] + db[k];
                let ddiff = da[k] - db[k];
                let ds = if k == inner {
                    1.0 / sigma[outer]
                } else if k == outer {
                    -s / sigma[outer]
                } else {
                    0.0
                };
                da[k] = 0.5 * (dsum + s * ddiff + ds * diff);
                db[k] = 0.5 * (dsum - s * ddiff - ds * diff);
            }
        }

        // Move from ρ_i out to ρ_{i-1} inside layer i.
        let ratio = rho / geom.outer_radius(outer);
        let t2 = math::pow(ratio, 2.0 * jf);
        b_new *= t2;
        if tangents {
            for v in db.iter_mut() {
                *v *= t2;
            }
        }
        log_kappa -= jf * math::ln(ratio);

        let scale = a_new.abs().max(b_new.abs());
        a_new /= scale;
        b_new /= scale;
        if tangents {
            // λ_j is invariant along (a, b), so the parallel part of each
            // tangent carries no information; dropping it keeps underflowed
            // deep-layer tangents from leaking rounding noise.
            let norm2 = a_new * a_new + b_new * b_new;
            for k in 0..n {
                da[k] /= scale;
                db[k] /= scale;
                let par = (a_new * da[k] + b_new * db[k]) / norm2;
                da[k] -= par * a_new;
                db[k] -= par * b_new;
            }
        }
        log_kappa += math::ln(scale);
        a = a_new;
        b = b_new;

        if let Some(rec) = record.as_deref_mut() {
            rec.components[outer] = (a, b);
            rec.log_scale[outer] = log_kappa;
        }
    }
    Propagation { a, b, da, db }
}

fn check_mode(j: u32) -> Result<()> {
    if j == 0 {
        Err(Error::InvalidMode)
    } else {
        Ok(())
    }
}

/// NtD eigenvalue `λ_j(σ)` of mode `j ≥ 1`.
pub fn ntd_eigenvalue(geom: &Geometry, sigma: &[f64], j: u32) -> Result<f64> {
    geom.check_sigma(sigma)?;
    check_mode(j)?;
    let p = propagate(geom, sigma, j, false, None);
    Ok((p.a + p.b) / (j as f64 * sigma[0] * (p.a - p.b)))
}

/// `λ_j(σ)` together with its gradient `∂λ_j/∂σ_k`, by forward-mode
/// propagation of one tangent per layer through the recursion.
pub fn ntd_eigenvalue_and_gradient(geom: &Geometry, sigma: &[f64], j: u32) -> Result<(f64, Vec<f64>)> {
    geom.check_sigma(sigma)?;
    check_mode(j)?;
    let p = propagate(geom, sigma, j, true, None);
    let jf = j as f64;
    let diff = p.a - p.b;
    let lambda = (p.a + p.b) / (jf * sigma[0] * diff);
    // d[(A+B)/(A-B)] = 2 (A dB - B dA) / (A-B)^2
    let denom = jf * sigma[0] * diff * diff;
    let mut grad: Vec<f64> =
        p.da.iter()
            .zip(&p.db)
            .map(|(da, db)| 2.0 * (p.a * db - p.b * da) / denom)
            .collect();
    grad[0] -= lambda / sigma[0];
    Ok((lambda, grad))
}

/// Gradient of `λ_j` with respect to the layer conductivities. Every
/// component is non-positive.
pub fn ntd_gradient(geom: &Geometry, sigma: &[f64], j: u32) -> Result<Vec<f64>> {
    ntd_eigenvalue_and_gradient(geom, sigma, j).map(|(_, g)| g)
}

/// Per-layer coefficients of mode `j`.
pub fn layer_coefficients(geom: &Geometry, sigma: &[f64], j: u32) -> Result<LayerCoefficients> {
    geom.check_sigma(sigma)?;
    check_mode(j)?;
    let n = geom.layers();
    let mut rec = LayerCoefficients {
        mode: j,
        components: vec![(0.0, 0.0); n],
        log_scale: vec![0.0; n],
    };
    propagate(geom, sigma, j, false, Some(&mut rec));
    Ok(rec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn two_layer_geom() -> Geometry {
        Geometry::new(vec![0.5, 0.25]).unwrap()
    }

    #[test]
    fn homogeneous_disk() {
        let g = Geometry::homogeneous();
        assert_relative_eq!(ntd_eigenvalue(&g, &[2.0], 3).unwrap(), 1.0 / 6.0, epsilon = 1e-15);
    }

    #[test]
    fn equal_layers_are_homogeneous() {
        let l = ntd_eigenvalue(&two_layer_geom(), &[1.0, 1.0, 1.0], 5).unwrap();
        assert_relative_eq!(l, 0.2, epsilon = 1e-15);
    }

    #[test]
    fn homogeneous_gradient_sums_to_chain_rule() {
        let g = Geometry::new(vec![0.8, 0.3, 0.1]).unwrap();
        for j in 1..8 {
            let s = 1.7;
            let grad = ntd_gradient(&g, &[s; 4], j).unwrap();
            let total: f64 = grad.iter().sum();
            assert_relative_eq!(total, -1.0 / (j as f64 * s * s), max_relative = 1e-12);
            assert!(grad.iter().all(|&d| d <= 0.0));
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let g = two_layer_geom();
        assert!(matches!(
            ntd_eigenvalue(&g, &[1.0, 0.0, 1.0], 1),
            Err(Error::NonPositiveConductivity { layer: 1, .. })
        ));
        assert_eq!(ntd_eigenvalue(&g, &[1.0, 1.0, 1.0], 0), Err(Error::InvalidMode));
        assert!(matches!(
            ntd_eigenvalue(&g, &[1.0, 1.0], 1),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(Geometry::new(vec![0.25, 0.5]).is_err());
        assert!(Geometry::new(vec![1.0]).is_err());
        assert!(Geometry::new(vec![0.5, 0.0]).is_err());
    }

    #[test]
    fn large_modes_stay_finite() {
        let g = Geometry::new(vec![0.9, 0.5, 0.1, 0.01]).unwrap();
        let sigma = [0.3, 7.0, 0.05, 40.0, 1.0];
        for j in [100, 400, 900] {
            let (l, grad) = ntd_eigenvalue_and_gradient(&g, &sigma, j).unwrap();
            assert!(l.is_finite() && l > 0.0);
            assert!(grad.iter().all(|d| d.is_finite() && *d <= 0.0), "{j} {grad:?}");
            // deep layers are invisible at high frequency
            assert_relative_eq!(l, 1.0 / (j as f64 * 0.3), max_relative = 1e-6);
        }
    }

    #[test]
    fn coefficients_satisfy_interface_conditions() {
        let g = two_layer_geom();
        let sigma = [1.3, 0.7, 2.2];
        for j in 1..6 {
            let c = layer_coefficients(&g, &sigma, j).unwrap();
            let jf = j as f64;
            let (a3, b3) = c.alpha_beta(&g, 2);
            assert_relative_eq!(a3, 1.0, max_relative = 1e-12);
            assert_eq!(b3, 0.0);
            for (outer, &rho) in g.radii().iter().enumerate() {
                let (ai, bi) = c.alpha_beta(&g, outer + 1);
                let (ao, bo) = c.alpha_beta(&g, outer);
                let u_in = ai * rho.powf(jf) + bi * rho.powf(-jf);
                let u_out = ao * rho.powf(jf) + bo * rho.powf(-jf);
                assert_relative_eq!(u_in, u_out, max_relative = 1e-12);
                let f_in = sigma[outer + 1] * (ai * rho.powf(jf) - bi * rho.powf(-jf));
                let f_out = sigma[outer] * (ao * rho.powf(jf) - bo * rho.powf(-jf));
                assert_relative_eq!(f_in, f_out, max_relative = 1e-12);
            }
            let (a1, b1) = c.alpha_beta(&g, 0);
            let l = ntd_eigenvalue(&g, &sigma, j).unwrap();
            assert_relative_eq!(l, (a1 + b1) / (jf * sigma[0] * (a1 - b1)), max_relative = 1e-12);
        }
    }
}
